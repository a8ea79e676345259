#pragma once

// Shared builders for the test suites: small matrices, material cards and
// boundary-condition helpers.

#include <Eigen/Dense>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hotemboss/material.hpp"
#include "hotemboss/mechanics.hpp"
#include "hotemboss/sparse.hpp"

namespace support {

using hotemboss::linalg::CsrMatrix;

/// 5-point Laplacian on an m x m interior grid (homogeneous Dirichlet border).
inline CsrMatrix laplacian_2d(std::size_t m) {
    std::vector<CsrMatrix::Triplet> t;
    auto id = [m](std::size_t i, std::size_t j) { return i * m + j; };
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            t.push_back({id(i, j), id(i, j), 4.0});
            if (i > 0) t.push_back({id(i, j), id(i - 1, j), -1.0});
            if (i + 1 < m) t.push_back({id(i, j), id(i + 1, j), -1.0});
            if (j > 0) t.push_back({id(i, j), id(i, j - 1), -1.0});
            if (j + 1 < m) t.push_back({id(i, j), id(i, j + 1), -1.0});
        }
    }
    return CsrMatrix::from_triplets(m * m, m * m, t);
}

/// A = B^T B + I with standard normal B; returned sparse and dense.
inline std::pair<CsrMatrix, Eigen::MatrixXd> random_spd(std::size_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd b(n, n);
    for (Eigen::Index i = 0; i < b.rows(); ++i)
        for (Eigen::Index j = 0; j < b.cols(); ++j) b(i, j) = nd(rng);
    Eigen::MatrixXd a = b.transpose() * b + Eigen::MatrixXd::Identity(n, n);
    std::vector<CsrMatrix::Triplet> t;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) t.push_back({i, j, a(i, j)});
    return {CsrMatrix::from_triplets(n, n, t), a};
}

/// PMMA-like card: four-term shear spectrum, elastic bulk modulus,
/// WLF referenced at the glass transition.
inline hotemboss::material::MaterialCard pmma_card(double alpha_liquid = 2e-4, double alpha_glassy = 7e-5) {
    using namespace hotemboss::material;
    MaterialCard c;
    c.name = "PMMA";
    c.density = 1190.0;
    c.heat_capacity = 1420.0;
    c.conductivity = 0.19;
    c.glass_transition = 378.15;
    c.shear_relaxation = PronySeries(1.0e6, {{2.5e8, 1e-2}, {3.0e8, 1.0}, {3.0e8, 1e2}, {2.5e8, 1e4}});
    c.bulk_relaxation = PronySeries(3.0e9, {});
    c.volume_relaxation = c.shear_relaxation.normalized();
    c.shift = {17.44, 51.6, 378.15};
    c.expansion.liquid = ExpansionTable::constant(alpha_liquid);
    c.expansion.glassy = ExpansionTable::constant(alpha_glassy);
    c.validate();
    return c;
}

/// Effectively elastic card: one shear term whose relaxation never starts.
inline hotemboss::material::MaterialCard elastic_card(double shear, double bulk, double alpha) {
    using namespace hotemboss::material;
    MaterialCard c;
    c.name = "elastic";
    c.density = 1000.0;
    c.heat_capacity = 1000.0;
    c.conductivity = 1.0;
    c.glass_transition = 300.0;
    c.shear_relaxation = PronySeries(0.5 * shear, {{0.5 * shear, 1e300}});
    c.bulk_relaxation = PronySeries(bulk, {});
    c.volume_relaxation = c.shear_relaxation.normalized();
    c.shift = {0.0, 50.0, 300.0};
    c.expansion.liquid = ExpansionTable::constant(alpha);
    c.expansion.glassy = ExpansionTable::constant(alpha);
    c.validate();
    return c;
}

inline hotemboss::mechanics::Constraint hold(const std::string& set, bool x, bool y, bool z) {
    hotemboss::mechanics::Constraint c;
    c.set = set;
    c.components = {x, y, z};
    return c;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace support
