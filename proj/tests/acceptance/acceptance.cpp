// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hotemboss/config.hpp"
#include "hotemboss/contact.hpp"
#include "hotemboss/errors.hpp"
#include "hotemboss/material.hpp"
#include "hotemboss/mechanics.hpp"
#include "hotemboss/mesh.hpp"
#include "hotemboss/simulation.hpp"
#include "hotemboss/sparse.hpp"
#include "hotemboss/thermal.hpp"
#include "json.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace hotemboss;
using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kFixtures = HOTEMBOSS_FIXTURE_DIR;
const fs::path kConfigs = HOTEMBOSS_CONFIG_DIR;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("hotemboss_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

double percentile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

mechanics::StepLoads uniform_loads(const mesh::Mesh& m, double t_old, double t_new, double dt) {
    mechanics::StepLoads l;
    l.dt = dt;
    l.temperature_old.assign(m.num_nodes(), t_old);
    l.temperature_new.assign(m.num_nodes(), t_new);
    return l;
}

std::size_t nearest_node(const mesh::Mesh& m, const mesh::Vec3& x) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < m.num_nodes(); ++i) {
        if ((m.nodes[i] - x).norm() < (m.nodes[best] - x).norm()) best = i;
    }
    return best;
}

mesh::Vec3 centroid(const mesh::Mesh& m, std::size_t e) {
    mesh::Vec3 c = mesh::Vec3::Zero();
    for (auto n : m.elements[e]) c += m.nodes[n];
    return c / 4.0;
}

// 1. Recursive stress update against direct quadrature of the hereditary
// integrals, deviatoric and spherical, over random thermo-mechanical paths.
Outcome constitutive_oracle() {
    auto card = support::pmma_card();
    card.bulk_relaxation = material::PronySeries(2.6e9, {{2.0e8, 1e-1}, {2.0e8, 1e3}});
    card.validate();
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> de(-2e-4, 2e-4), dtemp(-6.0, 2.0), dt(0.005, 0.5);
    std::uniform_int_distribution<int> steps(20, 50);

    double worst = 0.0;
    double recursive_time = 0.0;
    std::size_t checked = 0;
    for (int h = 0; h < 20; ++h) {
        const double t0 = 460.0;
        auto s = material::initial_point_state(card, t0);
        const int n = steps(rng);
        std::vector<double> xi{0.0};
        std::vector<material::Tensor3> dev{material::Tensor3::Zero()};
        std::vector<double> vol{0.0};
        double temp = t0;
        double dev_peak = 0.0, vol_peak = 0.0;
        for (int k = 1; k <= n; ++k) {
            const double t_new = std::clamp(temp + dtemp(rng), 345.0, 470.0);
            const double dxi = material::reduced_time_increment(temp, t_new, dt(rng), card.shift);
            material::Tensor3 d;
            for (int i = 0; i < 3; ++i)
                for (int j = i; j < 3; ++j) d(i, j) = d(j, i) = de(rng);

            const auto c0 = Clock::now();
            material::update_fictive_temperature(s, t_new, dxi, card);
            const double e_th = material::thermal_strain(t_new, s.fictive_temperature, t0, card);
            const double d_th = e_th - s.thermal_strain;
            const auto r =
                material::stress_update(s, material::deviatoric_part(d), material::mean_part(d), d_th, dxi, card);
            recursive_time += seconds_since(c0);

            xi.push_back(xi.back() + dxi);
            dev.push_back(dev.back() + material::deviatoric_part(d));
            vol.push_back(vol.back() + material::mean_part(d) - d_th);
            temp = t_new;

            const auto wg = support::hereditary_weights_graded(card.shear_relaxation, xi, k);
            const auto wk = support::hereditary_weights_graded(card.bulk_relaxation, xi, k);
            material::Tensor3 dev_oracle = material::Tensor3::Zero();
            double vol_oracle = 0.0;
            for (int j = 1; j <= k; ++j) {
                dev_oracle += 2.0 * wg[j] * (dev[j] - dev[j - 1]);
                vol_oracle += 3.0 * wk[j] * (vol[j] - vol[j - 1]);
            }
            dev_peak = std::max(dev_peak, dev_oracle.norm());
            vol_peak = std::max(vol_peak, std::abs(vol_oracle));
            worst = std::max(worst, (r.deviatoric - dev_oracle).norm() / dev_peak);
            worst = std::max(worst, std::abs(r.spherical - vol_oracle) / vol_peak);
            ++checked;
        }
    }
    return {worst <= 1e-4 && recursive_time < 1.0,
            fmt("20 histories, %zu steps, max relative error %.2e (tol 1e-4), recursive update %.3f s (limit 1 s)",
                checked, worst, recursive_time)};
}

// 2. Fictive temperature limits, also against the quadrature oracle.
Outcome fictive_limits() {
    const auto card = support::pmma_card();
    const double t0 = 456.15, t1 = 356.15;

    auto q = material::initial_point_state(card, t0);
    material::update_fictive_temperature(q, t1, 0.0, card);
    const support::SampledHistory jump{{0.0, 0.0}, {t0, t1}};
    const double quench_oracle = support::fictive_temperature_oracle(card.volume_relaxation, jump, 1);
    const double quench_err = std::max(std::abs(q.fictive_temperature - t0), std::abs(quench_oracle - t0));

    const std::size_t n = 50;
    const double dxi = 100.0 * card.volume_relaxation.max_relaxation_time();
    auto w = material::initial_point_state(card, t0);
    support::SampledHistory h{{0.0}, {t0}};
    for (std::size_t k = 1; k <= n; ++k) {
        const double t = t0 + (t1 - t0) * double(k) / double(n);
        material::update_fictive_temperature(w, t, dxi, card);
        h.xi.push_back(h.xi.back() + dxi);
        h.v.push_back(t);
    }
    const double slow_oracle = support::fictive_temperature_oracle(card.volume_relaxation, h, n);
    const double slow = std::max(std::abs(w.fictive_temperature - t1), std::abs(slow_oracle - t1)) / std::abs(t0 - t1);
    return {quench_err <= 1e-10 && slow < 1e-3,
            fmt("quench |Tf - T0| = %.1e K (tol 1e-10); slow cooling |Tf - T|/|T0 - T| = %.1e (tol 1e-3)",
                quench_err, slow)};
}

// Midplane temperature of a slab of thickness 2 mm cooled on both faces.
double slab_midplane(std::size_t nz, double dt, double t_end) {
    const double half = 1e-3, h = 400.0;
    const auto card = support::pmma_card();
    const auto m = mesh::make_box_mesh(1, 1, nz, 0.2e-3, 0.2e-3, 2.0 * half);
    thermal::ThermalBc bc;
    bc.convective.push_back({"zmin", h, Schedule(300.0)});
    bc.convective.push_back({"zmax", h, Schedule(300.0)});
    auto ops = std::make_shared<thermal::ThermalOperators>(thermal::assemble_thermal(m, card, bc));
    thermal::ThermalStepper stepper(ops);
    thermal::TemperatureField f;
    f.values.assign(m.num_nodes(), 450.0);
    const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
    for (std::size_t k = 0; k < steps; ++k) f = stepper.step(f, dt);
    double mid = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < m.num_nodes(); ++i) {
        if (std::abs(m.nodes[i].z() - half) < 1e-12) {
            mid += f.values[i];
            ++count;
        }
    }
    return (mid / count - 300.0) / 150.0;
}

// 3. Slab against the Fourier series; temporal order of backward Euler.
Outcome thermal_benchmark() {
    const auto c0 = Clock::now();
    const auto card = support::pmma_card();
    const double half = 1e-3, h = 400.0, t_end = 2.0;
    const double diffusivity = card.conductivity / (card.density * card.heat_capacity);
    const double exact =
        support::slab_midplane_ratio(h * half / card.conductivity, diffusivity * t_end / (half * half));
    std::vector<double> errs;
    for (std::size_t nz : {8, 16, 32}) {
        errs.push_back(std::abs(slab_midplane(nz, t_end / 800.0, t_end) - exact) / exact);
    }
    const double a = slab_midplane(32, 0.1, t_end);
    const double b = slab_midplane(32, 0.05, t_end);
    const double c = slab_midplane(32, 0.025, t_end);
    const double order = std::log2(std::abs(a - b) / std::abs(b - c));
    const double elapsed = seconds_since(c0);
    return {errs.back() <= 0.01 && order >= 0.8 && order <= 1.2 && elapsed < 30.0,
            fmt("midplane error nz=8/16/32: %.2e/%.2e/%.2e (tol 1e-2), dt order %.3f (range [0.8, 1.2]), %.1f s",
                errs[0], errs[1], errs[2], order, elapsed)};
}

mesh::RibbedPlateSpec ribbed_spec() {
    return config::load_config(kConfigs / "ribbed_plate_frictionless.json").mesh.ribbed;
}

// 4. Early-time profile in the unfeatured part of the ribbed plate.
Outcome gapwise_gradient() {
    const auto spec = ribbed_spec();
    const auto m = mesh::make_ribbed_plate(spec);
    const auto card = material::load_material_card(kConfigs / "materials" / "pmma.json");
    thermal::ThermalBc bc;
    bc.convective.push_back({"mold_side", 2000.0, Schedule(343.15)});
    bc.convective.push_back({"bottom", 2000.0, Schedule(343.15)});
    auto ops = std::make_shared<thermal::ThermalOperators>(thermal::assemble_thermal(m, card, bc));
    thermal::ThermalStepper stepper(ops);
    thermal::TemperatureField f;
    f.values.assign(m.num_nodes(), 456.15);
    for (int k = 0; k < 5; ++k) f = stepper.step(f, 0.005);

    const double x_lo = spec.first_rib_x + double(spec.rib_count - 1) * spec.rib_pitch + spec.rib_width +
                        4.0 * spec.rib_width;
    const double x_hi = spec.half_length;
    double max_z = 0.0, max_xy = 0.0;
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
        const auto c = centroid(m, e);
        if (c.x() < x_lo || c.x() > x_hi) continue;
        const auto geo = mesh::element_geometry(m, e);
        mesh::Vec3 g = mesh::Vec3::Zero();
        for (int a = 0; a < 4; ++a) g += f.values[m.elements[e][a]] * geo.gradients[a];
        max_z = std::max(max_z, std::abs(g.z()));
        max_xy = std::max(max_xy, std::hypot(g.x(), g.y()));
    }

    // Column through the thickness in the middle of the region.
    const double xc = 0.5 * (x_lo + x_hi);
    const auto near = nearest_node(m, mesh::Vec3(xc, 0.0, 0.0));
    std::vector<std::pair<double, double>> column;
    for (std::size_t i = 0; i < m.num_nodes(); ++i) {
        if (std::abs(m.nodes[i].x() - m.nodes[near].x()) < 1e-12 && std::abs(m.nodes[i].y()) < 1e-12) {
            column.emplace_back(m.nodes[i].z(), f.values[i]);
        }
    }
    std::sort(column.begin(), column.end());
    bool concave = column.size() >= 3;
    for (std::size_t i = 1; i + 1 < column.size(); ++i) {
        const double h0 = column[i].first - column[i - 1].first;
        const double h1 = column[i + 1].first - column[i].first;
        const double curvature = (column[i + 1].second - column[i].second) / h1 -
                                 (column[i].second - column[i - 1].second) / h0;
        if (curvature > 1e-9) concave = false;
    }
    const auto hottest = std::max_element(column.begin(), column.end(),
                                          [](const auto& a, const auto& b) { return a.second < b.second; });
    const bool core = hottest != column.begin() && hottest != column.end() - 1;
    const double ratio = max_z / std::max(max_xy, 1e-300);
    return {concave && core && ratio >= 10.0,
            fmt("t = 0.025 s, x in [%.2f, %.2f] mm: profile %s, hottest at z = %.3f mm, gap-wise/in-plane "
                "gradient ratio %.1f (need >= 10)",
                x_lo * 1e3, x_hi * 1e3, concave ? "concave" : "not concave", hottest->first * 1e3, ratio)};
}

// 5. A rigid flat punch pressed into part of the top face of a block.
struct PunchResult {
    double max_penetration = 0.0;
    double worst_signorini = 0.0;   // |f_n + lambda_n max(g, 0)| / (lambda_n scale)
    double worst_excess = 0.0;      // penetration - |f_n| / lambda_n
    bool sign_ok = true;
    std::size_t closed = 0, open = 0;
};

PunchResult flat_punch(double penalty) {
    const auto m = mesh::make_box_mesh(8, 4, 3, 1.0e-3, 0.5e-3, 0.3e-3);
    const auto card = support::elastic_card(1e8, 2e8, 7e-5);
    mechanics::MechanicalModel model(m, card);
    const double depth = 1e-6;
    model.mold = contact::RigidSurface({contact::Box{mechanics::Vec3(-1e-3, -1e-3, 0.3e-3),
                                                     mechanics::Vec3(0.45e-3, 1e-3, 1e-3), true}},
                                       mechanics::Vec3::UnitZ(), Schedule({{0.0, 0.0}, {1.0, -depth}}));
    model.contact_params.normal_penalty = penalty;
    model.contact_params.friction = false;
    model.set_contact_candidates({"zmax"});
    auto loads = uniform_loads(m, 300.0, 300.0, 1.0);
    loads.friction = false;
    loads.constraints = {support::hold("zmin", true, true, true)};
    mechanics::PicardOptions tight;
    tight.displacement_tolerance = 1e-10;
    const auto r = mechanics::picard_step(model, mechanics::initial_mechanical_state(model, 300.0), loads, tight);

    PunchResult out;
    double f_scale = 0.0;
    for (const auto& c : r.state.contacts) f_scale = std::max(f_scale, std::abs(c.normal_force));
    for (const auto& c : r.state.contacts) {
        const double pen = std::max(c.gap, 0.0);
        out.max_penetration = std::max(out.max_penetration, pen);
        out.worst_signorini = std::max(out.worst_signorini, std::abs(c.normal_force + penalty * pen) / f_scale);
        out.worst_excess = std::max(out.worst_excess, pen - std::abs(c.normal_force) / penalty);
        if (c.normal_force > 0.0) out.sign_ok = false;
        if (c.status == contact::Status::open) {
            ++out.open;
            if (c.normal_force != 0.0 || c.gap > 0.0) out.sign_ok = false;
        } else {
            ++out.closed;
        }
    }
    return out;
}

Outcome contact_complementarity() {
    const double penalty = 1e9;
    const auto a = flat_punch(penalty);
    const auto b = flat_punch(2.0 * penalty);
    const double ratio = a.max_penetration / b.max_penetration;
    const bool ok = a.sign_ok && b.sign_ok && a.closed > 0 && a.open > 0 && a.worst_signorini <= 1e-12 &&
                    b.worst_signorini <= 1e-12 && a.worst_excess <= 1e-12 && b.worst_excess <= 1e-12 &&
                    std::abs(ratio - 2.0) <= 0.2;
    return {ok, fmt("%zu closed / %zu open nodes, signs %s, |f_n + lambda g+| <= %.1e |f|max, penetration excess "
                    "%.1e m (tol 1e-12), penetration ratio for doubled penalty %.4f (target 2 +- 10%%)",
                    a.closed, a.open, a.sign_ok && b.sign_ok ? "ok" : "violated",
                    std::max(a.worst_signorini, b.worst_signorini), std::max(a.worst_excess, b.worst_excess),
                    ratio)};
}

// 6. Block on a rigid floor, pressed down by its top face. The stiff block on
// equal nodal springs carries nearly uniform tractions, so below the static
// limit every node sticks; above it no equilibrium exists. When dragged the
// block resists with the dynamic force.
Outcome friction_block() {
    const double side = 4e-3, height = 1e-3;
    const auto m = mesh::make_box_mesh(4, 4, 2, side, side, height);
    const auto card = support::elastic_card(1e10, 2e10, 7e-5);
    const double mu_s = 0.4, mu_d = 0.3;
    const double volume = side * side * height;

    mechanics::MechanicalModel model(m, card);
    // Floor slightly above the base so the block starts in contact.
    model.mold = contact::RigidSurface({contact::HalfSpace{mechanics::Vec3(0.0, 0.0, 1e-7), mechanics::Vec3::UnitZ()}});
    model.contact_params.normal_penalty = 1e5;
    model.contact_params.tangential_penalty = 1e5;
    model.contact_params.static_friction = mu_s;
    model.contact_params.dynamic_friction = mu_d;
    model.set_contact_candidates({"zmin"});
    mechanics::PicardOptions tight;
    tight.displacement_tolerance = 1e-10;
    tight.max_sweeps = 200;
    const auto s0 = mechanics::initial_mechanical_state(model, 300.0);
    const std::size_t nodes = model.contact_nodes.size();

    mechanics::Constraint press;
    press.set = "zmax";
    press.components = {false, false, true};
    press.prescribed[2] = Schedule({{0.0, 0.0}, {1.0, -1e-6}});
    auto loads = uniform_loads(m, 300.0, 300.0, 1.0);
    loads.constraints = {support::hold("ymin", false, true, false), press};

    struct Totals {
        double fn = 0.0;
        mechanics::Vec3 ft = mechanics::Vec3::Zero();
        double ft_magnitude = 0.0;
        std::size_t stick = 0, slip = 0;
    };
    auto totals = [](const mechanics::StepResult& r) {
        Totals t;
        for (const auto& c : r.state.contacts) {
            t.fn += -c.normal_force;
            t.ft += c.tangential_force;
            t.ft_magnitude += c.tangential_force.norm();
            t.stick += c.status == contact::Status::stick;
            t.slip += c.status == contact::Status::slip;
        }
        return t;
    };
    const double normal_load = totals(mechanics::picard_step(model, s0, loads, tight)).fn;

    auto held = [&](double fraction) {
        model.body_force = mechanics::Vec3(fraction * mu_s * normal_load / volume, 0.0, 0.0);
        return mechanics::picard_step(model, s0, loads, tight);
    };
    bool ok = true;
    std::string detail = fmt("N = %.4f N; ", normal_load);
    double balance = 0.0;
    for (double fraction : {0.2, 0.5, 0.9}) {
        const auto t = totals(held(fraction));
        const double f = fraction * mu_s * normal_load;
        balance = std::max(balance, std::abs(t.ft.x() + f) / f);
        if (t.stick != nodes) ok = false;
        detail += fmt("F = %.1f mu_s N: %zu/%zu stick; ", fraction, t.stick, nodes);
    }
    ok = ok && balance <= 1e-6;

    bool diverged = false;
    try {
        held(1.1);
    } catch (const NonConvergenceError&) {
        diverged = true;
    } catch (const SolverBreakdownError&) {
        diverged = true;
    } catch (const SolverMaxIterError&) {
        diverged = true;
    }
    ok = ok && diverged;

    // The top face is dragged along x while held down.
    model.body_force = mechanics::Vec3::Zero();
    mechanics::Constraint drag = press;
    drag.components = {true, false, true};
    drag.prescribed[0] = Schedule({{1.0, 0.0}, {11.0, 2e-5}});
    auto state = mechanics::picard_step(model, s0, loads, tight).state;
    mechanics::StepResult slide;
    for (int k = 0; k < 10; ++k) {
        auto l = uniform_loads(m, 300.0, 300.0, 1.0);
        l.constraints = {support::hold("ymin", false, true, false), drag};
        slide = mechanics::picard_step(model, state, l, tight);
        state = slide.state;
    }
    const auto t = totals(slide);
    const double cap_err = std::abs(t.ft_magnitude - mu_d * t.fn) / (mu_d * t.fn);
    const double resisting_err = std::abs(-t.ft.x() - mu_d * t.fn) / (mu_d * t.fn);
    ok = ok && t.slip == nodes && cap_err <= 1e-6 && resisting_err <= 1e-6;
    detail += fmt("held with |sum f_t + F|/F <= %.1e; F = 1.1 mu_s N %s; dragged: %zu/%zu slip, resisting force "
                  "%.9f N vs mu_d N = %.9f N (rel %.1e, tol 1e-6)",
                  balance, diverged ? "finds no equilibrium" : "was held", t.slip, nodes, -t.ft.x(), mu_d * t.fn,
                  std::max(cap_err, resisting_err));
    return {ok, detail};
}

// 7. Residual s_xx near rib corners against the flat region after demolding.
Outcome corner_localization() {
    auto c = config::load_config(kConfigs / "ribbed_plate_frictionless.json");
    c.output.directory = scratch("ribbed");
    const auto spec = c.mesh.ribbed;
    const auto m = config::load_config_mesh(c);
    RunOptions o;
    o.write_files = false;
    const auto c0 = Clock::now();
    const auto summary = run(c, o);
    const double elapsed = seconds_since(c0);

    std::vector<std::pair<double, double>> corners;
    for (std::size_t k = 0; k < spec.rib_count; ++k) {
        const double x_in = spec.first_rib_x + double(k) * spec.rib_pitch;
        for (double x : {x_in, x_in + spec.rib_width}) {
            corners.emplace_back(x, spec.base_thickness);
            corners.emplace_back(x, spec.base_thickness + spec.rib_height);
        }
    }
    const double last_rib = spec.first_rib_x + double(spec.rib_count - 1) * spec.rib_pitch + spec.rib_width;
    std::vector<double> near_corner, flat;
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
        const auto x = centroid(m, e);
        const double sxx = summary.elements[e].stress(0, 0);
        double d = 1e300;
        for (const auto& [cx, cz] : corners) d = std::min(d, std::hypot(x.x() - cx, x.z() - cz));
        if (d <= spec.rib_width) {
            near_corner.push_back(sxx);
        } else if (x.x() >= last_rib + 2.0 * spec.rib_width && x.x() <= spec.half_length - spec.rib_width) {
            flat.push_back(sxx);
        }
    }
    const double p95 = percentile(near_corner, 0.95);
    const double median = percentile(flat, 0.5);
    const bool ok = p95 > 0.0 && p95 >= 2.0 * std::abs(median) && elapsed < 600.0 && !summary.stopped_early &&
                    summary.demolding_start.has_value();
    return {ok, fmt("%zu elements, %zu steps, corner p95 s_xx %.3e Pa, flat median s_xx %.3e Pa, ratio %.1f "
                    "(need >= 2), run %.1f s (limit 600 s)",
                    m.num_elements(), summary.records.size(), p95, median, p95 / std::max(std::abs(median), 1e-300),
                    elapsed)};
}

// 8. Free shrinkage of a block and the fully constrained element.
Outcome shrinkage_oracles() {
    const auto m0 = mesh::make_box_mesh(2, 2, 2, 1e-3, 1e-3, 1e-3);
    auto m = m0;
    m.node_sets["o"] = {nearest_node(m, mesh::Vec3(0, 0, 0))};
    m.node_sets["x"] = {nearest_node(m, mesh::Vec3(1e-3, 0, 0))};
    m.node_sets["y"] = {nearest_node(m, mesh::Vec3(0, 1e-3, 0))};
    const std::vector<mechanics::Constraint> determinate = {
        support::hold("o", true, true, true), support::hold("x", false, true, true), support::hold("y", false, false, true)};
    mechanics::PicardOptions tight;
    tight.displacement_tolerance = 1e-10;

    auto cool = [&](const material::MaterialCard& card, double t0, double t1, std::size_t steps, double dt) {
        mechanics::MechanicalModel model(m, card);
        auto s = mechanics::initial_mechanical_state(model, t0);
        for (std::size_t k = 1; k <= steps; ++k) {
            const double a = t0 + (t1 - t0) * double(k - 1) / double(steps);
            const double b = t0 + (t1 - t0) * double(k) / double(steps);
            auto l = uniform_loads(m, a, b, dt);
            l.constraints = determinate;
            s = mechanics::picard_step(model, s, l, tight).state;
        }
        return mechanics::shrinkage_report(m, s.displacement).axis_strain;
    };

    // Equal coefficients: the glass transition leaves no trace.
    const double alpha = 7e-5;
    const auto equal = cool(support::pmma_card(alpha, alpha), 456.15, 343.15, 20, 5.0);
    double err = 0.0;
    for (int i = 0; i < 3; ++i) err = std::max(err, std::abs(equal[i] - alpha * (343.15 - 456.15)) / (alpha * 113.0));
    // Rubbery range only, slow enough to stay in equilibrium: liquid coefficient.
    const double al = 2e-4, ag = 7e-5;
    const auto liquid = cool(support::pmma_card(al, ag), 456.15, 420.15, 10, 5.0);
    for (int i = 0; i < 3; ++i) err = std::max(err, std::abs(liquid[i] - al * (420.15 - 456.15)) / (al * 36.0));

    mesh::Mesh tet;
    tet.nodes = {mesh::Vec3(0, 0, 0), mesh::Vec3(1e-3, 0, 0), mesh::Vec3(0, 1e-3, 0), mesh::Vec3(0, 0, 1e-3)};
    tet.elements = {{0, 1, 2, 3}};
    tet.node_sets["all"] = {0, 1, 2, 3};
    const double bulk = 2.5e9, dT = -40.0;
    const auto card = support::elastic_card(1e9, bulk, alpha);
    mechanics::MechanicalModel model(tet, card);
    auto l = uniform_loads(tet, 350.0, 350.0 + dT, 1.0);
    l.constraints = {support::hold("all", true, true, true)};
    const auto r = mechanics::picard_step(model, mechanics::initial_mechanical_state(model, 350.0), l);
    const double expected = -3.0 * bulk * alpha * dT;
    const double hydro_err =
        (r.elements[0].stress - expected * mechanics::Tensor3::Identity()).norm() / (std::sqrt(3.0) * expected);
    return {err <= 1e-3 && hydro_err <= 1e-8,
            fmt("free shrinkage max relative error %.1e (tol 1e-3), constrained hydrostatic stress error %.1e "
                "(tol 1e-8)",
                err, hydro_err)};
}

// 9. CG against dense solves; ILU(0) against plain CG on Laplacians.
Outcome solver_suite() {
    double worst = 0.0;
    for (unsigned seed = 0; seed < 20; ++seed) {
        const std::size_t n = 10 + 5 * seed;
        const auto [a, dense] = support::random_spd(n, 100 + seed);
        std::mt19937 rng(seed);
        std::normal_distribution<double> nd;
        Eigen::VectorXd b(n);
        for (auto& v : b) v = nd(rng);
        const Eigen::VectorXd x_ref = dense.ldlt().solve(b);
        std::vector<double> x(n, 0.0);
        linalg::CgOptions o;
        o.tolerance = 1e-12;
        o.max_iterations = 20 * n;
        const auto pre = linalg::make_preconditioner(linalg::PreconditionerKind::jacobi, a);
        linalg::cg_solve(a, std::span<const double>(b.data(), n), x, o, pre.get());
        worst = std::max(worst, (Eigen::Map<Eigen::VectorXd>(x.data(), n) - x_ref).norm() / x_ref.norm());
    }
    std::string counts;
    bool fewer = true;
    for (std::size_t m : {8, 16, 32, 64, 128}) {
        const auto a = support::laplacian_2d(m);
        std::mt19937 rng{static_cast<unsigned>(m)};
        std::uniform_real_distribution<double> ud(-1.0, 1.0);
        std::vector<double> b(m * m);
        for (auto& v : b) v = ud(rng);
        linalg::CgOptions o;
        o.tolerance = 1e-10;
        std::vector<double> x0(m * m, 0.0), x1(m * m, 0.0);
        const auto plain = linalg::cg_solve(a, b, x0, o);
        const auto ilu = linalg::make_preconditioner(linalg::PreconditionerKind::ilu0, a);
        const auto pre = linalg::cg_solve(a, b, x1, o, ilu.get());
        fewer = fewer && pre.iterations < plain.iterations;
        counts += fmt(" %zu:%zu/%zu", m, pre.iterations, plain.iterations);
    }
    return {worst <= 1e-8 && fewer, fmt("20 SPD systems max relative error %.1e (tol 1e-8); ILU/plain iterations%s",
                                        worst, counts.c_str())};
}

json flat_plate() {
    const json fix_sym = json::array({{{"set", "xmin"}, {"fix", {"x"}}},
                                      {{"set", "ymin"}, {"fix", {"y"}}},
                                      {{"set", "zmin"}, {"fix", {"z"}}}});
    return {
        {"mesh_generator", {{"kind", "box"}, {"cells", {4, 2, 2}}, {"size_m", {2.0e-3, 1.0e-3, 0.4e-3}}}},
        {"material_file", (kFixtures / "pmma.json").string()},
        {"initial_temperature_C", 183.0},
        {"thermal",
         {{"convective",
           {{{"facet_set", "zmax"}, {"film_coefficient_W_m2K", 2000.0}, {"mold_temperature_C", 70.0}},
            {{"facet_set", "zmin"}, {"film_coefficient_W_m2K", 2000.0}, {"mold_temperature_C", 70.0}}}}}},
        {"contact",
         {{"candidate_sets", {"zmax"}},
          {"normal_penalty_N_m", 1.0e7},
          {"tangential_penalty_N_m", 1.0e7},
          {"static_friction", 0.3},
          {"dynamic_friction", 0.2},
          {"primitives", {{{"type", "half_space"}, {"point_m", {0.0, 0.0, 0.4e-3}}, {"normal", {0.0, 0.0, -1.0}}}}}}},
        {"phases",
         {{"cooling", {{"duration_s", 0.1}, {"dt_s", 0.02}, {"friction", true}, {"constraints", fix_sym}}},
          {"demolding",
           {{"dt_s", 0.01},
            {"opening_schedule", {{"times_s", {0.0, 0.03}}, {"displacements_m", {0.0, 1.0e-5}}}},
            {"friction", true},
            {"constraints", fix_sym}}}}},
        {"output", {{"vtk", true}, {"every", 1}}}};
}

// 10. Bit-identical sequential reruns; restart from a checkpoint.
Outcome determinism_restart() {
    auto make = [](const fs::path& out) {
        auto c = config::parse_config(flat_plate());
        c.output.directory = out;
        return c;
    };
    RunOptions seq;
    seq.sequential = true;
    const auto da = scratch("det_a"), db = scratch("det_b");
    const auto full = run(make(da), seq);
    run(make(db), seq);
    std::size_t files = 0, differing = 0;
    for (const auto& entry : fs::directory_iterator(da)) {
        ++files;
        const auto other = db / entry.path().filename();
        if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) ++differing;
    }

    const auto out = scratch("restart");
    RunOptions first = seq;
    first.checkpoint_every = 3;
    first.stop_after = 6;
    run(make(out), first);
    RunOptions second = seq;
    second.restart = out / "checkpoint_000003.json";
    const auto resumed = run(make(out), second);

    double worst = 0.0;
    auto rel = [&](double a, double b, double floor) {
        worst = std::max(worst, std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor}));
    };
    bool same_shape = resumed.records.size() == full.records.size();
    if (same_shape) {
        for (std::size_t i = 0; i < full.temperature.values.size(); ++i) {
            rel(resumed.temperature.values[i], full.temperature.values[i], 1e-300);
            for (int k = 0; k < 3; ++k) rel(resumed.mechanics.displacement[i][k], full.mechanics.displacement[i][k], 1e-12);
        }
        for (std::size_t e = 0; e < full.elements.size(); ++e) {
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) rel(resumed.elements[e].stress(i, j), full.elements[e].stress(i, j), 1.0);
        }
        for (std::size_t i = 0; i < full.records.size(); ++i) {
            rel(resumed.records[i].max_von_mises, full.records[i].max_von_mises, 1.0);
            rel(resumed.records[i].demolding_force, full.records[i].demolding_force, 1e-12);
        }
    }
    return {files >= 10 && differing == 0 && same_shape && worst <= 1e-12,
            fmt("%zu output files compared, %zu differ; restart max relative deviation %.1e (tol 1e-12)", files,
                differing, worst)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"constitutive oracle equivalence", constitutive_oracle},
        {"fictive temperature limits", fictive_limits},
        {"thermal slab benchmark", thermal_benchmark},
        {"gap-wise temperature gradient", gapwise_gradient},
        {"contact complementarity", contact_complementarity},
        {"friction block", friction_block},
        {"corner stress localization", corner_localization},
        {"free shrinkage", shrinkage_oracles},
        {"linear solver suite", solver_suite},
        {"determinism and restart", determinism_restart},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
