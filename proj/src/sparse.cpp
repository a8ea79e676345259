#include "hotemboss/sparse.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "hotemboss/errors.hpp"

namespace hotemboss::linalg {

namespace {

std::atomic<unsigned> g_threads{1};

// Rows below this count are not worth a thread launch.
constexpr std::size_t kParallelRowThreshold = 20000;

}  // namespace

void set_num_threads(unsigned n) noexcept { g_threads = std::max(1u, n); }
unsigned num_threads() noexcept { return g_threads; }

CsrMatrix CsrMatrix::from_pattern(std::size_t n_cols, std::vector<std::vector<std::size_t>> pattern) {
    CsrMatrix m;
    m.n_cols_ = n_cols;
    m.row_ptr_.assign(pattern.size() + 1, 0);
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        auto& row = pattern[i];
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        if (!row.empty() && row.back() >= n_cols) {
            throw DimensionMismatchError("sparsity pattern column out of range in row " + std::to_string(i));
        }
        m.row_ptr_[i + 1] = m.row_ptr_[i] + row.size();
    }
    m.col_idx_.reserve(m.row_ptr_.back());
    for (const auto& row : pattern) {
        m.col_idx_.insert(m.col_idx_.end(), row.begin(), row.end());
    }
    m.values_.assign(m.col_idx_.size(), 0.0);
    return m;
}

CsrMatrix CsrMatrix::from_triplets(std::size_t n_rows, std::size_t n_cols, std::span<const Triplet> triplets) {
    std::vector<std::vector<std::size_t>> pattern(n_rows);
    for (const auto& t : triplets) {
        if (t.row >= n_rows || t.col >= n_cols) {
            throw DimensionMismatchError("triplet index out of range");
        }
        pattern[t.row].push_back(t.col);
    }
    CsrMatrix m = from_pattern(n_cols, std::move(pattern));
    for (const auto& t : triplets) {
        m.add(t.row, t.col, t.value);
    }
    return m;
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
    std::vector<std::vector<std::size_t>> pattern(n);
    for (std::size_t i = 0; i < n; ++i) {
        pattern[i].push_back(i);
    }
    CsrMatrix m = from_pattern(n, std::move(pattern));
    std::fill(m.values_.begin(), m.values_.end(), 1.0);
    return m;
}

std::size_t CsrMatrix::find(std::size_t i, std::size_t j) const noexcept {
    if (i >= rows()) {
        return npos;
    }
    const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
    const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) {
        return npos;
    }
    return static_cast<std::size_t>(it - col_idx_.begin());
}

void CsrMatrix::add(std::size_t i, std::size_t j, double v) {
    const std::size_t k = find(i, j);
    if (k == npos) {
        throw DimensionMismatchError("entry (" + std::to_string(i) + ", " + std::to_string(j) +
                                     ") outside the sparsity pattern");
    }
    values_[k] += v;
}

double CsrMatrix::at(std::size_t i, std::size_t j) const noexcept {
    const std::size_t k = find(i, j);
    return k == npos ? 0.0 : values_[k];
}

void CsrMatrix::set_zero() noexcept { std::fill(values_.begin(), values_.end(), 0.0); }

std::vector<double> CsrMatrix::diagonal() const {
    std::vector<double> d(rows(), 0.0);
    for (std::size_t i = 0; i < rows(); ++i) {
        d[i] = at(i, i);
    }
    return d;
}

bool CsrMatrix::is_structurally_symmetric() const {
    if (rows() != cols()) {
        return false;
    }
    for (std::size_t i = 0; i < rows(); ++i) {
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            if (find(col_idx_[k], i) == npos) {
                return false;
            }
        }
    }
    return true;
}

void CsrMatrix::matvec(std::span<const double> x, std::span<double> y) const {
    if (x.size() != cols() || y.size() != rows()) {
        throw DimensionMismatchError("matvec: matrix is " + std::to_string(rows()) + "x" + std::to_string(cols()) +
                                     ", x has " + std::to_string(x.size()) + ", y has " + std::to_string(y.size()));
    }
    auto kernel = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double sum = 0.0;
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                sum += values_[k] * x[col_idx_[k]];
            }
            y[i] = sum;
        }
    };
    const unsigned threads = num_threads();
    const std::size_t n = rows();
    if (threads <= 1 || n < kParallelRowThreshold) {
        kernel(0, n);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) {
            break;
        }
        pool.emplace_back(kernel, begin, end);
    }
}

std::vector<double> CsrMatrix::matvec(std::span<const double> x) const {
    std::vector<double> y(rows());
    matvec(x, y);
    return y;
}

void CsrMatrix::apply_dirichlet(std::span<const char> constrained, std::span<const double> values,
                                std::span<double> rhs) {
    const std::size_t n = rows();
    if (constrained.size() != n || values.size() != n || rhs.size() != n || cols() != n) {
        throw DimensionMismatchError("apply_dirichlet: size mismatch");
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            const std::size_t j = col_idx_[k];
            if (constrained[i]) {
                values_[k] = (i == j) ? 1.0 : 0.0;
            } else if (constrained[j]) {
                rhs[i] -= values_[k] * values[j];
                values_[k] = 0.0;
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (constrained[i]) {
            rhs[i] = values[i];
        }
    }
}

void CsrMatrix::write_matrix_market(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << rows() << ' ' << cols() << ' ' << nnz() << '\n';
    out << std::setprecision(17);
    for (std::size_t i = 0; i < rows(); ++i) {
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            out << i + 1 << ' ' << col_idx_[k] + 1 << ' ' << values_[k] << '\n';
        }
    }
}

std::string to_string(PreconditionerKind kind) {
    switch (kind) {
        case PreconditionerKind::none:
            return "none";
        case PreconditionerKind::jacobi:
            return "jacobi";
        case PreconditionerKind::ilu0:
            return "ilu0";
    }
    return "unknown";
}

PreconditionerKind preconditioner_from_string(const std::string& name) {
    if (name == "none") {
        return PreconditionerKind::none;
    }
    if (name == "jacobi") {
        return PreconditionerKind::jacobi;
    }
    if (name == "ilu0") {
        return PreconditionerKind::ilu0;
    }
    throw ConfigError("unknown preconditioner '" + name + "' (expected none, jacobi or ilu0)");
}

void IdentityPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
    std::copy(r.begin(), r.end(), z.begin());
}

JacobiPreconditioner::JacobiPreconditioner(const CsrMatrix& a) : inv_diag_(a.diagonal()) {
    for (std::size_t i = 0; i < inv_diag_.size(); ++i) {
        if (inv_diag_[i] == 0.0) {
            throw ZeroPivotError("Jacobi: zero diagonal in row " + std::to_string(i), i);
        }
        inv_diag_[i] = 1.0 / inv_diag_[i];
    }
}

void JacobiPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
    for (std::size_t i = 0; i < r.size(); ++i) {
        z[i] = inv_diag_[i] * r[i];
    }
}

Ilu0Preconditioner::Ilu0Preconditioner(const CsrMatrix& a) : lu_(a) {
    const std::size_t n = lu_.rows();
    if (lu_.cols() != n) {
        throw DimensionMismatchError("ILU(0) requires a square matrix");
    }
    const auto row_ptr = lu_.row_ptr();
    const auto col = lu_.col_idx();
    auto val = lu_.values();

    diag_pos_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        diag_pos_[i] = lu_.find(i, i);
        if (diag_pos_[i] == CsrMatrix::npos || val[diag_pos_[i]] == 0.0) {
            throw ZeroPivotError("ILU(0): zero pivot in row " + std::to_string(i), i);
        }
    }

    // IKJ ordering restricted to the pattern of A.
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t kk = row_ptr[i]; kk < row_ptr[i + 1] && col[kk] < i; ++kk) {
            const std::size_t k = col[kk];
            const double pivot = val[diag_pos_[k]];
            if (pivot == 0.0 || !std::isfinite(pivot)) {
                throw ZeroPivotError("ILU(0): zero pivot in row " + std::to_string(k), k);
            }
            val[kk] /= pivot;
            const double lik = val[kk];
            std::size_t jj = kk + 1;
            for (std::size_t kj = diag_pos_[k] + 1; kj < row_ptr[k + 1]; ++kj) {
                const std::size_t j = col[kj];
                while (jj < row_ptr[i + 1] && col[jj] < j) {
                    ++jj;
                }
                if (jj == row_ptr[i + 1]) {
                    break;
                }
                if (col[jj] == j) {
                    val[jj] -= lik * val[kj];
                }
            }
        }
        const double d = val[diag_pos_[i]];
        if (d == 0.0 || !std::isfinite(d)) {
            throw ZeroPivotError("ILU(0): zero pivot in row " + std::to_string(i), i);
        }
    }
    min_pivot_ = val[diag_pos_[0]];
    for (std::size_t i = 1; i < n; ++i) {
        min_pivot_ = std::min(min_pivot_, val[diag_pos_[i]]);
    }
}

void Ilu0Preconditioner::apply(std::span<const double> r, std::span<double> z) const {
    const std::size_t n = lu_.rows();
    const auto row_ptr = lu_.row_ptr();
    const auto col = lu_.col_idx();
    const auto val = lu_.values();
    for (std::size_t i = 0; i < n; ++i) {
        double sum = r[i];
        for (std::size_t k = row_ptr[i]; k < diag_pos_[i]; ++k) {
            sum -= val[k] * z[col[k]];
        }
        z[i] = sum;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double sum = z[ii];
        for (std::size_t k = diag_pos_[ii] + 1; k < row_ptr[ii + 1]; ++k) {
            sum -= val[k] * z[col[k]];
        }
        z[ii] = sum / val[diag_pos_[ii]];
    }
}

std::unique_ptr<Preconditioner> make_preconditioner(PreconditionerKind kind, const CsrMatrix& a) {
    switch (kind) {
        case PreconditionerKind::none:
            return std::make_unique<IdentityPreconditioner>();
        case PreconditionerKind::jacobi:
            return std::make_unique<JacobiPreconditioner>(a);
        case PreconditionerKind::ilu0:
            return std::make_unique<Ilu0Preconditioner>(a);
    }
    return std::make_unique<IdentityPreconditioner>();
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double norm2(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

SolveReport cg_solve(const CsrMatrix& a, std::span<const double> b, std::span<double> x, const CgOptions& options,
                     const Preconditioner* preconditioner) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n || x.size() != n) {
        throw DimensionMismatchError("cg_solve: size mismatch");
    }
    SolveReport report;
    IdentityPreconditioner identity;
    const Preconditioner& m = preconditioner != nullptr ? *preconditioner : identity;
    report.preconditioner = m.kind();

    const double b_norm = norm2(b);
    if (b_norm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return report;
    }

    std::vector<double> r(n), z(n), p(n), ap(n);
    auto true_residual = [&]() {
        a.matvec(x, ap);
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = b[i] - ap[i];
        }
        return norm2(r) / b_norm;
    };

    report.relative_residual = true_residual();
    if (report.relative_residual <= options.tolerance) {
        return report;
    }
    m.apply(r, z);
    p = z;
    double rz = dot(r, z);

    while (report.iterations < options.max_iterations) {
        a.matvec(p, ap);
        const double curvature = dot(p, ap);
        if (!(curvature > 0.0)) {
            throw SolverBreakdownError("CG breakdown: non-positive curvature p.Ap = " + std::to_string(curvature) +
                                       " at iteration " + std::to_string(report.iterations) +
                                       " (matrix not SPD)");
        }
        const double alpha = rz / curvature;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        ++report.iterations;
        report.relative_residual = norm2(r) / b_norm;
        if (report.relative_residual <= options.tolerance) {
            // The recursive residual drifts; confirm against b - Ax before returning.
            report.relative_residual = true_residual();
            if (report.relative_residual <= options.tolerance) {
                return report;
            }
        }
        m.apply(r, z);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = z[i] + beta * p[i];
        }
    }
    std::ostringstream msg;
    msg << "CG did not converge in " << options.max_iterations << " iterations (relative residual "
        << report.relative_residual << ", tolerance " << options.tolerance << ", preconditioner "
        << to_string(report.preconditioner) << ")";
    throw SolverMaxIterError(msg.str());
}

}  // namespace hotemboss::linalg
