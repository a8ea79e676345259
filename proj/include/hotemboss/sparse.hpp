#pragma once

// Compressed-row sparse matrices and preconditioned conjugate gradient.

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hotemboss::linalg {

/// Square or rectangular matrix in compressed row storage with column indices
/// sorted ascending inside each row.
class CsrMatrix {
public:
    CsrMatrix() = default;

    /// Builds an all-zero matrix on the given pattern. `pattern[i]` lists the
    /// columns present in row i; duplicates are merged and the list is sorted.
    static CsrMatrix from_pattern(std::size_t n_cols, std::vector<std::vector<std::size_t>> pattern);

    /// Builds from (row, col, value) triplets; duplicates are summed.
    struct Triplet {
        std::size_t row;
        std::size_t col;
        double value;
    };
    static CsrMatrix from_triplets(std::size_t n_rows, std::size_t n_cols, std::span<const Triplet> triplets);

    static CsrMatrix identity(std::size_t n);

    std::size_t rows() const noexcept { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
    std::size_t cols() const noexcept { return n_cols_; }
    std::size_t nnz() const noexcept { return values_.size(); }

    std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
    std::span<const std::size_t> col_idx() const noexcept { return col_idx_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    /// Index into values() of entry (i, j), or npos when outside the pattern.
    std::size_t find(std::size_t i, std::size_t j) const noexcept;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    /// Adds v to entry (i, j). Throws when (i, j) is not in the pattern.
    void add(std::size_t i, std::size_t j, double v);
    double at(std::size_t i, std::size_t j) const noexcept;

    void set_zero() noexcept;
    std::vector<double> diagonal() const;
    bool is_structurally_symmetric() const;

    /// y = A x, rows evaluated independently in ascending column order.
    void matvec(std::span<const double> x, std::span<double> y) const;
    std::vector<double> matvec(std::span<const double> x) const;

    /// Eliminates the flagged unknowns: their rows and columns are zeroed, the
    /// diagonal set to 1 and `rhs` adjusted so the solution carries `values`
    /// at the flagged positions. Keeps an SPD matrix SPD.
    void apply_dirichlet(std::span<const char> constrained, std::span<const double> values, std::span<double> rhs);

    void write_matrix_market(const std::filesystem::path& path) const;

private:
    std::size_t n_cols_ = 0;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> col_idx_;
    std::vector<double> values_;
};

/// Worker threads used by matvec. 1 (the default) runs sequentially. Results
/// do not depend on this value.
void set_num_threads(unsigned n) noexcept;
unsigned num_threads() noexcept;

enum class PreconditionerKind { none, jacobi, ilu0 };
std::string to_string(PreconditionerKind kind);
PreconditionerKind preconditioner_from_string(const std::string& name);

class Preconditioner {
public:
    virtual ~Preconditioner() = default;
    virtual PreconditionerKind kind() const noexcept = 0;
    /// z = M^{-1} r
    virtual void apply(std::span<const double> r, std::span<double> z) const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
public:
    PreconditionerKind kind() const noexcept override { return PreconditionerKind::none; }
    void apply(std::span<const double> r, std::span<double> z) const override;
};

class JacobiPreconditioner final : public Preconditioner {
public:
    explicit JacobiPreconditioner(const CsrMatrix& a);
    PreconditionerKind kind() const noexcept override { return PreconditionerKind::jacobi; }
    void apply(std::span<const double> r, std::span<double> z) const override;

private:
    std::vector<double> inv_diag_;
};

/// Incomplete LU restricted to the sparsity pattern of A (no fill-in). L has
/// a unit diagonal; both factors share the storage of a copy of A.
class Ilu0Preconditioner final : public Preconditioner {
public:
    /// Throws ZeroPivotError naming the row whose pivot vanished.
    explicit Ilu0Preconditioner(const CsrMatrix& a);
    PreconditionerKind kind() const noexcept override { return PreconditionerKind::ilu0; }
    void apply(std::span<const double> r, std::span<double> z) const override;

    const CsrMatrix& factors() const noexcept { return lu_; }
    /// Smallest pivot of U. A non-positive value means the factorization of
    /// an SPD matrix is indefinite and unusable inside CG.
    double min_pivot() const noexcept { return min_pivot_; }

private:
    CsrMatrix lu_;
    double min_pivot_ = 0.0;
    std::vector<std::size_t> diag_pos_;
};

std::unique_ptr<Preconditioner> make_preconditioner(PreconditionerKind kind, const CsrMatrix& a);

struct SolveReport {
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    PreconditionerKind preconditioner = PreconditionerKind::none;
};

struct CgOptions {
    double tolerance = 1e-10;
    std::size_t max_iterations = 10000;
};

/// Preconditioned conjugate gradient for SPD A. `x` holds the initial guess
/// on entry and the solution on exit. Convergence is measured by the true
/// relative residual ||b - A x|| / ||b||; b = 0 returns x = 0 immediately.
///
/// Throws SolverBreakdownError when p.Ap <= 0 (A not SPD) and
/// SolverMaxIterError when the iteration budget runs out.
SolveReport cg_solve(const CsrMatrix& a, std::span<const double> b, std::span<double> x, const CgOptions& options,
                     const Preconditioner* preconditioner = nullptr);

double dot(std::span<const double> a, std::span<const double> b) noexcept;
double norm2(std::span<const double> a) noexcept;

}  // namespace hotemboss::linalg
