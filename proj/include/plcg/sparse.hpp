#pragma once

#include "plcg/kernels.hpp"

#include <cstddef>
#include <cstdint>
#include <istream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace plcg {

using Vector = std::vector<double>;

struct Triplet {
    std::int64_t row;
    std::int64_t col;
    double value;
};

/// Square sparse matrix in compressed-row layout. Column indices within a row
/// are sorted ascending and unique. Immutable after construction.
class CsrMatrix {
public:
    CsrMatrix() = default;

    /// Builds from unsorted triplets; duplicates are summed.
    static CsrMatrix from_triplets(std::size_t n, std::span<const Triplet> entries);
    static CsrMatrix identity(std::size_t n);
    static CsrMatrix diagonal(std::span<const double> diag);

    std::size_t size() const { return n_; }
    std::size_t nnz() const { return values_.size(); }
    std::span<const std::int64_t> row_ptr() const { return row_ptr_; }
    std::span<const std::int32_t> col_idx() const { return col_idx_; }
    std::span<const double> values() const { return values_; }

    /// Entry (i, j), zero if not stored.
    double at(std::size_t i, std::size_t j) const;
    /// Exact structural and numeric symmetry.
    bool is_symmetric() const;
    /// Maximum number of stored entries in any row.
    std::size_t max_row_nnz() const;

    kernels::CsrView view() const { return {n_, row_ptr_.data(), col_idx_.data(), values_.data()}; }

    /// Dense row-major copy, for oracles on small problems.
    std::vector<double> to_dense() const;

private:
    std::size_t n_ = 0;
    std::vector<std::int64_t> row_ptr_{0};
    std::vector<std::int32_t> col_idx_;
    std::vector<double> values_;
};

/// y = A x. Throws DimensionError on length mismatch.
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
Vector spmv(const CsrMatrix& a, std::span<const double> x);

/// 5-point Laplacian on an nx-by-ny grid with homogeneous Dirichlet boundaries
/// (diagonal 4, neighbours -1).
CsrMatrix build_poisson_2d(std::size_t nx, std::size_t ny);

/// 9-point star on an nx-by-ny grid (diagonal 8, the eight neighbours -1).
/// With nx = ny = 30 this is the Harwell-Boeing matrix gr_30_30.
CsrMatrix build_nine_point_2d(std::size_t nx, std::size_t ny);

/// Parses Matrix Market `coordinate real {symmetric|general}`. Symmetric
/// storage is expanded; duplicate entries are summed.
CsrMatrix parse_matrix_market(std::istream& in);
CsrMatrix read_matrix_market(const std::string& path);
void write_matrix_market(std::ostream& out, const CsrMatrix& a, bool symmetric_storage = true);

/// Diagonal (Jacobi) preconditioner, or the identity when kind is none.
class Preconditioner {
public:
    enum class Kind { none, jacobi };

    Preconditioner() = default;
    static Preconditioner none() { return {}; }
    /// Throws DefinitenessError on a missing or nonpositive diagonal entry.
    static Preconditioner jacobi(const CsrMatrix& a);

    Kind kind() const { return kind_; }
    bool is_identity() const { return kind_ == Kind::none; }
    std::span<const double> inv_diag() const { return inv_diag_; }

    /// y = M^{-1} x
    void apply(std::span<const double> x, std::span<double> y) const;

private:
    Kind kind_ = Kind::none;
    Vector inv_diag_;
};

struct SpectralInterval {
    double lambda_min = 0.0;
    double lambda_max = 1.0;
};

/// Gershgorin enclosure of the spectrum, lower end clamped at zero. A
/// degenerate interval is widened by 1e-8 * max(1, |lambda|) on both sides.
SpectralInterval gershgorin_interval(const CsrMatrix& a);
/// Enclosure for the spectrum of M^{-1} A with M = diag(A), computed on the
/// similar matrix D^{-1/2} A D^{-1/2}.
SpectralInterval gershgorin_interval(const CsrMatrix& a, const Preconditioner& m);

/// b = A * (1/sqrt(n), ..., 1/sqrt(n))
Vector rhs_for_unit_solution(const CsrMatrix& a);

double norm2(std::span<const double> x);

}  // namespace plcg
