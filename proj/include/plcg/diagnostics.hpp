#pragma once

// Finite-precision instrumentation and dense reference oracles.

#include "plcg/shifts.hpp"
#include "plcg/sparse.hpp"
#include "plcg/trace.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <vector>

namespace plcg {

/// Limits for runs that copy vectors every iteration.
inline constexpr std::size_t kSnapshotMaxN = 100000;
inline constexpr std::size_t kSnapshotMaxIter = 500;
/// Largest n for which a dense eigendecomposition is used.
inline constexpr std::size_t kDenseMaxN = 1000;

struct DenseLanczosResult {
    /// n x steps, orthonormal.
    Eigen::MatrixXd v;
    /// steps x steps symmetric tridiagonal.
    Eigen::MatrixXd t;
    /// Coupling to the next vector: A V = V T + beta_next * next * e_last^T.
    double beta_next = 0.0;
    Eigen::VectorXd next;
    std::size_t steps() const { return static_cast<std::size_t>(t.rows()); }
};

/// Lanczos with full reorthogonalization. Stops early when the new
/// direction has norm below 1e-14.
DenseLanczosResult dense_lanczos(const CsrMatrix& a, std::span<const double> v0, std::size_t k);

struct GapRecord {
    std::size_t iter = 0;
    double residual_gap = std::numeric_limits<double>::quiet_NaN();
    double basis_gap = std::numeric_limits<double>::quiet_NaN();
    /// Max norm of the error propagation matrix (G^{-1}, B^{-1}, or E = 1 for CG).
    double amplification = std::numeric_limits<double>::quiet_NaN();
    /// Max norm of G for p(l)-CG.
    double g_max = std::numeric_limits<double>::quiet_NaN();
};

struct GapTrace {
    std::vector<GapRecord> records;
    ConvergenceTrace solve;
    /// Records stop at the first breakdown of the solver.
    bool truncated = false;
};

/// p(l)-CG run with |(b - A x_k) - zeta_k v_k|, the basis gap
/// |v_true_k - v_k|, and |G_{k+1}^{-1}|_max, |G_{k+1}|_max per solution index.
/// Unpreconditioned only; n and max_iter are capped by kSnapshotMaxN/Iter.
GapTrace residual_gap_trace(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                            std::size_t l, const ShiftSet& shifts, const SolveConfig& cfg);

/// Classic CG run with |(b - A x_k) - r_k|; amplification is the constant 1.
GapTrace cg_gap_trace(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                      const SolveConfig& cfg);

/// Basis gaps alone, taken from a trace.
std::vector<double> basis_gap_trace(const GapTrace& trace);

/// Max |entry| of G^{-1} for upper-triangular G, by back-substitution one
/// column at a time. Returns infinity if a diagonal entry is zero.
double ginv_max_norm(const Eigen::MatrixXd& g);

/// Same quantity maintained column by column for banded upper-triangular G:
/// the leading block of the inverse does not change when a column is added.
class TriangularInverseMax {
public:
    /// Column k holds rows first_row..k.
    void add_column(std::size_t first_row, std::span<const double> entries);
    double value() const { return max_; }
    std::size_t columns() const { return cols_.size(); }

private:
    struct Column {
        std::size_t first = 0;
        std::vector<double> entries;
    };
    std::vector<Column> cols_;
    double max_ = 0.0;
};

struct Lemma41Result {
    /// max over k <= l of |P_k(A)|, the bound on every entry of G.
    double poly_norm = 0.0;
    /// n * eps * poly_norm, standing in for the rounding terms.
    double eps_term = 0.0;
    double bound = 0.0;
    /// Spectrum was estimated from Ritz values (n above kDenseMaxN).
    bool estimated = false;
    /// |G_{k+1}|_max per solution index of the run.
    std::vector<double> measured;
    bool holds() const;
};

/// max_{0 <= k <= l} |P_k(A)|_2 from the eigenvalues of symmetric A.
double shift_polynomial_norm(const CsrMatrix& a, const ShiftSet& shifts, bool* estimated = nullptr);

/// Runs p(l)-CG for cfg.max_iter updates and compares |G|_max with the bound.
Lemma41Result lemma41_bound(const CsrMatrix& a, std::span<const double> b, const ShiftSet& shifts,
                            const SolveConfig& cfg);

/// Builds the trailing block of G = V^T Z from dense Lanczos bases and from
/// P_l(T_j) shifted up by l rows; returns the largest deviation. l is
/// shifts.depth(); l = 0 compares V^T V with the identity.
double lemma_a1_check(const CsrMatrix& a, std::span<const double> v0, const ShiftSet& shifts, std::size_t j);

struct PipeCgGapRecord {
    std::size_t iter = 0;
    double r_gap = 0.0;  // |(b - A x) - r|
    double s_gap = 0.0;  // |A p - s|
    double w_gap = 0.0;  // |A r - w|
    double z_gap = 0.0;  // |A s - z|
    /// max norm of the leading (k+1) x (k+1) block of B^{-1}.
    double binv_max = 1.0;
};

struct PipeCgGapTrace {
    std::vector<PipeCgGapRecord> records;
    /// beta_1 .. beta_k as recorded.
    std::vector<double> beta;
    ConvergenceTrace solve;
};

/// Unpreconditioned p-CG run with all auxiliary gaps measured directly.
PipeCgGapTrace pcg_gap_decomposition(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                                     const SolveConfig& cfg);

/// Entry (i, j) of B^{-1}: product beta_{i+1} .. beta_j, with beta[0] = beta_1.
double binv_entry(std::span<const double> beta, std::size_t i, std::size_t j);

}  // namespace plcg
