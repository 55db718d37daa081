#pragma once

// Reference p(l)-GMRES with full storage of V, Z, G and H.

#include "plcg/shifts.hpp"
#include "plcg/sparse.hpp"
#include "plcg/trace.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace plcg {

struct PlgmresOptions {
    std::size_t l = 1;
    /// Krylov dimension of the final least-squares problem.
    std::size_t m = 30;
    /// Solve with the square m x m Hessenberg instead (FOM).
    bool fom = false;
    bool record_true_residual = false;
    /// Relative residual below which the run counts as converged.
    double tol = 1e-6;
};

struct PlgmresResult {
    ConvergenceTrace trace;
    /// Columns actually completed; less than m after a breakdown.
    std::size_t steps = 0;
    bool broke_down = false;
    Eigen::MatrixXd h;
    Eigen::MatrixXd g;
    std::vector<Vector> v;
    std::vector<Vector> z;
};

/// Column k-1 of H_{k+1,k} from G_{k+1}, B_{k+1,k} and H_{k,k-1} (leading
/// blocks of the arguments are used). Throws BreakdownError on g_{k-1,k-1} = 0.
Eigen::VectorXd hessenberg_column(const Eigen::MatrixXd& g, const Eigen::MatrixXd& b, const Eigen::MatrixXd& h,
                                  std::size_t k);

/// Runs the pipelined Arnoldi loop for m columns, then solves the small
/// least-squares problem by QR. A square-root breakdown ends the loop; the
/// solution is formed from the basis built so far.
PlgmresResult solve_plgmres(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                            const ShiftSet& shifts, const PlgmresOptions& opt);

}  // namespace plcg
