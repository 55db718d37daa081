#pragma once

#include "plcg/sparse.hpp"

#include <cstddef>
#include <limits>
#include <string_view>
#include <vector>

namespace plcg {

struct SolveConfig {
    /// Relative tolerance on the recursive residual norm, |r_k| / |b|.
    double tol = 1e-6;
    /// Number of solution updates allowed (x_1 .. x_max_iter).
    std::size_t max_iter = 1000;
    /// Disable to run exactly max_iter updates regardless of tol.
    bool stop_on_tol = true;
    /// Compute |b - A x_k| with an extra spmv at every record.
    bool record_true_residual = false;
    Preconditioner precond;
    /// p(l)-CG only: restarts allowed after square-root or pivot breakdowns.
    std::size_t max_restarts = 5;
};

enum class TraceEvent { none, breakdown, restart, converged };

std::string_view event_name(TraceEvent e);

struct TraceRecord {
    /// Solution index k, cumulative across restarts.
    std::size_t iter = 0;
    /// Recursively available residual norm (|zeta_k| for p(l)-CG).
    double recursive_norm = 0.0;
    /// |b - A x_k|, NaN when not recorded.
    double true_norm = std::numeric_limits<double>::quiet_NaN();
    TraceEvent event = TraceEvent::none;
};

enum class SolveStatus { converged, budget_exhausted, breakdown };

std::string_view status_name(SolveStatus s);

struct ConvergenceTrace {
    std::vector<TraceRecord> records;
    Vector x;
    /// Number of solution updates performed.
    std::size_t iterations = 0;
    std::size_t restarts = 0;
    std::size_t breakdowns = 0;
    SolveStatus status = SolveStatus::budget_exhausted;
    /// Norm used to scale the stopping test.
    double b_norm = 0.0;

    bool converged() const { return status == SolveStatus::converged; }
};

/// |b - A x|
double true_residual_norm(const CsrMatrix& a, std::span<const double> b, std::span<const double> x);

}  // namespace plcg
