#include "plcg/trace.hpp"

namespace plcg {

std::string_view event_name(TraceEvent e) {
    switch (e) {
        case TraceEvent::none: return "none";
        case TraceEvent::breakdown: return "breakdown";
        case TraceEvent::restart: return "restart";
        case TraceEvent::converged: return "converged";
    }
    return "none";
}

std::string_view status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::budget_exhausted: return "budget_exhausted";
        case SolveStatus::breakdown: return "breakdown";
    }
    return "budget_exhausted";
}

double true_residual_norm(const CsrMatrix& a, std::span<const double> b, std::span<const double> x) {
    Vector r = spmv(a, x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
    return norm2(r);
}

}  // namespace plcg
