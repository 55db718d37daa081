#pragma once

#include "plcg/sparse.hpp"
#include "plcg/trace.hpp"

#include <functional>

namespace plcg {

/// Vectors of one p-CG iteration, passed to an optional observer after the
/// updates of iteration k (k = 0 is the initial state).
struct PipeCgSnapshot {
    std::size_t k = 0;
    std::span<const double> x, r, w, s, z, p;
    double alpha = 0.0;
    double beta = 0.0;
};

struct CgSnapshot {
    std::size_t k = 0;
    std::span<const double> x, r, p;
    double alpha = 0.0;
    double beta = 0.0;
};

using CgObserver = std::function<void(const CgSnapshot&)>;
using PipeCgObserver = std::function<void(const PipeCgSnapshot&)>;

/// Classic (preconditioned) conjugate gradients. Throws DefinitenessError
/// when (p, Ap) <= 0.
ConvergenceTrace solve_cg(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                          const SolveConfig& cfg, const CgObserver& observer = {});

/// Pipelined CG with a single fused reduction per iteration and auxiliary
/// recurrences for w = Ar, s = Ap and z = As.
ConvergenceTrace solve_pipecg(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                              const SolveConfig& cfg, const PipeCgObserver& observer = {});

}  // namespace plcg
