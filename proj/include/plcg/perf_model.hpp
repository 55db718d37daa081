#pragma once

// Per-iteration cost model and an event replay of the p(l)-CG overlap schedule.

#include <cstddef>
#include <limits>
#include <string_view>
#include <vector>

namespace plcg {

struct CostModel {
    /// Seconds per SPMV (plus preconditioner).
    double t_spmv = 1.0;
    /// Seconds per global reduction.
    double t_glred = 1.0;
    /// Seconds per vector flop, multiplied by n.
    double t_flop = 0.0;
    std::size_t n = 1;
    std::size_t nodes = 1;

    /// Reduction latency of a tree over `nodes`: base + per_level * log2(nodes).
    static double tree_latency(double base, double per_level, std::size_t nodes);
};

enum class Method { cg, pcg, plcg, plgmres };

std::string_view method_name(Method m);

/// Time of one iteration. `i` is the iteration index, used by p(l)-GMRES only.
double iteration_time(Method m, std::size_t l, const CostModel& cm, std::size_t i = 0);

/// CG time over p(l)-CG time per iteration.
double predicted_speedup(std::size_t l, const CostModel& cm);

enum class Kernel { k1, k2, k3, k4, k5, k6 };

std::string_view kernel_name(Kernel k);

/// Vector flops per kernel in units of n (K2 and K3 are scalar work).
double kernel_flops(Kernel k, std::size_t l);

struct KernelEvent {
    std::size_t iter = 0;
    Kernel kernel = Kernel::k1;
    double start = 0.0;
    double end = 0.0;
    /// Wait for the reduction right before this kernel.
    double idle = 0.0;
};

struct ReductionRecord {
    static constexpr std::size_t not_consumed = std::numeric_limits<std::size_t>::max();

    std::size_t initiated_at_iter = 0;
    double initiated_at_time = 0.0;
    double completes_at_time = 0.0;
    std::size_t consumed_at_iter = not_consumed;
    double consumed_at_time = std::numeric_limits<double>::quiet_NaN();
};

struct ScheduleTimeline {
    std::vector<KernelEvent> events;
    std::vector<ReductionRecord> reductions;
    /// Includes the drain of reductions still in flight after the last iteration.
    double makespan = 0.0;
    double idle = 0.0;

    /// Every consumed reduction completed before its consumer started.
    bool causal() const;
};

/// Replays `iters` iterations of depth-l p(l)-CG on one process: K1, wait for
/// the reduction issued l iterations back, K2..K5, issue, K6.
ScheduleTimeline simulate_schedule(std::size_t l, std::size_t iters, const CostModel& cm);

}  // namespace plcg
