#include "plcg/perf_model.hpp"

#include "plcg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace plcg {

namespace {

void check_costs(const CostModel& cm) {
    if (!(cm.t_spmv >= 0.0) || !(cm.t_glred >= 0.0) || !(cm.t_flop >= 0.0))
        throw ArgumentError("cost model times must be non-negative");
}

}  // namespace

double CostModel::tree_latency(double base, double per_level, std::size_t nodes) {
    if (nodes == 0) throw ArgumentError("tree_latency: need at least one node");
    return base + per_level * std::log2(static_cast<double>(nodes));
}

std::string_view method_name(Method m) {
    switch (m) {
        case Method::cg: return "cg";
        case Method::pcg: return "pcg";
        case Method::plcg: return "plcg";
        case Method::plgmres: return "plgmres";
    }
    return "?";
}

double iteration_time(Method m, std::size_t l, const CostModel& cm, std::size_t i) {
    check_costs(cm);
    const double nf = static_cast<double>(cm.n) * cm.t_flop;
    const double ld = static_cast<double>(l);
    switch (m) {
        case Method::cg: return 2.0 * cm.t_glred + cm.t_spmv + 10.0 * nf;
        case Method::pcg: return std::max(cm.t_glred, cm.t_spmv) + 16.0 * nf;
        case Method::plcg:
            if (l == 0) throw ArgumentError("iteration_time: l must be positive");
            return std::max(cm.t_glred / ld, cm.t_spmv) + (6.0 * ld + 10.0) * nf;
        case Method::plgmres: {
            if (l == 0) throw ArgumentError("iteration_time: l must be positive");
            const double flops = std::max(0.0, 6.0 * static_cast<double>(i) - 4.0 * ld + 8.0);
            return std::max(cm.t_glred / ld, cm.t_spmv) + flops * nf;
        }
    }
    return 0.0;
}

double predicted_speedup(std::size_t l, const CostModel& cm) {
    return iteration_time(Method::cg, l, cm) / iteration_time(Method::plcg, l, cm);
}

std::string_view kernel_name(Kernel k) {
    static constexpr std::string_view names[] = {"K1", "K2", "K3", "K4", "K5", "K6"};
    return names[static_cast<int>(k)];
}

double kernel_flops(Kernel k, std::size_t l) {
    const double ld = static_cast<double>(l);
    switch (k) {
        case Kernel::k4: return 4.0 * ld + 4.0;
        case Kernel::k5: return 2.0 * ld + 2.0;
        case Kernel::k6: return 4.0;
        default: return 0.0;
    }
}

bool ScheduleTimeline::causal() const {
    return std::all_of(reductions.begin(), reductions.end(), [](const ReductionRecord& r) {
        return r.consumed_at_iter == ReductionRecord::not_consumed || r.completes_at_time <= r.consumed_at_time;
    });
}

ScheduleTimeline simulate_schedule(std::size_t l, std::size_t iters, const CostModel& cm) {
    check_costs(cm);
    if (l == 0) throw ArgumentError("simulate_schedule: l must be positive");
    if (iters < l + 1) throw ArgumentError("simulate_schedule: need iters >= l + 1");
    const double nf = static_cast<double>(cm.n) * cm.t_flop;

    ScheduleTimeline tl;
    tl.events.reserve(iters * 6);
    tl.reductions.reserve(iters);
    double t = 0.0;
    auto run = [&](std::size_t i, Kernel k, double duration, double idle) {
        tl.events.push_back({i, k, t, t + duration, idle});
        t += duration;
    };

    for (std::size_t i = 0; i < iters; ++i) {
        run(i, Kernel::k1, cm.t_spmv, 0.0);
        double wait = 0.0;
        if (i >= l) {
            ReductionRecord& r = tl.reductions[i - l];
            const double ready = std::max(t, r.completes_at_time);
            wait = ready - t;
            t = ready;
            r.consumed_at_iter = i;
            r.consumed_at_time = t;
            tl.idle += wait;
        }
        run(i, Kernel::k2, 0.0, wait);
        run(i, Kernel::k3, 0.0, 0.0);
        run(i, Kernel::k4, kernel_flops(Kernel::k4, l) * nf, 0.0);
        run(i, Kernel::k5, kernel_flops(Kernel::k5, l) * nf, 0.0);
        tl.reductions.push_back({i, t, t + cm.t_glred});
        run(i, Kernel::k6, kernel_flops(Kernel::k6, l) * nf, 0.0);
    }
    tl.makespan = t;
    for (const auto& r : tl.reductions) tl.makespan = std::max(tl.makespan, r.completes_at_time);
    return tl;
}

}  // namespace plcg
