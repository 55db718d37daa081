// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "plcg/classic.hpp"
#include "plcg/diagnostics.hpp"
#include "plcg/perf_model.hpp"
#include "plcg/plcg.hpp"
#include "plcg/shifts.hpp"
#include "plcg/sparse.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

using namespace plcg;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string sci(double v) { return fmt("%.3e", v); }

ShiftSet cheb(double lmax, std::size_t l) { return chebyshev_shifts({0.0, lmax}, l); }

SolveConfig full_run(std::size_t iters) {
    SolveConfig cfg;
    cfg.max_iter = iters;
    cfg.stop_on_tol = false;
    return cfg;
}

double final_true(const CsrMatrix& a, const Vector& b, const ConvergenceTrace& t) {
    return true_residual_norm(a, b, t.x);
}

Verdict convergence_equivalence() {
    const CsrMatrix a = build_poisson_2d(50, 50);
    const Vector b = rhs_for_unit_solution(a);
    const Vector x0(a.size(), 0.0);
    const SolveConfig cfg = full_run(30);
    const ConvergenceTrace cg = solve_cg(a, b, x0, cfg);
    double worst = 0.0;
    for (std::size_t l = 1; l <= 3; ++l) {
        const ConvergenceTrace p = solve_plcg(a, b, x0, l, cheb(8.0, l), cfg);
        if (p.records.size() < 31 || cg.records.size() < 31) return {false, "short trace"};
        for (std::size_t k = 0; k <= 30; ++k) {
            const double ref = cg.records[k].recursive_norm;
            worst = std::max(worst, std::abs(std::abs(p.records[k].recursive_norm) - ref) / ref);
        }
    }
    return {worst < 1e-6, "max rel deviation " + sci(worst) + " over l=1,2,3, k<=30"};
}

// Deviation of |zeta_k| (or |r_k|) from the explicit residual norm over the
// iterates whose explicit norm exceeds floor * |b|.
struct Deviation {
    double worst = 0.0;
    double worst_loose = 0.0;
    double gap_over_eps = 0.0;
    std::size_t checked = 0;

    void add(double recursive, double explicit_norm, double b_norm) {
        if (explicit_norm <= 1e-10 * b_norm) return;
        const double d = std::abs(std::abs(recursive) - explicit_norm) / explicit_norm;
        worst = std::max(worst, d);
        if (explicit_norm > 1e-8 * b_norm) worst_loose = std::max(worst_loose, d);
        const double eps = std::numeric_limits<double>::epsilon();
        gap_over_eps = std::max(gap_over_eps, std::abs(std::abs(recursive) - explicit_norm) / (eps * b_norm));
        ++checked;
    }
    std::string describe() const {
        return sci(worst) + " over " + std::to_string(checked) + " iterates (" + sci(worst_loose) +
               " above 1e-8|b|, largest |gap| " + fmt("%.0f", gap_over_eps) + " eps|b|)";
    }
};

Verdict residual_identity() {
    const CsrMatrix a = build_poisson_2d(100, 100);
    const Vector b = rhs_for_unit_solution(a);
    const Vector x0(a.size(), 0.0);
    SolveConfig cfg;
    cfg.tol = 1e-12;
    cfg.max_iter = 1000;
    cfg.max_restarts = 0;
    const double bn = norm2(b);

    Deviation plain;
    PlcgObserver obs;
    obs.on_solution = [&](std::size_t, std::span<const double> x, double zeta) {
        plain.add(zeta, true_residual_norm(a, b, x), bn);
    };
    solve_plcg(a, b, x0, 2, cheb(8.0, 2), cfg, obs);

    Deviation cg;
    {
        SolveConfig c = cfg;
        c.record_true_residual = true;
        for (const TraceRecord& r : solve_cg(a, b, x0, c).records) cg.add(r.recursive_norm, r.true_norm, bn);
    }

    cfg.precond = Preconditioner::jacobi(a);
    const Preconditioner& m = cfg.precond;
    const ShiftSet sh = chebyshev_shifts(gershgorin_interval(a, m), 2);
    auto m_norm = [&](std::span<const double> r) {
        Vector mr(r.size());
        m.apply(r, mr);
        double t = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) t += r[i] * mr[i];
        return std::sqrt(t);
    };
    const double bm = m_norm(b);
    Vector r(a.size());
    Deviation prec;
    obs.on_solution = [&](std::size_t, std::span<const double> x, double zeta) {
        spmv(a, x, r);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
        prec.add(zeta, m_norm(r), bm);
    };
    solve_plcg(a, b, x0, 2, sh, cfg, obs);

    const bool ok = plain.checked > 10 && prec.checked > 10 && plain.worst < 1e-6 && prec.worst < 1e-6;
    return {ok, "2-norm " + plain.describe() + "; M-norm " + prec.describe() + "; classic CG under the same rule " +
                    cg.describe()};
}

Verdict attainable_accuracy() {
    const CsrMatrix a = build_poisson_2d(200, 200);
    const Vector b = rhs_for_unit_solution(a);
    const Vector x0(a.size(), 0.0);
    SolveConfig cfg = full_run(500);
    cfg.max_restarts = 0;

    const std::vector<std::pair<std::string, double>> expected{
        {"CG", 4.47e-15}, {"p-CG", 2.28e-11}, {"p(1)", 1.27e-13}, {"p(2)", 2.37e-12}, {"p(3)", 1.94e-9},
        {"p(5)", 1.19e-8}};
    std::map<std::string, double> got;
    got["CG"] = final_true(a, b, solve_cg(a, b, x0, cfg));
    got["p-CG"] = final_true(a, b, solve_pipecg(a, b, x0, cfg));
    for (std::size_t l : {1u, 2u, 3u, 5u})
        got["p(" + std::to_string(l) + ")"] = final_true(a, b, solve_plcg(a, b, x0, l, cheb(8.0, l), cfg));

    bool ok = true;
    std::string detail;
    for (const auto& [name, ref] : expected) {
        const double v = got[name];
        const bool within = v <= 100 * ref && v >= ref / 100;
        ok = ok && within;
        detail += name + "=" + sci(v) + (within ? " " : "(out) ");
    }
    const bool ordered = got["CG"] < got["p(1)"] && got["p(1)"] < got["p(2)"] && got["p(2)"] < got["p(3)"] &&
                         got["p(3)"] <= got["p(5)"];
    if (!ordered) detail += "ordering violated";
    else detail += "ordered";
    return {ok && ordered, detail};
}

// Largest Ritz value of M^{-1/2} A M^{-1/2} after 80 Lanczos steps.
double ritz_upper(const CsrMatrix& a, const Preconditioner& m) {
    const std::size_t n = a.size();
    CsrMatrix scaled = a;
    if (!m.is_identity()) {
        std::vector<Triplet> t;
        const auto rp = a.row_ptr();
        const auto d = m.inv_diag();
        for (std::size_t i = 0; i < n; ++i)
            for (auto p = rp[i]; p < rp[i + 1]; ++p) {
                const auto j = static_cast<std::size_t>(a.col_idx()[p]);
                t.push_back({static_cast<std::int64_t>(i), static_cast<std::int64_t>(j),
                             a.values()[p] * std::sqrt(d[i] * d[j])});
            }
        scaled = CsrMatrix::from_triplets(n, t);
    }
    Vector v0(n);
    for (std::size_t i = 0; i < n; ++i) v0[i] = 1.0 + static_cast<double>((i * 7) % 11);
    const DenseLanczosResult lz = dense_lanczos(scaled, v0, std::min<std::size_t>(n, 80));
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(lz.t, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

Verdict table_rows() {
    const std::filesystem::path dir = PLCG_FIXTURE_DIR;
    std::string detail;
    bool ok = true;

    struct Row {
        std::string file;
        bool jacobi;
        std::size_t iters;
        double cg, pcg, p1, p2;
        std::size_t nnz_full;
    };
    const std::vector<Row> rows{{"gr_30_30.mtx", false, 60, 2.8e-15, 3.1e-13, 8.9e-15, 1.6e-14, 7744},
                                {"bcsstk16.mtx", true, 300, 3.7e-15, 6.3e-12, 1.1e-14, 8.5e-12, 290378}};
    std::size_t evaluated = 0;
    for (const Row& row : rows) {
        const auto path = dir / row.file;
        if (!std::filesystem::exists(path)) {
            detail += row.file + " not present, not evaluated; ";
            continue;
        }
        ++evaluated;
        const CsrMatrix a = read_matrix_market(path.string());
        const Vector b = rhs_for_unit_solution(a);
        const Vector x0(a.size(), 0.0);
        SolveConfig cfg = full_run(row.iters);
        if (row.jacobi) cfg.precond = Preconditioner::jacobi(a);
        const double lmax = ritz_upper(a, cfg.precond);
        const ShiftSet sh1 = cheb(lmax, 1);
        const ShiftSet sh2 = cheb(lmax, 2);
        const double bn = norm2(b);
        const double got[4] = {final_true(a, b, solve_cg(a, b, x0, cfg)) / bn,
                               final_true(a, b, solve_pipecg(a, b, x0, cfg)) / bn,
                               final_true(a, b, solve_plcg(a, b, x0, 1, sh1, cfg)) / bn,
                               final_true(a, b, solve_plcg(a, b, x0, 2, sh2, cfg)) / bn};
        const double ref[4] = {row.cg, row.pcg, row.p1, row.p2};
        const char* names[4] = {"CG", "p-CG", "p(1)", "p(2)"};
        detail += row.file + " [0, " + fmt("%.4f", lmax) + "]:";
        for (int i = 0; i < 4; ++i) {
            const bool within = got[i] <= 30 * ref[i] && got[i] >= ref[i] / 30;
            ok = ok && within;
            detail += std::string(" ") + names[i] + "=" + sci(got[i]) + (within ? "" : "(out)");
        }
        // Reference nnz counts may be the stored triangle or the expanded matrix.
        std::size_t stored = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const auto rp = a.row_ptr();
            for (auto p = rp[i]; p < rp[i + 1]; ++p)
                if (static_cast<std::size_t>(a.col_idx()[p]) >= i) ++stored;
        }
        if (a.nnz() == row.nnz_full) detail += " nnz matches expanded count";
        else if (stored == row.nnz_full) detail += " nnz matches triangle count";
        else {
            detail += " nnz " + std::to_string(a.nnz()) + " matches neither";
            ok = false;
        }
        detail += "; ";
    }
    return {ok && evaluated == rows.size(), detail};
}

Verdict band_structure() {
    const CsrMatrix a = build_poisson_2d(50, 50);
    const Vector b = rhs_for_unit_solution(a);
    const Vector x0(a.size(), 0.0);
    const std::size_t iters = 25;
    const DenseLanczosResult lz = dense_lanczos(a, b, iters + 8);
    double off_band = 0.0;
    double coeff = 0.0;
    for (std::size_t l = 1; l <= 3; ++l) {
        std::map<std::size_t, Eigen::VectorXd> z;
        std::map<std::size_t, std::pair<double, double>> td;
        PlcgObserver obs;
        obs.on_auxiliary = [&](std::size_t j, std::span<const double> zj) {
            z[j] = Eigen::Map<const Eigen::VectorXd>(zj.data(), static_cast<Eigen::Index>(zj.size()));
        };
        obs.on_tridiagonal = [&](std::size_t k, double gamma, double delta) { td[k] = {gamma, delta}; };
        SolveConfig cfg = full_run(iters);
        cfg.max_restarts = 0;
        solve_plcg(a, b, x0, l, cheb(8.0, l), cfg, obs);

        const auto nv = static_cast<std::size_t>(lz.v.cols());
        for (const auto& [i, zi] : z) {
            for (std::size_t j = 0; j < nv; ++j) {
                const bool in_band = j <= i && j + 2 * l >= i;
                if (in_band) continue;
                off_band = std::max(off_band, std::abs(lz.v.col(static_cast<Eigen::Index>(j)).dot(zi)));
            }
        }
        for (const auto& [k, gd] : td) {
            if (k + 1 >= lz.steps()) continue;
            const auto e = static_cast<Eigen::Index>(k);
            coeff = std::max(coeff, std::abs(gd.first - lz.t(e, e)));
            coeff = std::max(coeff, std::abs(std::abs(gd.second) - std::abs(lz.t(e + 1, e))));
        }
    }
    return {off_band <= 1e-10 && coeff <= 1e-8,
            "off-band max " + sci(off_band) + ", gamma/delta max deviation " + sci(coeff)};
}

Verdict lemma_a1() {
    const CsrMatrix a = build_poisson_2d(20, 20);
    const Vector b = rhs_for_unit_solution(a);
    const double dev = lemma_a1_check(a, b, cheb(8.0, 2), 15);
    return {dev <= 1e-8, "max deviation " + sci(dev)};
}

Verdict lemma41() {
    const CsrMatrix a = build_poisson_2d(30, 30);
    const Vector b = rhs_for_unit_solution(a);
    bool ok = true;
    std::string detail;
    for (std::size_t l = 1; l <= 3; ++l) {
        SolveConfig cfg = full_run(300);
        cfg.max_restarts = 0;
        const Lemma41Result r = lemma41_bound(a, b, cheb(8.0, l), cfg);
        const double peak = r.measured.empty() ? 0.0 : *std::max_element(r.measured.begin(), r.measured.end());
        ok = ok && r.holds() && !r.measured.empty();
        detail += "l=" + std::to_string(l) + " max|G|=" + sci(peak) + " bound=" + sci(r.bound) + "; ";
    }
    const double cheb3 = shift_polynomial_norm(a, cheb(8.0, 3));
    const double mono3 = shift_polynomial_norm(a, monomial_shifts(3));
    const bool wider = mono3 >= 10 * cheb3;
    detail += "monomial/chebyshev at l=3: " + fmt("%.1f", mono3 / cheb3);
    return {ok && wider, detail};
}

Verdict amplification() {
    const CsrMatrix a = build_poisson_2d(200, 200);
    const Vector b = rhs_for_unit_solution(a);
    const Vector x0(a.size(), 0.0);
    const std::size_t target = 200;
    auto amp_at = [&](std::size_t l, double lmax) {
        SolveConfig cfg = full_run(target);
        cfg.max_restarts = 0;
        const GapTrace t = residual_gap_trace(a, b, x0, l, cheb(lmax, l), cfg);
        for (const GapRecord& r : t.records)
            if (r.iter == target) return r.amplification;
        return std::numeric_limits<double>::quiet_NaN();
    };
    bool ok = true;
    std::string detail;
    double prev = 0.0;
    for (std::size_t l : {1u, 2u, 3u, 5u}) {
        const double opt = amp_at(l, 8.0);
        const double sub = amp_at(l, 8.0 * 1.005);
        ok = ok && std::isfinite(opt) && opt >= prev;
        if (l >= 2) ok = ok && std::isfinite(sub) && sub >= opt;
        prev = opt;
        detail += "l=" + std::to_string(l) + " " + sci(opt) + "/" + sci(sub) + " ";
    }
    return {ok, detail + "([0,8] / [0,8.04])"};
}

Verdict breakdown_restart() {
    const CsrMatrix a = build_poisson_2d(200, 200);
    const Vector b = rhs_for_unit_solution(a);
    const Vector x0(a.size(), 0.0);
    SolveConfig cfg;
    cfg.max_iter = 3400;
    cfg.tol = 1e-6;
    try {
        const ConvergenceTrace t = solve_plcg(a, b, x0, 3, cheb(8.0 * 1.005, 3), cfg);
        const double initial = norm2(b);
        const double fin = final_true(a, b, t);
        const bool restarted = t.breakdowns >= 1 && t.restarts >= 1 && fin < initial;
        const bool ok = t.converged() || restarted;
        return {ok, std::string("status=") + std::string(status_name(t.status)) +
                        " iterations=" + std::to_string(t.iterations) + " breakdowns=" + std::to_string(t.breakdowns) +
                        " restarts=" + std::to_string(t.restarts) + " rel_true=" + sci(fin / initial)};
    } catch (const std::exception& e) {
        return {false, std::string("aborted: ") + e.what()};
    }
}

Verdict perf_model() {
    bool exact = true;
    bool idle_free = true;
    bool makespan_ok = true;
    double worst_gap = 0.0;
    for (std::size_t l = 1; l <= 8; ++l) {
        CostModel cm;
        cm.t_spmv = 1.0;
        cm.t_glred = static_cast<double>(l);
        cm.t_flop = 0.0;
        exact = exact && predicted_speedup(l, cm) == static_cast<double>(2 * l + 1);
        const std::size_t iters = 200;
        const ScheduleTimeline tl = simulate_schedule(l, iters, cm);
        idle_free = idle_free && tl.idle == 0.0;
        const double closed = static_cast<double>(iters) * iteration_time(Method::plcg, l, cm);
        const double gap = tl.makespan - closed;
        worst_gap = std::max(worst_gap, std::abs(gap));
        makespan_ok = makespan_ok && gap >= -1e-9 && gap <= 2.0 * static_cast<double>(l) * cm.t_spmv + 1e-9;
    }

    std::mt19937_64 rng(20240611);
    std::uniform_int_distribution<std::size_t> pick_l(1, 8);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t causal = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t l = pick_l(rng);
        CostModel cm;
        cm.t_spmv = 1e-3 + unit(rng);
        cm.t_glred = 10.0 * unit(rng);
        cm.t_flop = 1e-3 * unit(rng);
        cm.n = 1 + static_cast<std::size_t>(100 * unit(rng));
        const std::size_t iters = l + 1 + static_cast<std::size_t>(60 * unit(rng));
        if (simulate_schedule(l, iters, cm).causal()) ++causal;
    }
    const bool ok = exact && idle_free && makespan_ok && causal == 1000;
    return {ok, std::string("speedup 2l+1 ") + (exact ? "exact" : "inexact") + ", idle " +
                    (idle_free ? "zero" : "nonzero") + ", makespan excess max " + sci(worst_gap) + ", causal " +
                    std::to_string(causal) + "/1000"};
}

}  // namespace

int main() {
    const std::vector<std::function<Verdict()>> criteria{
        convergence_equivalence, residual_identity, attainable_accuracy, table_rows, band_structure,
        lemma_a1,                lemma41,           amplification,       breakdown_restart, perf_model};
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i]();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!v.pass) ++failures;
        std::printf("criterion %zu: %s %s [%.2f s]\n", i + 1, v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
