#include "cli.hpp"

#include "plcg/classic.hpp"
#include "plcg/diagnostics.hpp"
#include "plcg/errors.hpp"
#include "plcg/kernels.hpp"
#include "plcg/perf_model.hpp"
#include "plcg/plcg.hpp"
#include "plcg/plgmres.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

namespace plcg::cli {

namespace {

namespace fs = std::filesystem;

struct ProblemArgs {
    std::vector<std::size_t> poisson;
    std::string mm;
};

struct Problem {
    CsrMatrix a;
    Vector b;
};

struct RunArgs {
    ProblemArgs problem;
    std::string solver = "plcg";
    std::vector<std::size_t> depths{1};
    std::vector<std::string> shifts{"chebyshev-auto"};
    std::string precond = "none";
    double tol = 1e-6;
    std::size_t maxit = 1000;
    std::size_t restarts = 5;
    bool true_residual = false;
    bool full = false;
    std::string output;
};

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9e", v);
    return buf;
}

fs::path resolve_fixture(const std::string& path) {
    if (fs::exists(path)) return path;
    if (const char* dir = std::getenv("PLCG_FIXTURE_DIR"); dir != nullptr && *dir != '\0') {
        fs::path p = fs::path(dir) / path;
        if (fs::exists(p)) return p;
    }
    throw Error("cannot open matrix file '" + path + "' (also looked in $PLCG_FIXTURE_DIR)");
}

Problem load_problem(const ProblemArgs& args) {
    Problem p;
    if (!args.mm.empty()) {
        p.a = read_matrix_market(resolve_fixture(args.mm).string());
    } else if (args.poisson.size() == 2) {
        p.a = build_poisson_2d(args.poisson[0], args.poisson[1]);
    } else {
        throw ArgumentError("give a problem with --poisson NX NY or --mm FILE");
    }
    p.b = rhs_for_unit_solution(p.a);
    return p;
}

Preconditioner make_precond(const std::string& name, const CsrMatrix& a) {
    if (name == "none") return Preconditioner::none();
    if (name == "jacobi") return Preconditioner::jacobi(a);
    throw ArgumentError("unknown preconditioner '" + name + "' (expected none or jacobi)");
}

double parse_number(const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size()) throw ArgumentError("not a number: '" + s + "'");
    return v;
}

ShiftSet make_shifts(const std::vector<std::string>& spec, std::size_t l, const CsrMatrix& a,
                     const Preconditioner& m) {
    if (spec.empty()) throw ArgumentError("empty --shifts");
    const std::string& kind = spec[0];
    if (kind == "chebyshev") {
        if (spec.size() != 3) throw ArgumentError("--shifts chebyshev takes LMIN LMAX");
        return chebyshev_shifts({parse_number(spec[1]), parse_number(spec[2])}, l);
    }
    if (kind == "chebyshev-auto") {
        if (spec.size() != 1) throw ArgumentError("--shifts chebyshev-auto takes no values");
        return chebyshev_shifts(m.is_identity() ? gershgorin_interval(a) : gershgorin_interval(a, m), l);
    }
    if (kind == "monomial") {
        if (spec.size() != 1) throw ArgumentError("--shifts monomial takes no values");
        return monomial_shifts(l);
    }
    if (kind == "explicit") {
        if (spec.size() != l + 1) throw ArgumentError("--shifts explicit needs exactly l values");
        std::vector<double> s;
        for (std::size_t i = 1; i < spec.size(); ++i) s.push_back(parse_number(spec[i]));
        return user_shifts(std::move(s));
    }
    throw ArgumentError("unknown shift kind '" + kind + "'");
}

SolveConfig make_config(const RunArgs& r, const CsrMatrix& a) {
    SolveConfig cfg;
    cfg.tol = r.tol;
    cfg.max_iter = r.maxit;
    cfg.stop_on_tol = !r.full;
    cfg.record_true_residual = r.true_residual;
    cfg.precond = make_precond(r.precond, a);
    cfg.max_restarts = r.restarts;
    return cfg;
}

ConvergenceTrace run_solver(const std::string& solver, std::size_t l, const Problem& p, const RunArgs& r,
                            const SolveConfig& cfg) {
    const Vector x0(p.a.size(), 0.0);
    if (solver == "cg") return solve_cg(p.a, p.b, x0, cfg);
    if (solver == "pcg") return solve_pipecg(p.a, p.b, x0, cfg);
    if (solver == "plcg") return solve_plcg(p.a, p.b, x0, l, make_shifts(r.shifts, l, p.a, cfg.precond), cfg);
    if (solver == "plgmres") {
        if (!cfg.precond.is_identity()) throw ArgumentError("plgmres does not take a preconditioner");
        PlgmresOptions opt;
        opt.l = l;
        opt.m = cfg.max_iter;
        opt.tol = cfg.tol;
        opt.record_true_residual = cfg.record_true_residual;
        return solve_plgmres(p.a, p.b, x0, make_shifts(r.shifts, l, p.a, cfg.precond), opt).trace;
    }
    throw ArgumentError("unknown solver '" + solver + "' (expected cg, pcg, plcg or plgmres)");
}

// Output goes to the named file, or to the default stream when empty.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw Error("cannot write '" + path + "'");
            os_ = file_.get();
        }
    }
    std::ostream& operator*() { return *os_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* os_;
};

void add_problem_options(CLI::App* sub, ProblemArgs& p) {
    auto* po = sub->add_option("--poisson", p.poisson, "5-point Poisson grid NX NY")->expected(2);
    auto* mo = sub->add_option("--mm", p.mm, "Matrix Market file (also searched in $PLCG_FIXTURE_DIR)");
    po->excludes(mo);
}

void add_run_options(CLI::App* sub, RunArgs& r) {
    add_problem_options(sub, r.problem);
    sub->add_option("--shifts", r.shifts, "chebyshev LMIN LMAX | chebyshev-auto | monomial | explicit S0 ..")
        ->expected(1, -1);
    sub->add_option("--precond", r.precond, "none or jacobi");
    sub->add_option("--tol", r.tol, "relative tolerance");
    sub->add_option("--maxit", r.maxit, "solution updates (Krylov dimension for plgmres)");
    sub->add_option("--restarts", r.restarts, "p(l)-CG restarts after breakdown");
    sub->add_flag("--full", r.full, "ignore the tolerance and run the whole budget");
    sub->add_option("-o,--output", r.output, "output file (default stdout)");
}

int exit_code(SolveStatus s) {
    switch (s) {
        case SolveStatus::converged: return ok;
        case SolveStatus::budget_exhausted: return budget_exhausted;
        case SolveStatus::breakdown: return breakdown;
    }
    return usage_error;
}

int cmd_solve(const RunArgs& r, std::ostream& out) {
    const Problem p = load_problem(r.problem);
    const SolveConfig cfg = make_config(r, p.a);
    const std::size_t l = r.depths.front();
    const ConvergenceTrace t = run_solver(r.solver, l, p, r, cfg);

    Sink sink(r.output, out);
    std::ostream& os = *sink;
    os << (r.true_residual ? "iter,zeta_abs,true_resid,event\n" : "iter,zeta_abs,event\n");
    for (const auto& rec : t.records) {
        os << rec.iter << ',' << num(rec.recursive_norm) << ',';
        if (r.true_residual) os << num(rec.true_norm) << ',';
        os << event_name(rec.event) << '\n';
    }
    const double final_true = true_residual_norm(p.a, p.b, t.x);
    os << "# iterations=" << t.iterations << " restarts=" << t.restarts << " breakdowns=" << t.breakdowns
       << " status=" << status_name(t.status) << " final_zeta=" << num(t.records.back().recursive_norm)
       << " final_true=" << num(final_true) << " b_norm=" << num(norm2(p.b)) << '\n';
    return exit_code(t.status);
}

// "cg", "pcg", "plcg2", "plcg:2", "plgmres:3"
std::pair<std::string, std::size_t> split_solver(const std::string& tag) {
    for (const char* base : {"plgmres", "plcg", "pcg", "cg"}) {
        const std::string b = base;
        if (tag.rfind(b, 0) != 0) continue;
        std::string rest = tag.substr(b.size());
        if (!rest.empty() && rest[0] == ':') rest.erase(0, 1);
        if (rest.empty()) return {b, 1};
        if (b == "cg" || b == "pcg") break;
        const double v = parse_number(rest);
        if (v < 1 || v != std::floor(v)) break;
        return {b, static_cast<std::size_t>(v)};
    }
    throw ArgumentError("unknown solver tag '" + tag + "'");
}

int cmd_compare(RunArgs r, const std::vector<std::string>& solvers, std::ostream& out) {
    const Problem p = load_problem(r.problem);
    const SolveConfig cfg = make_config(r, p.a);
    const double bn = norm2(p.b);
    Sink sink(r.output, out);
    std::ostream& os = *sink;
    os << "solver,iterations,rel_true,abs_true,rel_recursive,restarts,status\n";
    for (const auto& tag : solvers) {
        const auto [name, l] = split_solver(tag);
        const ConvergenceTrace t = run_solver(name, l, p, r, cfg);
        const double tr = true_residual_norm(p.a, p.b, t.x);
        os << tag << ',' << t.iterations << ',' << num(tr / bn) << ',' << num(tr) << ','
           << num(t.records.back().recursive_norm / t.b_norm) << ',' << t.restarts << ',' << status_name(t.status)
           << '\n';
    }
    return ok;
}

struct PerfArgs {
    CostModel cm;
    double glred_base = -1.0;
    double glred_level = 0.0;
    std::vector<std::size_t> depths{1, 2, 3};
    std::size_t iters = 100;
    std::string output;
    std::string timeline;
};

int cmd_perf(PerfArgs a, std::ostream& out) {
    if (a.glred_base >= 0.0) a.cm.t_glred = CostModel::tree_latency(a.glred_base, a.glred_level, a.cm.nodes);
    Sink sink(a.output, out);
    std::ostream& os = *sink;
    std::unique_ptr<std::ofstream> tl;
    if (!a.timeline.empty()) {
        tl = std::make_unique<std::ofstream>(a.timeline);
        if (!*tl) throw Error("cannot write '" + a.timeline + "'");
        *tl << "l,iteration,kernel,start,end,idle\n";
    }
    os << "l,cg_time,pcg_time,plcg_time,speedup,sim_makespan,sim_per_iter,sim_idle,causal\n";
    for (std::size_t l : a.depths) {
        const ScheduleTimeline s = simulate_schedule(l, a.iters, a.cm);
        os << l << ',' << num(iteration_time(Method::cg, l, a.cm)) << ',' << num(iteration_time(Method::pcg, l, a.cm))
           << ',' << num(iteration_time(Method::plcg, l, a.cm)) << ',' << num(predicted_speedup(l, a.cm)) << ','
           << num(s.makespan) << ',' << num(s.makespan / static_cast<double>(a.iters)) << ',' << num(s.idle) << ','
           << (s.causal() ? "yes" : "no") << '\n';
        if (tl)
            for (const auto& e : s.events)
                *tl << l << ',' << e.iter << ',' << kernel_name(e.kernel) << ',' << num(e.start) << ',' << num(e.end)
                    << ',' << num(e.idle) << '\n';
    }
    return ok;
}

struct DiagArgs {
    RunArgs run;
    std::string check = "gaps";
    std::size_t j = 15;
    std::string out_dir;
};

void write_plcg_gaps(std::ostream& os, const GapTrace& g, std::size_t l, bool with_l) {
    if (with_l) os << "l,";
    os << "iter,residual_gap,basis_gap,ginv_max,g_max\n";
    for (const auto& r : g.records) {
        if (with_l) os << l << ',';
        os << r.iter << ',' << num(r.residual_gap) << ',' << num(r.basis_gap) << ',' << num(r.amplification) << ','
           << num(r.g_max) << '\n';
    }
    if (g.truncated) os << "# truncated at first breakdown\n";
}

int cmd_diagnose(const DiagArgs& d, std::ostream& out) {
    const RunArgs& r = d.run;
    const Problem p = load_problem(r.problem);
    SolveConfig cfg = make_config(r, p.a);
    const Vector x0(p.a.size(), 0.0);

    auto open = [&](const std::string& name) -> std::unique_ptr<Sink> {
        if (d.out_dir.empty()) return std::make_unique<Sink>(r.output, out);
        fs::create_directories(d.out_dir);
        return std::make_unique<Sink>((fs::path(d.out_dir) / name).string(), out);
    };

    if (d.check == "gaps") {
        if (r.solver == "cg") {
            const GapTrace g = cg_gap_trace(p.a, p.b, x0, cfg);
            auto s = open("gaps_cg.csv");
            **s << "iter,residual_gap,e_max\n";
            for (const auto& rec : g.records)
                **s << rec.iter << ',' << num(rec.residual_gap) << ',' << num(rec.amplification) << '\n';
        } else if (r.solver == "pcg") {
            const PipeCgGapTrace g = pcg_gap_decomposition(p.a, p.b, x0, cfg);
            auto s = open("gaps_pcg.csv");
            **s << "iter,r_gap,s_gap,w_gap,z_gap,binv_max\n";
            for (const auto& rec : g.records)
                **s << rec.iter << ',' << num(rec.r_gap) << ',' << num(rec.s_gap) << ',' << num(rec.w_gap) << ','
                    << num(rec.z_gap) << ',' << num(rec.binv_max) << '\n';
        } else if (r.solver == "plcg") {
            std::unique_ptr<Sink> shared;
            for (std::size_t l : r.depths) {
                const GapTrace g = residual_gap_trace(p.a, p.b, x0, l, make_shifts(r.shifts, l, p.a, cfg.precond), cfg);
                if (d.out_dir.empty()) {
                    if (!shared) shared = open("");
                    write_plcg_gaps(**shared, g, l, true);
                } else {
                    auto s = open("gaps_plcg_l" + std::to_string(l) + ".csv");
                    write_plcg_gaps(**s, g, l, false);
                }
            }
        } else {
            throw ArgumentError("gap traces are available for cg, pcg and plcg");
        }
        return ok;
    }
    if (d.check == "lemma-a1") {
        auto s = open("lemma_a1.csv");
        **s << "l,j,deviation\n";
        for (std::size_t l : r.depths)
            **s << l << ',' << d.j << ',' << num(lemma_a1_check(p.a, p.b, make_shifts(r.shifts, l, p.a, cfg.precond), d.j))
                << '\n';
        return ok;
    }
    if (d.check == "lemma41") {
        cfg.stop_on_tol = false;
        auto s = open("lemma41.csv");
        **s << "l,poly_norm,bound,max_measured,holds,estimated\n";
        for (std::size_t l : r.depths) {
            const Lemma41Result res = lemma41_bound(p.a, p.b, make_shifts(r.shifts, l, p.a, cfg.precond), cfg);
            const double m = res.measured.empty() ? 0.0 : res.measured.back();
            **s << l << ',' << num(res.poly_norm) << ',' << num(res.bound) << ',' << num(m) << ','
                << (res.holds() ? "yes" : "no") << ',' << (res.estimated ? "yes" : "no") << '\n';
        }
        return ok;
    }
    throw ArgumentError("unknown check '" + d.check + "' (expected gaps, lemma-a1 or lemma41)");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Deep-pipelined conjugate gradients: solvers, diagnostics and cost model"};
    app.require_subcommand(1);
    std::string kernels_name;
    app.add_option("--kernels", kernels_name, "scalar or avx2 (default: best available)");

    RunArgs solve_args;
    auto* solve = app.add_subcommand("solve", "run one solver and print its convergence trace");
    add_run_options(solve, solve_args);
    solve->add_option("--solver", solve_args.solver, "cg, pcg, plcg or plgmres");
    solve->add_option("-l", solve_args.depths, "pipeline depth")->expected(1);
    solve->add_flag("--true-residual", solve_args.true_residual, "add |b - A x_k| to every row");

    RunArgs compare_args;
    compare_args.full = true;
    std::vector<std::string> solver_tags{"cg", "pcg", "plcg1", "plcg2", "plcg3"};
    auto* compare = app.add_subcommand("compare", "final residuals of several solvers on one problem");
    add_run_options(compare, compare_args);
    compare->add_option("--solvers", solver_tags, "tags such as cg pcg plcg2 plgmres:1")->expected(1, -1);
    compare->add_flag("--stop-on-tol", [&](std::int64_t) { compare_args.full = false; }, "stop at the tolerance");

    PerfArgs perf_args;
    auto* perf = app.add_subcommand("perf", "cost model and overlap schedule replay");
    perf->add_option("--spmv", perf_args.cm.t_spmv, "seconds per SPMV");
    perf->add_option("--glred", perf_args.cm.t_glred, "seconds per global reduction");
    perf->add_option("--glred-base", perf_args.glred_base, "reduction tree: base latency");
    perf->add_option("--glred-level", perf_args.glred_level, "reduction tree: latency per level");
    perf->add_option("--nodes", perf_args.cm.nodes, "node count for the reduction tree");
    perf->add_option("--flop", perf_args.cm.t_flop, "seconds per vector flop per entry");
    perf->add_option("--n", perf_args.cm.n, "vector length");
    perf->add_option("-l", perf_args.depths, "pipeline depths")->expected(1, -1);
    perf->add_option("--iters", perf_args.iters, "iterations to simulate");
    perf->add_option("-o,--output", perf_args.output, "summary file (default stdout)");
    perf->add_option("--timeline", perf_args.timeline, "write the kernel timeline CSV here");

    DiagArgs diag_args;
    diag_args.run.maxit = 500;
    diag_args.run.full = true;
    auto* diagnose = app.add_subcommand("diagnose", "residual and basis gaps, G^{-1} norms, lemma checks");
    add_run_options(diagnose, diag_args.run);
    diagnose->add_option("--solver", diag_args.run.solver, "cg, pcg or plcg");
    diagnose->add_option("-l", diag_args.run.depths, "pipeline depths")->expected(1, -1);
    diagnose->add_option("--check", diag_args.check, "gaps, lemma-a1 or lemma41");
    diagnose->add_option("--j", diag_args.j, "basis size for lemma-a1");
    diagnose->add_option("--out-dir", diag_args.out_dir, "write one CSV per run into this directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : usage_error;
    }

    try {
        if (!kernels_name.empty()) kernels::select(kernels::parse_isa(kernels_name));
        if (solve->parsed()) return cmd_solve(solve_args, out);
        if (compare->parsed()) return cmd_compare(compare_args, solver_tags, out);
        if (perf->parsed()) return cmd_perf(perf_args, out);
        if (diagnose->parsed()) return cmd_diagnose(diag_args, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    }
    return usage_error;
}

}  // namespace plcg::cli
