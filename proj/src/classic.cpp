#include "plcg/classic.hpp"

#include "plcg/errors.hpp"

#include <cmath>

namespace plcg {

namespace kn = kernels;

namespace {

void check_inputs(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0, const SolveConfig& cfg) {
    if (b.size() != a.size() || x0.size() != a.size())
        throw DimensionError("solver: b and x0 must have length " + std::to_string(a.size()));
    if (!(cfg.tol > 0.0)) throw ArgumentError("tolerance must be positive");
    if (cfg.max_iter == 0) throw ArgumentError("max_iter must be at least 1");
}

struct Recorder {
    const CsrMatrix& a;
    std::span<const double> b;
    const SolveConfig& cfg;
    ConvergenceTrace& trace;

    // Appends a record; returns true when the stopping test is met.
    bool add(std::size_t k, double rec, std::span<const double> x) {
        TraceRecord r;
        r.iter = k;
        r.recursive_norm = rec;
        if (cfg.record_true_residual) r.true_norm = true_residual_norm(a, b, x);
        const bool done = rec == 0.0 || (cfg.stop_on_tol && rec / trace.b_norm <= cfg.tol);
        if (done) r.event = TraceEvent::converged;
        trace.records.push_back(r);
        return done;
    }
};

}  // namespace

ConvergenceTrace solve_cg(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                          const SolveConfig& cfg, const CgObserver& observer) {
    check_inputs(a, b, x0, cfg);
    const std::size_t n = a.size();
    const Preconditioner& m = cfg.precond;
    ConvergenceTrace trace;
    trace.b_norm = norm2(b);
    trace.x.assign(x0.begin(), x0.end());
    Vector& x = trace.x;
    if (trace.b_norm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        trace.b_norm = 1.0;
    }
    Recorder rec{a, b, cfg, trace};

    Vector r = spmv(a, x);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    Vector u(n);
    m.apply(r, u);
    Vector p = u;
    Vector s(n);
    double ru = kn::dot(r, u);

    if (observer) observer({0, x, r, p, 0.0, 0.0});
    if (rec.add(0, norm2(r), x)) {
        trace.status = SolveStatus::converged;
        return trace;
    }
    for (std::size_t k = 0; k < cfg.max_iter; ++k) {
        spmv(a, p, s);
        const double ps = kn::dot(s, p);
        if (!(ps > 0.0)) {
            if (ru == 0.0) break;
            throw DefinitenessError("CG: (p, Ap) = " + std::to_string(ps) + " at iteration " + std::to_string(k));
        }
        const double alpha = ru / ps;
        kn::axpy(alpha, p, x);
        kn::axpy(-alpha, s, r);
        m.apply(r, u);
        const double ru_new = kn::dot(r, u);
        const double beta = ru_new / ru;
        ru = ru_new;
        kn::xpby(u, beta, p);
        trace.iterations = k + 1;
        if (observer) observer({k + 1, x, r, p, alpha, beta});
        if (rec.add(k + 1, norm2(r), x)) {
            trace.status = SolveStatus::converged;
            return trace;
        }
    }
    trace.status = SolveStatus::budget_exhausted;
    return trace;
}

ConvergenceTrace solve_pipecg(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                              const SolveConfig& cfg, const PipeCgObserver& observer) {
    check_inputs(a, b, x0, cfg);
    const std::size_t n = a.size();
    const Preconditioner& m = cfg.precond;
    const bool precond = !m.is_identity();
    ConvergenceTrace trace;
    trace.b_norm = norm2(b);
    trace.x.assign(x0.begin(), x0.end());
    Vector& x = trace.x;
    if (trace.b_norm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        trace.b_norm = 1.0;
    }
    Recorder rec{a, b, cfg, trace};

    Vector r = spmv(a, x);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    // u = M^{-1} r and q = M^{-1} s, m_ = M^{-1} w only exist with a preconditioner.
    Vector u, q, mw;
    if (precond) {
        u.resize(n);
        q.assign(n, 0.0);
        mw.resize(n);
        m.apply(r, u);
    }
    std::span<const double> uu = precond ? std::span<const double>(u) : std::span<const double>(r);
    Vector w = spmv(a, uu);
    Vector v(n), z(n, 0.0), s(n, 0.0), p(n, 0.0);

    if (rec.add(0, norm2(r), x)) {
        trace.status = SolveStatus::converged;
        return trace;
    }
    double gamma_old = 0.0;
    double alpha_old = 0.0;
    for (std::size_t k = 0; k < cfg.max_iter; ++k) {
        const double gamma = kn::dot(r, uu);
        const double delta = kn::dot(w, uu);
        if (precond) {
            m.apply(w, mw);
            spmv(a, mw, v);
        } else {
            spmv(a, w, v);
        }
        double alpha = 0.0;
        double beta = 0.0;
        if (k > 0) {
            beta = gamma / gamma_old;
            alpha = 1.0 / (delta / gamma - beta / alpha_old);
        } else {
            if (!(delta > 0.0))
                throw DefinitenessError("p-CG: (Ar, r) = " + std::to_string(delta) + " at the first iteration");
            alpha = gamma / delta;
        }
        if (gamma == 0.0) break;
        if (!std::isfinite(alpha) || !std::isfinite(beta)) {
            trace.status = SolveStatus::breakdown;
            return trace;
        }
        kn::xpby(v, beta, z);
        if (precond) kn::xpby(mw, beta, q);
        kn::xpby(w, beta, s);
        kn::xpby(uu, beta, p);
        if (observer) observer({k, x, r, w, s, z, p, alpha, beta});
        kn::axpy(alpha, p, x);
        kn::axpy(-alpha, s, r);
        if (precond) kn::axpy(-alpha, q, u);
        kn::axpy(-alpha, z, w);
        gamma_old = gamma;
        alpha_old = alpha;
        trace.iterations = k + 1;
        if (rec.add(k + 1, norm2(r), x)) {
            trace.status = SolveStatus::converged;
            return trace;
        }
    }
    trace.status = trace.records.back().recursive_norm == 0.0 ? SolveStatus::converged : SolveStatus::budget_exhausted;
    return trace;
}

}  // namespace plcg
