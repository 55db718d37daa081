#include "plcg/plcg.hpp"

#include "plcg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace plcg {

namespace kn = kernels;

// ---------------------------------------------------------------------------
// VectorWindow

VectorWindow::VectorWindow(std::size_t slots, std::size_t n) : data_(slots, Vector(n, 0.0)), owner_(slots, -1) {}

std::size_t VectorWindow::live() const {
    return static_cast<std::size_t>(std::count_if(owner_.begin(), owner_.end(), [](long long o) { return o >= 0; }));
}

bool VectorWindow::holds(std::size_t j) const {
    return !owner_.empty() && owner_[slot_of(j)] == static_cast<long long>(j);
}

std::span<double> VectorWindow::at(std::size_t j) {
    if (!holds(j)) throw std::logic_error("window does not hold vector " + std::to_string(j));
    return data_[slot_of(j)];
}

std::span<const double> VectorWindow::at(std::size_t j) const {
    if (!holds(j)) throw std::logic_error("window does not hold vector " + std::to_string(j));
    return data_[slot_of(j)];
}

std::span<double> VectorWindow::claim(std::size_t j) {
    const std::size_t s = slot_of(j);
    owner_[s] = static_cast<long long>(j);
    return data_[s];
}

void VectorWindow::clear() { std::fill(owner_.begin(), owner_.end(), -1); }

// ---------------------------------------------------------------------------
// BandedTransform

BandedTransform::BandedTransform(std::size_t l)
    : l_(l), data_((3 * l + 2) * (2 * l + 1), 0.0), owner_(3 * l + 2, -1) {}

void BandedTransform::start_column(std::size_t k) {
    const std::size_t s = slot_of(k);
    owner_[s] = static_cast<long long>(k);
    std::fill_n(data_.begin() + static_cast<std::ptrdiff_t>(s * (2 * l_ + 1)), 2 * l_ + 1, 0.0);
}

bool BandedTransform::has_column(std::size_t k) const {
    return !owner_.empty() && owner_[slot_of(k)] == static_cast<long long>(k);
}

double BandedTransform::at(std::size_t j, std::size_t k) const {
    if (j > k || j < first_row(k)) return 0.0;
    if (!has_column(k)) throw std::logic_error("transform column " + std::to_string(k) + " is not retained");
    return data_[slot_of(k) * (2 * l_ + 1) + (j + 2 * l_ - k)];
}

double& BandedTransform::ref(std::size_t j, std::size_t k) {
    if (j > k || j < first_row(k)) throw std::logic_error("transform entry outside the band");
    if (!has_column(k)) throw std::logic_error("transform column " + std::to_string(k) + " is not retained");
    return data_[slot_of(k) * (2 * l_ + 1) + (j + 2 * l_ - k)];
}

void BandedTransform::clear() { std::fill(owner_.begin(), owner_.end(), -1); }

// ---------------------------------------------------------------------------

namespace {

constexpr double eps = std::numeric_limits<double>::epsilon();

// Norm in which zeta measures the residual: Euclidean, or the M-norm
// sqrt(r' M^{-1} r) with a preconditioner.
double zeta_norm(const PipelineState& s, std::span<const double> r) {
    if (!s.preconditioned()) return norm2(r);
    Vector u(r.size());
    s.m->apply(r, u);
    return std::sqrt(kn::dot(r, u));
}

Vector residual(const PipelineState& s, std::span<const double> x) {
    Vector r = spmv(*s.a, x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = s.b[i] - r[i];
    return r;
}

bool meets_tol(const PipelineState& s, double norm) {
    return norm == 0.0 || (s.cfg.stop_on_tol && norm / s.b_norm <= s.cfg.tol);
}

void add_record(const PipelineState& s, ConvergenceTrace& trace, std::size_t k, double norm, TraceEvent event) {
    TraceRecord r;
    r.iter = s.k_offset + k;
    r.recursive_norm = norm;
    if (s.cfg.record_true_residual) r.true_norm = true_residual_norm(*s.a, s.b, s.x);
    r.event = event;
    trace.records.push_back(r);
}

}  // namespace

StepOutcome plcg_init(PipelineState& s, const CsrMatrix& a, const Preconditioner& m, std::span<const double> b,
                      std::span<const double> x0, std::size_t l, const ShiftSet& shifts, const SolveConfig& cfg) {
    if (l == 0) throw ArgumentError("pipeline depth must be at least 1");
    if (shifts.depth() != l)
        throw ArgumentError("expected " + std::to_string(l) + " shifts, got " + std::to_string(shifts.depth()));
    if (b.size() != a.size() || x0.size() != a.size())
        throw DimensionError("p(l)-CG: b and x0 must have length " + std::to_string(a.size()));
    if (!(cfg.tol > 0.0)) throw ArgumentError("tolerance must be positive");
    if (cfg.max_iter == 0) throw ArgumentError("max_iter must be at least 1");
    if (!m.is_identity() && m.inv_diag().size() != a.size())
        throw DimensionError("preconditioner size does not match the operator");

    const std::size_t n = a.size();
    s.a = &a;
    s.m = &m;
    s.b.assign(b.begin(), b.end());
    s.shifts = shifts;
    s.cfg = cfg;
    s.l = l;
    s.n = n;
    s.i = 0;
    s.x.assign(x0.begin(), x0.end());
    s.x_index = 0;
    s.p.assign(n, 0.0);
    s.gamma.clear();
    s.delta.clear();
    s.eta.clear();
    s.lambda.clear();
    s.zeta.clear();
    s.pending.clear();
    s.last_root_argument = 0.0;

    // l = 1 still needs z_{i-1} in the three-term recurrence.
    s.z = VectorWindow(std::max<std::size_t>(l + 1, 3), n);
    s.v = VectorWindow(2 * l + 1, n);
    s.zhat = s.preconditioned() ? VectorWindow(3, n) : VectorWindow();
    s.g = BandedTransform(l);
    s.g.start_column(0);
    s.g.ref(0, 0) = 1.0;

    s.b_norm = zeta_norm(s, s.b);
    if (s.b_norm == 0.0) {
        std::fill(s.x.begin(), s.x.end(), 0.0);
        s.b_norm = 1.0;
    }

    Vector r = residual(s, s.x);
    auto v0 = s.v.claim(0);
    auto z0 = s.z.claim(0);
    if (s.preconditioned()) {
        Vector u(n);
        m.apply(r, u);
        s.r0_norm = std::sqrt(kn::dot(r, u));
        if (s.r0_norm > 0.0) {
            kn::scale_into(1.0 / s.r0_norm, r, s.zhat.claim(0));
            kn::scale_into(1.0 / s.r0_norm, u, v0);
        }
    } else {
        s.r0_norm = norm2(r);
        if (s.r0_norm > 0.0) kn::scale_into(1.0 / s.r0_norm, r, v0);
    }
    std::copy(v0.begin(), v0.end(), z0.begin());
    s.zeta.push_back(s.r0_norm);

    StepOutcome out;
    if (meets_tol(s, s.r0_norm)) {
        out.kind = StepOutcome::Kind::converged;
        out.norm = s.r0_norm;
    }
    return out;
}

void advance_z(PipelineState& s) {
    const std::size_t i = s.i;
    auto zi = s.z.at(i);
    auto next = s.z.claim(i + 1);
    if (s.preconditioned()) {
        auto hat = s.zhat.claim(i + 1);
        spmv(*s.a, zi, hat);
        s.m->apply(hat, next);
        if (i < s.l) {
            kn::axpy(-s.shifts.sigma[i], s.zhat.at(i), hat);
            kn::axpy(-s.shifts.sigma[i], zi, next);
        }
    } else {
        spmv(*s.a, zi, next);
        if (i < s.l) kn::axpy(-s.shifts.sigma[i], zi, next);
    }
}

StepOutcome update_transform(PipelineState& s, const PlcgObserver* obs) {
    const std::size_t l = s.l;
    const std::size_t c = s.i - l + 1;
    if (s.pending.empty() || s.pending.front().tag + l != s.i)
        throw std::logic_error("reduction issued at iteration " +
                               (s.pending.empty() ? std::string("?") : std::to_string(s.pending.front().tag)) +
                               " consumed at iteration " + std::to_string(s.i));
    PendingBatch batch = std::move(s.pending.front());
    s.pending.pop_front();
    s.reduction_log.emplace_back(batch.tag, s.i);

    BandedTransform& g = s.g;
    g.start_column(c);
    const std::size_t lo = g.first_row(c);
    for (std::size_t r = batch.first_row; r <= c; ++r) g.ref(r, c) = batch.values[r - batch.first_row];
    // Rows not recomputed: G is symmetric about its l-th upper diagonal.
    for (std::size_t j = lo; j < batch.first_row; ++j) g.ref(j, c) = g.at(c - l, j + l);

    const std::size_t zlo = c >= l ? c - l + 1 : 0;
    for (std::size_t j = zlo; j < c; ++j) {
        double sum = 0.0;
        for (std::size_t k = lo; k < j; ++k) sum += g.at(k, j) * g.at(k, c);
        g.ref(j, c) = (g.at(j, c) - sum) / g.at(j, j);
    }
    const double raw = g.at(c, c);
    double sum = 0.0;
    for (std::size_t k = lo; k < c; ++k) sum += g.at(k, c) * g.at(k, c);
    const double arg = raw - sum;
    s.last_root_argument = arg;

    const double tiny = 4.0 * static_cast<double>(2 * l + 1) * eps * std::abs(raw);
    StepOutcome out;
    out.iter = s.i;
    out.root_argument = arg;
    if (!std::isfinite(arg) || arg < -tiny) {
        out.kind = StepOutcome::Kind::hard_breakdown;
        return out;
    }
    if (arg <= tiny) {
        g.ref(c, c) = 0.0;
        out.kind = StepOutcome::Kind::happy_breakdown;
    } else {
        g.ref(c, c) = std::sqrt(arg);
    }
    if (obs && obs->on_column) {
        std::vector<double> col(c - lo + 1);
        for (std::size_t j = lo; j <= c; ++j) col[j - lo] = g.at(j, c);
        obs->on_column(c, lo, col, arg);
    }
    return out;
}

void update_tridiagonal(PipelineState& s, bool happy) {
    const std::size_t l = s.l;
    const std::size_t a = s.i - l;
    const std::size_t c = a + 1;
    if (s.gamma.size() != a) throw std::logic_error("tridiagonal history out of step");
    const BandedTransform& g = s.g;
    const double gaa = g.at(a, a);
    const double gac = g.at(a, c);
    const double gcc = happy ? 0.0 : g.at(c, c);
    const double prev = a > 0 ? g.at(a - 1, a) * s.delta[a - 1] : 0.0;
    double gamma = 0.0;
    double delta = 0.0;
    if (a < l) {
        gamma = (gac + s.shifts.sigma[a] * gaa - prev) / gaa;
        delta = gcc / gaa;
    } else {
        gamma = (gaa * s.gamma[a - l] + gac * s.delta[a - l] - prev) / gaa;
        delta = gcc * s.delta[a - l] / gaa;
    }
    s.gamma.push_back(gamma);
    s.delta.push_back(delta);
}

void update_bases(PipelineState& s, const PlcgObserver* obs) {
    const std::size_t l = s.l;
    const std::size_t i = s.i;
    const std::size_t a = i - l;
    const std::size_t c = a + 1;
    const BandedTransform& g = s.g;
    const std::size_t lo = g.first_row(c);

    auto vc = s.v.claim(c);
    auto zc = s.z.at(c);
    std::copy(zc.begin(), zc.end(), vc.begin());
    for (std::size_t j = lo; j < c; ++j) kn::axpy(-g.at(j, c), s.v.at(j), vc);
    kn::scale_into(1.0 / g.at(c, c), vc, vc);

    const double gamma = s.gamma[a];
    const double delta = s.delta[a];
    auto three_term = [&](VectorWindow& w) {
        auto head = w.at(i + 1);
        kn::axpy(-gamma, w.at(i), head);
        if (a > 0) kn::axpy(-s.delta[a - 1], w.at(i - 1), head);
        kn::scale_into(1.0 / delta, head, head);
    };
    three_term(s.z);
    if (s.preconditioned()) three_term(s.zhat);

    if (obs && obs->on_tridiagonal) obs->on_tridiagonal(a, gamma, delta);
    if (obs && obs->on_basis) obs->on_basis(c, vc);
}

void queue_dot_products(PipelineState& s, const PlcgObserver* obs) {
    const std::size_t l = s.l;
    const std::size_t col = s.i + 1;
    PendingBatch batch;
    batch.tag = s.i;
    batch.column = col;
    batch.first_row = col >= l ? col - l : 0;
    batch.values.resize(col - batch.first_row + 1);
    std::span<const double> head = s.preconditioned() ? s.zhat.at(col) : s.z.at(col);
    for (std::size_t r = batch.first_row; r <= col; ++r) {
        const bool v_row = col >= l && r == col - l;
        batch.values[r - batch.first_row] = kn::dot(head, v_row ? s.v.at(r) : s.z.at(r));
    }
    s.dot_products_last = batch.values.size();
    s.dot_products += batch.values.size();
    s.pending.push_back(std::move(batch));
    if (obs && obs->on_auxiliary) obs->on_auxiliary(col, s.z.at(col));
}

StepOutcome update_solution(PipelineState& s, ConvergenceTrace& trace, const PlcgObserver* obs) {
    StepOutcome out;
    out.iter = s.i;
    if (s.i < s.l) return out;
    const std::size_t a = s.i - s.l;
    if (s.eta.size() != a) throw std::logic_error("LU history out of step");
    if (a == 0) {
        const double eta0 = s.gamma[0];
        s.eta.push_back(eta0);
        s.lambda.push_back(0.0);
        if (!(std::isfinite(eta0) && eta0 != 0.0)) {
            out.kind = StepOutcome::Kind::pivot_breakdown;
            return out;
        }
        kn::scale_into(1.0 / eta0, s.v.at(0), s.p);
        return out;
    }
    const double dprev = s.delta[a - 1];
    const double lambda = dprev / s.eta[a - 1];
    const double eta = s.gamma[a] - lambda * dprev;
    const double zeta = -lambda * s.zeta[a - 1];
    s.lambda.push_back(lambda);
    s.eta.push_back(eta);
    s.zeta.push_back(zeta);

    kn::axpy(s.zeta[a - 1], s.p, s.x);
    s.x_index = a;
    const double norm = std::abs(zeta);
    const bool done = meets_tol(s, norm);
    add_record(s, trace, a, norm, done ? TraceEvent::converged : TraceEvent::none);
    if (obs && obs->on_solution) obs->on_solution(a, s.x, zeta);
    out.norm = norm;
    if (done) {
        out.kind = StepOutcome::Kind::converged;
        return out;
    }
    if (s.k_offset + a >= s.cfg.max_iter) {
        out.kind = StepOutcome::Kind::budget_exhausted;
        return out;
    }
    if (!(std::isfinite(eta) && eta != 0.0) || !std::isfinite(zeta)) {
        out.kind = StepOutcome::Kind::pivot_breakdown;
        return out;
    }
    kn::xpby(s.v.at(a), -dprev, s.p);
    kn::scale_into(1.0 / eta, s.p, s.p);
    return out;
}

double residual_norm(const PipelineState& s) { return std::abs(s.zeta.at(s.x_index)); }

StepOutcome plcg_step(PipelineState& s, ConvergenceTrace& trace, const PlcgObserver* obs) {
    advance_z(s);
    bool happy = false;
    if (s.i >= s.l) {
        StepOutcome t = update_transform(s, obs);
        if (t.kind == StepOutcome::Kind::hard_breakdown) return t;
        happy = t.kind == StepOutcome::Kind::happy_breakdown;
        update_tridiagonal(s, happy);
        if (happy) {
            if (obs && obs->on_tridiagonal) obs->on_tridiagonal(s.i - s.l, s.gamma.back(), s.delta.back());
        } else {
            update_bases(s, obs);
        }
    }
    if (!happy) queue_dot_products(s, obs);
    StepOutcome out = update_solution(s, trace, obs);
    if (!happy || out.kind != StepOutcome::Kind::proceed) {
        ++s.i;
        return out;
    }

    // The Krylov space is invariant: x_{a+1} = x_a + zeta_a p_a is the
    // Galerkin solution, with zeta_{a+1} = 0.
    const std::size_t a = s.i - s.l;
    out.iter = s.i;
    out.root_argument = s.last_root_argument;
    if (s.k_offset + a + 1 > s.cfg.max_iter) {
        out.kind = StepOutcome::Kind::budget_exhausted;
        return out;
    }
    kn::axpy(s.zeta[a], s.p, s.x);
    s.x_index = a + 1;
    s.lambda.push_back(0.0);
    s.eta.push_back(std::numeric_limits<double>::quiet_NaN());
    s.zeta.push_back(0.0);
    const double explicit_norm = zeta_norm(s, residual(s, s.x));
    const bool ok = explicit_norm / s.b_norm <= s.cfg.tol || explicit_norm == 0.0;
    add_record(s, trace, a + 1, 0.0, ok ? TraceEvent::converged : TraceEvent::none);
    if (obs && obs->on_solution) obs->on_solution(a + 1, s.x, 0.0);
    ++s.i;
    out.norm = explicit_norm;
    out.kind = ok ? StepOutcome::Kind::converged : StepOutcome::Kind::happy_breakdown;
    return out;
}

StepOutcome handle_breakdown(PipelineState& s, ConvergenceTrace& trace, const StepOutcome& outcome,
                             const PlcgObserver* obs) {
    ++s.breakdowns;
    add_record(s, trace, s.x_index, std::abs(s.zeta.at(s.x_index)), TraceEvent::breakdown);
    if (s.restarts >= s.cfg.max_restarts) return outcome;

    const std::size_t k_offset = s.k_offset + s.x_index;
    const std::size_t restarts = s.restarts + 1;
    const std::size_t cycle = s.cycle + 1;
    const std::size_t breakdowns = s.breakdowns;
    const std::size_t dots = s.dot_products;
    auto log = std::move(s.reduction_log);
    const Vector x = s.x;
    const Vector b = s.b;
    const ShiftSet shifts = s.shifts;
    const SolveConfig cfg = s.cfg;

    StepOutcome init = plcg_init(s, *s.a, *s.m, b, x, s.l, shifts, cfg);
    s.k_offset = k_offset;
    s.restarts = restarts;
    s.cycle = cycle;
    s.breakdowns = breakdowns;
    s.dot_products = dots;
    s.reduction_log = std::move(log);
    if (obs && obs->on_restart) obs->on_restart(cycle, s.x);
    const bool done = init.kind == StepOutcome::Kind::converged;
    add_record(s, trace, 0, s.r0_norm, done ? TraceEvent::converged : TraceEvent::restart);
    if (done) return init;
    if (s.k_offset >= cfg.max_iter) {
        StepOutcome out;
        out.kind = StepOutcome::Kind::budget_exhausted;
        return out;
    }
    return {};
}

namespace {

void emit_cycle_start(const PipelineState& s, const PlcgObserver& observer) {
    if (observer.on_column) {
        const double g00 = s.g.at(0, 0);
        observer.on_column(0, 0, std::span<const double>(&g00, 1), 1.0);
    }
    if (observer.on_basis) observer.on_basis(0, s.v.at(0));
    if (observer.on_auxiliary) observer.on_auxiliary(0, s.z.at(0));
}

}  // namespace

ConvergenceTrace solve_plcg(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                            std::size_t l, const ShiftSet& shifts, const SolveConfig& cfg,
                            const PlcgObserver& observer) {
    ConvergenceTrace trace;
    PipelineState s;
    StepOutcome out = plcg_init(s, a, cfg.precond, b, x0, l, shifts, cfg);
    trace.b_norm = s.b_norm;
    add_record(s, trace, 0, s.r0_norm,
               out.kind == StepOutcome::Kind::converged ? TraceEvent::converged : TraceEvent::none);
    emit_cycle_start(s, observer);
    if (observer.on_solution) observer.on_solution(0, s.x, s.r0_norm);
    const PlcgObserver* obs = &observer;

    while (out.kind == StepOutcome::Kind::proceed) {
        out = plcg_step(s, trace, obs);
        switch (out.kind) {
            case StepOutcome::Kind::hard_breakdown:
            case StepOutcome::Kind::happy_breakdown:
            case StepOutcome::Kind::pivot_breakdown:
                out = handle_breakdown(s, trace, out, obs);
                if (out.kind == StepOutcome::Kind::proceed) emit_cycle_start(s, observer);
                break;
            default:
                break;
        }
    }
    switch (out.kind) {
        case StepOutcome::Kind::converged: trace.status = SolveStatus::converged; break;
        case StepOutcome::Kind::budget_exhausted: trace.status = SolveStatus::budget_exhausted; break;
        default: trace.status = SolveStatus::breakdown; break;
    }
    trace.x = std::move(s.x);
    trace.iterations = s.k_offset + s.x_index;
    trace.restarts = s.restarts;
    trace.breakdowns = s.breakdowns;
    return trace;
}

}  // namespace plcg
