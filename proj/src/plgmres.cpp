#include "plcg/plgmres.hpp"

#include "plcg/errors.hpp"

#include <cmath>
#include <limits>

namespace plcg {

namespace kn = kernels;

Eigen::VectorXd hessenberg_column(const Eigen::MatrixXd& g, const Eigen::MatrixXd& b, const Eigen::MatrixXd& h,
                                  std::size_t k) {
    if (k == 0) throw ArgumentError("hessenberg_column: k must be positive");
    const auto kk = static_cast<Eigen::Index>(k);
    if (g.rows() < kk + 1 || g.cols() < kk + 1 || b.rows() < kk + 1 || b.cols() < kk)
        throw DimensionError("hessenberg_column: G needs k+1 columns and B k+1 rows");
    if (kk > 1 && (h.rows() < kk || h.cols() < kk - 1))
        throw DimensionError("hessenberg_column: H needs k rows and k-1 columns");
    const double pivot = g(kk - 1, kk - 1);
    if (pivot == 0.0) throw BreakdownError("hessenberg_column: zero diagonal in G");

    Eigen::VectorXd col = Eigen::VectorXd::Zero(kk + 1);
    col.head(kk) = g.topLeftCorner(kk, kk) * b.col(kk - 1).head(kk) + g.col(kk).head(kk) * b(kk, kk - 1);
    if (kk > 1) col.head(kk) -= h.topLeftCorner(kk, kk - 1) * g.col(kk - 1).head(kk - 1);
    col(kk) = g(kk, kk) * b(kk, kk - 1);
    return col / pivot;
}

namespace {

// Givens reduction of H_{k+1,k}, k = 1..steps. Returns the least-squares
// residual for each k (entry 0 is beta) and the cosines of the rotations.
void givens_residuals(const Eigen::MatrixXd& h, std::size_t steps, double beta, std::vector<double>& res,
                      std::vector<double>& cosines) {
    Eigen::MatrixXd r = h.topLeftCorner(static_cast<Eigen::Index>(steps + 1), static_cast<Eigen::Index>(steps));
    res.assign(steps + 1, 0.0);
    cosines.assign(steps, 1.0);
    res[0] = beta;
    double rhs_tail = beta;
    for (std::size_t k = 0; k < steps; ++k) {
        const auto e = static_cast<Eigen::Index>(k);
        const double a = r(e, e);
        const double c_sub = r(e + 1, e);
        const double rho = std::hypot(a, c_sub);
        const double c = rho == 0.0 ? 1.0 : a / rho;
        const double s = rho == 0.0 ? 0.0 : c_sub / rho;
        for (Eigen::Index j = e; j < r.cols(); ++j) {
            const double t0 = r(e, j);
            const double t1 = r(e + 1, j);
            r(e, j) = c * t0 + s * t1;
            r(e + 1, j) = -s * t0 + c * t1;
        }
        rhs_tail = -s * rhs_tail;
        cosines[k] = c;
        res[k + 1] = std::abs(rhs_tail);
    }
}

Eigen::VectorXd small_solve(const Eigen::MatrixXd& h, std::size_t k, double beta, bool fom) {
    const auto kk = static_cast<Eigen::Index>(k);
    if (fom) {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(kk);
        rhs(0) = beta;
        return h.topLeftCorner(kk, kk).partialPivLu().solve(rhs);
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(kk + 1);
    rhs(0) = beta;
    return h.topLeftCorner(kk + 1, kk).householderQr().solve(rhs);
}

void assemble(std::span<const double> x0, const std::vector<Vector>& v, const Eigen::VectorXd& y, Vector& x) {
    x.assign(x0.begin(), x0.end());
    for (Eigen::Index j = 0; j < y.size(); ++j) kn::axpy(y(j), v[static_cast<std::size_t>(j)], x);
}

}  // namespace

PlgmresResult solve_plgmres(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                            const ShiftSet& shifts, const PlgmresOptions& opt) {
    const std::size_t n = a.size();
    const std::size_t l = opt.l;
    const std::size_t m = opt.m;
    if (b.size() != n || x0.size() != n) throw DimensionError("solve_plgmres: b and x0 must have length " + std::to_string(n));
    if (l == 0 || m == 0) throw ArgumentError("solve_plgmres: l and m must be positive");
    if (shifts.depth() < l) throw ArgumentError("solve_plgmres: need l shifts");

    PlgmresResult out;
    ConvergenceTrace& trace = out.trace;
    trace.b_norm = norm2(b);
    if (trace.b_norm == 0.0) trace.b_norm = 1.0;

    Vector r0 = spmv(a, x0);
    for (std::size_t i = 0; i < n; ++i) r0[i] = b[i] - r0[i];
    const double beta = norm2(r0);
    if (beta == 0.0) {
        trace.x.assign(x0.begin(), x0.end());
        trace.records.push_back({0, 0.0, 0.0, TraceEvent::converged});
        trace.status = SolveStatus::converged;
        return out;
    }

    const auto dim = static_cast<Eigen::Index>(m + l + 2);
    Eigen::MatrixXd& g = out.g;
    Eigen::MatrixXd& h = out.h;
    g = Eigen::MatrixXd::Zero(dim, dim);
    h = Eigen::MatrixXd::Zero(dim, dim);
    std::vector<Vector>& v = out.v;
    std::vector<Vector>& z = out.z;
    v.reserve(m + 2);
    z.reserve(m + l + 2);

    v.push_back(r0);
    kn::scale_into(1.0 / beta, r0, v[0]);
    z.push_back(v[0]);
    g(0, 0) = 1.0;
    const double eps = std::numeric_limits<double>::epsilon();

    for (std::size_t i = 0; i <= m + l; ++i) {
        Vector next = spmv(a, z[i]);
        if (i < l) kn::axpy(-shifts.sigma[i], z[i], next);
        z.push_back(std::move(next));

        if (i >= l) {
            const auto c = static_cast<Eigen::Index>(i - l + 1);
            const auto col = c - 1;
            const Eigen::Index lo = i + 2 >= 2 * l ? static_cast<Eigen::Index>(i + 2 - 2 * l) : 0;
            for (Eigen::Index j = lo; j < c; ++j) {
                double acc = g(j, c);
                for (Eigen::Index k = 0; k < j; ++k) acc -= g(k, j) * g(k, c);
                g(j, c) = acc / g(j, j);
            }
            const double raw = g(c, c);
            double arg = raw;
            for (Eigen::Index k = 0; k < c; ++k) arg -= g(k, c) * g(k, c);
            const double tiny = 4.0 * static_cast<double>(c + 1) * eps * std::abs(raw);
            const bool breakdown = !(arg > tiny);
            g(c, c) = breakdown ? 0.0 : std::sqrt(arg);

            if (i < 2 * l) {
                for (Eigen::Index j = 0; j <= col; ++j) {
                    double acc = g(j, c) + shifts.sigma[static_cast<std::size_t>(col)] * g(j, col);
                    for (Eigen::Index k = 0; k < col; ++k) acc -= h(j, k) * g(k, col);
                    h(j, col) = acc / g(col, col);
                }
                h(c, col) = g(c, c) / g(col, col);
            } else {
                const auto prev = static_cast<Eigen::Index>(i - 2 * l);
                const auto ll = static_cast<Eigen::Index>(l);
                for (Eigen::Index j = 0; j <= col; ++j) {
                    double acc = 0.0;
                    for (Eigen::Index k = 0; k <= prev + 1; ++k) acc += g(j, k + ll) * h(k, prev);
                    for (Eigen::Index k = j > 0 ? j - 1 : 0; k < col; ++k) acc -= h(j, k) * g(k, col);
                    h(j, col) = acc / g(col, col);
                }
                h(c, col) = g(c, c) * h(prev + 1, prev) / g(col, col);
            }

            out.steps = std::min<std::size_t>(static_cast<std::size_t>(c), m);
            if (breakdown) {
                out.broke_down = static_cast<std::size_t>(c) <= m;
                break;
            }

            Vector vc = z[static_cast<std::size_t>(c)];
            for (Eigen::Index j = 0; j < c; ++j) kn::axpy(-g(j, c), v[static_cast<std::size_t>(j)], vc);
            kn::scale_into(1.0 / g(c, c), vc, vc);
            v.push_back(std::move(vc));

            Vector& zi = z[i + 1];
            for (Eigen::Index j = 0; j <= col; ++j) kn::axpy(-h(j, col), z[static_cast<std::size_t>(j) + l], zi);
            kn::scale_into(1.0 / h(c, col), zi, zi);
        }

        const std::size_t vrows = i + 1 >= l ? i + 2 - l : 0;
        for (std::size_t j = 0; j < vrows; ++j) g(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i + 1)) = kn::dot(z[i + 1], v[j]);
        for (std::size_t j = vrows; j <= i + 1; ++j)
            g(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i + 1)) = kn::dot(z[i + 1], z[j]);
    }

    const std::size_t steps = out.steps;
    std::vector<double> res, cosines;
    givens_residuals(h, steps, beta, res, cosines);

    Vector xk;
    for (std::size_t k = 0; k <= steps; ++k) {
        TraceRecord rec;
        rec.iter = k;
        if (k == 0) rec.recursive_norm = beta;
        else if (opt.fom) rec.recursive_norm = cosines[k - 1] == 0.0 ? std::numeric_limits<double>::infinity()
                                                                     : res[k] / std::abs(cosines[k - 1]);
        else rec.recursive_norm = res[k];
        if (opt.record_true_residual) {
            if (k == 0) xk.assign(x0.begin(), x0.end());
            else assemble(x0, v, small_solve(h, k, beta, opt.fom), xk);
            rec.true_norm = true_residual_norm(a, b, xk);
        }
        trace.records.push_back(rec);
    }

    if (steps > 0) assemble(x0, v, small_solve(h, steps, beta, opt.fom), trace.x);
    else trace.x.assign(x0.begin(), x0.end());
    trace.iterations = steps;
    trace.breakdowns = out.broke_down ? 1 : 0;
    const double final_norm = trace.records.back().recursive_norm;
    if (final_norm / trace.b_norm <= opt.tol) {
        trace.status = SolveStatus::converged;
        trace.records.back().event = TraceEvent::converged;
    } else if (out.broke_down) {
        trace.status = SolveStatus::breakdown;
        trace.records.back().event = TraceEvent::breakdown;
    } else {
        trace.status = SolveStatus::budget_exhausted;
    }
    return out;
}

}  // namespace plcg
