#include "plcg/diagnostics.hpp"

#include "plcg/classic.hpp"
#include "plcg/errors.hpp"
#include "plcg/plcg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>

namespace plcg {

namespace kn = kernels;

namespace {

void check_snapshot_caps(const CsrMatrix& a, const SolveConfig& cfg) {
    if (a.size() > kSnapshotMaxN)
        throw SizeError("diagnostics: n = " + std::to_string(a.size()) + " exceeds " + std::to_string(kSnapshotMaxN));
    if (cfg.max_iter > kSnapshotMaxIter)
        throw SizeError("diagnostics: max_iter = " + std::to_string(cfg.max_iter) + " exceeds " +
                        std::to_string(kSnapshotMaxIter));
    if (!cfg.precond.is_identity()) throw ArgumentError("diagnostics: preconditioned runs are not supported");
}

// |(b - A x) - c * u|
double gap_norm(const CsrMatrix& a, std::span<const double> b, std::span<const double> x, double c,
                std::span<const double> u) {
    Vector ax = spmv(a, x);
    double sum = 0.0;
    for (std::size_t i = 0; i < ax.size(); ++i) {
        const double d = (b[i] - ax[i]) - c * u[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

// |A u - w|
double product_gap(const CsrMatrix& a, std::span<const double> u, std::span<const double> w) {
    Vector au = spmv(a, u);
    kn::axpy(-1.0, w, au);
    return norm2(au);
}

Eigen::MatrixXd to_eigen(const CsrMatrix& a) {
    const auto n = static_cast<Eigen::Index>(a.size());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    const auto rp = a.row_ptr();
    const auto ci = a.col_idx();
    const auto va = a.values();
    for (Eigen::Index i = 0; i < n; ++i)
        for (auto p = rp[static_cast<std::size_t>(i)]; p < rp[static_cast<std::size_t>(i) + 1]; ++p)
            d(i, ci[static_cast<std::size_t>(p)]) = va[static_cast<std::size_t>(p)];
    return d;
}

}  // namespace

DenseLanczosResult dense_lanczos(const CsrMatrix& a, std::span<const double> v0, std::size_t k) {
    const std::size_t n = a.size();
    if (v0.size() != n) throw DimensionError("dense_lanczos: v0 must have length " + std::to_string(n));
    if (k == 0 || k > n) throw ArgumentError("dense_lanczos: need 1 <= k <= n");
    const double nv = norm2(v0);
    if (nv == 0.0) throw ArgumentError("dense_lanczos: zero start vector");

    const auto nn = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd v(nn, static_cast<Eigen::Index>(k));
    std::vector<double> alpha, beta;
    for (Eigen::Index i = 0; i < nn; ++i) v(i, 0) = v0[static_cast<std::size_t>(i)] / nv;

    Eigen::VectorXd w(nn);
    std::size_t steps = 0;
    double beta_next = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        spmv(a, std::span<const double>(v.col(jj).data(), n), std::span<double>(w.data(), n));
        const double aj = v.col(jj).dot(w);
        alpha.push_back(aj);
        // Two passes of classical Gram-Schmidt against the whole basis.
        for (int pass = 0; pass < 2; ++pass) {
            const Eigen::VectorXd coef = v.leftCols(jj + 1).transpose() * w;
            w -= v.leftCols(jj + 1) * coef;
        }
        const double bj = w.norm();
        steps = j + 1;
        beta_next = bj;
        if (j + 1 == k) break;
        if (bj < 1e-14) break;
        beta.push_back(bj);
        v.col(jj + 1) = w / bj;
    }

    DenseLanczosResult out;
    const auto s = static_cast<Eigen::Index>(steps);
    out.v = v.leftCols(s);
    out.t = Eigen::MatrixXd::Zero(s, s);
    for (Eigen::Index j = 0; j < s; ++j) {
        out.t(j, j) = alpha[static_cast<std::size_t>(j)];
        if (j + 1 < s) out.t(j, j + 1) = out.t(j + 1, j) = beta[static_cast<std::size_t>(j)];
    }
    out.beta_next = beta_next;
    out.next = beta_next > 0.0 ? Eigen::VectorXd(w / beta_next) : Eigen::VectorXd::Zero(nn);
    return out;
}

void TriangularInverseMax::add_column(std::size_t first_row, std::span<const double> entries) {
    const std::size_t k = cols_.size();
    if (first_row > k || entries.size() != k - first_row + 1)
        throw DimensionError("TriangularInverseMax: column " + std::to_string(k) + " must hold rows first..k");
    cols_.push_back({first_row, std::vector<double>(entries.begin(), entries.end())});
    if (!std::isfinite(max_)) return;

    auto entry = [&](std::size_t j, std::size_t m) -> double {
        const Column& c = cols_[m];
        return j < c.first ? 0.0 : c.entries[j - c.first];
    };
    std::vector<double> x(k + 1, 0.0);
    const double diag = entry(k, k);
    if (diag == 0.0 || !std::isfinite(diag)) {
        max_ = std::numeric_limits<double>::infinity();
        return;
    }
    x[k] = 1.0 / diag;
    double best = std::abs(x[k]);
    for (std::size_t j = k; j-- > 0;) {
        // Rows above the band of column m vanish, so only m with first(m) <= j contribute.
        double acc = 0.0;
        for (std::size_t m = j + 1; m <= k; ++m) acc += entry(j, m) * x[m];
        const double gjj = entry(j, j);
        if (gjj == 0.0) {
            max_ = std::numeric_limits<double>::infinity();
            return;
        }
        x[j] = -acc / gjj;
        best = std::max(best, std::abs(x[j]));
    }
    max_ = std::max(max_, best);
}

double ginv_max_norm(const Eigen::MatrixXd& g) {
    if (g.rows() != g.cols()) throw DimensionError("ginv_max_norm: G must be square");
    TriangularInverseMax inv;
    std::vector<double> col;
    for (Eigen::Index k = 0; k < g.cols(); ++k) {
        col.assign(g.col(k).data(), g.col(k).data() + k + 1);
        inv.add_column(0, col);
    }
    return inv.value();
}

GapTrace residual_gap_trace(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                            std::size_t l, const ShiftSet& shifts, const SolveConfig& cfg) {
    check_snapshot_caps(a, cfg);
    GapTrace out;
    TriangularInverseMax inv;
    double g_max = 0.0;
    std::vector<double> col_inv, col_gmax, gamma, delta, basis_gap;
    std::map<std::size_t, Vector> v;
    bool live = true;

    PlcgObserver obs;
    obs.on_column = [&](std::size_t c, std::size_t first, std::span<const double> e, double) {
        if (!live || c != inv.columns()) return;
        inv.add_column(first, e);
        for (double x : e) g_max = std::max(g_max, std::abs(x));
        col_inv.push_back(inv.value());
        col_gmax.push_back(g_max);
    };
    obs.on_tridiagonal = [&](std::size_t k, double ga, double de) {
        if (!live || k != gamma.size()) return;
        gamma.push_back(ga);
        delta.push_back(de);
    };
    obs.on_basis = [&](std::size_t k, std::span<const double> vk) {
        if (!live) return;
        v[k] = Vector(vk.begin(), vk.end());
        if (k == 0) {
            basis_gap.push_back(0.0);
            return;
        }
        const std::size_t j = k - 1;
        double gap = std::numeric_limits<double>::quiet_NaN();
        if (j < gamma.size() && delta[j] != 0.0 && v.count(j) && (j == 0 || v.count(j - 1))) {
            Vector t = spmv(a, v[j]);
            kn::axpy(-gamma[j], v[j], t);
            if (j > 0) kn::axpy(-delta[j - 1], v[j - 1], t);
            kn::scale_into(1.0 / delta[j], t, t);
            kn::axpy(-1.0, vk, t);
            gap = norm2(t);
        }
        basis_gap.resize(k + 1, std::numeric_limits<double>::quiet_NaN());
        basis_gap[k] = gap;
    };
    obs.on_solution = [&](std::size_t k, std::span<const double> x, double zeta) {
        if (!live) return;
        GapRecord r;
        r.iter = k;
        auto it = v.find(k);
        if (it != v.end()) r.residual_gap = gap_norm(a, b, x, zeta, it->second);
        else if (zeta == 0.0) r.residual_gap = true_residual_norm(a, b, x);
        if (k < basis_gap.size()) r.basis_gap = basis_gap[k];
        if (k < col_inv.size()) {
            r.amplification = col_inv[k];
            r.g_max = col_gmax[k];
        }
        out.records.push_back(r);
        v.erase(v.begin(), v.lower_bound(k));
    };
    obs.on_restart = [&](std::size_t, std::span<const double>) {
        live = false;
        out.truncated = true;
    };

    out.solve = solve_plcg(a, b, x0, l, shifts, cfg, obs);
    if (out.solve.status == SolveStatus::breakdown) out.truncated = true;
    return out;
}

GapTrace cg_gap_trace(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                      const SolveConfig& cfg) {
    check_snapshot_caps(a, cfg);
    GapTrace out;
    out.solve = solve_cg(a, b, x0, cfg, [&](const CgSnapshot& s) {
        GapRecord r;
        r.iter = s.k;
        r.residual_gap = gap_norm(a, b, s.x, 1.0, s.r);
        r.amplification = 1.0;
        out.records.push_back(r);
    });
    return out;
}

std::vector<double> basis_gap_trace(const GapTrace& trace) {
    std::vector<double> out;
    out.reserve(trace.records.size());
    for (const auto& r : trace.records) out.push_back(r.basis_gap);
    return out;
}

double shift_polynomial_norm(const CsrMatrix& a, const ShiftSet& shifts, bool* estimated) {
    Eigen::VectorXd lambda;
    if (a.size() <= kDenseMaxN) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(a), Eigen::EigenvaluesOnly);
        lambda = es.eigenvalues();
        if (estimated) *estimated = false;
    } else {
        Vector start(a.size());
        for (std::size_t i = 0; i < start.size(); ++i) start[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i) + 1.0);
        auto lz = dense_lanczos(a, start, std::min<std::size_t>(a.size(), 120));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lz.t, Eigen::EigenvaluesOnly);
        lambda = es.eigenvalues();
        if (estimated) *estimated = true;
    }
    double best = 1.0;
    for (std::size_t k = 1; k <= shifts.depth(); ++k)
        for (Eigen::Index i = 0; i < lambda.size(); ++i)
            best = std::max(best, std::abs(shift_polynomial(shifts, lambda(i), k)));
    return best;
}

bool Lemma41Result::holds() const {
    return std::all_of(measured.begin(), measured.end(), [&](double g) { return g <= bound; });
}

Lemma41Result lemma41_bound(const CsrMatrix& a, std::span<const double> b, const ShiftSet& shifts,
                            const SolveConfig& cfg) {
    check_snapshot_caps(a, cfg);
    Lemma41Result out;
    out.poly_norm = shift_polynomial_norm(a, shifts, &out.estimated);
    out.eps_term = static_cast<double>(a.size()) * std::numeric_limits<double>::epsilon() * out.poly_norm;
    out.bound = out.poly_norm + out.eps_term;

    double running = 0.0;
    bool live = true;
    PlcgObserver obs;
    obs.on_column = [&](std::size_t c, std::size_t, std::span<const double> e, double) {
        if (!live || c != out.measured.size()) return;
        for (double x : e) running = std::max(running, std::abs(x));
        out.measured.push_back(running);
    };
    obs.on_restart = [&](std::size_t, std::span<const double>) { live = false; };
    Vector x0(a.size(), 0.0);
    solve_plcg(a, b, x0, shifts.depth(), shifts, cfg, obs);
    return out;
}

double lemma_a1_check(const CsrMatrix& a, std::span<const double> v0, const ShiftSet& shifts, std::size_t j) {
    const std::size_t l = shifts.depth();
    if (j < l + 1) throw ArgumentError("lemma_a1_check: need j >= l + 1");
    const auto lz = dense_lanczos(a, v0, j);
    if (lz.steps() < j) throw ArgumentError("lemma_a1_check: Krylov space has dimension below j");
    const std::size_t n = a.size();
    const auto jj = static_cast<Eigen::Index>(j);
    const auto ll = static_cast<Eigen::Index>(l);
    const Eigen::Index block = jj - ll;

    Eigen::MatrixXd pt = Eigen::MatrixXd::Identity(jj, jj);
    for (std::size_t k = 0; k < l; ++k)
        pt = (lz.t - shifts.sigma[k] * Eigen::MatrixXd::Identity(jj, jj)) * pt;

    double worst = 0.0;
    Vector w(n), tmp(n);
    for (Eigen::Index kc = 0; kc < block; ++kc) {
        w.assign(lz.v.col(kc).data(), lz.v.col(kc).data() + n);
        for (std::size_t k = 0; k < l; ++k) {
            spmv(a, w, tmp);
            kn::axpy(-shifts.sigma[k], w, tmp);
            std::swap(w, tmp);
        }
        const Eigen::Map<const Eigen::VectorXd> wz(w.data(), static_cast<Eigen::Index>(n));
        for (Eigen::Index m = 0; m < block; ++m) {
            const double explicit_entry = lz.v.col(m + ll).dot(wz);
            worst = std::max(worst, std::abs(explicit_entry - pt(m + ll, kc)));
        }
    }
    return worst;
}

double binv_entry(std::span<const double> beta, std::size_t i, std::size_t j) {
    if (i > j) return 0.0;
    if (j > beta.size()) throw DimensionError("binv_entry: column beyond recorded betas");
    double p = 1.0;
    for (std::size_t k = i; k < j; ++k) p *= beta[k];
    return p;
}

PipeCgGapTrace pcg_gap_decomposition(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                                     const SolveConfig& cfg) {
    check_snapshot_caps(a, cfg);
    PipeCgGapTrace out;
    std::vector<double> column;  // entries (i, k) of B^{-1}, i = 0..k
    double running = 1.0;
    out.solve = solve_pipecg(a, b, x0, cfg, [&](const PipeCgSnapshot& s) {
        if (s.k > 0) {
            out.beta.push_back(s.beta);
            for (double& c : column) c *= s.beta;
        }
        column.push_back(1.0);
        for (double c : column) running = std::max(running, std::abs(c));

        PipeCgGapRecord r;
        r.iter = s.k;
        r.r_gap = gap_norm(a, b, s.x, 1.0, s.r);
        r.s_gap = product_gap(a, s.p, s.s);
        r.w_gap = product_gap(a, s.r, s.w);
        r.z_gap = product_gap(a, s.s, s.z);
        r.binv_max = running;
        out.records.push_back(r);
    });
    return out;
}

}  // namespace plcg
