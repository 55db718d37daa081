#include "plcg/sparse.hpp"

#include "plcg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace plcg {

CsrMatrix CsrMatrix::from_triplets(std::size_t n, std::span<const Triplet> entries) {
    if (n > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
        throw SizeError("matrix dimension " + std::to_string(n) + " exceeds the 32-bit column index range");
    for (const auto& t : entries) {
        if (t.row < 0 || t.col < 0 || static_cast<std::size_t>(t.row) >= n || static_cast<std::size_t>(t.col) >= n)
            throw DimensionError("triplet (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                                 ") outside a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
    }
    std::vector<std::size_t> order(entries.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(entries[a].row, entries[a].col) < std::tie(entries[b].row, entries[b].col);
    });

    CsrMatrix m;
    m.n_ = n;
    m.row_ptr_.assign(n + 1, 0);
    m.col_idx_.reserve(entries.size());
    m.values_.reserve(entries.size());
    std::int64_t last_row = -1;
    std::int64_t last_col = -1;
    for (std::size_t idx : order) {
        const auto& t = entries[idx];
        if (t.row == last_row && t.col == last_col) {
            m.values_.back() += t.value;
            continue;
        }
        m.col_idx_.push_back(static_cast<std::int32_t>(t.col));
        m.values_.push_back(t.value);
        ++m.row_ptr_[static_cast<std::size_t>(t.row) + 1];
        last_row = t.row;
        last_col = t.col;
    }
    std::partial_sum(m.row_ptr_.begin(), m.row_ptr_.end(), m.row_ptr_.begin());
    return m;
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
    std::vector<double> ones(n, 1.0);
    return diagonal(ones);
}

CsrMatrix CsrMatrix::diagonal(std::span<const double> diag) {
    std::vector<Triplet> t;
    t.reserve(diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i)
        t.push_back({static_cast<std::int64_t>(i), static_cast<std::int64_t>(i), diag[i]});
    return from_triplets(diag.size(), t);
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
    const auto first = col_idx_.begin() + row_ptr_[i];
    const auto last = col_idx_.begin() + row_ptr_[i + 1];
    auto it = std::lower_bound(first, last, static_cast<std::int32_t>(j));
    if (it == last || *it != static_cast<std::int32_t>(j)) return 0.0;
    return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

bool CsrMatrix::is_symmetric() const {
    for (std::size_t i = 0; i < n_; ++i) {
        for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            const auto j = static_cast<std::size_t>(col_idx_[k]);
            const auto first = col_idx_.begin() + row_ptr_[j];
            const auto last = col_idx_.begin() + row_ptr_[j + 1];
            auto it = std::lower_bound(first, last, static_cast<std::int32_t>(i));
            if (it == last || *it != static_cast<std::int32_t>(i)) return false;
            if (values_[static_cast<std::size_t>(it - col_idx_.begin())] != values_[k]) return false;
        }
    }
    return true;
}

std::size_t CsrMatrix::max_row_nnz() const {
    std::size_t best = 0;
    for (std::size_t i = 0; i < n_; ++i)
        best = std::max(best, static_cast<std::size_t>(row_ptr_[i + 1] - row_ptr_[i]));
    return best;
}

std::vector<double> CsrMatrix::to_dense() const {
    std::vector<double> d(n_ * n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
        for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) d[i * n_ + static_cast<std::size_t>(col_idx_[k])] = values_[k];
    return d;
}

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
    if (x.size() != a.size() || y.size() != a.size())
        throw DimensionError("spmv: operator is " + std::to_string(a.size()) + "x" + std::to_string(a.size()) +
                             ", got x of length " + std::to_string(x.size()) + " and y of length " +
                             std::to_string(y.size()));
    kernels::active().spmv(a.view(), x.data(), y.data());
}

Vector spmv(const CsrMatrix& a, std::span<const double> x) {
    Vector y(a.size());
    spmv(a, x, y);
    return y;
}

namespace {

std::size_t checked_grid(std::size_t nx, std::size_t ny) {
    if (nx == 0 || ny == 0) throw ArgumentError("grid dimensions must be at least 1");
    if (nx > std::numeric_limits<std::size_t>::max() / ny ||
        nx * ny > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
        throw SizeError("grid " + std::to_string(nx) + "x" + std::to_string(ny) + " exceeds the index range");
    return nx * ny;
}

CsrMatrix build_stencil(std::size_t nx, std::size_t ny, double diag, bool diagonals) {
    const std::size_t n = checked_grid(nx, ny);
    std::vector<Triplet> t;
    t.reserve(n * (diagonals ? 9 : 5));
    const auto sx = static_cast<std::int64_t>(nx);
    const auto sy = static_cast<std::int64_t>(ny);
    for (std::int64_t y = 0; y < sy; ++y) {
        for (std::int64_t x = 0; x < sx; ++x) {
            const std::int64_t row = y * sx + x;
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                for (std::int64_t dx = -1; dx <= 1; ++dx) {
                    if (!diagonals && dx != 0 && dy != 0) continue;
                    const std::int64_t xx = x + dx;
                    const std::int64_t yy = y + dy;
                    if (xx < 0 || yy < 0 || xx >= sx || yy >= sy) continue;
                    t.push_back({row, yy * sx + xx, (dx == 0 && dy == 0) ? diag : -1.0});
                }
            }
        }
    }
    return CsrMatrix::from_triplets(n, t);
}

}  // namespace

CsrMatrix build_poisson_2d(std::size_t nx, std::size_t ny) { return build_stencil(nx, ny, 4.0, false); }

CsrMatrix build_nine_point_2d(std::size_t nx, std::size_t ny) { return build_stencil(nx, ny, 8.0, true); }

Preconditioner Preconditioner::jacobi(const CsrMatrix& a) {
    Preconditioner p;
    p.kind_ = Kind::jacobi;
    p.inv_diag_.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.at(i, i);
        if (!(d > 0.0))
            throw DefinitenessError("Jacobi preconditioner: diagonal entry " + std::to_string(i) +
                                    " is missing or not positive");
        p.inv_diag_[i] = 1.0 / d;
    }
    return p;
}

void Preconditioner::apply(std::span<const double> x, std::span<double> y) const {
    if (x.size() != y.size() || (kind_ == Kind::jacobi && x.size() != inv_diag_.size()))
        throw DimensionError("preconditioner apply: length mismatch");
    if (kind_ == Kind::none) {
        std::copy(x.begin(), x.end(), y.begin());
        return;
    }
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = inv_diag_[i] * x[i];
}

namespace {

SpectralInterval widen_if_degenerate(double lo, double hi) {
    lo = std::max(0.0, lo);
    if (!(hi > lo)) {
        const double mid = 0.5 * (lo + hi);
        const double pad = 1e-8 * std::max(1.0, std::abs(mid));
        lo = mid - pad;
        hi = mid + pad;
    }
    return {lo, hi};
}

}  // namespace

SpectralInterval gershgorin_interval(const CsrMatrix& a) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    const auto rp = a.row_ptr();
    const auto ci = a.col_idx();
    const auto v = a.values();
    for (std::size_t i = 0; i < a.size(); ++i) {
        double diag = 0.0;
        double radius = 0.0;
        for (auto k = rp[i]; k < rp[i + 1]; ++k) {
            if (static_cast<std::size_t>(ci[k]) == i)
                diag += v[k];
            else
                radius += std::abs(v[k]);
        }
        lo = std::min(lo, diag - radius);
        hi = std::max(hi, diag + radius);
    }
    if (a.size() == 0) return {0.0, 1.0};
    return widen_if_degenerate(lo, hi);
}

SpectralInterval gershgorin_interval(const CsrMatrix& a, const Preconditioner& m) {
    if (m.is_identity()) return gershgorin_interval(a);
    const auto inv = m.inv_diag();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    const auto rp = a.row_ptr();
    const auto ci = a.col_idx();
    const auto v = a.values();
    for (std::size_t i = 0; i < a.size(); ++i) {
        double diag = 0.0;
        double radius = 0.0;
        for (auto k = rp[i]; k < rp[i + 1]; ++k) {
            const auto j = static_cast<std::size_t>(ci[k]);
            const double scaled = v[k] * std::sqrt(inv[i] * inv[j]);
            if (j == i)
                diag += scaled;
            else
                radius += std::abs(scaled);
        }
        lo = std::min(lo, diag - radius);
        hi = std::max(hi, diag + radius);
    }
    if (a.size() == 0) return {0.0, 1.0};
    return widen_if_degenerate(lo, hi);
}

Vector rhs_for_unit_solution(const CsrMatrix& a) {
    Vector xhat(a.size(), 1.0 / std::sqrt(static_cast<double>(a.size())));
    return spmv(a, xhat);
}

double norm2(std::span<const double> x) { return std::sqrt(kernels::dot(x, x)); }

}  // namespace plcg
