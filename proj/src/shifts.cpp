#include "plcg/shifts.hpp"

#include "plcg/errors.hpp"

#include <cmath>
#include <numbers>

namespace plcg {

ShiftSet chebyshev_shifts(SpectralInterval interval, std::size_t l) {
    if (l == 0) throw ArgumentError("pipeline depth must be at least 1");
    if (!(interval.lambda_max > interval.lambda_min))
        throw ArgumentError("shift interval must satisfy lambda_max > lambda_min");
    ShiftSet s;
    s.kind = ShiftSet::Kind::chebyshev;
    s.interval = interval;
    s.sigma.resize(l);
    const double mid = 0.5 * (interval.lambda_max + interval.lambda_min);
    const double half = 0.5 * (interval.lambda_max - interval.lambda_min);
    for (std::size_t i = 0; i < l; ++i)
        s.sigma[i] = mid + half * std::cos(static_cast<double>(2 * i + 1) * std::numbers::pi / static_cast<double>(2 * l));
    return s;
}

ShiftSet monomial_shifts(std::size_t l) {
    if (l == 0) throw ArgumentError("pipeline depth must be at least 1");
    ShiftSet s;
    s.kind = ShiftSet::Kind::zero;
    s.sigma.assign(l, 0.0);
    return s;
}

ShiftSet user_shifts(std::vector<double> sigma) {
    if (sigma.empty()) throw ArgumentError("shift list must not be empty");
    for (double v : sigma)
        if (!std::isfinite(v)) throw ArgumentError("shifts must be finite");
    ShiftSet s;
    s.kind = ShiftSet::Kind::user;
    s.sigma = std::move(sigma);
    return s;
}

double shift_polynomial(const ShiftSet& shifts, double t, std::size_t k) {
    double p = 1.0;
    for (std::size_t j = 0; j < k && j < shifts.sigma.size(); ++j) p *= t - shifts.sigma[j];
    return p;
}

}  // namespace plcg
