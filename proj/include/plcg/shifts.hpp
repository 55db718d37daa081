#pragma once

#include "plcg/sparse.hpp"

#include <cstddef>
#include <vector>

namespace plcg {

/// Shifts sigma_0..sigma_{l-1} of the Newton polynomial P_l(t) = prod (t - sigma_j)
/// that generates the auxiliary basis.
struct ShiftSet {
    enum class Kind { chebyshev, zero, user };

    std::vector<double> sigma;
    SpectralInterval interval;
    Kind kind = Kind::zero;

    std::size_t depth() const { return sigma.size(); }
};

/// sigma_i = (a+b)/2 + (b-a)/2 cos((2i+1) pi / (2l)), i = 0..l-1, in that order.
ShiftSet chebyshev_shifts(SpectralInterval interval, std::size_t l);
ShiftSet monomial_shifts(std::size_t l);
ShiftSet user_shifts(std::vector<double> sigma);

/// Value of prod_j (t - sigma_j) over the first k shifts.
double shift_polynomial(const ShiftSet& shifts, double t, std::size_t k);
inline double shift_polynomial(const ShiftSet& shifts, double t) {
    return shift_polynomial(shifts, t, shifts.depth());
}

}  // namespace plcg
