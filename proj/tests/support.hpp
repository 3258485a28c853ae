#pragma once

// Random members of the chain levels H_j for y' = y, y(t0) = 1.

#include <random>

#include "picard/picard_real.hpp"

namespace picard::sample {

/// For y' = y, P y - y vanishes to order j exactly when c_m = 1/m! for m < j;
/// the higher coefficients are free. Draws until the b-ball constraint holds.
inline PolyFunction random_member(const IVProblem& p, Level j, std::mt19937_64& rng, std::size_t degree = 8,
                                  double spread = 0.3)
{
    std::normal_distribution<double> g(0.0, spread);
    for (;;) {
        PolyFunction y = PolyFunction::constant(p.y0);
        double fact = 1.0;
        for (std::size_t m = 1; m <= degree; ++m) {
            fact *= static_cast<double>(m);
            const double c = m < j ? 1.0 / fact : g(rng);
            y.coeffs.push_back(RealVec::Constant(1, c));
        }
        double worst = 0.0;
        for (int i = -64; i <= 64; ++i) {
            const double s = p.alpha() * i / 64.0;
            worst = std::max(worst, norm(RealVec(y(s) - p.y0), p.norm));
        }
        if (worst <= p.b)
            return y;
    }
}

/// Samples y - y0 on the grid directly from the coefficients above c_0.
inline GridFunction to_grid(const PolyFunction& y, const UniformGrid& grid)
{
    PolyFunction offset = y;
    offset.coeffs[0].setZero();
    return GridFunction::from_offset(grid, y.coeffs[0], [&](double t) { return offset(t - grid.t0); });
}

} // namespace picard::sample
