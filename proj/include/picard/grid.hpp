#pragma once

// Sampled curves on a uniform grid centred at t0, and cumulative quadrature
// outward from the centre node.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>

#include "picard/norm.hpp"

namespace picard {

struct UniformGrid {
    double t0 = 0.0;
    double alpha = 1.0; ///< half-width
    std::ptrdiff_t n = 1024; ///< nodes per half-interval

    double h() const { return alpha / static_cast<double>(n); }
    double node(std::ptrdiff_t k) const { return t0 + static_cast<double>(k) * h(); }
    Eigen::Index size() const { return static_cast<Eigen::Index>(2 * n + 1); }
    Eigen::Index column(std::ptrdiff_t k) const { return static_cast<Eigen::Index>(k + n); }

    bool operator==(const UniformGrid&) const = default;
};

/// y(t_k) = y0 + offsets(:, k + N). Storing offsets keeps y(t0) = y0 exact and
/// preserves the small differences the weighted metrics divide by |t - t0|^j.
struct GridFunction {
    UniformGrid grid;
    RealVec y0;
    Eigen::MatrixXd offsets; ///< d x (2N + 1)

    Eigen::Index dim() const { return y0.size(); }
    RealVec value(std::ptrdiff_t k) const { return y0 + offsets.col(grid.column(k)); }

    static GridFunction constant(const UniformGrid& grid, const RealVec& y0)
    {
        return {grid, y0, Eigen::MatrixXd::Zero(y0.size(), grid.size())};
    }

    /// Samples y(t) - y0 given as a callable of t.
    template <class F>
    static GridFunction from_offset(const UniformGrid& grid, const RealVec& y0, F&& offset)
    {
        GridFunction g = constant(grid, y0);
        for (std::ptrdiff_t k = -grid.n; k <= grid.n; ++k)
            if (k != 0)
                g.offsets.col(grid.column(k)) = offset(grid.node(k));
        return g;
    }

    /// Scalar function g(t) with no anchoring (y0 = 0).
    template <class F>
    static GridFunction scalar(const UniformGrid& grid, F&& g)
    {
        GridFunction out{grid, RealVec::Zero(1), Eigen::MatrixXd(1, grid.size())};
        for (std::ptrdiff_t k = -grid.n; k <= grid.n; ++k)
            out.offsets(0, grid.column(k)) = g(grid.node(k));
        return out;
    }
};

enum class QuadratureRule {
    trapezoid,
    /// One-sided 4-point rule per half-interval, exact for cubics on each side.
    cubic,
};

enum class Orientation {
    signed_ds, ///< int_{t0}^{t} g(s) ds
    arc_ds,    ///< int_{t0}^{t} g(s) |ds|
};

namespace detail {

// Integral of g over the cell between half-grid nodes c-1 and c (c = 1..n),
// where at(i) returns g at half-grid node i (0 is the centre).
template <class At>
auto cell_integral(At&& at, std::ptrdiff_t c, std::ptrdiff_t n, double h, QuadratureRule rule)
{
    if (rule == QuadratureRule::trapezoid || n < 3)
        return ((at(c - 1) + at(c)) * (h / 2.0)).eval();
    const double w = h / 24.0;
    if (c == 1)
        return ((9.0 * at(0) + 19.0 * at(1) - 5.0 * at(2) + at(3)) * w).eval();
    if (c == n)
        return ((at(n - 3) - 5.0 * at(n - 2) + 19.0 * at(n - 1) + 9.0 * at(n)) * w).eval();
    return ((13.0 * (at(c - 1) + at(c)) - at(c - 2) - at(c + 1)) * w).eval();
}

} // namespace detail

/// Cumulative integral from the centre node outward, column per node.
inline Eigen::MatrixXd cumulative_integral(const UniformGrid& grid, const Eigen::MatrixXd& g, QuadratureRule rule,
                                           Orientation orientation = Orientation::signed_ds)
{
    if (g.cols() != grid.size())
        throw std::invalid_argument("cumulative_integral: sample count does not match grid");
    const std::ptrdiff_t n = grid.n;
    const double h = grid.h();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g.rows(), g.cols());

    auto right = [&](std::ptrdiff_t i) { return g.col(grid.column(i)); };
    auto left = [&](std::ptrdiff_t i) { return g.col(grid.column(-i)); };
    const double left_sign = orientation == Orientation::signed_ds ? -1.0 : 1.0;
    for (std::ptrdiff_t c = 1; c <= n; ++c) {
        out.col(grid.column(c)) = out.col(grid.column(c - 1)) + detail::cell_integral(right, c, n, h, rule);
        out.col(grid.column(-c)) =
            out.col(grid.column(-c + 1)) + left_sign * detail::cell_integral(left, c, n, h, rule);
    }
    return out;
}

/// (K^n g)(t) = int_{t0}^{t} g(s) |t - s|^{n-1} / (n-1)! |ds|, as n nested
/// arc-length integrals.
inline GridFunction apply_K(const GridFunction& g, int n, QuadratureRule rule = QuadratureRule::cubic)
{
    if (n < 0)
        throw std::invalid_argument("apply_K: negative power");
    GridFunction out = g;
    for (int i = 0; i < n; ++i)
        out.offsets = cumulative_integral(out.grid, out.offsets, rule, Orientation::arc_ds);
    return out;
}

/// [R_L g](t) = g(t) + L int_{t0}^{t} g(s) e^{L|t-s|} |ds|, the inverse of Id - L K.
/// Between t0 and t, |t - s| = |t - t0| - |s - t0|, so the kernel factorises.
inline GridFunction apply_RL(const GridFunction& g, double lipschitz, QuadratureRule rule = QuadratureRule::cubic)
{
    const UniformGrid& grid = g.grid;
    Eigen::MatrixXd damped = g.offsets;
    for (std::ptrdiff_t k = -grid.n; k <= grid.n; ++k)
        damped.col(grid.column(k)) *= std::exp(-lipschitz * std::abs(grid.node(k) - grid.t0));
    const Eigen::MatrixXd integral = cumulative_integral(grid, damped, rule, Orientation::arc_ds);
    GridFunction out = g;
    for (std::ptrdiff_t k = -grid.n; k <= grid.n; ++k)
        out.offsets.col(grid.column(k)) +=
            lipschitz * std::exp(lipschitz * std::abs(grid.node(k) - grid.t0)) * integral.col(grid.column(k));
    return out;
}

/// Largest pointwise difference of two scalar-or-vector grid samples.
inline double sup_difference(const GridFunction& a, const GridFunction& b, NormKind kind = NormKind::euclidean)
{
    if (!(a.grid == b.grid) || a.dim() != b.dim())
        throw std::invalid_argument("sup_difference: incompatible grid functions");
    double best = 0.0;
    const RealVec shift = a.y0 - b.y0;
    for (Eigen::Index c = 0; c < a.grid.size(); ++c)
        best = std::max(best, norm(RealVec(shift + a.offsets.col(c) - b.offsets.col(c)), kind));
    return best;
}

} // namespace picard
