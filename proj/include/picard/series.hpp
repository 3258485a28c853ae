#pragma once

// Truncated vector power series in s = t - t0 and polynomial vector fields.
// The Picard image of a series under a polynomial field is computed exactly
// (full-degree products, termwise antiderivative); only the final truncation
// to K_max discards mass, and that mass is recorded as a sup-norm majorant.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "picard/norm.hpp"

namespace picard {

template <class Scalar>
struct TaylorSeries {
    std::vector<Vec<Scalar>> coeffs; ///< c_0 .. c_K
    /// Sup-norm bound on the distance to the untruncated function this series stands for.
    double tail_majorant = 0.0;

    Eigen::Index dim() const { return coeffs.empty() ? 0 : coeffs.front().size(); }
    std::size_t degree() const { return coeffs.empty() ? 0 : coeffs.size() - 1; }

    static TaylorSeries constant(const Vec<Scalar>& c0) { return TaylorSeries{{c0}, 0.0}; }

    /// Value at offset s from the expansion point.
    Vec<Scalar> operator()(Scalar s) const
    {
        Vec<Scalar> acc = Vec<Scalar>::Zero(dim());
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
            acc = (acc * s + *it).eval();
        return acc;
    }
};

using PolyFunction = TaylorSeries<double>;
using TaylorFunctionC = TaylorSeries<std::complex<double>>;

/// Coefficientwise a - b; tail majorants add.
template <class Scalar>
TaylorSeries<Scalar> difference(const TaylorSeries<Scalar>& a, const TaylorSeries<Scalar>& b)
{
    if (a.dim() != b.dim())
        throw std::invalid_argument("difference: dimension mismatch");
    const std::size_t n = std::max(a.coeffs.size(), b.coeffs.size());
    TaylorSeries<Scalar> out;
    out.coeffs.assign(n, Vec<Scalar>::Zero(a.dim()));
    for (std::size_t m = 0; m < a.coeffs.size(); ++m)
        out.coeffs[m] += a.coeffs[m];
    for (std::size_t m = 0; m < b.coeffs.size(); ++m)
        out.coeffs[m] -= b.coeffs[m];
    out.tail_majorant = a.tail_majorant + b.tail_majorant;
    return out;
}

/// sum_{m >= from} ||c_m|| alpha^(m - from). Bounds the sup of |f(s) / s^from|
/// over |s| <= alpha when the lower coefficients vanish.
template <class Scalar>
double coefficient_majorant(const TaylorSeries<Scalar>& f, double alpha, NormKind kind, std::size_t from = 0)
{
    double acc = 0.0;
    for (std::size_t m = f.coeffs.size(); m-- > from;)
        acc = acc * alpha + norm(f.coeffs[m], kind);
    return acc;
}

/// Largest coefficient norm, used to scale "numerically zero" decisions.
template <class Scalar>
double coefficient_scale(const TaylorSeries<Scalar>& f, NormKind kind)
{
    double s = 0.0;
    for (const auto& c : f.coeffs)
        s = std::max(s, norm(c, kind));
    return s;
}

/// True when every coefficient below `order` is zero up to rel_tol * scale.
template <class Scalar>
bool vanishes_to_order(const TaylorSeries<Scalar>& f, std::size_t order, NormKind kind, double scale,
                       double rel_tol = 1e-13)
{
    const double cutoff = rel_tol * scale;
    for (std::size_t m = 0; m < std::min(order, f.coeffs.size()); ++m)
        if (norm(f.coeffs[m], kind) > cutoff)
            return false;
    return true;
}

/// f(s) / s^j with the coefficients below j dropped.
template <class Scalar>
TaylorSeries<Scalar> shift_down(const TaylorSeries<Scalar>& f, std::size_t j)
{
    TaylorSeries<Scalar> q;
    if (j >= f.coeffs.size()) {
        q.coeffs.assign(1, Vec<Scalar>::Zero(f.dim()));
        return q;
    }
    q.coeffs.assign(f.coeffs.begin() + static_cast<std::ptrdiff_t>(j), f.coeffs.end());
    return q;
}

namespace detail {

template <class Scalar>
using ScalarSeries = std::vector<Scalar>;

template <class Scalar>
ScalarSeries<Scalar> multiply(const ScalarSeries<Scalar>& a, const ScalarSeries<Scalar>& b)
{
    if (a.empty() || b.empty())
        return {};
    ScalarSeries<Scalar> out(a.size() + b.size() - 1, Scalar{0});
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == Scalar{0})
            continue;
        for (std::size_t k = 0; k < b.size(); ++k)
            out[i + k] += a[i] * b[k];
    }
    return out;
}

} // namespace detail

/// Polynomial vector field F(t, y) = sum of coef * t^p * prod_k y_k^(e_k) per component.
/// Written in the absolute time variable t, not in t - t0.
template <class Scalar>
struct PolyField {
    struct Monomial {
        Scalar coef{};
        int t_pow = 0;
        std::vector<int> y_pows; ///< one exponent per state component
    };

    std::vector<std::vector<Monomial>> components;

    Eigen::Index dim() const { return static_cast<Eigen::Index>(components.size()); }

    Vec<Scalar> operator()(Scalar t, const Vec<Scalar>& y) const
    {
        Vec<Scalar> out = Vec<Scalar>::Zero(dim());
        for (Eigen::Index i = 0; i < dim(); ++i) {
            for (const auto& mono : components[static_cast<std::size_t>(i)]) {
                Scalar v = mono.coef;
                for (int p = 0; p < mono.t_pow; ++p)
                    v *= t;
                for (std::size_t k = 0; k < mono.y_pows.size(); ++k)
                    for (int p = 0; p < mono.y_pows[k]; ++p)
                        v *= y[static_cast<Eigen::Index>(k)];
                out[i] += v;
            }
        }
        return out;
    }

    /// Largest total degree in the state variables.
    int state_degree() const
    {
        int deg = 0;
        for (const auto& comp : components)
            for (const auto& mono : comp) {
                int s = 0;
                for (int e : mono.y_pows)
                    s += e;
                deg = std::max(deg, s);
            }
        return deg;
    }

    bool is_zero() const
    {
        for (const auto& comp : components)
            for (const auto& mono : comp)
                if (mono.coef != Scalar{0})
                    return false;
        return true;
    }
};

/// Series of s -> F(t0 + s, y(s)), computed to full degree.
template <class Scalar>
std::vector<Vec<Scalar>> compose(const PolyField<Scalar>& field, Scalar t0, const TaylorSeries<Scalar>& y)
{
    using detail::ScalarSeries;
    const Eigen::Index d = field.dim();
    if (y.dim() != d)
        throw std::invalid_argument("compose: field and series dimensions differ");

    // power caches: index 0 is the time variable, 1..d the state components
    std::vector<std::vector<ScalarSeries<Scalar>>> powers(static_cast<std::size_t>(d) + 1);
    powers[0].push_back({Scalar{1}});
    powers[0].push_back({t0, Scalar{1}});
    for (Eigen::Index k = 0; k < d; ++k) {
        ScalarSeries<Scalar> comp(y.coeffs.size());
        for (std::size_t m = 0; m < y.coeffs.size(); ++m)
            comp[m] = y.coeffs[m][k];
        powers[static_cast<std::size_t>(k) + 1].push_back({Scalar{1}});
        powers[static_cast<std::size_t>(k) + 1].push_back(std::move(comp));
    }
    auto power = [&](std::size_t var, int e) -> const ScalarSeries<Scalar>& {
        auto& cache = powers[var];
        while (static_cast<int>(cache.size()) <= e)
            cache.push_back(detail::multiply(cache.back(), cache[1]));
        return cache[static_cast<std::size_t>(e)];
    };

    std::vector<ScalarSeries<Scalar>> comps(static_cast<std::size_t>(d));
    std::size_t len = 1;
    for (Eigen::Index i = 0; i < d; ++i) {
        ScalarSeries<Scalar> acc{Scalar{0}};
        for (const auto& mono : field.components[static_cast<std::size_t>(i)]) {
            if (mono.coef == Scalar{0})
                continue;
            ScalarSeries<Scalar> term{mono.coef};
            if (mono.t_pow > 0)
                term = detail::multiply(term, power(0, mono.t_pow));
            for (std::size_t k = 0; k < mono.y_pows.size(); ++k)
                if (mono.y_pows[k] > 0)
                    term = detail::multiply(term, power(k + 1, mono.y_pows[k]));
            if (term.size() > acc.size())
                acc.resize(term.size(), Scalar{0});
            for (std::size_t m = 0; m < term.size(); ++m)
                acc[m] += term[m];
        }
        len = std::max(len, acc.size());
        comps[static_cast<std::size_t>(i)] = std::move(acc);
    }

    std::vector<Vec<Scalar>> out(len, Vec<Scalar>::Zero(d));
    for (Eigen::Index i = 0; i < d; ++i) {
        const auto& c = comps[static_cast<std::size_t>(i)];
        for (std::size_t m = 0; m < c.size(); ++m)
            out[m][i] = c[m];
    }
    return out;
}

/// Data the series Picard operator needs from its problem.
template <class Scalar>
struct SeriesContext {
    Scalar t0{};
    Vec<Scalar> y0;
    double alpha = 1.0;
    double lipschitz = 0.0;
    std::size_t k_max = 64;
    NormKind norm = NormKind::euclidean;
};

/// (Py)(s) = y0 + int_0^s F(t0 + u, y(u)) du, termwise. Truncated at k_max;
/// the discarded mass plus alpha*L times the input's tail becomes the new tail.
template <class Scalar>
TaylorSeries<Scalar> picard_series(const PolyField<Scalar>& field, const SeriesContext<Scalar>& ctx,
                                   const TaylorSeries<Scalar>& y)
{
    const auto integrand = compose(field, ctx.t0, y);

    TaylorSeries<Scalar> out;
    out.coeffs.reserve(integrand.size() + 1);
    out.coeffs.push_back(ctx.y0);
    for (std::size_t m = 0; m < integrand.size(); ++m)
        out.coeffs.push_back(integrand[m] / static_cast<double>(m + 1));

    // trailing exact zeros carry no information
    while (out.coeffs.size() > 1 && out.coeffs.back().isZero(0.0))
        out.coeffs.pop_back();

    double discarded = 0.0;
    if (out.coeffs.size() > ctx.k_max + 1) {
        double scale = std::pow(ctx.alpha, static_cast<double>(ctx.k_max + 1));
        for (std::size_t m = ctx.k_max + 1; m < out.coeffs.size(); ++m) {
            discarded += norm(out.coeffs[m], ctx.norm) * scale;
            scale *= ctx.alpha;
        }
        out.coeffs.resize(ctx.k_max + 1);
        discarded = round_up(discarded, static_cast<int>(out.coeffs.size()));
    }
    out.tail_majorant = ctx.alpha * ctx.lipschitz * y.tail_majorant + discarded;
    return out;
}

namespace detail {

// Maximum of a scalar function on [lo, hi] near a sampled peak, by golden section.
template <class F>
double golden_max(F&& f, double lo, double hi, int iters = 60)
{
    constexpr double g = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iters; ++i) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return std::max(fc, fd);
}

} // namespace detail

/// Sampled sup of a nonnegative function of the offset s over the domain:
/// [-alpha, alpha] with golden-section refinement around the best sample (real),
/// or the circle |s| = alpha (complex; for moduli of holomorphic functions the
/// maximum principle makes this the sup over the closed disc).
template <class Scalar, class F>
double sup_over_domain(F&& value_at, double alpha, std::size_t samples)
{
    if (samples < 2)
        samples = 2;
    double best = 0.0;
    if constexpr (std::is_same_v<Scalar, double>) {
        std::size_t arg = 0;
        const double step = 2.0 * alpha / static_cast<double>(samples);
        for (std::size_t i = 0; i <= samples; ++i) {
            const double s = std::clamp(-alpha + step * static_cast<double>(i), -alpha, alpha);
            const double v = value_at(s);
            if (v > best) {
                best = v;
                arg = i;
            }
        }
        const double lo = std::max(-alpha, -alpha + step * (static_cast<double>(arg) - 1.0));
        const double hi = std::min(alpha, -alpha + step * (static_cast<double>(arg) + 1.0));
        if (hi > lo)
            best = std::max(best, detail::golden_max(value_at, lo, hi));
    } else {
        for (std::size_t i = 0; i < samples; ++i) {
            const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(samples);
            best = std::max(best, value_at(std::polar(alpha, theta)));
        }
    }
    return best;
}

template <class Scalar>
double sampled_sup(const TaylorSeries<Scalar>& q, double alpha, NormKind kind, std::size_t samples)
{
    return sup_over_domain<Scalar>([&](Scalar s) { return norm(q(s), kind); }, alpha, samples);
}

/// Two-sided estimate of d_j for series that agree at s = 0.
struct MetricBounds {
    double lower = 0.0; ///< sampled sup
    double upper = 0.0; ///< coefficient majorant plus recorded tails
    bool finite = true; ///< false when the difference does not vanish to order j
};

/// With samples == 0 only the majorant side is computed and `lower` stays 0.
template <class Scalar>
MetricBounds series_metric(const TaylorSeries<Scalar>& x, const TaylorSeries<Scalar>& y, std::size_t j, double alpha,
                           NormKind kind, std::size_t samples = 4096)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    const auto e = difference(x, y);
    const double scale = std::max({coefficient_scale(x, kind), coefficient_scale(y, kind), 1e-300});
    if (!vanishes_to_order(e, j, kind, scale))
        return {inf, inf, false};
    const auto q = shift_down(e, j);
    MetricBounds b;
    b.upper = round_up(coefficient_majorant(q, alpha, kind) + e.tail_majorant / std::pow(alpha, static_cast<double>(j)),
                       static_cast<int>(q.coeffs.size()) * 2);
    b.lower = samples == 0 ? 0.0 : std::min(sampled_sup(q, alpha, kind, samples), b.upper);
    return b;
}

} // namespace picard
