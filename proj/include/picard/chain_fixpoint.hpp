#pragma once

// Fixed-point iteration for a map that contracts along a decreasing chain of
// metric spaces H_0 ⊃ H_1 ⊃ ... with level metrics d_j satisfying
//
//     d_j(x, y) <= alpha_{j+1} d_{j+1}(x, y)             (x, y in H_{j+1})
//     P H_j ⊂ H_{j+1}
//     d_{j+1}(Px, Py) <= kappa_{j+1} d_j(x, y)            (x, y in H_j)
//
// and limsup alpha_j kappa_j < 1. Iterates converge in every d_j with
//
//     d_j(x_inf, x_n) <= C * prod_{k=j+1}^{n} alpha_k kappa_k * d_j(x_{j+1}, x_j).
//
// Chain points are opaque; metric and map evaluation are injected.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "picard/norm.hpp"

namespace picard {

/// The limsup condition on alpha_j kappa_j could not be certified.
class divergence_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A chain point was found outside the level it is required to occupy.
class membership_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Level = std::size_t;

enum class TailKind { eventually_constant, eventually_monotone, explicit_formula };

/// Analytic model of the tail of alpha_j kappa_j. A finite prefix can never
/// certify a limsup, so every chain declares how its tail behaves.
struct TailModel {
    TailKind kind = TailKind::eventually_monotone;
    /// First index from which the model applies.
    Level from = 1;
    /// eventually_constant: the constant value; explicit_formula: the declared limsup.
    double value = 0.0;
    /// explicit_formula: upper bound on sup_{i >= k} alpha_i kappa_i for k >= from.
    std::function<double(Level)> sup_from;

    static TailModel constant(double v, Level from = 1)
    {
        return {TailKind::eventually_constant, from, v, {}};
    }
    static TailModel monotone(Level from = 1) { return {TailKind::eventually_monotone, from, 0.0, {}}; }
    static TailModel formula(std::function<double(Level)> sup, double limsup, Level from = 1)
    {
        return {TailKind::explicit_formula, from, limsup, std::move(sup)};
    }
};

/// The sequences alpha_j, kappa_j (j >= 1) and their tail model.
struct ChainConstants {
    std::function<double(Level)> alpha;
    std::function<double(Level)> kappa;
    TailModel tail;

    double product_term(Level k) const
    {
        const double a = alpha(k);
        const double c = kappa(k);
        if (!(a > 0.0) || !(c > 0.0))
            throw std::domain_error("chain constants must be positive (index " + std::to_string(k) + ")");
        return a * c;
    }
};

/// Chain with injected evaluation. `metric` returns std::nullopt when a point
/// is not a member of H_j; `member` defaults to metric(j, x, x) succeeding.
template <class Point>
struct ChainSpec : ChainConstants {
    std::function<std::optional<double>(Level, const Point&, const Point&)> metric;
    std::function<Point(const Point&)> map;
    std::function<bool(Level, const Point&)> member;
    /// Membership of x_m is checked at level min(m, membership_depth).
    Level membership_depth = std::numeric_limits<Level>::max();

    bool is_member(Level j, const Point& x) const
    {
        if (member)
            return member(j, x);
        return metric(j, x, x).has_value();
    }
};

/// prod_{k=j+1}^{n} alpha_k kappa_k; 1 for j == n.
inline double partial_product(const ChainConstants& spec, Level j, Level n)
{
    if (j > n)
        throw std::out_of_range("partial_product: j > n");
    double p = 1.0;
    for (Level k = j + 1; k <= n; ++k)
        p *= spec.product_term(k);
    return p;
}

/// Upper bound on sup_{i >= k} alpha_i kappa_i under the declared tail model,
/// or +inf where the model makes no claim.
inline double tail_ratio(const ChainConstants& spec, Level k)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (k < spec.tail.from)
        return inf;
    switch (spec.tail.kind) {
    case TailKind::eventually_constant:
        return spec.tail.value;
    case TailKind::eventually_monotone:
        return spec.product_term(k);
    case TailKind::explicit_formula:
        return spec.tail.sup_from ? spec.tail.sup_from(k) : inf;
    }
    return inf;
}

/// Throws divergence_error unless the tail model certifies limsup < 1.
inline void certify_limsup(const ChainConstants& spec)
{
    switch (spec.tail.kind) {
    case TailKind::eventually_constant:
        if (!(spec.tail.value < 1.0))
            throw divergence_error("constant tail value " + std::to_string(spec.tail.value) + " is not < 1");
        return;
    case TailKind::explicit_formula:
        if (!spec.tail.sup_from)
            throw divergence_error("explicit tail model without a formula");
        if (!(spec.tail.value < 1.0))
            throw divergence_error("declared limsup " + std::to_string(spec.tail.value) + " is not < 1");
        return;
    case TailKind::eventually_monotone: {
        // A nonincreasing tail has limsup < 1 iff some term is < 1.
        for (Level k = std::max<Level>(spec.tail.from, 1); k < (Level{1} << 40); k *= 2) {
            if (spec.product_term(k) < 1.0)
                return;
        }
        throw divergence_error("monotone tail never drops below 1");
    }
    }
}

namespace detail {

// S(n) = sum_{m>=0} prod_{k=n+1}^{n+m} alpha_k kappa_k, truncated once the
// geometric tail majorant falls below tol; the majorant is added in.
inline double tail_sum(const ChainConstants& spec, Level n, double tol)
{
    constexpr Level max_terms = 10'000'000;
    double total = 0.0;
    double term = 1.0;
    int ops = 0;
    for (Level m = 0; m < max_terms; ++m) {
        const double q = tail_ratio(spec, n + m + 1);
        if (q < 1.0) {
            const double rest = term / (1.0 - q);
            if (rest < tol || term == 0.0)
                return round_up(total + rest, ops + 4);
        }
        total += term;
        term *= spec.product_term(n + m + 1);
        ops += 2;
    }
    throw divergence_error("series S(" + std::to_string(n) + ") did not reach tolerance");
}

} // namespace detail

/// C = sup_n S(n), an upper bound within the declared tail model. Levels
/// beyond those summed explicitly are covered by 1 / (1 - tail_ratio).
inline double series_constant(const ChainConstants& spec, Level n_max, double tol)
{
    if (!(tol > 0.0))
        throw std::invalid_argument("series_constant: tol must be positive");
    certify_limsup(spec);

    double c = 0.0;
    for (Level n = 0; n <= n_max; ++n)
        c = std::max(c, detail::tail_sum(spec, n, tol));

    // Every S(n) with n > n_eff is bounded by the geometric series with ratio q.
    constexpr Level extra_levels = 100'000;
    for (Level n_eff = n_max;; ++n_eff) {
        const double q = tail_ratio(spec, n_eff + 1);
        const double cap = q < 1.0 ? round_up(1.0 / (1.0 - q), 3) : std::numeric_limits<double>::infinity();
        if (cap <= c)
            return c;
        if (n_eff >= n_max + extra_levels) {
            if (q < 1.0)
                return cap;
            throw divergence_error("series_constant: tail ratio never certified below 1");
        }
        c = std::max(c, detail::tail_sum(spec, n_eff + 1, tol));
    }
}

/// C * prod_{k=j+1}^{n} alpha_k kappa_k * first_step, rounded outward.
inline double a_priori_bound(const ChainConstants& spec, Level j, Level n, double first_step, double c)
{
    if (first_step == 0.0)
        return 0.0;
    const double p = partial_product(spec, j, n);
    return round_up(c * p * first_step, static_cast<int>(n - j) * 2 + 2);
}

struct StopRule {
    std::size_t n_max = 50;
    double target_bound = 0.0;
};

template <class Point>
struct IterationTrace {
    std::vector<Point> points;          ///< x_0 .. x_n
    std::vector<double> step_distances; ///< d_j(x_{m+1}, x_m); +inf where undefined for m < j
    std::vector<double> bounds;         ///< bound on d_j(x_inf, x_m); +inf for m < j
    double series_constant = 0.0;
    double first_step = 0.0;            ///< d_j(x_{j+1}, x_j)
    Level base_level = 0;

    std::size_t size() const { return points.size(); }
};

/// Iterates the map from x0, recording level-`base_level` step distances and
/// a-priori bounds. Stops after n_max or once a bound reaches target_bound.
template <class Point>
IterationTrace<Point> iterate(const ChainSpec<Point>& spec, Point x0, StopRule stop, Level base_level = 0,
                              double tol = 1e-13)
{
    if (!spec.is_member(0, x0))
        throw membership_error("iterate: starting point is not in H_0");

    IterationTrace<Point> trace;
    trace.base_level = base_level;
    trace.series_constant = series_constant(spec, std::max<std::size_t>(stop.n_max, 64), tol);

    constexpr double inf = std::numeric_limits<double>::infinity();
    Point current = std::move(x0);
    for (std::size_t m = 0;; ++m) {
        Point next = spec.map(current);
        if (!spec.is_member(std::min<Level>(m + 1, spec.membership_depth), next))
            throw membership_error("iterate: x_" + std::to_string(m + 1) + " left H_" + std::to_string(m + 1));
        // x_m for m < j need not be comparable in d_j
        const auto d = spec.metric(base_level, next, current);
        if (!d && m >= base_level)
            throw membership_error("iterate: iterates are not comparable in d_" + std::to_string(base_level));
        if (m == base_level)
            trace.first_step = *d;

        const double bound = m < base_level
                                 ? inf
                                 : a_priori_bound(spec, base_level, m, trace.first_step, trace.series_constant);
        trace.points.push_back(std::move(current));
        trace.step_distances.push_back(d.value_or(inf));
        trace.bounds.push_back(bound);

        if (m >= stop.n_max || bound <= stop.target_bound)
            break;
        current = std::move(next);
    }
    return trace;
}

struct AxiomViolation {
    enum class Kind { metric_comparison, contraction };
    Kind kind;
    Level level;         ///< j + 1
    std::size_t sample;  ///< index of the witness pair
    double lhs;
    double rhs;
};

struct AxiomReport {
    /// worst d_j / d_{j+1}, to compare with alpha_{j+1}; index j.
    std::vector<double> metric_ratio;
    /// worst d_{j+1}(Px, Py) / d_j(x, y), to compare with kappa_{j+1}; index j.
    std::vector<double> contraction_ratio;
    std::vector<AxiomViolation> violations;
    std::size_t skipped = 0;

    bool ok() const { return violations.empty(); }
};

/// Checks the metric comparison and contraction inequalities on sample pairs
/// for j < j_max. Violations are reported with their witness, never thrown.
template <class Point>
AxiomReport validate_chain_axioms(const ChainSpec<Point>& spec, const std::vector<std::pair<Point, Point>>& samples,
                                  Level j_max, double tol = 1e-12)
{
    AxiomReport report;
    report.metric_ratio.assign(j_max, 0.0);
    report.contraction_ratio.assign(j_max, 0.0);

    for (std::size_t s = 0; s < samples.size(); ++s) {
        const auto& [x, y] = samples[s];
        const Point px = spec.map(x);
        const Point py = spec.map(y);
        for (Level j = 0; j < j_max; ++j) {
            const auto dj = spec.metric(j, x, y);
            const auto dj1 = spec.metric(j + 1, x, y);
            const auto dimg = spec.metric(j + 1, px, py);
            if (!dj || !dj1 || !dimg) {
                ++report.skipped;
                continue;
            }
            const double a = spec.alpha(j + 1);
            const double k = spec.kappa(j + 1);
            if (*dj1 > 0.0)
                report.metric_ratio[j] = std::max(report.metric_ratio[j], *dj / *dj1);
            if (*dj > 0.0)
                report.contraction_ratio[j] = std::max(report.contraction_ratio[j], *dimg / *dj);
            if (*dj > a * *dj1 * (1.0 + tol))
                report.violations.push_back({AxiomViolation::Kind::metric_comparison, j + 1, s, *dj, a * *dj1});
            if (*dimg > k * *dj * (1.0 + tol))
                report.violations.push_back({AxiomViolation::Kind::contraction, j + 1, s, *dimg, k * *dj});
        }
    }
    return report;
}

} // namespace picard
