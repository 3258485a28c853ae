#pragma once

// Problem registry, Euler baseline and decay-rate comparison.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "picard/chain_fixpoint.hpp"
#include "picard/picard_complex.hpp"
#include "picard/picard_real.hpp"
#include "picard/report.hpp"

namespace picard {

struct RegistryEntry {
    std::string name;
    std::vector<std::string> tags;
    std::optional<IVProblem> real;
    std::optional<ComplexIVProblem> complex;
    std::function<RealVec(double)> closed_form;
    std::function<ComplexVec(cplx)> closed_form_complex;
    /// How alpha was certified when it is not min(a, b/M).
    std::string note;
};

namespace detail {

inline RealVec vec1(double v) { return RealVec::Constant(1, v); }

inline std::vector<RegistryEntry> build_registry()
{
    using M = PolyField<double>::Monomial;
    using MC = PolyField<cplx>::Monomial;
    const double e = std::numbers::e;
    std::vector<RegistryEntry> out;

    auto linear_exp = [&](std::string name, double a, double b, double m, std::optional<double> alpha) {
        IVProblem p;
        p.y0 = vec1(1.0);
        p.a = a;
        p.b = b;
        p.poly = PolyField<double>{{{M{1.0, 0, {1}}}}};
        p.lipschitz = 1.0;
        p.sup_bound = m;
        p.alpha_override = alpha;
        RegistryEntry r{std::move(name), {"linear", "polynomial-rhs"}, p, std::nullopt,
                        [](double t) { return vec1(std::exp(t)); }, {}, {}};
        return r;
    };

    // |y - 1| <= e^|t| - 1 <= e - 1 on |t| <= 1, so every iterate (a partial
    // sum of exp) stays in the ball although b / M < 1.
    auto exp_entry = linear_exp("exp", 1.0, e - 1.0, e, 1.0);
    exp_entry.note = "alpha = 1 by confinement: partial sums of exp stay within e - 1 of y0 on |t| <= 1";
    out.push_back(exp_entry);
    out.push_back(linear_exp("exp_half", 0.5, 1.0, 2.0, std::nullopt));

    {
        IVProblem p;
        p.y0 = vec1(1.0);
        p.a = 0.5;
        p.b = 1.0;
        p.poly = PolyField<double>{{{M{-2.0, 1, {1}}}}};
        p.lipschitz = 1.0; // 2 |t| <= 1
        p.sup_bound = 2.0; // 2 |t| |y| <= 2
        out.push_back({"gaussian", {"linear", "polynomial-rhs"}, p, std::nullopt,
                       [](double t) { return vec1(std::exp(-t * t)); }, {}, {}});
    }
    {
        IVProblem p;
        p.y0 = vec1(1.0);
        p.a = 1.0;
        p.b = 1.0;
        p.poly = PolyField<double>{{{}}};
        out.push_back({"zero", {"linear", "polynomial-rhs"}, p, std::nullopt, [](double) { return vec1(1.0); }, {}, {}});
    }
    {
        IVProblem p;
        p.y0 = vec1(1.0);
        p.a = 0.5;
        p.b = 1.0;
        p.poly = PolyField<double>{{{M{1.0, 0, {2}}}}};
        p.lipschitz = 4.0; // 2 |y| <= 4
        p.sup_bound = 4.0;
        out.push_back({"riccati", {"polynomial-rhs"}, p, std::nullopt,
                       [](double t) { return vec1(1.0 / (1.0 - t)); }, {}, {}});
    }
    {
        IVProblem p;
        p.y0 = vec1(1.0);
        p.a = 1.0;
        p.b = 1.0;
        p.rhs = [](double t, const RealVec& y) { return RealVec(-std::sin(t) * y); };
        p.lipschitz = std::sin(1.0);
        p.sup_bound = 2.0 * std::sin(1.0);
        out.push_back({"trig", {"linear", "trig"}, p, std::nullopt,
                       [](double t) { return vec1(std::exp(std::cos(t) - 1.0)); }, {}, {}});
    }
    {
        IVProblem p;
        p.y0 = RealVec(2);
        p.y0 << 1.0, 0.0;
        p.a = 1.0;
        p.b = 1.0;
        p.poly = PolyField<double>{{{M{1.0, 0, {0, 1}}}, {M{-1.0, 0, {1, 0}}}}};
        p.lipschitz = 1.0; // rotation generator, euclidean norm
        p.sup_bound = 2.0;
        out.push_back({"rotation", {"linear", "polynomial-rhs", "trig"}, p, std::nullopt,
                       [](double t) {
                           RealVec v(2);
                           v << std::cos(t), -std::sin(t);
                           return v;
                       },
                       {}, {}});
    }
    {
        ComplexIVProblem p;
        p.z0 = ComplexVec::Constant(1, cplx{1.0, 0.0});
        p.a = 1.0;
        p.b = e - 1.0;
        p.rhs = PolyField<cplx>{{{MC{cplx{1.0, 0.0}, 0, {1}}}}};
        p.lipschitz = 1.0;
        p.sup_bound = e;
        p.alpha_override = 1.0;
        out.push_back({"complex_exp", {"linear", "polynomial-rhs", "complex"}, std::nullopt, p, {},
                       [](cplx t) { return ComplexVec::Constant(1, std::exp(t)); },
                       "alpha = 1 by confinement: |partial sums of exp - 1| <= e - 1 on the unit disc"});
    }
    {
        ComplexIVProblem p;
        p.z0 = ComplexVec::Constant(1, cplx{1.0, 0.0});
        p.a = 1.0;
        p.b = 1.0;
        p.rhs = PolyField<cplx>{{{MC{cplx{1.0, 0.0}, 0, {2}}}}};
        p.lipschitz = 4.0;
        p.sup_bound = 4.0;
        p.alpha_override = 0.5;
        out.push_back({"complex_riccati", {"polynomial-rhs", "complex"}, std::nullopt, p, {},
                       [](cplx t) { return ComplexVec::Constant(1, 1.0 / (1.0 - t)); },
                       "alpha = 0.5 by confinement: iterates have coefficients in [0, 1], so |z - 1| <= 1 on |t| <= 1/2"});
    }
    return out;
}

} // namespace detail

inline const std::vector<RegistryEntry>& registry()
{
    static const std::vector<RegistryEntry> entries = detail::build_registry();
    return entries;
}

inline const RegistryEntry& find_entry(const std::string& name)
{
    for (const auto& e : registry())
        if (e.name == name)
            return e;
    throw std::invalid_argument("registry: unknown entry '" + name + "'");
}

/// max |y'(t) - f(t, y(t))| over sampled nodes, y' by a 5-point difference.
inline double closed_form_residual(const RegistryEntry& entry, std::size_t nodes = 33, double h = 1e-3)
{
    double worst = 0.0;
    if (entry.real && entry.closed_form) {
        const IVProblem& p = *entry.real;
        const double alpha = p.alpha();
        const double reach = std::max(0.0, alpha - 2.0 * h);
        for (std::size_t i = 0; i < nodes; ++i) {
            const double t = p.t0 - reach + 2.0 * reach * static_cast<double>(i) / static_cast<double>(nodes - 1);
            const auto& y = entry.closed_form;
            const RealVec dy = (y(t - 2 * h) - 8.0 * y(t - h) + 8.0 * y(t + h) - y(t + 2 * h)) / (12.0 * h);
            worst = std::max(worst, norm(RealVec(dy - p.f(t, y(t))), NormKind::max));
        }
    }
    if (entry.complex && entry.closed_form_complex) {
        const ComplexIVProblem& p = *entry.complex;
        const double reach = std::max(0.0, p.alpha() - 2.0 * h);
        const auto& z = entry.closed_form_complex;
        for (std::size_t i = 0; i < nodes; ++i) {
            const cplx t = p.t0 + std::polar(reach, 2.0 * std::numbers::pi * static_cast<double>(i) / nodes);
            const ComplexVec dz = (z(t - 2 * h) - 8.0 * z(t - h) + 8.0 * z(t + h) - z(t + 2 * h)) / (12.0 * h);
            worst = std::max(worst, norm(ComplexVec(dz - p.F(t, z(t))), NormKind::max));
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Euler baseline

namespace detail {

inline std::size_t steps_for(double alpha, double h)
{
    if (!(h > 0.0))
        throw std::invalid_argument("euler: step must be positive");
    const double k = alpha / h;
    const double r = std::round(k);
    if (r < 1.0 || std::abs(k - r) > 1e-9 * r)
        throw std::invalid_argument("euler: step must divide alpha");
    return static_cast<std::size_t>(r);
}

// Offsets from y0 at t0 + direction * i * h, i = 0..steps; leaving the b-ball
// projects back onto it.
inline std::vector<RealVec> euler_path(const IVProblem& p, double h, std::size_t steps, double direction,
                                       std::size_t& clamped)
{
    std::vector<RealVec> path{RealVec::Zero(p.dim())};
    path.reserve(steps + 1);
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = p.t0 + direction * static_cast<double>(i) * h;
        RealVec next = path.back() + direction * h * p.f(t, RealVec(p.y0 + path.back()));
        const double r = norm(next, p.norm);
        if (r > p.b) {
            next *= p.b / r;
            ++clamped;
        }
        path.push_back(std::move(next));
    }
    return path;
}

} // namespace detail

/// Forward Euler from t0 in both directions, linearly interpolated onto `grid`.
inline GridFunction euler_polygon(const IVProblem& p, double h, const UniformGrid& grid, Diagnostics* diag = nullptr)
{
    validate(p);
    const std::size_t steps = detail::steps_for(grid.alpha, h);
    std::size_t clamped = 0;
    const auto right = detail::euler_path(p, h, steps, 1.0, clamped);
    const auto left = detail::euler_path(p, h, steps, -1.0, clamped);
    if (clamped && diag)
        diag->warn("euler_polygon: " + std::to_string(clamped) + " steps projected back onto the b-ball");

    GridFunction g = GridFunction::constant(grid, p.y0);
    for (std::ptrdiff_t k = -grid.n; k <= grid.n; ++k) {
        const auto& path = k >= 0 ? right : left;
        const double u = std::abs(static_cast<double>(k)) * grid.h() / h;
        const std::size_t i = std::min(static_cast<std::size_t>(u), steps - 1);
        const double frac = u - static_cast<double>(i);
        g.offsets.col(grid.column(k)) = path[i] + frac * (path[i + 1] - path[i]);
    }
    return g;
}

/// Least-squares polynomial of the given degree through the grid samples, with
/// the constant term pinned to y0 so the result lies in H_0.
inline PolyFunction project_to_series(const GridFunction& g, std::size_t degree)
{
    if (degree == 0)
        return PolyFunction::constant(g.y0);
    const UniformGrid& grid = g.grid;
    Eigen::MatrixXd basis(grid.size(), static_cast<Eigen::Index>(degree));
    for (std::ptrdiff_t k = -grid.n; k <= grid.n; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(grid.n);
        double pw = 1.0;
        for (std::size_t m = 0; m < degree; ++m) {
            pw *= u;
            basis(grid.column(k), static_cast<Eigen::Index>(m)) = pw;
        }
    }
    const Eigen::MatrixXd coef = basis.colPivHouseholderQr().solve(g.offsets.transpose());
    PolyFunction out = PolyFunction::constant(g.y0);
    double scale = 1.0;
    for (std::size_t m = 0; m < degree; ++m) {
        scale /= grid.alpha;
        out.coeffs.push_back(coef.row(static_cast<Eigen::Index>(m)).transpose() * scale);
    }
    return out;
}

/// Largest Euler error at t0 +- alpha against the closed form.
inline double euler_endpoint_error(const IVProblem& p, double h, const std::function<RealVec(double)>& exact)
{
    const double alpha = p.alpha();
    const std::size_t steps = detail::steps_for(alpha, h);
    std::size_t clamped = 0;
    double err = 0.0;
    for (double dir : {1.0, -1.0}) {
        const auto path = detail::euler_path(p, h, steps, dir, clamped);
        err = std::max(err, norm(RealVec(p.y0 + path.back() - exact(p.t0 + dir * alpha)), p.norm));
    }
    return err;
}

/// Least-squares slope of ys against xs.
inline double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys)
{
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("fit_slope: need at least two points");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxy / sxx;
}

struct EulerStudy {
    std::vector<double> steps;
    std::vector<double> errors;
    double slope = 0.0; ///< d log(error) / d log(h)
};

/// Errors for h = alpha / 2^k, k in `levels`.
inline EulerStudy euler_convergence(const IVProblem& p, const std::function<RealVec(double)>& exact,
                                    const std::vector<int>& levels = {2, 3, 4, 5, 6, 7, 8})
{
    EulerStudy s;
    std::vector<double> lx, ly;
    for (int k : levels) {
        const double h = p.alpha() / std::ldexp(1.0, k);
        const double err = euler_endpoint_error(p, h, exact);
        s.steps.push_back(h);
        s.errors.push_back(err);
        if (err > 0.0) {
            lx.push_back(std::log(h));
            ly.push_back(std::log(err));
        }
    }
    s.slope = lx.size() >= 2 ? fit_slope(lx, ly) : 0.0;
    return s;
}

/// The plain contraction estimate for the problem's alpha and L.
inline std::optional<double> geometric_bound(const IVProblem& p, std::size_t n, double first_step)
{
    return geometric_bound(p.alpha(), p.lipschitz, n, first_step);
}

// ---------------------------------------------------------------------------
// Decay classification

enum class DecayClass { exact, factorial, geometric, superlinear, indeterminate, inapplicable };

inline std::string to_string(DecayClass c)
{
    switch (c) {
    case DecayClass::exact:
        return "exact";
    case DecayClass::factorial:
        return "factorial";
    case DecayClass::geometric:
        return "geometric";
    case DecayClass::superlinear:
        return "superlinear";
    case DecayClass::indeterminate:
        return "indeterminate";
    case DecayClass::inapplicable:
        return "inapplicable";
    }
    return "indeterminate";
}

/// Classifies e_0, e_1, ... by the slope of log(e_{n+1} / e_n) against
/// log(n + 1): about -1 for c^n / n!, about 0 for c^n, far below -1 when each
/// error is a power of the previous one. Only the leading run above `floor` counts.
inline DecayClass classify_decay(const std::vector<double>& errors, double floor)
{
    bool all_zero = errors.size() >= 2;
    for (std::size_t n = 1; n < errors.size(); ++n)
        all_zero = all_zero && errors[n] <= floor;
    if (all_zero)
        return DecayClass::exact;

    std::size_t usable = 0;
    while (usable < errors.size() && std::isfinite(errors[usable]) && errors[usable] > floor)
        ++usable;
    if (usable < 4)
        return DecayClass::indeterminate;

    std::vector<double> xs, ys;
    for (std::size_t n = 0; n + 1 < usable; ++n) {
        xs.push_back(std::log(static_cast<double>(n + 1)));
        ys.push_back(std::log(errors[n + 1] / errors[n]));
    }
    const double slope = fit_slope(xs, ys);
    if (slope < -1.6)
        return DecayClass::superlinear;
    if (slope <= -0.6)
        return DecayClass::factorial;
    if (std::abs(slope) < 0.25)
        return DecayClass::geometric;
    return DecayClass::indeterminate;
}

// ---------------------------------------------------------------------------
// Rate comparison

struct RateRow {
    std::size_t n = 0;
    double observed_error = 0.0;
    double factorial_bound = 0.0;
    std::optional<double> geometric_bound;
    std::optional<double> euler_error_at_matched_cost;
};

struct RateReport {
    std::string entry;
    std::string backend;
    std::string reference;
    std::vector<RateRow> rows;
    DecayClass picard = DecayClass::indeterminate;
    DecayClass geometric = DecayClass::inapplicable;
    std::optional<double> euler_slope;
    std::vector<std::string> warnings;
};

struct RateOptions {
    std::size_t n_max = 10;
    std::vector<int> euler_levels{2, 3, 4, 5, 6, 7, 8};
    /// Grid resolution; also prices the matched-cost Euler column.
    std::ptrdiff_t grid_n = 1024;
};

/// Euler at the cost of n grid Picard sweeps: n (2N + 1) right-hand-side
/// evaluations, split between the two directions.
inline std::optional<double> euler_matched_error(const IVProblem& p, std::size_t n, std::ptrdiff_t grid_n,
                                                 const std::function<RealVec(double)>& exact)
{
    if (n == 0 || !exact)
        return std::nullopt;
    const std::size_t per_side = std::max<std::size_t>(1, n * static_cast<std::size_t>(2 * grid_n + 1) / 2);
    return euler_endpoint_error(p, p.alpha() / static_cast<double>(per_side), exact);
}

inline RateReport compare_rates(const RegistryEntry& entry, const RateOptions& opt = {})
{
    RateReport out;
    out.entry = entry.name;
    ConvergenceReport conv;
    double floor = 0.0;

    if (entry.real) {
        const IVProblem& p = *entry.real;
        SolveOptions so;
        so.n_max = opt.n_max;
        so.closed_form = entry.closed_form;
        if (p.poly) {
            conv = solve_ivp(p, so);
        } else {
            so.closed_form = nullptr;
            conv = solve_ivp(p, GridFunction::constant(UniformGrid{p.t0, p.alpha(), opt.grid_n}, p.y0), so);
        }
        floor = 1e-13 * (1.0 + norm(p.y0, p.norm));
        if (entry.closed_form) {
            out.euler_slope = euler_convergence(p, entry.closed_form, opt.euler_levels).slope;
        }
    } else if (entry.complex) {
        ComplexSolveOptions so;
        so.n_max = opt.n_max;
        so.closed_form = entry.closed_form_complex;
        conv = solve_complex(*entry.complex, so);
        floor = 1e-13 * (1.0 + norm(entry.complex->z0, NormKind::max));
    } else {
        throw std::invalid_argument("compare_rates: entry has no problem");
    }
    out.backend = conv.mode;
    out.reference = conv.reference;
    out.warnings = conv.warnings;
    out.warnings.insert(out.warnings.end(), conv.violations.begin(), conv.violations.end());

    std::vector<double> observed, geometric;
    for (const auto& row : conv.rows) {
        RateRow r;
        r.n = row.n;
        r.observed_error = row.observed;
        r.factorial_bound = row.theorem_bound;
        r.geometric_bound = row.geometric_bound;
        if (entry.real)
            r.euler_error_at_matched_cost = euler_matched_error(*entry.real, row.n, opt.grid_n, entry.closed_form);
        observed.push_back(row.observed);
        if (row.geometric_bound)
            geometric.push_back(*row.geometric_bound);
        out.rows.push_back(r);
    }
    out.picard = classify_decay(observed, floor);
    if (geometric.size() == conv.rows.size())
        out.geometric = classify_decay(geometric, 0.0);
    return out;
}

// ---------------------------------------------------------------------------
// Heron's iteration x -> (x + c / x) / 2 as a chain with alpha_j = 1,
// kappa_j = 1/2 on [sqrt(c), inf): the engine's bound is geometric while the
// actual decay is quadratic.

struct HeronDemo {
    std::vector<double> errors;
    std::vector<double> chain_bounds;
    DecayClass classification = DecayClass::indeterminate;
};

inline HeronDemo heron_demo(double c = 2.0, double x0 = 2.0, std::size_t n = 8)
{
    if (!(c > 0.0) || !(x0 >= std::sqrt(c)))
        throw std::invalid_argument("heron_demo: need c > 0 and x0 >= sqrt(c)");
    ChainSpec<double> spec;
    spec.alpha = [](Level) { return 1.0; };
    spec.kappa = [](Level) { return 0.5; };
    spec.tail = TailModel::constant(0.5, 1);
    spec.metric = [](Level, const double& x, const double& y) -> std::optional<double> { return std::abs(x - y); };
    spec.map = [c](const double& x) { return 0.5 * (x + c / x); };
    const double root = std::sqrt(c);
    spec.member = [root](Level, const double& x) { return x >= root * (1.0 - 1e-15); };

    const auto trace = iterate(spec, x0, StopRule{n, 0.0});
    HeronDemo out;
    for (std::size_t m = 0; m < trace.points.size(); ++m) {
        out.errors.push_back(std::abs(trace.points[m] - root));
        out.chain_bounds.push_back(trace.bounds[m]);
    }
    out.classification = classify_decay(out.errors, 4.0 * std::numeric_limits<double>::epsilon() * root);
    return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

} // namespace detail

/// n, observed, factorial_bound, geometric_bound, euler_matched. Inapplicable
/// or unavailable cells are empty.
inline void write_csv(std::ostream& os, const RateReport& r)
{
    os << "n,observed,factorial_bound,geometric_bound,euler_matched\n";
    for (const auto& row : r.rows)
        os << row.n << ',' << format_double(row.observed_error) << ',' << format_double(row.factorial_bound) << ','
           << detail::cell(row.geometric_bound) << ',' << detail::cell(row.euler_error_at_matched_cost) << '\n';
}

/// The rate columns first, then the per-iteration diagnostics.
inline void write_csv(std::ostream& os, const ConvergenceReport& r,
                      const std::vector<std::optional<double>>& euler_matched = {})
{
    os << "n,observed,factorial_bound,geometric_bound,euler_matched,chain_bound,observed_upper,step,defect,"
          "closed_form_error,tail_majorant\n";
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        const auto& row = r.rows[i];
        os << row.n << ',' << format_double(row.observed) << ',' << format_double(row.theorem_bound) << ','
           << detail::cell(row.geometric_bound) << ','
           << detail::cell(i < euler_matched.size() ? euler_matched[i] : std::nullopt) << ','
           << format_double(row.lemma_bound) << ',' << detail::cell(row.observed_upper) << ','
           << format_double(row.step) << ',' << detail::cell(row.defect) << ',' << detail::cell(row.closed_form_error)
           << ',' << format_double(row.tail_majorant) << '\n';
    }
}

} // namespace picard
