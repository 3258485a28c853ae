#pragma once

// Real-time Picard iteration y -> y0 + int_{t0}^{t} f(s, y(s)) ds on the chain
// H_0 ⊃ H_1 ⊃ ... where H_j holds the curves whose Picard defect is O(|t - t0|^j)
// and d_j(x, y) = sup_{t != t0} ||x(t) - y(t)|| / |t - t0|^j.
//
// Two backends: sampled curves on a uniform grid (any continuous rhs) and
// truncated power series (polynomial rhs, no quadrature error).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "picard/chain_fixpoint.hpp"
#include "picard/grid.hpp"
#include "picard/report.hpp"
#include "picard/series.hpp"
#include "picard/series_solver.hpp"

namespace picard {

struct Diagnostics {
    std::vector<std::string> warnings;
    void warn(std::string message) { warnings.push_back(std::move(message)); }
};

/// alpha = min(a, b / M).
inline double compute_alpha(double a, double b, double bound_m)
{
    if (!(a > 0.0) || !(b > 0.0) || !(bound_m > 0.0) || !std::isfinite(a) || !std::isfinite(b) ||
        !std::isfinite(bound_m))
        throw std::domain_error("compute_alpha: a, b and M must be positive and finite");
    return std::min(a, b / bound_m);
}

/// Initial value problem y' = f(t, y), y(t0) = y0 on R = {|t - t0| <= a, ||y - y0|| <= b}.
struct IVProblem {
    double t0 = 0.0;
    RealVec y0;
    double a = 1.0;
    double b = 1.0;
    std::function<RealVec(double, const RealVec&)> rhs;
    /// Polynomial form of the rhs; required by the series backend.
    std::optional<PolyField<double>> poly;
    double lipschitz = 0.0; ///< L
    double sup_bound = 0.0; ///< M
    /// Interval radius certified by a confinement argument (the iterates are
    /// known to stay in the b-ball) instead of min(a, b / M). Must not exceed a.
    std::optional<double> alpha_override;
    NormKind norm = NormKind::euclidean;

    Eigen::Index dim() const { return y0.size(); }

    RealVec f(double t, const RealVec& y) const
    {
        if (rhs)
            return rhs(t, y);
        if (poly)
            return (*poly)(t, y);
        throw std::logic_error("IVProblem without a right-hand side");
    }

    /// A zero sup bound forces f = 0 on R; the interval is then all of [t0 - a, t0 + a].
    double alpha() const
    {
        if (alpha_override)
            return *alpha_override;
        if (sup_bound == 0.0)
            return a;
        return compute_alpha(a, b, sup_bound);
    }
};

/// Throws std::invalid_argument naming the offending field.
inline void validate(const IVProblem& p)
{
    auto require = [](bool ok, const char* msg) {
        if (!ok)
            throw std::invalid_argument(msg);
    };
    require(p.y0.size() > 0, "y0: must be a nonempty vector");
    require(std::isfinite(p.t0), "t0: must be finite");
    require(p.a > 0.0 && std::isfinite(p.a), "a: must be positive");
    require(p.b > 0.0 && std::isfinite(p.b), "b: must be positive");
    require(p.lipschitz >= 0.0 && std::isfinite(p.lipschitz), "L: must be nonnegative");
    require(p.sup_bound >= 0.0 && std::isfinite(p.sup_bound), "M: must be nonnegative");
    require(static_cast<bool>(p.rhs) || p.poly.has_value(), "rhs: missing");
    if (p.poly)
        require(p.poly->dim() == p.dim(), "rhs: dimension differs from y0");
    if (p.alpha_override)
        require(*p.alpha_override > 0.0 && *p.alpha_override <= p.a, "alpha: must lie in (0, a]");
}

namespace detail {

// Deterministic sample of the rectangle R: visit(t, y) on a tensor grid in t
// and a grid (d = 1) or seeded cloud (d > 1) in the closed b-ball.
template <class Visit>
void sample_rectangle(const IVProblem& p, std::size_t density, Visit&& visit)
{
    density = std::max<std::size_t>(density, 3);
    const Eigen::Index d = p.dim();
    std::vector<RealVec> ys;
    if (d == 1) {
        for (std::size_t i = 0; i < density; ++i) {
            const double u = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(density - 1);
            ys.push_back(p.y0 + RealVec::Constant(1, p.b * u));
        }
    } else {
        std::mt19937_64 rng(0x5eed);
        std::normal_distribution<double> gauss;
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        ys.push_back(p.y0);
        for (std::size_t i = 0; i < 4 * density; ++i) {
            RealVec dir(d);
            for (Eigen::Index k = 0; k < d; ++k)
                dir[k] = gauss(rng);
            dir /= std::max(norm(dir, p.norm), 1e-300);
            const double r = (i % 4 == 0) ? p.b : p.b * std::pow(unif(rng), 1.0 / static_cast<double>(d));
            ys.push_back(p.y0 + r * dir);
        }
    }
    for (std::size_t i = 0; i < density; ++i) {
        const double t = p.t0 - p.a + 2.0 * p.a * static_cast<double>(i) / static_cast<double>(density - 1);
        visit(t, ys);
    }
}

} // namespace detail

struct ConstantEstimate {
    double lipschitz = 0.0;
    double sup_bound = 0.0;
};

/// Sampled estimates of L and M on R, each inflated by `safety`. The problem's
/// own L and M are ignored here; callers give user-supplied values precedence.
inline ConstantEstimate estimate_L_M(const IVProblem& p, std::size_t grid_density = 201, double safety = 1.01)
{
    double max_f = 0.0;
    double max_q = 0.0;
    detail::sample_rectangle(p, grid_density, [&](double t, const std::vector<RealVec>& ys) {
        std::vector<RealVec> fs;
        fs.reserve(ys.size());
        for (const auto& y : ys) {
            fs.push_back(p.f(t, y));
            max_f = std::max(max_f, norm(fs.back(), p.norm));
        }
        auto quotient = [&](std::size_t i, std::size_t k) {
            const double dy = norm(RealVec(ys[i] - ys[k]), p.norm);
            if (dy > 0.0)
                max_q = std::max(max_q, norm(RealVec(fs[i] - fs[k]), p.norm) / dy);
        };
        if (p.dim() == 1) {
            for (std::size_t i = 1; i < ys.size(); ++i)
                quotient(i, i - 1);
        } else {
            // nearby pairs resolve the local Lipschitz constant; far pairs add coverage
            const double delta = 1e-4 * p.b;
            for (std::size_t i = 0; i < ys.size(); ++i) {
                for (Eigen::Index k = 0; k < p.dim(); ++k) {
                    RealVec y2 = ys[i];
                    y2[k] += (norm(RealVec(ys[i] - p.y0), p.norm) < p.b - delta) ? delta : -delta;
                    const double dy = norm(RealVec(y2 - ys[i]), p.norm);
                    max_q = std::max(max_q, norm(RealVec(p.f(t, y2) - fs[i]), p.norm) / dy);
                }
                quotient(i, (i * 7 + 3) % ys.size());
            }
        }
    });
    return {max_q * safety, max_f * safety};
}

/// M = 0 claims f vanishes on R; checked by sampling before any solve.
inline void validate_degenerate(const IVProblem& p)
{
    if (p.sup_bound == 0.0 && estimate_L_M(p, 21, 1.0).sup_bound > 0.0)
        throw std::invalid_argument("M: zero, but the right-hand side does not vanish on R");
}

struct ConstantsCheck {
    double sampled_sup = 0.0;
    double sampled_lipschitz = 0.0;
    bool sup_ok = true;
    bool lipschitz_ok = true;
};

/// Sampled check that ||f|| <= M (1 + tol_m) and the Lipschitz quotient is
/// <= L (1 + tol_l) on R.
inline ConstantsCheck check_constants(const IVProblem& p, std::size_t density = 101, double tol_m = 1e-9,
                                      double tol_l = 1e-6)
{
    const auto est = estimate_L_M(p, density, 1.0);
    ConstantsCheck c{est.sup_bound, est.lipschitz, true, true};
    c.sup_ok = est.sup_bound <= p.sup_bound * (1.0 + tol_m) + 1e-300;
    c.lipschitz_ok = est.lipschitz <= p.lipschitz * (1.0 + tol_l) + 1e-300;
    return c;
}

/// C_j(f, y) together with the level it was taken at.
struct DefectConstant {
    Level j = 0;
    double value = 0.0; ///< certified side (series majorant) or node sup (grid)
    double lower = 0.0; ///< sampled side
    bool finite = true;
};

/// e^{alpha L} (alpha L)^n M / n!
inline double theorem_bound(const IVProblem& p, std::size_t n)
{
    return theorem_bound(p.alpha(), p.lipschitz, p.sup_bound, n);
}

// ---------------------------------------------------------------------------
// Grid backend

/// Picard image by cumulative quadrature outward from t0. Images that leave the
/// b-ball through quadrature noise are pulled back onto its boundary.
inline GridFunction picard_apply(const IVProblem& p, const GridFunction& y,
                                 QuadratureRule rule = QuadratureRule::cubic, Diagnostics* diag = nullptr)
{
    const UniformGrid& grid = y.grid;
    Eigen::MatrixXd integrand(p.dim(), grid.size());
    for (std::ptrdiff_t k = -grid.n; k <= grid.n; ++k)
        integrand.col(grid.column(k)) = p.f(grid.node(k), y.value(k));

    GridFunction out{grid, p.y0, cumulative_integral(grid, integrand, rule, Orientation::signed_ds)};
    std::size_t clamped = 0;
    for (Eigen::Index c = 0; c < grid.size(); ++c) {
        const double r = norm(RealVec(out.offsets.col(c)), p.norm);
        if (r > p.b * (1.0 + 1e-12)) {
            out.offsets.col(c) *= p.b / r;
            ++clamped;
        }
    }
    if (clamped > 0 && diag)
        diag->warn("picard_apply: " + std::to_string(clamped) + " nodes clamped to the b-ball");
    return out;
}

/// sup over nodes t != t0 of ||x(t) - y(t)|| / |t - t0|^j; j = 0 is the uniform metric.
inline double metric_dj(const GridFunction& x, const GridFunction& y, Level j, NormKind kind = NormKind::euclidean)
{
    if (!(x.grid == y.grid) || x.dim() != y.dim())
        throw std::invalid_argument("metric_dj: incompatible grid functions");
    const UniformGrid& grid = x.grid;
    const RealVec shift = x.y0 - y.y0;
    double best = 0.0;
    for (std::ptrdiff_t k = -grid.n; k <= grid.n; ++k) {
        if (k == 0)
            continue;
        const double num = norm(RealVec(shift + x.offsets.col(grid.column(k)) - y.offsets.col(grid.column(k))), kind);
        best = std::max(best, num / std::pow(std::abs(grid.node(k) - grid.t0), static_cast<double>(j)));
    }
    return best;
}

/// Heuristic finiteness of the level-j quotient: it must not keep growing like
/// |t - t0|^{-1} or faster over the innermost nodes (growth ratio > threshold
/// per halving of |t - t0|). Differences at rounding level count as zero.
inline bool grid_quotient_bounded(const GridFunction& x, const GridFunction& y, Level j,
                                  NormKind kind = NormKind::euclidean, double threshold = 1.5)
{
    if (j == 0)
        return true;
    const UniformGrid& grid = x.grid;
    if (grid.n < 4)
        return true;
    const double noise = 1e3 * std::numeric_limits<double>::epsilon() *
                         (1.0 + std::max(x.offsets.cwiseAbs().maxCoeff(), y.offsets.cwiseAbs().maxCoeff()));
    const RealVec shift = x.y0 - y.y0;
    for (int side : {-1, 1}) {
        auto diff = [&](std::ptrdiff_t k) {
            return norm(RealVec(shift + x.offsets.col(grid.column(side * k)) - y.offsets.col(grid.column(side * k))),
                        kind);
        };
        auto quotient = [&](std::ptrdiff_t k) {
            return diff(k) / std::pow(static_cast<double>(k) * grid.h(), static_cast<double>(j));
        };
        if (diff(1) <= noise)
            continue;
        if (quotient(1) > threshold * quotient(2) && quotient(2) > threshold * quotient(4))
            return false;
    }
    return true;
}

inline DefectConstant picard_defect(const IVProblem& p, const GridFunction& y, Level j,
                                    QuadratureRule rule = QuadratureRule::cubic)
{
    const GridFunction py = picard_apply(p, y, rule);
    const double v = metric_dj(py, y, j, p.norm);
    return {j, v, v, grid_quotient_bounded(py, y, j, p.norm)};
}

// ---------------------------------------------------------------------------
// Series backend

inline SeriesContext<double> series_context(const IVProblem& p, std::size_t k_max = 64)
{
    if (!p.poly)
        throw std::invalid_argument("series backend needs a polynomial right-hand side");
    return {p.t0, p.y0, p.alpha(), p.lipschitz, k_max, p.norm};
}

inline PolyFunction picard_apply(const IVProblem& p, const PolyFunction& y, std::size_t k_max = 64)
{
    return picard_series(*p.poly, series_context(p, k_max), y);
}

inline MetricBounds metric_dj(const IVProblem& p, const PolyFunction& x, const PolyFunction& y, Level j,
                              std::size_t samples = 4096)
{
    return series_metric(x, y, j, p.alpha(), p.norm, samples);
}

inline DefectConstant picard_defect(const IVProblem& p, const PolyFunction& y, Level j, std::size_t k_max = 64)
{
    const auto m = metric_dj(p, picard_apply(p, y, k_max), y, j);
    return {j, m.upper, m.lower, m.finite};
}

/// (C_j(f, x) + C_j(f, y)) (1 + L^j (e^{L alpha} - 1)); +inf when either curve
/// is outside H_j.
inline double finiteness_bound(const IVProblem& p, double defect_x, double defect_y, Level j)
{
    const double L = p.lipschitz;
    return (defect_x + defect_y) * (1.0 + std::pow(L, static_cast<double>(j)) * std::expm1(L * p.alpha()));
}

template <class Fn>
double finiteness_bound(const IVProblem& p, const Fn& x, const Fn& y, Level j)
{
    const auto cx = picard_defect(p, x, j);
    const auto cy = picard_defect(p, y, j);
    if (!cx.finite || !cy.finite)
        return std::numeric_limits<double>::infinity();
    return finiteness_bound(p, cx.value, cy.value, j);
}

// ---------------------------------------------------------------------------
// Solvers

struct SolveOptions {
    std::size_t n_max = 10;
    QuadratureRule rule = QuadratureRule::cubic;
    std::size_t k_max = 64;
    /// Reference iterate index is n_max + ref_extra when no closed form is used.
    std::size_t ref_extra = 8;
    /// Test hook: scales the contraction factors handed to the chain engine.
    double kappa_scale = 1.0;
    /// Truncation tolerance for the series constant C.
    double tol = 1e-13;
    /// Exact solution, when known.
    std::function<RealVec(double)> closed_form;
    std::size_t samples = 4096;
};

/// Exact backend: Picard iterates as truncated power series.
inline ConvergenceReport solve_ivp(const IVProblem& p, const PolyFunction& y_start, const SolveOptions& opt = {})
{
    validate(p);
    validate_degenerate(p);
    SeriesSolveOptions<double> so;
    so.n_max = opt.n_max;
    so.ref_extra = opt.ref_extra;
    so.kappa_scale = opt.kappa_scale;
    so.tol = opt.tol;
    so.samples = opt.samples;
    if (opt.closed_form)
        so.closed_form = opt.closed_form;
    so.b = p.b;
    so.sup_bound = p.sup_bound;
    auto report = solve_series(*p.poly, series_context(p, opt.k_max), y_start, so);
    report.mode = "real-exact";
    return report;
}

inline ConvergenceReport solve_ivp(const IVProblem& p, const SolveOptions& opt = {})
{
    return solve_ivp(p, PolyFunction::constant(p.y0), opt);
}

/// Grid backend. The reference is the grid's own iterate at n_max + ref_extra,
/// so the measured decay is that of the discrete operator; the closed form,
/// when given, is reported separately as discretisation-inclusive error.
inline ConvergenceReport solve_ivp(const IVProblem& p, const GridFunction& y_start, const SolveOptions& opt = {})
{
    validate(p);
    validate_degenerate(p);
    const double alpha = p.alpha();
    const double L = p.lipschitz;
    Diagnostics diag;

    ConvergenceReport report;
    report.mode = "real-grid";
    report.alpha = alpha;
    report.lipschitz = L;
    report.bound_m = p.sup_bound;

    auto apply = [&](const GridFunction& y) { return picard_apply(p, y, opt.rule, &diag); };

    std::vector<GridFunction> iterates;
    std::vector<double> lemma;
    const std::size_t n_ref = opt.n_max + std::max<std::size_t>(opt.ref_extra, 1);

    ChainSpec<GridFunction> spec;
    static_cast<ChainConstants&>(spec) = picard_chain_constants(alpha, L, opt.kappa_scale);
    spec.metric = [&](Level j, const GridFunction& x, const GridFunction& y) -> std::optional<double> {
        if (!grid_quotient_bounded(x, y, j, p.norm))
            return std::nullopt;
        return metric_dj(x, y, j, p.norm);
    };
    spec.map = apply;
    spec.member = [&](Level j, const GridFunction& y) {
        return grid_quotient_bounded(picard_apply(p, y, opt.rule), y, j, p.norm);
    };
    // quotients beyond level 2 sink into rounding noise at practical N
    spec.membership_depth = 2;

    if (L == 0.0) {
        // f does not depend on y: P y is the solution for every y.
        iterates.push_back(y_start);
        iterates.push_back(apply(y_start));
        report.first_step = metric_dj(iterates[1], iterates[0], 0, p.norm);
        report.series_constant = 1.0;
        for (std::size_t n = 2; n <= n_ref + 1; ++n)
            iterates.push_back(iterates[1]);
        lemma.assign(opt.n_max + 1, 0.0);
        lemma[0] = report.first_step;
    } else {
        auto trace = iterate(spec, y_start, StopRule{opt.n_max, 0.0}, 0, opt.tol);
        report.series_constant = trace.series_constant;
        report.first_step = trace.first_step;
        lemma = trace.bounds;
        iterates = std::move(trace.points);
        while (iterates.size() < n_ref + 2)
            iterates.push_back(apply(iterates.back()));
    }
    const GridFunction& reference = iterates[n_ref];
    report.reference = "grid iterate n=" + std::to_string(n_ref);

    const bool constant_start = y_start.offsets.isZero(0.0);
    report.theorem_form_applicable = constant_start && alpha <= 1.0;
    const double floor = 1e-13 * (1.0 + norm(p.y0, p.norm));
    constexpr double slack = 1e-3;

    for (std::size_t n = 0; n < lemma.size(); ++n) {
        ConvergenceRow row;
        row.n = n;
        row.observed = sup_difference(iterates[n], reference, p.norm);
        row.theorem_bound = theorem_bound(alpha, L, p.sup_bound, n);
        row.lemma_bound = lemma[n];
        row.geometric_bound = geometric_bound(alpha, L, n, report.first_step);
        row.step = metric_dj(iterates[n + 1], iterates[n], 0, p.norm);
        if (n <= spec.membership_depth)
            row.defect = metric_dj(iterates[n + 1], iterates[n], n, p.norm);
        if (opt.closed_form) {
            double err = 0.0;
            const UniformGrid& grid = iterates[n].grid;
            for (std::ptrdiff_t k = -grid.n; k <= grid.n; ++k)
                err = std::max(err, norm(RealVec(iterates[n].value(k) - opt.closed_form(grid.node(k))), p.norm));
            row.closed_form_error = err;
        }
        if (row.observed > row.lemma_bound * (1.0 + slack) + floor)
            report.violations.push_back("n=" + std::to_string(n) + ": observed " + std::to_string(row.observed) +
                                        " exceeds chain bound " + std::to_string(row.lemma_bound));
        if (report.theorem_form_applicable && row.observed > row.theorem_bound * (1.0 + slack) + floor)
            report.violations.push_back("n=" + std::to_string(n) + ": observed exceeds e^{aL}(aL)^n M/n!");
        report.rows.push_back(row);
    }
    report.warnings = std::move(diag.warnings);
    return report;
}

} // namespace picard
