#pragma once

// Picard iteration on truncated power series, shared by the real exact backend
// and the complex-time solver.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "picard/chain_fixpoint.hpp"
#include "picard/report.hpp"
#include "picard/series.hpp"

namespace picard {

/// alpha_j = alpha, kappa_j = L / j (scaled by a test hook); the tail is
/// nonincreasing from j = 1, so C = S(0) = e^{alpha L}.
inline ChainConstants picard_chain_constants(double alpha, double lipschitz, double kappa_scale = 1.0)
{
    ChainConstants c;
    c.alpha = [alpha](Level) { return alpha; };
    c.kappa = [lipschitz, kappa_scale](Level j) { return kappa_scale * lipschitz / static_cast<double>(j); };
    c.tail = TailModel::monotone(1);
    return c;
}

template <class Scalar>
struct SeriesSolveOptions {
    std::size_t n_max = 10;
    std::size_t ref_extra = 8;
    /// Explicit reference index; 0 means n_max + ref_extra.
    std::size_t n_ref = 0;
    double kappa_scale = 1.0;
    /// Truncation tolerance for the series constant C.
    double tol = 1e-13;
    std::size_t samples = 4096;
    /// Exact solution as a function of absolute time, when known.
    std::function<Vec<Scalar>(Scalar)> closed_form;
    double b = 1.0;
    double sup_bound = 0.0;
};

template <class Scalar>
ConvergenceReport solve_series(const PolyField<Scalar>& field, const SeriesContext<Scalar>& ctx,
                               const TaylorSeries<Scalar>& start, const SeriesSolveOptions<Scalar>& opt)
{
    using Series = TaylorSeries<Scalar>;
    const double alpha = ctx.alpha;
    const double L = ctx.lipschitz;
    const NormKind kind = ctx.norm;

    if (start.coeffs.empty() || start.dim() != ctx.y0.size() || !(start.coeffs[0] - ctx.y0).isZero(0.0))
        throw std::invalid_argument("solve: starting series must have c_0 = y0");

    ConvergenceReport report;
    report.alpha = alpha;
    report.lipschitz = L;
    report.bound_m = opt.sup_bound;

    auto apply = [&](const Series& y) { return picard_series(field, ctx, y); };
    auto upper = [&](const Series& x, const Series& y, Level j) {
        return series_metric(x, y, j, alpha, kind, 0);
    };

    ChainSpec<Series> spec;
    static_cast<ChainConstants&>(spec) = picard_chain_constants(alpha, L, opt.kappa_scale);
    spec.metric = [&](Level j, const Series& x, const Series& y) -> std::optional<double> {
        const auto m = upper(x, y, j);
        if (!m.finite)
            return std::nullopt;
        return m.upper;
    };
    spec.map = apply;
    spec.member = [&](Level j, const Series& y) {
        const Series py = apply(y);
        const double scale = std::max({coefficient_scale(py, kind), coefficient_scale(y, kind), 1e-300});
        return vanishes_to_order(difference(py, y), j, kind, scale);
    };

    const std::size_t n_ref = opt.n_ref ? opt.n_ref : opt.n_max + std::max<std::size_t>(opt.ref_extra, 1);
    std::vector<Series> iterates;
    std::vector<double> lemma;
    double ref_error = 0.0;

    if (L == 0.0) {
        iterates = {start, apply(start)};
        report.first_step = upper(iterates[1], iterates[0], 0).upper;
        report.series_constant = 1.0;
        lemma.assign(opt.n_max + 1, 0.0);
        lemma[0] = report.first_step;
    } else {
        auto trace = iterate(spec, start, StopRule{opt.n_max, 0.0}, 0, opt.tol);
        report.series_constant = trace.series_constant;
        report.first_step = trace.first_step;
        lemma = trace.bounds;
        iterates = std::move(trace.points);
        ref_error = a_priori_bound(spec, 0, n_ref, trace.first_step, trace.series_constant);
    }
    while (iterates.size() < std::max(n_ref, opt.n_max + 1) + 1)
        iterates.push_back(apply(iterates.back()));

    const Series& reference = iterates[n_ref];
    report.reference = opt.closed_form ? "closed-form" : "series iterate n=" + std::to_string(n_ref);

    bool constant_start = true;
    for (std::size_t m = 1; m < start.coeffs.size(); ++m)
        constant_start = constant_start && start.coeffs[m].isZero(0.0);
    report.theorem_form_applicable = constant_start && alpha <= 1.0;

    const double floor = 256.0 * std::numeric_limits<double>::epsilon() * (1.0 + norm(ctx.y0, kind));
    constexpr double slack = 1e-9;

    for (std::size_t n = 0; n <= opt.n_max; ++n) {
        const Series& yn = iterates[n];
        ConvergenceRow row;
        row.n = n;
        if (opt.closed_form) {
            row.observed = sup_over_domain<Scalar>(
                [&](Scalar s) { return norm(Vec<Scalar>(yn(s) - opt.closed_form(ctx.t0 + s)), kind); }, alpha,
                opt.samples);
        } else {
            row.observed = series_metric(yn, reference, 0, alpha, kind, opt.samples).lower;
        }
        row.observed_upper = round_up(upper(yn, reference, 0).upper + ref_error, 2);
        row.theorem_bound = theorem_bound(alpha, L, opt.sup_bound, n);
        row.lemma_bound = lemma[n];
        row.geometric_bound = geometric_bound(alpha, L, n, report.first_step);
        row.step = upper(iterates[n + 1], yn, 0).upper;
        if (const auto c = upper(iterates[n + 1], yn, n); c.finite)
            row.defect = c.upper;
        row.tail_majorant = yn.tail_majorant;

        const double excursion = sup_over_domain<Scalar>(
            [&](Scalar s) { return norm(Vec<Scalar>(yn(s) - ctx.y0), kind); }, alpha, opt.samples);
        if (excursion > opt.b * (1.0 + 1e-12) + yn.tail_majorant)
            report.warnings.push_back("iterate " + std::to_string(n) + " leaves the b-ball (sup " +
                                      std::to_string(excursion) + ")");
        if (row.tail_majorant > row.theorem_bound)
            report.warnings.push_back("iterate " + std::to_string(n) +
                                      ": truncation tail exceeds the theorem bound; raise K_max");

        if (row.observed > row.lemma_bound * (1.0 + slack) + floor)
            report.violations.push_back("n=" + std::to_string(n) + ": observed " + std::to_string(row.observed) +
                                        " exceeds chain bound " + std::to_string(row.lemma_bound));
        if (report.theorem_form_applicable && row.observed > row.theorem_bound * (1.0 + slack) + floor)
            report.violations.push_back("n=" + std::to_string(n) + ": observed exceeds e^{aL}(aL)^n M/n!");
        report.rows.push_back(std::move(row));
    }
    return report;
}

} // namespace picard
