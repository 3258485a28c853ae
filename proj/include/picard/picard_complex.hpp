#pragma once

// Complex-time Picard iteration for polynomial fields on the disc |t - t0| <= alpha.

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "picard/picard_real.hpp"
#include "picard/series_solver.hpp"

namespace picard {

using cplx = std::complex<double>;

/// z' = F(t, z), z(t0) = z0 with F polynomial, on the polydisc
/// {|t - t0| <= a} x {max_k |z_k - z0_k| <= b}. The norm is the max norm.
struct ComplexIVProblem {
    cplx t0{0.0, 0.0};
    ComplexVec z0;
    double a = 1.0;
    double b = 1.0;
    PolyField<cplx> rhs;
    double lipschitz = 0.0;
    double sup_bound = 0.0;
    std::optional<double> alpha_override;

    Eigen::Index dim() const { return z0.size(); }
    ComplexVec F(cplx t, const ComplexVec& z) const { return rhs(t, z); }

    double alpha() const
    {
        if (alpha_override)
            return *alpha_override;
        if (sup_bound == 0.0)
            return a;
        return compute_alpha(a, b, sup_bound);
    }
};

inline void validate(const ComplexIVProblem& p)
{
    auto require = [](bool ok, const char* msg) {
        if (!ok)
            throw std::invalid_argument(msg);
    };
    require(p.z0.size() > 0, "z0: must be nonempty");
    require(std::isfinite(p.a) && p.a > 0.0, "a: must be positive");
    require(std::isfinite(p.b) && p.b > 0.0, "b: must be positive");
    require(std::isfinite(p.lipschitz) && p.lipschitz >= 0.0, "L: must be nonnegative");
    require(std::isfinite(p.sup_bound) && p.sup_bound >= 0.0, "M: must be nonnegative");
    require(p.rhs.dim() == p.z0.size(), "rhs: one component per entry of z0");
    for (const auto& comp : p.rhs.components)
        for (const auto& mono : comp)
            require(mono.t_pow >= 0 && mono.y_pows.size() == static_cast<std::size_t>(p.z0.size()),
                    "rhs: monomial exponents do not match the dimension");
    if (p.alpha_override)
        require(*p.alpha_override > 0.0 && *p.alpha_override <= p.a, "alpha: override must lie in (0, a]");
}

struct PolydiscBounds {
    double lipschitz = 0.0;
    double sup_bound = 0.0;
};

/// Coefficient majorants of ||F|| and of the max-norm Lipschitz constant on the
/// polydisc: every |t| and |z_k| is replaced by its largest modulus there.
inline PolydiscBounds majorant_bounds(const ComplexIVProblem& p)
{
    const double t_rad = std::abs(p.t0) + p.a;
    std::vector<double> z_rad(static_cast<std::size_t>(p.dim()));
    for (Eigen::Index k = 0; k < p.dim(); ++k)
        z_rad[static_cast<std::size_t>(k)] = std::abs(p.z0[k]) + p.b;

    PolydiscBounds out;
    for (const auto& comp : p.rhs.components) {
        double m = 0.0;
        std::vector<double> partial(z_rad.size(), 0.0);
        for (const auto& mono : comp) {
            const double base = std::abs(mono.coef) * std::pow(t_rad, mono.t_pow);
            double value = base;
            for (std::size_t k = 0; k < z_rad.size(); ++k)
                value *= std::pow(z_rad[k], mono.y_pows[k]);
            m += value;
            for (std::size_t k = 0; k < z_rad.size(); ++k) {
                if (mono.y_pows[k] == 0)
                    continue;
                double d = base * mono.y_pows[k] * std::pow(z_rad[k], mono.y_pows[k] - 1);
                for (std::size_t i = 0; i < z_rad.size(); ++i)
                    if (i != k)
                        d *= std::pow(z_rad[i], mono.y_pows[i]);
                partial[k] += d;
            }
        }
        double row = 0.0;
        for (double d : partial)
            row += d;
        out.sup_bound = std::max(out.sup_bound, round_up(m, 4));
        out.lipschitz = std::max(out.lipschitz, round_up(row, 4));
    }
    return out;
}

inline SeriesContext<cplx> series_context(const ComplexIVProblem& p, std::size_t k_max = 64)
{
    return {p.t0, p.z0, p.alpha(), p.lipschitz, k_max, NormKind::max};
}

/// Certified sup of ||z - z0|| over the closed disc.
inline double ball_excursion(const ComplexIVProblem& p, const TaylorFunctionC& z)
{
    return coefficient_majorant(shift_down(z, 1), p.alpha(), NormKind::max) * p.alpha() + z.tail_majorant;
}

/// P z, termwise. Warns through `diag` when the image cannot be certified to
/// stay in the b-ball.
inline TaylorFunctionC picard_apply_series(const ComplexIVProblem& p, const TaylorFunctionC& z, std::size_t k_max = 64,
                                           Diagnostics* diag = nullptr)
{
    auto out = picard_series(p.rhs, series_context(p, k_max), z);
    if (diag) {
        const double excursion = ball_excursion(p, out);
        if (excursion > p.b * (1.0 + 1e-12))
            diag->warn("b-ball certification failed: majorant " + std::to_string(excursion) + " > b");
    }
    return out;
}

struct DiscNorm {
    double lower = 0.0;
    double upper = 0.0;
    /// false when z - w has a nonzero coefficient below order j; then upper is
    /// infinite and lower is the largest quotient seen on shrinking circles.
    bool in_level = true;
};

/// d_j(z, w) over the closed disc of radius alpha: boundary samples below,
/// coefficient majorant above.
inline DiscNorm sup_norm_disc(const TaylorFunctionC& z, const TaylorFunctionC& w, Level j, double alpha,
                              std::size_t samples = 360)
{
    if (z.dim() != w.dim())
        throw std::invalid_argument("sup_norm_disc: dimension mismatch");
    const auto m = series_metric(z, w, j, alpha, NormKind::max, samples);
    if (m.finite)
        return {m.lower, m.upper, true};

    DiscNorm out{0.0, std::numeric_limits<double>::infinity(), false};
    const auto e = difference(z, w);
    double radius = alpha;
    for (int r = 0; r < 24; ++r, radius *= 0.5) {
        const double scale = std::pow(radius, static_cast<double>(j));
        out.lower = std::max(out.lower, sup_over_domain<cplx>(
                                            [&](cplx s) { return norm(e(s), NormKind::max) / scale; }, radius,
                                            samples));
    }
    return out;
}

struct ComplexSolveOptions {
    std::size_t n_max = 12;
    /// Reference iterate; 0 means n_max + 8.
    std::size_t n_ref = 0;
    std::size_t k_max = 64;
    std::size_t samples = 360;
    double kappa_scale = 1.0;
    double tol = 1e-13;
    std::function<ComplexVec(cplx)> closed_form;
};

inline ConvergenceReport solve_complex(const ComplexIVProblem& p, const TaylorFunctionC& z_start,
                                       const ComplexSolveOptions& opt = {})
{
    validate(p);
    SeriesSolveOptions<cplx> so;
    so.n_max = opt.n_max;
    so.n_ref = opt.n_ref;
    so.kappa_scale = opt.kappa_scale;
    so.tol = opt.tol;
    so.samples = opt.samples;
    if (opt.closed_form)
        so.closed_form = opt.closed_form;
    so.b = p.b;
    so.sup_bound = p.sup_bound;
    auto report = solve_series(p.rhs, series_context(p, opt.k_max), z_start, so);
    report.mode = "complex";

    const auto maj = majorant_bounds(p);
    if (maj.sup_bound > p.sup_bound * (1.0 + 1e-12))
        report.warnings.push_back("coefficient majorant of ||F|| on the polydisc (" + std::to_string(maj.sup_bound) +
                                  ") exceeds M");
    return report;
}

inline ConvergenceReport solve_complex(const ComplexIVProblem& p, const ComplexSolveOptions& opt = {})
{
    return solve_complex(p, TaylorFunctionC::constant(p.z0), opt);
}

} // namespace picard
