#pragma once

#include <cmath>
#include <cstdio>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace picard {

struct ConvergenceRow {
    std::size_t n = 0;
    /// d_0(y^n, reference): sampled sup for closed-form references, exact
    /// node sup on the grid backend.
    double observed = 0.0;
    /// Certified upper bound on d_0(y^n, y^inf) (series backends only).
    std::optional<double> observed_upper;
    /// e^{alpha L} (alpha L)^n M / n!
    double theorem_bound = 0.0;
    /// C prod_{k<=n} alpha kappa_k * d_0(y^1, y^0), from the chain engine.
    double lemma_bound = 0.0;
    /// (alpha L)^n / (1 - alpha L) * d_0(y^1, y^0), when alpha L < 1.
    std::optional<double> geometric_bound;
    /// d_0(y^{n+1}, y^n)
    double step = 0.0;
    /// C_n(f, y^n); absent where the level sits below the backend's resolution.
    std::optional<double> defect;
    /// sup ||y^n - exact||, when a closed form is known and is not the reference.
    std::optional<double> closed_form_error;
    double tail_majorant = 0.0;
};

struct ConvergenceReport {
    std::string mode;
    std::string reference;
    double alpha = 0.0;
    double lipschitz = 0.0;
    double bound_m = 0.0;
    double series_constant = 0.0;
    double first_step = 0.0;
    /// The M-form bound is only implied when y^0 = y0 and alpha <= 1.
    bool theorem_form_applicable = false;
    std::vector<ConvergenceRow> rows;
    std::vector<std::string> violations;
    std::vector<std::string> warnings;

    bool bound_violation() const { return !violations.empty(); }
};

/// 17 significant digits: round-trips every double.
inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// e^{alpha L} (alpha L)^n M / n!, accumulated as a product to avoid overflow.
inline double theorem_bound(double alpha, double lipschitz, double bound_m, std::size_t n)
{
    const double al = alpha * lipschitz;
    double v = std::exp(al) * bound_m;
    for (std::size_t k = 1; k <= n; ++k)
        v *= al / static_cast<double>(k);
    return v;
}

/// (alpha L)^n / (1 - alpha L) * first_step, or nullopt when alpha L >= 1.
inline std::optional<double> geometric_bound(double alpha, double lipschitz, std::size_t n, double first_step)
{
    const double al = alpha * lipschitz;
    if (!(al < 1.0))
        return std::nullopt;
    return std::pow(al, static_cast<double>(n)) / (1.0 - al) * first_step;
}

} // namespace picard
