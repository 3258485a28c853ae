#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "picard/picard_real.hpp"
#include "support.hpp"

using namespace picard;

namespace {

const PolyField<double> kLinear{{{{1.0, 0, {1}}}}};

IVProblem linear_problem(double a, double b, double L, double M)
{
    IVProblem p;
    p.y0 = RealVec::Ones(1);
    p.a = a;
    p.b = b;
    p.poly = kLinear;
    p.lipschitz = L;
    p.sup_bound = M;
    return p;
}

// y' = y, alpha = 1 by confinement: every iterate stays below e on [-1, 1].
IVProblem exp_problem()
{
    auto p = linear_problem(1.0, std::exp(1.0) - 1.0, 1.0, std::exp(1.0));
    p.alpha_override = 1.0;
    return p;
}

IVProblem exp_half() { return linear_problem(0.5, 1.0, 1.0, 2.0); }

PolyFunction poly(std::initializer_list<double> cs)
{
    PolyFunction f;
    for (double c : cs)
        f.coeffs.push_back(RealVec::Constant(1, c));
    return f;
}

double exp_tail(int n)
{
    double partial = 0.0, term = 1.0;
    for (int k = 0; k <= n; ++k) {
        partial += term;
        term /= k + 1;
    }
    return std::exp(1.0) - partial;
}

} // namespace

TEST(ComputeAlpha, Examples)
{
    EXPECT_DOUBLE_EQ(compute_alpha(1.0, 1.0, 2.0), 0.5);
    EXPECT_DOUBLE_EQ(compute_alpha(0.3, 4.0, 10.0), 0.3);
    EXPECT_DOUBLE_EQ(compute_alpha(2.0, 2.0, 1.0), 2.0);
    EXPECT_THROW(compute_alpha(0.0, 1.0, 1.0), std::domain_error);
    EXPECT_THROW(compute_alpha(1.0, -1.0, 1.0), std::domain_error);
    EXPECT_THROW(compute_alpha(1.0, 1.0, 0.0), std::domain_error);
}

TEST(Validate, NamesTheField)
{
    auto p = exp_half();
    p.b = -1.0;
    try {
        validate(p);
        FAIL() << "expected invalid_argument";
    } catch (const std::invalid_argument& e) {
        EXPECT_EQ(std::string(e.what()).rfind("b:", 0), 0u) << e.what();
    }
    p = exp_half();
    p.lipschitz = -0.1;
    EXPECT_THROW(validate(p), std::invalid_argument);
    p = exp_half();
    p.alpha_override = 0.6;
    EXPECT_THROW(validate(p), std::invalid_argument);
    p = exp_half();
    p.poly.reset();
    EXPECT_THROW(validate(p), std::invalid_argument);
    EXPECT_NO_THROW(validate(exp_half()));
}

TEST(Validate, ZeroSupBoundNeedsVanishingField)
{
    auto p = linear_problem(1.0, 1.0, 1.0, 0.0);
    EXPECT_THROW(validate_degenerate(p), std::invalid_argument);
    EXPECT_THROW(solve_ivp(p), std::invalid_argument);

    IVProblem zero = p;
    zero.poly = PolyField<double>{{{}}};
    zero.lipschitz = 0.0;
    EXPECT_NO_THROW(validate_degenerate(zero));
    EXPECT_DOUBLE_EQ(zero.alpha(), 1.0);
}

TEST(EstimateLM, LinearField)
{
    const auto est = estimate_L_M(linear_problem(1.0, 1.0, 0.0, 0.0));
    EXPECT_NEAR(est.sup_bound, 2.0 * 1.01, 1e-12);
    EXPECT_NEAR(est.lipschitz, 1.01, 1e-9);
}

TEST(EstimateLM, Sine)
{
    IVProblem p;
    p.y0 = RealVec::Zero(1);
    p.a = 1.0;
    p.b = 2.0;
    p.rhs = [](double, const RealVec& y) { return RealVec(y.array().sin()); };
    const auto est = estimate_L_M(p, 201, 1.0);
    EXPECT_NEAR(est.sup_bound, 1.0, 1e-3);
    EXPECT_NEAR(est.lipschitz, 1.0, 1e-3);
    EXPECT_LE(est.sup_bound, 1.0);
    EXPECT_LE(est.lipschitz, 1.0);
}

TEST(EstimateLM, RotationInTwoDimensions)
{
    IVProblem p;
    p.y0 = RealVec::Zero(2);
    p.y0[0] = 1.0;
    p.a = 1.0;
    p.b = 1.0;
    p.rhs = [](double, const RealVec& y) {
        RealVec out(2);
        out << -y[1], y[0];
        return out;
    };
    const auto est = estimate_L_M(p, 41, 1.0);
    EXPECT_NEAR(est.lipschitz, 1.0, 1e-9);
    EXPECT_LE(est.sup_bound, 2.0 + 1e-12);
    EXPECT_GT(est.sup_bound, 1.9);
}

TEST(CheckConstants, HonestAndUnderstated)
{
    EXPECT_TRUE(check_constants(exp_half()).sup_ok);
    EXPECT_TRUE(check_constants(exp_half()).lipschitz_ok);
    const auto low = check_constants(linear_problem(0.5, 1.0, 0.9, 1.5));
    EXPECT_FALSE(low.sup_ok);
    EXPECT_FALSE(low.lipschitz_ok);
}

TEST(TheoremBound, Examples)
{
    EXPECT_NEAR(theorem_bound(1.0, 1.0, 1.0, 5), std::exp(1.0) / 120.0, 1e-16);
    EXPECT_NEAR(theorem_bound(0.5, 1.0, 2.0, 0), 2.0 * std::exp(0.5), 1e-15);
    EXPECT_EQ(theorem_bound(1.0, 0.0, 3.0, 0), 3.0);
    EXPECT_EQ(theorem_bound(1.0, 0.0, 3.0, 2), 0.0);
    EXPECT_NEAR(theorem_bound(exp_problem(), 3), std::exp(2.0) / 6.0, 1e-14);
}

TEST(PicardApplySeries, Examples)
{
    const auto p = exp_half();
    const auto p1 = picard_apply(p, PolyFunction::constant(p.y0));
    ASSERT_EQ(p1.coeffs.size(), 2u);
    EXPECT_EQ(p1.coeffs[1][0], 1.0);
    const auto p2 = picard_apply(p, poly({1.0, 1.0}));
    ASSERT_EQ(p2.coeffs.size(), 3u);
    EXPECT_EQ(p2.coeffs[2][0], 0.5);
}

TEST(PicardApplyGrid, Examples)
{
    const auto p = exp_half();
    const UniformGrid grid{0.0, 0.5, 64};
    const auto one = GridFunction::constant(grid, p.y0);
    const auto line = picard_apply(p, one);
    for (std::ptrdiff_t k = -grid.n; k <= grid.n; ++k)
        EXPECT_NEAR(line.value(k)[0], 1.0 + grid.node(k), 1e-15);
    const auto quad = picard_apply(p, line);
    for (std::ptrdiff_t k = -grid.n; k <= grid.n; ++k) {
        const double t = grid.node(k);
        EXPECT_NEAR(quad.value(k)[0], 1.0 + t + 0.5 * t * t, 1e-15);
    }

    IVProblem zero = p;
    zero.poly = PolyField<double>{{{}}};
    const auto still = picard_apply(zero, line);
    EXPECT_EQ(still.offsets.cwiseAbs().maxCoeff(), 0.0);
}

TEST(MetricDj, GridExamples)
{
    const UniformGrid grid{0.0, 0.5, 128};
    const auto one = GridFunction::constant(grid, RealVec::Ones(1));
    const auto line = GridFunction::from_offset(grid, RealVec::Ones(1), [](double t) { return RealVec::Constant(1, t); });
    EXPECT_DOUBLE_EQ(metric_dj(line, one, 0), 0.5);
    EXPECT_DOUBLE_EQ(metric_dj(line, one, 1), 1.0);
    EXPECT_EQ(metric_dj(line, line, 3), 0.0);
    EXPECT_TRUE(grid_quotient_bounded(line, one, 1));
    EXPECT_FALSE(grid_quotient_bounded(line, one, 2));
}

TEST(MetricDj, GridIsAMetric)
{
    std::mt19937_64 rng(5);
    const auto p = exp_half();
    const UniformGrid grid{0.0, p.alpha(), 256};
    for (int trial = 0; trial < 10; ++trial) {
        const auto x = sample::to_grid(sample::random_member(p, 2, rng), grid);
        const auto y = sample::to_grid(sample::random_member(p, 2, rng), grid);
        const auto z = sample::to_grid(sample::random_member(p, 2, rng), grid);
        for (Level j = 0; j <= 2; ++j) {
            EXPECT_DOUBLE_EQ(metric_dj(x, y, j), metric_dj(y, x, j));
            EXPECT_LE(metric_dj(x, z, j), (metric_dj(x, y, j) + metric_dj(y, z, j)) * (1.0 + 1e-15));
        }
    }
}

TEST(PicardDefect, Examples)
{
    const auto p = exp_half();
    const auto line = poly({1.0, 1.0});
    // the certified side is rounded outward by a few ulps
    const auto c1 = picard_defect(p, line, 1);
    EXPECT_GE(c1.value, 0.25);
    EXPECT_NEAR(c1.value, 0.25, 1e-15);
    EXPECT_DOUBLE_EQ(c1.lower, 0.25);
    const auto c2 = picard_defect(p, line, 2);
    EXPECT_GE(c2.value, 0.5);
    EXPECT_NEAR(c2.value, 0.5, 1e-15);
    EXPECT_FALSE(picard_defect(p, line, 3).finite);

    const UniformGrid grid{0.0, 0.5, 1024};
    const auto gline = sample::to_grid(line, grid);
    EXPECT_NEAR(picard_defect(p, gline, 1).value, 0.25, 1e-13);
    EXPECT_NEAR(picard_defect(p, gline, 2).value, 0.5, 1e-12);
    EXPECT_FALSE(picard_defect(p, gline, 3).finite);
}

TEST(PicardDefect, ExactSolutionHasNoDefect)
{
    const auto p = exp_half();
    PolyFunction taylor;
    double c = 1.0;
    for (int m = 0; m <= 25; ++m) {
        taylor.coeffs.push_back(RealVec::Constant(1, c));
        c /= m + 1;
    }
    for (Level j = 0; j <= 3; ++j)
        EXPECT_LT(picard_defect(p, taylor, j).value, 1e-25) << "j=" << j;
}

TEST(FinitenessBound, Examples)
{
    const auto p = exp_half();
    const auto x = poly({1.0, 1.0});
    const auto y = poly({1.0});
    EXPECT_NEAR(finiteness_bound(p, x, y, 0), 0.625 * std::exp(0.5), 1e-14);
    EXPECT_NEAR(finiteness_bound(p, x, y, 1), 1.25 * std::exp(0.5), 1e-14);
    EXPECT_GE(finiteness_bound(p, x, y, 1), 1.25 * std::exp(0.5));
    EXPECT_TRUE(std::isinf(finiteness_bound(p, x, y, 2)));
    EXPECT_LE(metric_dj(p, x, y, 0).upper, finiteness_bound(p, x, y, 0));
    EXPECT_LE(metric_dj(p, x, y, 1).upper, finiteness_bound(p, x, y, 1));
}

TEST(SolveExact, ExpMatchesTaylorTail)
{
    SolveOptions opt;
    opt.n_max = 8;
    opt.closed_form = [](double t) { return RealVec::Constant(1, std::exp(t)); };
    const auto r = solve_ivp(exp_problem(), opt);
    ASSERT_EQ(r.rows.size(), 9u);
    EXPECT_TRUE(r.violations.empty());
    EXPECT_TRUE(r.theorem_form_applicable);
    EXPECT_NEAR(r.series_constant, std::exp(1.0), 1e-12);
    EXPECT_NEAR(r.rows[3].observed, 0.0516151617923783, 1e-12);
    for (const auto& row : r.rows) {
        EXPECT_NEAR(row.observed, exp_tail(static_cast<int>(row.n)), 1e-13) << "n=" << row.n;
        EXPECT_LE(row.observed, row.theorem_bound);
        EXPECT_LE(row.observed, row.lemma_bound);
        ASSERT_TRUE(row.observed_upper.has_value());
        EXPECT_GE(*row.observed_upper, row.observed);
    }
}

TEST(SolveExact, ZeroFieldIsImmediate)
{
    IVProblem p;
    p.y0 = RealVec::Constant(1, 3.0);
    p.a = 1.0;
    p.b = 1.0;
    p.poly = PolyField<double>{{{}}};
    const auto r = solve_ivp(p);
    EXPECT_TRUE(r.violations.empty());
    for (const auto& row : r.rows) {
        EXPECT_EQ(row.observed, 0.0);
        EXPECT_EQ(row.step, 0.0);
    }
}

TEST(SolveExact, GaussianWithinTheoremBound)
{
    IVProblem p;
    p.y0 = RealVec::Ones(1);
    p.a = 0.5;
    p.b = 1.0;
    p.poly = PolyField<double>{{{{-2.0, 1, {1}}}}};
    p.lipschitz = 1.0;
    p.sup_bound = 2.0;
    SolveOptions opt;
    opt.n_max = 8;
    opt.closed_form = [](double t) { return RealVec::Constant(1, std::exp(-t * t)); };
    const auto r = solve_ivp(p, opt);
    EXPECT_TRUE(r.violations.empty());
    for (const auto& row : r.rows)
        EXPECT_LE(row.observed, row.theorem_bound) << "n=" << row.n;
    EXPECT_LT(r.rows[8].observed, 1e-4);
}

TEST(SolveExact, RejectsStartWithWrongInitialValue)
{
    EXPECT_THROW(solve_ivp(exp_half(), poly({2.0, 1.0})), std::invalid_argument);
}

TEST(SolveGrid, ExpHalfHasNoViolations)
{
    const auto p = exp_half();
    const UniformGrid grid{0.0, p.alpha(), 1024};
    for (auto rule : {QuadratureRule::cubic, QuadratureRule::trapezoid}) {
        SolveOptions opt;
        opt.rule = rule;
        opt.closed_form = [](double t) { return RealVec::Constant(1, std::exp(t)); };
        const auto r = solve_ivp(p, GridFunction::constant(grid, p.y0), opt);
        EXPECT_TRUE(r.violations.empty()) << r.violations.front();
        EXPECT_EQ(r.reference, "grid iterate n=18");
        for (const auto& row : r.rows) {
            EXPECT_LE(row.observed, row.lemma_bound * (1.0 + 1e-3) + 1e-13) << "n=" << row.n;
            ASSERT_TRUE(row.closed_form_error.has_value());
        }
        const double disc = rule == QuadratureRule::cubic ? 1e-10 : 1e-6;
        EXPECT_LT(*r.rows.back().closed_form_error, exp_tail(10) * 1.2 + disc);
    }
}

TEST(ChainProperties, ContractionNestingAndChainInequality)
{
    std::mt19937_64 rng(42);
    const auto p = exp_half();
    const double alpha = p.alpha();
    for (int trial = 0; trial < 20; ++trial) {
        for (Level j = 0; j <= 3; ++j) {
            const auto x = sample::random_member(p, j, rng);
            const auto y = sample::random_member(p, j, rng);
            const auto dj = metric_dj(p, x, y, j);
            ASSERT_TRUE(dj.finite);
            const auto px = picard_apply(p, x);
            const auto py = picard_apply(p, y);

            // P maps H_j into H_{j+1}
            EXPECT_TRUE(vanishes_to_order(difference(picard_apply(p, px), px), j + 1, NormKind::euclidean, 1.0));

            const auto dj1 = metric_dj(p, px, py, j + 1);
            ASSERT_TRUE(dj1.finite);
            EXPECT_LE(dj1.upper, p.lipschitz / static_cast<double>(j + 1) * dj.upper * (1.0 + 1e-14));
            EXPECT_LE(metric_dj(p, px, py, j).upper, alpha * dj1.upper * (1.0 + 1e-14));
        }
    }
}

TEST(ChainProperties, GridContractionAtResolution)
{
    std::mt19937_64 rng(8);
    const auto p = exp_half();
    const UniformGrid grid{0.0, p.alpha(), 1024};
    for (int trial = 0; trial < 10; ++trial) {
        for (Level j = 0; j <= 2; ++j) {
            const auto x = sample::to_grid(sample::random_member(p, j, rng), grid);
            const auto y = sample::to_grid(sample::random_member(p, j, rng), grid);
            const double dj = metric_dj(x, y, j);
            const double dj1 = metric_dj(picard_apply(p, x), picard_apply(p, y), j + 1);
            EXPECT_LE(dj1, dj / static_cast<double>(j + 1) * (1.0 + 1e-2)) << "j=" << j;
        }
    }
}
