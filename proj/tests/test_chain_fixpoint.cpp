#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "picard/chain_fixpoint.hpp"

using namespace picard;

namespace {

ChainConstants constants(std::function<double(Level)> alpha, std::function<double(Level)> kappa, TailModel tail)
{
    ChainConstants c;
    c.alpha = std::move(alpha);
    c.kappa = std::move(kappa);
    c.tail = std::move(tail);
    return c;
}

// H_j = [0, 2^-j], d_j(x, y) = 2^j |x - y|, T x = x / 4.
ChainSpec<double> toy_chain()
{
    ChainSpec<double> s;
    static_cast<ChainConstants&>(s) =
        constants([](Level) { return 0.5; }, [](Level) { return 0.5; }, TailModel::constant(0.25));
    s.metric = [](Level j, const double& x, const double& y) -> std::optional<double> {
        const double top = std::ldexp(1.0, -static_cast<int>(j));
        if (x < 0.0 || x > top || y < 0.0 || y > top)
            return std::nullopt;
        return std::ldexp(std::abs(x - y), static_cast<int>(j));
    };
    s.map = [](const double& x) { return x / 4.0; };
    return s;
}

double exp_series(double x, int terms = 30)
{
    double sum = 0.0, term = 1.0;
    for (int m = 0; m < terms; ++m) {
        sum += term;
        term *= x / (m + 1);
    }
    return sum;
}

} // namespace

TEST(PartialProduct, HarmonicKappa)
{
    const auto c = constants([](Level) { return 1.0; }, [](Level k) { return 1.0 / k; }, TailModel::monotone());
    EXPECT_DOUBLE_EQ(partial_product(c, 0, 3), 1.0 / 6.0);
}

TEST(PartialProduct, EmptyProductIsOne)
{
    const auto c = constants([](Level) { return 3.0; }, [](Level) { return 7.0; }, TailModel::constant(0.5));
    for (Level j = 0; j < 8; ++j)
        EXPECT_EQ(partial_product(c, j, j), 1.0);
}

TEST(PartialProduct, ConstantFactors)
{
    const auto c = constants([](Level) { return 0.5; }, [](Level) { return 0.5; }, TailModel::constant(0.25));
    EXPECT_DOUBLE_EQ(partial_product(c, 0, 4), 0.00390625);
}

TEST(PartialProduct, RejectsReversedIndices)
{
    const auto c = constants([](Level) { return 1.0; }, [](Level) { return 0.5; }, TailModel::constant(0.5));
    EXPECT_THROW(partial_product(c, 5, 4), std::out_of_range);
}

TEST(PartialProduct, NonincreasingWhenTermsAtMostOne)
{
    const auto c = constants([](Level) { return 0.7; }, [](Level k) { return 1.2 / k; }, TailModel::monotone());
    for (Level n = 1; n < 20; ++n)
        EXPECT_LE(partial_product(c, 0, n + 1), partial_product(c, 0, n));
}

TEST(ChainConstants, NonpositiveTermsRejected)
{
    const auto c = constants([](Level) { return 1.0; }, [](Level) { return 0.0; }, TailModel::constant(0.5));
    EXPECT_THROW(c.product_term(1), std::domain_error);
}

TEST(SeriesConstant, GeometricTail)
{
    const auto c = constants([](Level) { return 1.0; }, [](Level) { return 0.5; }, TailModel::constant(0.5));
    const double v = series_constant(c, 50, 1e-14);
    EXPECT_GE(v, 2.0);
    EXPECT_NEAR(v, 2.0, 1e-12);
}

TEST(SeriesConstant, HarmonicKappaGivesE)
{
    const auto c = constants([](Level) { return 1.0; }, [](Level k) { return 1.0 / k; }, TailModel::monotone());
    const double v = series_constant(c, 64, 1e-14);
    EXPECT_GE(v, exp_series(1.0));
    EXPECT_NEAR(v, exp_series(1.0), 1e-12);
}

TEST(SeriesConstant, DoubledKappaGivesESquared)
{
    const auto c = constants([](Level) { return 1.0; }, [](Level k) { return 2.0 / k; }, TailModel::monotone());
    EXPECT_NEAR(series_constant(c, 64, 1e-14), exp_series(2.0), 1e-11);
}

TEST(SeriesConstant, PicardChainMatchesExponential)
{
    for (double alpha : {0.25, 0.5, 1.0, 1.5}) {
        for (double L : {0.3, 1.0, 2.5}) {
            const auto c =
                constants([=](Level) { return alpha; }, [=](Level k) { return L / k; }, TailModel::monotone());
            EXPECT_NEAR(series_constant(c, 64, 1e-14), exp_series(alpha * L, 60), 1e-11 * exp_series(alpha * L, 60))
                << "alpha=" << alpha << " L=" << L;
        }
    }
}

TEST(SeriesConstant, ExplicitFormulaTail)
{
    // alpha_k kappa_k = 0.9 / k, declared through its running supremum
    const auto c = constants([](Level) { return 0.9; }, [](Level k) { return 1.0 / k; },
                             TailModel::formula([](Level k) { return 0.9 / k; }, 0.0));
    EXPECT_NEAR(series_constant(c, 64, 1e-14), exp_series(0.9), 1e-12);
}

TEST(SeriesConstant, UncertifiableTailsDiverge)
{
    const auto flat = constants([](Level) { return 1.0; }, [](Level) { return 1.0; }, TailModel::constant(1.0));
    EXPECT_THROW(series_constant(flat, 10, 1e-12), divergence_error);

    const auto stuck = constants([](Level) { return 1.0; }, [](Level) { return 1.0; }, TailModel::monotone());
    EXPECT_THROW(series_constant(stuck, 10, 1e-12), divergence_error);

    const auto declared = constants([](Level) { return 1.0; }, [](Level) { return 0.5; },
                                    TailModel::formula([](Level) { return 1.0; }, 1.0));
    EXPECT_THROW(series_constant(declared, 10, 1e-12), divergence_error);

    const auto missing = constants([](Level) { return 1.0; }, [](Level) { return 0.5; },
                                   TailModel{TailKind::explicit_formula, 1, 0.5, {}});
    EXPECT_THROW(series_constant(missing, 10, 1e-12), divergence_error);
}

TEST(SeriesConstant, RejectsNonpositiveTolerance)
{
    const auto c = constants([](Level) { return 1.0; }, [](Level) { return 0.5; }, TailModel::constant(0.5));
    EXPECT_THROW(series_constant(c, 10, 0.0), std::invalid_argument);
}

TEST(AprioriBound, Examples)
{
    const auto c = constants([](Level) { return 0.5; }, [](Level) { return 0.5; }, TailModel::constant(0.25));
    EXPECT_NEAR(a_priori_bound(c, 0, 1, 1.0, 2.0), 0.5, 1e-15);

    const auto h = constants([](Level) { return 1.0; }, [](Level k) { return 1.0 / k; }, TailModel::monotone());
    EXPECT_NEAR(a_priori_bound(h, 0, 5, 1.0, std::numbers::e), std::numbers::e / 120.0, 1e-15);
    EXPECT_GE(a_priori_bound(h, 0, 5, 1.0, std::numbers::e), std::numbers::e / 120.0);

    EXPECT_EQ(a_priori_bound(h, 0, 5, 0.0, std::numbers::e), 0.0);
}

TEST(Iterate, ToyChainRecurrence)
{
    const auto spec = toy_chain();
    const auto trace = iterate(spec, 1.0, StopRule{5, 0.0});
    ASSERT_EQ(trace.points.size(), 6u);
    EXPECT_EQ(trace.step_distances.size(), trace.points.size());
    EXPECT_EQ(trace.bounds.size(), trace.points.size());
    double x = 1.0;
    for (std::size_t m = 0; m < trace.points.size(); ++m) {
        EXPECT_EQ(trace.points[m], x);
        EXPECT_EQ(trace.step_distances[m], x - x / 4.0);
        x /= 4.0;
    }
    EXPECT_EQ(trace.step_distances[0], 0.75);
    EXPECT_EQ(trace.step_distances[1], 0.1875);
}

TEST(Iterate, ToyChainBoundSoundness)
{
    const auto spec = toy_chain();
    const auto trace = iterate(spec, 1.0, StopRule{20, 0.0});
    ASSERT_EQ(trace.points.size(), 21u);
    for (std::size_t n = 0; n <= 20; ++n) {
        EXPECT_LE(std::abs(trace.points[n]), trace.bounds[n]) << "n=" << n;
        if (n > 0) {
            EXPECT_LE(trace.bounds[n], trace.bounds[n - 1]);
        }
    }
}

TEST(Iterate, FixedPointStopsImmediately)
{
    const auto trace = iterate(toy_chain(), 0.0, StopRule{50, 1e-300});
    EXPECT_EQ(trace.points.size(), 1u);
    EXPECT_EQ(trace.step_distances[0], 0.0);
    EXPECT_EQ(trace.bounds[0], 0.0);
}

TEST(Iterate, TargetBoundStops)
{
    const auto trace = iterate(toy_chain(), 1.0, StopRule{50, 1e-6});
    EXPECT_LE(trace.bounds.back(), 1e-6);
    EXPECT_GT(trace.bounds[trace.bounds.size() - 2], 1e-6);
}

TEST(Iterate, StartOutsideH0)
{
    EXPECT_THROW(iterate(toy_chain(), 2.0, StopRule{5, 0.0}), membership_error);
}

TEST(Iterate, LeavingTheChainIsSignalled)
{
    auto spec = toy_chain();
    spec.map = [](const double& x) { return x * 0.9; }; // x_1 = 0.9 is not in H_1
    EXPECT_THROW(iterate(spec, 1.0, StopRule{5, 0.0}), membership_error);
}

TEST(Iterate, HigherBaseLevel)
{
    const auto trace = iterate(toy_chain(), 1.0, StopRule{6, 0.0}, 2);
    EXPECT_TRUE(std::isinf(trace.bounds[0]));
    EXPECT_TRUE(std::isinf(trace.bounds[1]));
    // d_2(x_3, x_2) = 4 * (1/16 - 1/64)
    EXPECT_DOUBLE_EQ(trace.first_step, 4.0 * (1.0 / 16 - 1.0 / 64));
    for (std::size_t m = 2; m < trace.points.size(); ++m)
        EXPECT_LE(4.0 * trace.points[m], trace.bounds[m]);
}

TEST(Iterate, UniquenessAcrossStarts)
{
    const auto spec = toy_chain();
    const auto a = iterate(spec, 1.0, StopRule{20, 0.0});
    const auto b = iterate(spec, 0.3, StopRule{20, 0.0});
    EXPECT_LE(std::abs(a.points.back() - b.points.back()), 2.0 * (a.bounds.back() + b.bounds.back()));
}

TEST(Iterate, HeronOnShrinkingIntervals)
{
    // H_j = [r, r + 2^-j], d_j = 2^j |x - y|; T' <= (2r + 1) 2^-j / 4 there,
    // so kappa_j = 2^{2-j} covers it.
    const double r = std::sqrt(2.0);
    ChainSpec<double> s;
    s.alpha = [](Level) { return 0.5; };
    s.kappa = [](Level j) { return std::ldexp(1.0, 2 - static_cast<int>(j)); };
    s.tail = TailModel::monotone(1);
    s.map = [](const double& x) { return 0.5 * (x + 2.0 / x); };
    s.member = [r](Level j, const double& x) {
        return x >= r * (1 - 1e-15) && x <= r + std::ldexp(1.0, -static_cast<int>(j));
    };
    s.metric = [r](Level j, const double& x, const double& y) -> std::optional<double> {
        if (x < r * (1 - 1e-15) || y < r * (1 - 1e-15))
            return std::nullopt;
        return std::ldexp(std::abs(x - y), static_cast<int>(j));
    };

    const auto trace = iterate(s, 2.0, StopRule{6, 0.0});
    EXPECT_LE(std::abs(trace.points.back() - r), 1e-12);
    for (std::size_t m = 0; m < trace.points.size(); ++m)
        EXPECT_LE(std::abs(trace.points[m] - r), trace.bounds[m] + 1e-16);
}

TEST(ValidateAxioms, ToyChainRatiosAreExact)
{
    const auto spec = toy_chain();
    std::vector<std::pair<double, double>> samples{{0.1, 0.4}, {0.0, 0.5}, {0.2, 0.21}, {0.37, 0.05}};
    const auto report = validate_chain_axioms(spec, samples, 1);
    EXPECT_TRUE(report.ok());
    EXPECT_DOUBLE_EQ(report.metric_ratio[0], 0.5);
    EXPECT_DOUBLE_EQ(report.contraction_ratio[0], 0.5);
}

TEST(ValidateAxioms, IdenticalPointsAreVacuous)
{
    const auto report = validate_chain_axioms(toy_chain(), {{0.25, 0.25}}, 1);
    EXPECT_TRUE(report.ok());
    EXPECT_EQ(report.contraction_ratio[0], 0.0);
}

TEST(ValidateAxioms, BrokenContractionIsReported)
{
    auto spec = toy_chain();
    spec.kappa = [](Level) { return 0.1; };
    spec.map = [](const double& x) { return x / 2.0; };
    const auto report = validate_chain_axioms(spec, {{0.1, 0.4}}, 1);
    ASSERT_FALSE(report.ok());
    EXPECT_EQ(report.violations[0].kind, AxiomViolation::Kind::contraction);
    EXPECT_EQ(report.violations[0].level, 1u);
    EXPECT_EQ(report.violations[0].sample, 0u);
}

TEST(ValidateAxioms, NonMembersAreSkipped)
{
    const auto report = validate_chain_axioms(toy_chain(), {{0.9, 0.1}}, 1);
    EXPECT_TRUE(report.ok());
    EXPECT_EQ(report.skipped, 1u);
}
