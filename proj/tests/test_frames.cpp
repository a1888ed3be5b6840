#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "orbitkit/corpus.hpp"
#include "orbitkit/flows.hpp"
#include "orbitkit/frames.hpp"
#include "test_support.hpp"

using namespace orbitkit;

namespace {

ScalarExpr flat_of(const ScalarExpr& u) { return piecewise({{gt_zero(u), exp(-1.0 / u)}}, constant(0.0)); }

std::vector<VectorField> balan_pair() {
    const ScalarExpr r2 = var(0) * var(0) + var(1) * var(1);
    return {VectorField("X", {flat_of(r2), constant(0.0)}), VectorField("Y", {constant(0.0), r2})};
}

}  // namespace

TEST(RankAt, Examples) {
    const Family ex32 = cases::halfplane_x_noninteg().family;
    EXPECT_EQ(rank_at(ex32, {1.0, 0.0}), 2);
    EXPECT_EQ(rank_at(ex32, {0.0, 0.0}), 1);
    EXPECT_EQ(rank_at(ex32, {-1.0, 5.0}), 1);
    const Family so3 = cases::so3();
    EXPECT_EQ(rank_at(so3, {0.0, 0.0, 0.0}), 0);
    EXPECT_EQ(rank_at(so3, {1.0, 0.0, 0.0}), 2);
    EXPECT_EQ(rank_at(Family(2, {}), {0.0, 0.0}), 0);
}

TEST(RankAt, FlatValuesAgainstTolerance) {
    // m(0.1) = e^{-10} ~ 4.5e-5 counts at the default tolerance;
    // m(0.05) = e^{-20} ~ 2.1e-9 only below it.
    const Family ex32 = cases::halfplane_x_noninteg().family;
    EXPECT_EQ(rank_at(ex32, {0.1, 0.0}), 2);
    EXPECT_EQ(rank_at(ex32, {0.05, 0.0}), 1);
    EXPECT_EQ(rank_at(ex32, {0.05, 0.0}, 1e-10), 2);
    EXPECT_EQ(rank_at(ex32, {-0.05, 0.0}, 1e-10), 1);
}

TEST(RankProperty, InvariantUnderRecombination) {
    std::mt19937_64 g(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(g() % 3);
        const int m = 1 + static_cast<int>(g() % 4);
        // Values of rank r built from r random directions.
        const int r = 1 + static_cast<int>(g() % static_cast<unsigned>(std::min(n, m)));
        Eigen::MatrixXd basis = Eigen::MatrixXd::NullaryExpr(n, r, [&] { return u(g); });
        Eigen::MatrixXd coeff = Eigen::MatrixXd::NullaryExpr(r, m, [&] { return u(g); });
        Eigen::MatrixXd vals = basis * coeff;
        // Well-conditioned recombination: identity plus a small perturbation.
        Eigen::MatrixXd mix = Eigen::MatrixXd::Identity(m, m) + 0.3 * Eigen::MatrixXd::NullaryExpr(m, m, [&] { return u(g); }) / m;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(mix);
        const double cond = svd.singularValues()(0) / svd.singularValues()(m - 1);
        ASSERT_LE(cond, 10.0);
        const Eigen::MatrixXd mixed = vals * mix;
        auto cols = [&](const Eigen::MatrixXd& a) {
            std::vector<Vector> out;
            for (int j = 0; j < a.cols(); ++j) out.emplace_back(a.col(j).data(), a.col(j).data() + n);
            return out;
        };
        const int before = rank_of(cols(vals), static_cast<std::size_t>(n));
        EXPECT_EQ(before, rank_of(cols(mixed), static_cast<std::size_t>(n)));
        EXPECT_LE(before, std::min(n, m));
    }
}

TEST(RankProperty, MonotoneUnderEnlargement) {
    std::mt19937_64 g(32);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<VectorField> ms;
        const Point p = testsupport::random_point(g, 3);
        int prev = 0;
        for (int k = 0; k < 4; ++k) {
            ms.push_back(testsupport::random_field(g, 3, 0, true, 2));
            const int r = rank_at(std::span<const VectorField>(ms), p);
            EXPECT_GE(r, prev);
            EXPECT_LE(r, std::min(3, k + 1));
            prev = r;
        }
    }
}

TEST(SpanContains, Examples) {
    const SubspaceBasis bx({0.0, 0.0}, {{1.0, 0.0}});
    const auto zero = span_contains(bx, {0.0, 0.0});
    EXPECT_TRUE(zero.contained);
    EXPECT_EQ(zero.residual, 0.0);
    const auto y = span_contains(bx, {0.0, 1.0});
    EXPECT_FALSE(y.contained);
    EXPECT_NEAR(y.residual, 1.0, 1e-15);

    // Pushforward of (0,1) at (1,0) by the rotation at t = pi/2.
    const VectorField rot("rot", {-var(1), var(0)});
    const auto r = flow_with_jacobian(rot, {1.0, 0.0}, std::numbers::pi / 2, 1e-12);
    ASSERT_TRUE(r.ok());
    const Eigen::Vector2d pushed = (*r.jacobian) * Eigen::Vector2d(0.0, 1.0);
    const SubspaceBasis at_end(r.endpoint, {{-1.0, 0.0}});
    EXPECT_TRUE(span_contains(at_end, {pushed(0), pushed(1)}).contained);
}

TEST(SpanContains, ColumnsAreContained) {
    std::mt19937_64 g(33);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Vector> cols;
        for (int k = 0; k < 3; ++k) cols.push_back(testsupport::random_point(g, 4, 10.0));
        const SubspaceBasis b(Point(4, 0.0), cols);
        for (const auto& c : cols) {
            const auto s = span_contains(b, c);
            EXPECT_TRUE(s.contained);
            EXPECT_LE(s.residual, 1e-12 * (1.0 + norm(c)));
        }
    }
}

TEST(SelectSpanning, GreedyLargestResidualLowestIndexOnTies) {
    const std::vector<VectorField> ms{VectorField("a", {constant(1.0), constant(0.0)}), VectorField("b", {constant(2.0), constant(0.0)}),
                                      VectorField("c", {constant(0.0), constant(2.0)}), VectorField("d", {constant(0.0), constant(2.0)})};
    EXPECT_EQ(select_spanning(ms, {0.0, 0.0}, 2), (std::vector<std::size_t>{1, 2}));
    EXPECT_EQ(select_spanning(ms, {0.0, 0.0}, 1), (std::vector<std::size_t>{1}));
}

TEST(FitCoefficients, ZeroGeneratorIsResidualFailure) {
    const std::vector<VectorField> gen{VectorField("x dy", {constant(0.0), var(0)})};
    std::vector<FitTarget> targets;
    for (double y : {-0.5, 0.0, 0.5}) targets.push_back(make_target({0.0, y}, {0.0, 1.0}));
    const FitReport r = fit_coefficients(targets, gen);
    EXPECT_EQ(r.status, FitStatus::residual_failure);
    EXPECT_NEAR(r.max_residual, 1.0, 1e-15);
    EXPECT_STREQ(to_string(r.status), "residual-failure");
}

TEST(FitCoefficients, BalanPairBlowsUpNearOriginAndFitsOnAnnulus) {
    const auto pair = balan_pair();
    const VectorField br = lie_bracket(pair[0], pair[1]);
    const auto near = approach_sequence({0.0, 0.0}, 0.2, 16);
    const FitReport r = fit_coefficients(field_targets(br, near), pair, 1e3);
    EXPECT_EQ(r.status, FitStatus::coefficient_blowup);
    EXPECT_GT(r.max_coefficient, 1e3);
    ASSERT_TRUE(r.witness.has_value());
    EXPECT_LT(norm(*r.witness), 0.2);

    // Exact coefficients: [X,Y] = -(2y/r^2) X + (2x phi/r^2) Y.
    for (const auto& pf : r.points) {
        const double x = pf.point[0], y = pf.point[1], r2 = x * x + y * y;
        EXPECT_NEAR(pf.coefficients[0], -2 * y / r2, 1e-6 * (1 + 2 * std::fabs(y) / r2));
    }

    const auto ring = halton_sample(Region::shell({0.0, 0.0}, 0.5, 1.0), 64);
    const FitReport a = fit_coefficients(field_targets(br, ring), pair, 1e3);
    EXPECT_EQ(a.status, FitStatus::fit);
    EXPECT_LT(a.max_coefficient, 5.0);
}

TEST(FitCoefficients, GeneratorTargetFitsWithUnitCoefficient) {
    const auto pair = balan_pair();
    const Point p{0.6, -0.3};
    const FitReport r = fit_coefficients({make_target(p, pair[1].at(p))}, pair);
    EXPECT_EQ(r.status, FitStatus::fit);
    EXPECT_NEAR(r.points[0].coefficients[1], 1.0, 1e-12);
    EXPECT_NEAR(r.points[0].coefficients[0], 0.0, 1e-12);
    EXPECT_LE(r.max_residual, 1e-14);
}

TEST(FitCoefficients, RelativeScaleSeesFlatTargets) {
    // Target rho*dy with rho = e^{-100} against dx: absolutely tiny, relatively a unit miss.
    const std::vector<VectorField> gen{coordinate_field(2, 0)};
    const auto t = make_target({0.1, 0.0}, {0.0, std::exp(-100.0)});
    EXPECT_EQ(fit_coefficients({t}, gen, 1e3, 1e-8, ResidualScale::absolute).status, FitStatus::fit);
    EXPECT_EQ(fit_coefficients({t}, gen, 1e3, 1e-8, ResidualScale::relative).status, FitStatus::residual_failure);
}

TEST(FitCoefficients, WideTargetsBelowDoubleRange) {
    // A bracket of size e^{-10000} still resolves against its own direction.
    const VectorField gen("g", {constant(0.0), exp(-1.0 / (var(0) * var(0)))});
    const std::vector<VectorField> gens{gen};
    const auto targets = field_targets(VectorField("t", {constant(0.0), 3.0 * exp(-1.0 / (var(0) * var(0)))}), std::vector<Point>{{0.01, 0.0}});
    ASSERT_EQ(targets.size(), 1u);
    const FitReport r = fit_coefficients(targets, gens, 1e3, 1e-8, ResidualScale::relative);
    EXPECT_EQ(r.status, FitStatus::fit);
    EXPECT_NEAR(r.points[0].coefficients[0], 3.0, 1e-12);
}

TEST(FitPointwise, ContainmentWithoutCoefficientBound) {
    const auto pair = balan_pair();
    const VectorField br = lie_bracket(pair[0], pair[1]);
    const FitReport r = fit_pointwise(field_targets(br, approach_sequence({0.0, 0.0}, 0.2, 16)), pair);
    EXPECT_EQ(r.status, FitStatus::fit);
}
