#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "orbitkit/expr.hpp"
#include "orbitkit/expr_json.hpp"
#include "test_support.hpp"

using namespace orbitkit;

namespace {

ScalarExpr chi() { return piecewise({{gt_zero(var(0)), exp(-1.0 / var(0))}}, constant(0.0)); }

double eval_at(const ScalarExpr& e, const Point& p) { return eval(e, p); }

}  // namespace

TEST(Expr, Examples) {
    EXPECT_EQ(eval(var(0) * var(1), {2.0, 3.0}), 6.0);
    EXPECT_EQ(eval(chi(), {-1.0}), 0.0);
    EXPECT_NEAR(eval(exp(-1.0 / var(0)), {1.0}), 0.36787944117144233, 1e-16);
    EXPECT_EQ(simplify(partial(pow(var(0), 2), 0)), simplify(2.0 * var(0)));
    EXPECT_EQ(eval(partial(var(0) * var(0) + var(1) * var(1), 1), {0.3, 0.7}), 1.4);
}

TEST(Expr, PartialOfFlatExponentialMatchesFiniteDifference) {
    const ScalarExpr e = exp(-1.0 / var(0));
    const double d = eval(partial(e, 0), {1.0});
    const double h = 1e-6;
    const double fd = (eval(e, {1.0 + h}) - eval(e, {1.0 - h})) / (2 * h);
    EXPECT_NEAR(d, std::exp(-1.0), 1e-15);
    EXPECT_NEAR(d, fd, 1e-6 * std::fabs(fd));
}

TEST(Expr, DomainErrorsAreReported) {
    EXPECT_THROW((void)eval(1.0 / var(0), {0.0}), DomainError);
    EXPECT_THROW((void)eval(sqrt(var(0)), {-1.0}), DomainError);
    EXPECT_THROW((void)eval(var(2), {0.0, 1.0}), DimensionMismatch);
}

TEST(Expr, PiecewiseSelectsFirstSatisfiedGuard) {
    const ScalarExpr e = piecewise({{gt_zero(var(0)), constant(1.0)}, {ge_zero(var(0) + 1.0), constant(2.0)}}, constant(3.0));
    EXPECT_EQ(eval(e, {0.5}), 1.0);
    EXPECT_EQ(eval(e, {0.0}), 2.0);
    EXPECT_EQ(eval(e, {-1.0}), 2.0);
    EXPECT_EQ(eval(e, {-2.0}), 3.0);
}

TEST(Expr, PartialPreservesGuards) {
    const ScalarExpr d = partial(chi(), 0);
    ASSERT_EQ(d.op(), Op::Piecewise);
    ASSERT_EQ(d.guards().size(), 1u);
    EXPECT_EQ(d.guards()[0].lhs, var(0));
    EXPECT_TRUE(d.guards()[0].strict);
    EXPECT_EQ(eval(d, {-0.5}), 0.0);
    EXPECT_NEAR(eval(d, {0.5}), std::exp(-2.0) * 4.0, 1e-15);
}

TEST(Expr, SimplifyRules) {
    const ScalarExpr e = sin(var(0));
    EXPECT_EQ(simplify(e + 0.0), e);
    EXPECT_EQ(simplify(0.0 * e), constant(0.0));
    EXPECT_EQ(simplify(constant(2.0) * constant(3.0)), constant(6.0));
    EXPECT_EQ(simplify(1.0 * e), e);
    EXPECT_EQ(simplify(pow(e, 1)), e);
}

TEST(Expr, ChiIsFlatAtZero) {
    // Central finite differences of orders 1..4 at 0.
    const auto f = [](double x) { return eval(chi(), {x}); };
    for (double h : {1e-2, 1e-3}) {
        const double d1 = (f(h) - f(-h)) / (2 * h);
        const double d2 = (f(h) - 2 * f(0) + f(-h)) / (h * h);
        const double d3 = (f(2 * h) - 2 * f(h) + 2 * f(-h) - f(-2 * h)) / (2 * h * h * h);
        const double d4 = (f(2 * h) - 4 * f(h) + 6 * f(0) - 4 * f(-h) + f(-2 * h)) / (h * h * h * h);
        for (double d : {d1, d2, d3, d4}) EXPECT_LE(std::fabs(d), 1e-8) << "h=" << h;
    }
}

TEST(ExprProperty, PartialMatchesFiniteDifference) {
    std::mt19937_64 g(11);
    int checked = 0;
    for (int k = 0; k < 1000; ++k) {
        const int n = 1 + static_cast<int>(g() % 3);
        const ScalarExpr e = testsupport::random_expr(g, n, 4);
        const Point p = testsupport::random_point(g, n);
        const int i = static_cast<int>(g() % static_cast<unsigned>(n));
        const double sym = eval(partial(e, i), p);
        const double fd = testsupport::central_difference([&](const Point& q) { return eval_at(e, q); }, p, static_cast<std::size_t>(i));
        EXPECT_LE(std::fabs(sym - fd), 1e-5 * (1.0 + std::fabs(fd))) << e.to_string();
        ++checked;
    }
    EXPECT_EQ(checked, 1000);
}

TEST(ExprProperty, SimplifyPreservesValuesAndIsIdempotent) {
    std::mt19937_64 g(12);
    for (int k = 0; k < 1000; ++k) {
        const int n = 1 + static_cast<int>(g() % 3);
        // Derivatives produce plenty of 0 and 1 factors for simplify to remove.
        const ScalarExpr e = partial(testsupport::random_expr(g, n, 3), 0);
        const Point p = testsupport::random_point(g, n);
        const ScalarExpr s = simplify(e);
        const double a = eval(e, p), b = eval(s, p);
        EXPECT_LE(std::fabs(a - b), 1e-12 * std::max(1.0, std::fabs(a)));
        EXPECT_EQ(simplify(s), s);
    }
}

TEST(ExprProperty, StructuralEqualityImpliesEqualValues) {
    std::mt19937_64 g(13);
    for (int k = 0; k < 200; ++k) {
        const ScalarExpr e = testsupport::random_expr(g, 2, 3);
        const ScalarExpr copy = expr_from_json(expr_to_json(e));
        ASSERT_EQ(simplify(copy), simplify(e));
        const Point p = testsupport::random_point(g, 2);
        EXPECT_EQ(eval(simplify(copy), p), eval(simplify(e), p));
    }
}

TEST(ExprJson, RoundTripIsBitExact) {
    std::mt19937_64 g(14);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int k = 0; k < 200; ++k) {
        const double c = u(g) * std::pow(10.0, static_cast<int>(g() % 40) - 20);
        const ScalarExpr e = constant(c) * exp(var(0)) + chi();
        const auto text = expr_to_json(e).dump();
        const ScalarExpr back = expr_from_json(nlohmann::json::parse(text));
        EXPECT_EQ(back, e);
        EXPECT_EQ(back.args()[0].args()[0].value(), c);
    }
}

TEST(ExprJson, RejectsMalformedExpressions) {
    using nlohmann::json;
    EXPECT_THROW(expr_from_json(json::parse(R"({"op": "frob", "args": []})")), InputError);
    EXPECT_THROW(expr_from_json(json::parse(R"({"op": "add", "args": [1]})")), InputError);
    EXPECT_THROW(expr_from_json(json::parse(R"({"op": "var", "index": -1})")), InputError);
    EXPECT_THROW(expr_from_json(json::parse(R"({"args": [1, 2]})")), InputError);
    EXPECT_THROW(expr_from_json(json::parse(R"({"op": "pow", "args": [1], "exponent": 0.5})")), InputError);
}
