#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace orbitkit;
using testsupport::max_abs;
using testsupport::random_field;
using testsupport::random_point;
using testsupport::random_polynomial;

namespace {

Vector add(const Vector& a, const Vector& b) {
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

}  // namespace

TEST(BracketProperties, Antisymmetry) {
    std::mt19937_64 g(101);
    for (int pair = 0; pair < 50; ++pair) {
        const int n = 2 + pair % 2;
        const VectorField x = random_field(g, n, 3), y = random_field(g, n, 3);
        const VectorField xy = lie_bracket(x, y), yx = lie_bracket(y, x);
        std::vector<ScalarExpr> sum;
        for (int k = 0; k < n; ++k) sum.push_back(simplify(xy.components[k] + yx.components[k]));
        const VectorField s("sum", sum);
        for (int t = 0; t < 100; ++t) {
            const Point p = random_point(g, n);
            EXPECT_LE(max_abs(s.at(p)), 1e-10) << "pair " << pair;
        }
    }
}

TEST(BracketProperties, JacobiIdentityForPolynomialFields) {
    std::mt19937_64 g(202);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 2 + trial % 2;
        const VectorField x = random_field(g, n, 0, true, 3), y = random_field(g, n, 0, true, 3),
                          z = random_field(g, n, 0, true, 3);
        const VectorField a = lie_bracket(x, lie_bracket(y, z)), b = lie_bracket(y, lie_bracket(z, x)),
                          c = lie_bracket(z, lie_bracket(x, y));
        for (int t = 0; t < 20; ++t) {
            const Point p = random_point(g, n);
            const Vector va = a.at(p), vb = b.at(p), vc = c.at(p);
            const double scale = std::max(1.0, norm(va) + norm(vb) + norm(vc));
            EXPECT_LE(max_abs(add(add(va, vb), vc)), 1e-8 * scale) << "trial " << trial;
        }
    }
}

TEST(BracketProperties, Leibniz) {
    std::mt19937_64 g(303);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + trial % 2;
        const VectorField x = random_field(g, n, 3), y = random_field(g, n, 3);
        const ScalarExpr f = random_polynomial(g, n, 3);
        const VectorField lhs = lie_bracket(x, scaled(f, y, "fY"));
        const VectorField xy = lie_bracket(x, y);
        std::vector<ScalarExpr> grad;
        for (int k = 0; k < n; ++k) grad.push_back(partial(f, k));
        for (int t = 0; t < 20; ++t) {
            const Point p = random_point(g, n);
            const Vector xv = x.at(p), yv = y.at(p), bv = xy.at(p), l = lhs.at(p);
            const double fv = eval(f, p);
            double xf = 0.0;
            for (int k = 0; k < n; ++k) xf += xv[k] * eval(grad[k], p);
            Vector r(n);
            for (int k = 0; k < n; ++k) r[k] = fv * bv[k] + xf * yv[k];
            const double scale = std::max(1.0, std::fabs(fv) * norm(bv) + std::fabs(xf) * norm(yv));
            EXPECT_LE(testsupport::max_abs_diff(l, r), 1e-9 * scale) << "trial " << trial;
        }
    }
}

TEST(BracketProperties, BilinearOverConstants) {
    std::mt19937_64 g(404);
    for (int trial = 0; trial < 20; ++trial) {
        const VectorField x = random_field(g, 2, 3), y = random_field(g, 2, 3);
        const VectorField lhs = lie_bracket(scaled(constant(2.5), x, "2.5X"), y);
        const VectorField rhs = lie_bracket(x, y);
        for (int t = 0; t < 10; ++t) {
            const Point p = random_point(g, 2);
            const Vector a = lhs.at(p), b = rhs.at(p);
            for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], 2.5 * b[k], 1e-9 * std::max(1.0, std::fabs(a[k])));
        }
    }
}

TEST(BracketProperties, SelfBracketVanishes) {
    std::mt19937_64 g(505);
    for (int trial = 0; trial < 20; ++trial) {
        const VectorField x = random_field(g, 3, 3);
        const VectorField b = lie_bracket(x, x);
        for (int t = 0; t < 10; ++t) EXPECT_LE(max_abs(b.at(random_point(g, 3))), 1e-12);
    }
}
