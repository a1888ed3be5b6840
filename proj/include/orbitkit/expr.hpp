#pragma once

// Symbolic scalar expressions over the coordinates of R^n.
//
// Expressions are immutable trees shared through reference counting. They
// support exact partial derivatives and evaluation in any scalar type that
// provides exp/sin/cos/sqrt/pow (double and WideReal are used here).
//
// Piecewise nodes hold an ordered list of (guard, branch) pairs and a default
// branch. A guard is a polynomial inequality `lhs > 0` or `lhs >= 0`; the
// first satisfied guard selects its branch, otherwise the default applies.
// Smoothness across guard boundaries is not checked: it is metadata supplied
// by whoever builds the expression (see `smooth_gluing_probe` in the tests).

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "orbitkit/wide_real.hpp"

namespace orbitkit {

/// Raised when an evaluation leaves the domain of an operation (division by
/// zero, sqrt of a negative number, negative power of zero).
class DomainError : public std::runtime_error {
public:
    DomainError(const std::string& what, std::string subexpr)
        : std::runtime_error(what + " in " + subexpr), subexpr_(std::move(subexpr)) {}
    [[nodiscard]] const std::string& subexpression() const { return subexpr_; }

private:
    std::string subexpr_;
};

class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Op : std::uint8_t { Const, Var, Add, Sub, Mul, Div, Pow, Exp, Sin, Cos, Sqrt, Piecewise };

class ScalarExpr;

struct Guard;

namespace detail {
struct Node;
}

class ScalarExpr {
public:
    /// The zero constant.
    ScalarExpr();

    [[nodiscard]] Op op() const;
    [[nodiscard]] double value() const;    // Const only
    [[nodiscard]] int index() const;       // Var only
    [[nodiscard]] int exponent() const;    // Pow only
    [[nodiscard]] const std::vector<ScalarExpr>& args() const;
    [[nodiscard]] const std::vector<Guard>& guards() const;  // Piecewise only

    [[nodiscard]] bool is_const() const { return op() == Op::Const; }
    [[nodiscard]] bool is_const(double v) const { return is_const() && value() == v; }

    /// Highest variable index used, or -1 for closed expressions.
    [[nodiscard]] int max_variable_index() const;

    [[nodiscard]] std::string to_string() const;

    friend bool operator==(const ScalarExpr& a, const ScalarExpr& b);

private:
    friend ScalarExpr make_node(detail::Node node);
    explicit ScalarExpr(std::shared_ptr<const detail::Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const detail::Node> node_;
};

/// `lhs > 0` when strict, `lhs >= 0` otherwise.
struct Guard {
    ScalarExpr lhs;
    bool strict = true;
};

namespace detail {
struct Node {
    Op op = Op::Const;
    double value = 0.0;
    int index = 0;
    int exponent = 0;
    std::vector<ScalarExpr> args;  // for Piecewise: branches..., default
    std::vector<Guard> guards;
};
}  // namespace detail

inline ScalarExpr make_node(detail::Node node) {
    return ScalarExpr(std::make_shared<const detail::Node>(std::move(node)));
}

inline ScalarExpr::ScalarExpr() : ScalarExpr(make_node(detail::Node{})) {}

inline Op ScalarExpr::op() const { return node_->op; }
inline double ScalarExpr::value() const { return node_->value; }
inline int ScalarExpr::index() const { return node_->index; }
inline int ScalarExpr::exponent() const { return node_->exponent; }
inline const std::vector<ScalarExpr>& ScalarExpr::args() const { return node_->args; }
inline const std::vector<Guard>& ScalarExpr::guards() const { return node_->guards; }

// ---------------------------------------------------------------------------
// Builders

inline ScalarExpr constant(double v) {
    detail::Node n;
    n.op = Op::Const;
    n.value = v;
    return make_node(std::move(n));
}

inline ScalarExpr var(int index) {
    if (index < 0) throw std::invalid_argument("variable index must be nonnegative");
    detail::Node n;
    n.op = Op::Var;
    n.index = index;
    return make_node(std::move(n));
}

inline ScalarExpr make_binary(Op op, ScalarExpr a, ScalarExpr b) {
    detail::Node n;
    n.op = op;
    n.args = {std::move(a), std::move(b)};
    return make_node(std::move(n));
}

inline ScalarExpr make_unary(Op op, ScalarExpr a) {
    detail::Node n;
    n.op = op;
    n.args = {std::move(a)};
    return make_node(std::move(n));
}

inline ScalarExpr operator+(ScalarExpr a, ScalarExpr b) { return make_binary(Op::Add, std::move(a), std::move(b)); }
inline ScalarExpr operator-(ScalarExpr a, ScalarExpr b) { return make_binary(Op::Sub, std::move(a), std::move(b)); }
inline ScalarExpr operator*(ScalarExpr a, ScalarExpr b) { return make_binary(Op::Mul, std::move(a), std::move(b)); }
inline ScalarExpr operator/(ScalarExpr a, ScalarExpr b) { return make_binary(Op::Div, std::move(a), std::move(b)); }
inline ScalarExpr operator-(ScalarExpr a) { return make_binary(Op::Mul, constant(-1.0), std::move(a)); }

inline ScalarExpr operator+(double a, ScalarExpr b) { return constant(a) + std::move(b); }
inline ScalarExpr operator+(ScalarExpr a, double b) { return std::move(a) + constant(b); }
inline ScalarExpr operator-(double a, ScalarExpr b) { return constant(a) - std::move(b); }
inline ScalarExpr operator-(ScalarExpr a, double b) { return std::move(a) - constant(b); }
inline ScalarExpr operator*(double a, ScalarExpr b) { return constant(a) * std::move(b); }
inline ScalarExpr operator*(ScalarExpr a, double b) { return std::move(a) * constant(b); }
inline ScalarExpr operator/(double a, ScalarExpr b) { return constant(a) / std::move(b); }
inline ScalarExpr operator/(ScalarExpr a, double b) { return std::move(a) / constant(b); }

inline ScalarExpr pow(ScalarExpr a, int k) {
    detail::Node n;
    n.op = Op::Pow;
    n.exponent = k;
    n.args = {std::move(a)};
    return make_node(std::move(n));
}
inline ScalarExpr exp(ScalarExpr a) { return make_unary(Op::Exp, std::move(a)); }
inline ScalarExpr sin(ScalarExpr a) { return make_unary(Op::Sin, std::move(a)); }
inline ScalarExpr cos(ScalarExpr a) { return make_unary(Op::Cos, std::move(a)); }
inline ScalarExpr sqrt(ScalarExpr a) { return make_unary(Op::Sqrt, std::move(a)); }

inline Guard gt_zero(ScalarExpr lhs) { return Guard{std::move(lhs), true}; }
inline Guard ge_zero(ScalarExpr lhs) { return Guard{std::move(lhs), false}; }

inline ScalarExpr piecewise(std::vector<std::pair<Guard, ScalarExpr>> branches, ScalarExpr otherwise) {
    detail::Node n;
    n.op = Op::Piecewise;
    for (auto& [g, e] : branches) {
        n.guards.push_back(std::move(g));
        n.args.push_back(std::move(e));
    }
    n.args.push_back(std::move(otherwise));
    return make_node(std::move(n));
}

// ---------------------------------------------------------------------------
// Structure

inline bool operator==(const ScalarExpr& a, const ScalarExpr& b) {
    if (a.node_ == b.node_) return true;
    if (a.op() != b.op()) return false;
    switch (a.op()) {
        case Op::Const:
            return std::bit_cast<std::uint64_t>(a.value()) == std::bit_cast<std::uint64_t>(b.value());
        case Op::Var:
            return a.index() == b.index();
        case Op::Pow:
            if (a.exponent() != b.exponent()) return false;
            break;
        case Op::Piecewise:
            if (a.guards().size() != b.guards().size()) return false;
            for (std::size_t i = 0; i < a.guards().size(); ++i) {
                if (a.guards()[i].strict != b.guards()[i].strict) return false;
                if (!(a.guards()[i].lhs == b.guards()[i].lhs)) return false;
            }
            break;
        default:
            break;
    }
    if (a.args().size() != b.args().size()) return false;
    for (std::size_t i = 0; i < a.args().size(); ++i) {
        if (!(a.args()[i] == b.args()[i])) return false;
    }
    return true;
}

inline int ScalarExpr::max_variable_index() const {
    int m = op() == Op::Var ? index() : -1;
    for (const auto& a : args()) m = std::max(m, a.max_variable_index());
    for (const auto& g : guards()) m = std::max(m, g.lhs.max_variable_index());
    return m;
}

namespace detail {
inline std::string format_number(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}
}  // namespace detail

inline std::string ScalarExpr::to_string() const {
    const auto& a = args();
    switch (op()) {
        case Op::Const:
            return detail::format_number(value());
        case Op::Var:
            return "x" + std::to_string(index());
        case Op::Add:
            return "(" + a[0].to_string() + " + " + a[1].to_string() + ")";
        case Op::Sub:
            return "(" + a[0].to_string() + " - " + a[1].to_string() + ")";
        case Op::Mul:
            return "(" + a[0].to_string() + " * " + a[1].to_string() + ")";
        case Op::Div:
            return "(" + a[0].to_string() + " / " + a[1].to_string() + ")";
        case Op::Pow:
            return a[0].to_string() + "^" + std::to_string(exponent());
        case Op::Exp:
            return "exp(" + a[0].to_string() + ")";
        case Op::Sin:
            return "sin(" + a[0].to_string() + ")";
        case Op::Cos:
            return "cos(" + a[0].to_string() + ")";
        case Op::Sqrt:
            return "sqrt(" + a[0].to_string() + ")";
        case Op::Piecewise: {
            std::string s = "piecewise(";
            for (std::size_t i = 0; i < guards().size(); ++i) {
                s += guards()[i].lhs.to_string() + (guards()[i].strict ? " > 0" : " >= 0") + " -> " +
                     a[i].to_string() + "; ";
            }
            return s + "else -> " + a.back().to_string() + ")";
        }
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Evaluation

namespace detail {

inline bool is_zero(double v) { return v == 0.0; }
inline bool is_zero(const WideReal& v) { return v.is_zero(); }
inline bool is_finite(double v) { return std::isfinite(v); }
inline bool is_finite(const WideReal& v) { return v.is_finite(); }

template <typename T>
T eval_impl(const ScalarExpr& e, std::span<const T> p);

// A product with an exactly-zero factor is zero, whatever the other factor
// does. Flat functions (e^{-1/x} glued to 0) make the derivative formulas
// produce `0 * (1/x^2)` at points where x^2 underflows; the limit is 0.
template <typename T>
T eval_product(const ScalarExpr& a, const ScalarExpr& b, std::span<const T> p) {
    T lhs{};
    bool lhs_ok = true;
    try {
        lhs = eval_impl<T>(a, p);
    } catch (const DomainError&) {
        lhs_ok = false;
    }
    if (lhs_ok && is_zero(lhs)) return T(0.0);
    if (!lhs_ok) {
        const T rhs = eval_impl<T>(b, p);
        if (is_zero(rhs)) return T(0.0);
        return eval_impl<T>(a, p);  // rethrows the original error
    }
    const T rhs = eval_impl<T>(b, p);
    if (is_zero(rhs)) return T(0.0);
    return lhs * rhs;
}

template <typename T>
bool guard_holds(const Guard& g, std::span<const T> p) {
    const T v = eval_impl<T>(g.lhs, p);
    return g.strict ? v > T(0.0) : v >= T(0.0);
}

template <typename T>
T eval_impl(const ScalarExpr& e, std::span<const T> p) {
    using std::cos;
    using std::pow;
    using std::exp;
    using std::sin;
    using std::sqrt;
    const auto& a = e.args();
    switch (e.op()) {
        case Op::Const:
            return T(e.value());
        case Op::Var:
            if (static_cast<std::size_t>(e.index()) >= p.size()) {
                throw DimensionMismatch("variable x" + std::to_string(e.index()) + " outside point of dimension " +
                                        std::to_string(p.size()));
            }
            return p[static_cast<std::size_t>(e.index())];
        case Op::Add:
            return eval_impl<T>(a[0], p) + eval_impl<T>(a[1], p);
        case Op::Sub:
            return eval_impl<T>(a[0], p) - eval_impl<T>(a[1], p);
        case Op::Mul:
            return eval_product<T>(a[0], a[1], p);
        case Op::Div: {
            const T den = eval_impl<T>(a[1], p);
            if (is_zero(den)) throw DomainError("division by zero", e.to_string());
            const T num = eval_impl<T>(a[0], p);
            if (is_zero(num)) return T(0.0);
            return num / den;
        }
        case Op::Pow: {
            const T base = eval_impl<T>(a[0], p);
            if (e.exponent() < 0 && is_zero(base)) throw DomainError("negative power of zero", e.to_string());
            return pow(base, e.exponent());
        }
        case Op::Exp:
            return exp(eval_impl<T>(a[0], p));
        case Op::Sin:
            return sin(eval_impl<T>(a[0], p));
        case Op::Cos:
            return cos(eval_impl<T>(a[0], p));
        case Op::Sqrt: {
            const T v = eval_impl<T>(a[0], p);
            if (v < T(0.0)) throw DomainError("sqrt of negative value", e.to_string());
            return sqrt(v);
        }
        case Op::Piecewise:
            for (std::size_t i = 0; i < e.guards().size(); ++i) {
                if (guard_holds<T>(e.guards()[i], p)) return eval_impl<T>(a[i], p);
            }
            return eval_impl<T>(a.back(), p);
    }
    return T(0.0);
}

}  // namespace detail

/// Evaluates `e` at `p`. Throws DomainError when an operation on the active
/// branch is undefined, and DimensionMismatch when `p` is too short.
template <typename T>
T eval(const ScalarExpr& e, std::span<const T> p) {
    const T v = detail::eval_impl<T>(e, p);
    if (!detail::is_finite(v)) throw DomainError("non-finite result", e.to_string());
    return v;
}

inline double eval(const ScalarExpr& e, std::span<const double> p) { return eval<double>(e, p); }
inline double eval(const ScalarExpr& e, const std::vector<double>& p) { return eval<double>(e, std::span<const double>(p)); }
inline double eval(const ScalarExpr& e, std::initializer_list<double> p) {
    return eval<double>(e, std::span<const double>(p.begin(), p.size()));
}

// ---------------------------------------------------------------------------
// Simplification

namespace detail {
inline bool try_fold(const ScalarExpr& e, double& out) {
    for (const auto& a : e.args()) {
        if (!a.is_const()) return false;
    }
    for (const auto& g : e.guards()) {
        if (!g.lhs.is_const()) return false;
    }
    try {
        out = eval<double>(e, std::span<const double>{});
    } catch (const DomainError&) {
        return false;
    }
    return true;
}
}  // namespace detail

/// Constant folding, additive and multiplicative identities, and zero
/// absorption. The result evaluates to the same value wherever `e` is
/// defined. Idempotent.
inline ScalarExpr simplify(const ScalarExpr& e) {
    switch (e.op()) {
        case Op::Const:
        case Op::Var:
            return e;
        default:
            break;
    }
    detail::Node n;
    n.op = e.op();
    n.exponent = e.exponent();
    for (const auto& a : e.args()) n.args.push_back(simplify(a));
    for (const auto& g : e.guards()) n.guards.push_back(Guard{simplify(g.lhs), g.strict});
    ScalarExpr s = make_node(n);

    double folded = 0.0;
    if (detail::try_fold(s, folded)) return constant(folded);

    const auto& a = n.args;
    switch (n.op) {
        case Op::Add:
            if (a[0].is_const(0.0)) return a[1];
            if (a[1].is_const(0.0)) return a[0];
            break;
        case Op::Sub:
            if (a[1].is_const(0.0)) return a[0];
            break;
        case Op::Mul:
            if (a[0].is_const(0.0) || a[1].is_const(0.0)) return constant(0.0);
            if (a[0].is_const(1.0)) return a[1];
            if (a[1].is_const(1.0)) return a[0];
            break;
        case Op::Div:
            if (a[1].is_const(1.0)) return a[0];
            break;
        case Op::Pow:
            if (n.exponent == 0) return constant(1.0);
            if (n.exponent == 1) return a[0];
            break;
        case Op::Piecewise: {
            // Drop branches whose guard is a constant; a true constant guard
            // shadows everything after it.
            std::vector<std::pair<Guard, ScalarExpr>> kept;
            ScalarExpr fallback = a.back();
            bool resolved = false;
            for (std::size_t i = 0; i < n.guards.size(); ++i) {
                const Guard& g = n.guards[i];
                if (g.lhs.is_const()) {
                    const double v = g.lhs.value();
                    if (g.strict ? v > 0.0 : v >= 0.0) {
                        fallback = a[i];
                        resolved = true;
                        break;
                    }
                    continue;
                }
                kept.emplace_back(g, a[i]);
            }
            (void)resolved;
            bool uniform = true;
            for (const auto& [g, b] : kept) uniform = uniform && (b == fallback);
            if (uniform) return fallback;
            if (kept.size() != n.guards.size()) return piecewise(std::move(kept), fallback);
            break;
        }
        default:
            break;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Differentiation

/// Exact symbolic partial derivative with respect to coordinate `i`,
/// simplified. Piecewise guards are kept; each branch is differentiated.
inline ScalarExpr partial(const ScalarExpr& e, int i) {
    const auto& a = e.args();
    auto d = [i](const ScalarExpr& x) { return partial(x, i); };
    ScalarExpr r;
    switch (e.op()) {
        case Op::Const:
            return constant(0.0);
        case Op::Var:
            return constant(e.index() == i ? 1.0 : 0.0);
        case Op::Add:
            r = d(a[0]) + d(a[1]);
            break;
        case Op::Sub:
            r = d(a[0]) - d(a[1]);
            break;
        case Op::Mul:
            r = d(a[0]) * a[1] + a[0] * d(a[1]);
            break;
        case Op::Div:
            r = (d(a[0]) * a[1] - a[0] * d(a[1])) / pow(a[1], 2);
            break;
        case Op::Pow:
            r = constant(static_cast<double>(e.exponent())) * (pow(a[0], e.exponent() - 1) * d(a[0]));
            break;
        case Op::Exp:
            r = e * d(a[0]);
            break;
        case Op::Sin:
            r = cos(a[0]) * d(a[0]);
            break;
        case Op::Cos:
            r = constant(-1.0) * (sin(a[0]) * d(a[0]));
            break;
        case Op::Sqrt:
            r = d(a[0]) / (constant(2.0) * e);
            break;
        case Op::Piecewise: {
            std::vector<std::pair<Guard, ScalarExpr>> branches;
            for (std::size_t k = 0; k < e.guards().size(); ++k) branches.emplace_back(e.guards()[k], d(a[k]));
            r = piecewise(std::move(branches), d(a.back()));
            break;
        }
    }
    return simplify(r);
}

}  // namespace orbitkit
