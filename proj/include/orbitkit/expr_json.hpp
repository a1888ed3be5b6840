#pragma once

#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "orbitkit/expr.hpp"

namespace orbitkit {

/// Well-formed JSON that does not match the expected schema.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {
inline const char* op_name(Op op) {
    switch (op) {
        case Op::Const: return "const";
        case Op::Var: return "var";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Div: return "div";
        case Op::Pow: return "pow";
        case Op::Exp: return "exp";
        case Op::Sin: return "sin";
        case Op::Cos: return "cos";
        case Op::Sqrt: return "sqrt";
        case Op::Piecewise: return "piecewise";
    }
    return "?";
}

inline const nlohmann::json& require(const nlohmann::json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw InputError(std::string("missing key \"") + key + "\"");
    return j.at(key);
}
}  // namespace detail

// Doubles are written with the shortest representation that reads back to
// the same bits, so a dump/parse cycle is bit-exact.
inline nlohmann::json expr_to_json(const ScalarExpr& e) {
    using nlohmann::json;
    json j;
    j["op"] = detail::op_name(e.op());
    switch (e.op()) {
        case Op::Const:
            j["value"] = e.value();
            return j;
        case Op::Var:
            j["index"] = e.index();
            return j;
        case Op::Piecewise: {
            json branches = json::array();
            for (std::size_t i = 0; i < e.guards().size(); ++i) {
                const Guard& g = e.guards()[i];
                branches.push_back({{"guard", {{"lhs", expr_to_json(g.lhs)}, {"rel", g.strict ? ">" : ">="}}},
                                    {"expr", expr_to_json(e.args()[i])}});
            }
            j["branches"] = std::move(branches);
            j["default"] = expr_to_json(e.args().back());
            return j;
        }
        default:
            break;
    }
    json args = json::array();
    for (const auto& a : e.args()) args.push_back(expr_to_json(a));
    j["args"] = std::move(args);
    if (e.op() == Op::Pow) j["exponent"] = e.exponent();
    return j;
}

inline ScalarExpr expr_from_json(const nlohmann::json& j) {
    if (j.is_number()) return constant(j.get<double>());
    const auto& opj = detail::require(j, "op");
    if (!opj.is_string()) throw InputError("expression \"op\" must be a string");
    const std::string op = opj.get<std::string>();

    if (op == "const") {
        const auto& v = detail::require(j, "value");
        if (!v.is_number()) throw InputError("const value must be a number");
        return constant(v.get<double>());
    }
    if (op == "var") {
        const auto& v = detail::require(j, "index");
        if (!v.is_number_integer() || v.get<int>() < 0) throw InputError("var index must be a nonnegative integer");
        return var(v.get<int>());
    }
    if (op == "piecewise") {
        const auto& bj = detail::require(j, "branches");
        if (!bj.is_array()) throw InputError("piecewise branches must be an array");
        std::vector<std::pair<Guard, ScalarExpr>> branches;
        for (const auto& b : bj) {
            const auto& gj = detail::require(b, "guard");
            const std::string rel = gj.value("rel", ">");
            if (rel != ">" && rel != ">=") throw InputError("guard rel must be \">\" or \">=\"");
            branches.emplace_back(Guard{expr_from_json(detail::require(gj, "lhs")), rel == ">"},
                                  expr_from_json(detail::require(b, "expr")));
        }
        return piecewise(std::move(branches), expr_from_json(detail::require(j, "default")));
    }

    const auto& aj = detail::require(j, "args");
    if (!aj.is_array()) throw InputError("\"args\" must be an array");
    auto arg = [&](std::size_t k) { return expr_from_json(aj.at(k)); };
    auto want = [&](std::size_t k) {
        if (aj.size() != k) throw InputError("op \"" + op + "\" takes " + std::to_string(k) + " argument(s)");
    };
    if (op == "add" || op == "sub" || op == "mul" || op == "div") {
        want(2);
        const Op o = op == "add" ? Op::Add : op == "sub" ? Op::Sub : op == "mul" ? Op::Mul : Op::Div;
        return make_binary(o, arg(0), arg(1));
    }
    if (op == "pow") {
        want(1);
        const auto& k = detail::require(j, "exponent");
        if (!k.is_number_integer()) throw InputError("pow exponent must be an integer");
        return pow(arg(0), k.get<int>());
    }
    if (op == "exp" || op == "sin" || op == "cos" || op == "sqrt") {
        want(1);
        const Op o = op == "exp" ? Op::Exp : op == "sin" ? Op::Sin : op == "cos" ? Op::Cos : Op::Sqrt;
        return make_unary(o, arg(0));
    }
    throw InputError("unknown expression op \"" + op + "\"");
}

}  // namespace orbitkit
