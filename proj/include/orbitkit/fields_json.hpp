#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "orbitkit/expr_json.hpp"
#include "orbitkit/fields.hpp"
#include "orbitkit/rules.hpp"

namespace orbitkit {

// Family files:
//   {"dimension": n,
//    "members": [{"name": "...", "components": [expr, ...], "guard": g}],
//    "rule": {"id": "...", "samples": [r, ...]},      (optional)
//    "symmetric": false}
// where g is null, an expression (read as expr > 0), a guard object
// {"lhs": expr, "rel": ">" | ">="}, or an array of those.

namespace detail {
inline Guard guard_from_json(const nlohmann::json& j) {
    if (j.is_object() && j.contains("lhs")) {
        const std::string rel = j.value("rel", ">");
        if (rel != ">" && rel != ">=") throw InputError("guard rel must be \">\" or \">=\"");
        return Guard{expr_from_json(j.at("lhs")), rel == ">"};
    }
    return Guard{expr_from_json(j), true};
}

inline nlohmann::json guard_to_json(const Guard& g) {
    return {{"lhs", expr_to_json(g.lhs)}, {"rel", g.strict ? ">" : ">="}};
}
}  // namespace detail

inline nlohmann::json field_to_json(const VectorField& x) {
    nlohmann::json j;
    j["name"] = x.name;
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : x.components) comps.push_back(expr_to_json(c));
    j["components"] = std::move(comps);
    if (x.domain.empty()) {
        j["guard"] = nullptr;
    } else if (x.domain.size() == 1) {
        j["guard"] = detail::guard_to_json(x.domain.front());
    } else {
        nlohmann::json gs = nlohmann::json::array();
        for (const auto& g : x.domain) gs.push_back(detail::guard_to_json(g));
        j["guard"] = std::move(gs);
    }
    return j;
}

inline VectorField field_from_json(const nlohmann::json& j, std::size_t n) {
    if (!j.is_object()) throw InputError("family member must be an object");
    const std::string name = j.value("name", std::string("X"));
    const auto& cj = detail::require(j, "components");
    if (!cj.is_array() || cj.size() != n) {
        throw InputError("member \"" + name + "\" must have " + std::to_string(n) + " components");
    }
    std::vector<ScalarExpr> comps;
    for (const auto& c : cj) comps.push_back(expr_from_json(c));
    std::vector<Guard> dom;
    if (j.contains("guard") && !j.at("guard").is_null()) {
        const auto& g = j.at("guard");
        if (g.is_array()) {
            for (const auto& gi : g) dom.push_back(detail::guard_from_json(gi));
        } else {
            dom.push_back(detail::guard_from_json(g));
        }
    }
    try {
        return VectorField(name, std::move(comps), std::move(dom));
    } catch (const DimensionMismatch& e) {
        throw InputError(e.what());
    }
}

inline nlohmann::json family_to_json(const Family& f) {
    nlohmann::json j;
    j["dimension"] = f.dimension;
    nlohmann::json ms = nlohmann::json::array();
    for (const auto& m : f.members) ms.push_back(field_to_json(m));
    j["members"] = std::move(ms);
    if (f.rule) j["rule"] = {{"id", f.rule->id}, {"samples", f.rule->samples}};
    j["symmetric"] = f.symmetric;
    return j;
}

inline Family family_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InputError("family must be a JSON object");
    const auto& dj = detail::require(j, "dimension");
    if (!dj.is_number_integer() || dj.get<int>() < 1) throw InputError("dimension must be a positive integer");
    const auto n = dj.get<std::size_t>();
    std::vector<VectorField> members;
    if (j.contains("members")) {
        const auto& mj = j.at("members");
        if (!mj.is_array()) throw InputError("members must be an array");
        for (const auto& m : mj) members.push_back(field_from_json(m, n));
    }
    std::optional<FamilyRule> rule;
    if (j.contains("rule") && !j.at("rule").is_null()) {
        const auto& rj = j.at("rule");
        const auto& id = detail::require(rj, "id");
        if (!id.is_string()) throw InputError("rule id must be a string");
        std::vector<double> samples;
        if (rj.contains("samples")) {
            for (const auto& s : rj.at("samples")) {
                if (!s.is_number() || !(s.get<double>() > 0.0)) throw InputError("rule samples must be positive numbers");
                samples.push_back(s.get<double>());
            }
        }
        try {
            rule = make_rule(id.get<std::string>(), std::move(samples));
        } catch (const std::invalid_argument& e) {
            throw InputError(e.what());
        }
        if (n != 2) throw InputError("rule \"" + rule->id + "\" needs dimension 2");
    }
    Family f(n, std::move(members), std::move(rule));
    f.symmetric = j.value("symmetric", false);
    return f;
}

}  // namespace orbitkit
