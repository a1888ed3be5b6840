#pragma once

// Vector fields on R^n, families of them, and the Lie bracket.

#include <algorithm>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "orbitkit/expr.hpp"
#include "orbitkit/linalg.hpp"

namespace orbitkit {

/// n symbolic components, optionally restricted to the open set where every
/// domain guard holds.
struct VectorField {
    std::string name;
    std::vector<ScalarExpr> components;
    std::vector<Guard> domain;

    VectorField() = default;
    VectorField(std::string n, std::vector<ScalarExpr> comps, std::vector<Guard> dom = {})
        : name(std::move(n)), components(std::move(comps)), domain(std::move(dom)) {
        for (const auto& c : components) {
            if (c.max_variable_index() >= static_cast<int>(components.size())) {
                throw DimensionMismatch("field " + name + " uses a coordinate beyond its dimension");
            }
        }
    }

    [[nodiscard]] std::size_t dimension() const { return components.size(); }

    template <typename T = double>
    [[nodiscard]] bool contains(std::span<const T> p) const {
        for (const auto& g : domain) {
            const T v = eval<T>(g.lhs, p);
            if (!(g.strict ? v > T(0.0) : v >= T(0.0))) return false;
        }
        return true;
    }
    [[nodiscard]] bool contains(const Point& p) const { return contains<double>(std::span<const double>(p)); }

    template <typename T = double>
    [[nodiscard]] std::vector<T> at(std::span<const T> p) const {
        std::vector<T> v;
        v.reserve(components.size());
        for (const auto& c : components) v.push_back(eval<T>(c, p));
        return v;
    }
    [[nodiscard]] Vector at(const Point& p) const { return at<double>(std::span<const double>(p)); }
};

inline VectorField operator-(const VectorField& x) {
    std::vector<ScalarExpr> comps;
    for (const auto& c : x.components) comps.push_back(simplify(constant(-1.0) * c));
    return VectorField("-" + x.name, std::move(comps), x.domain);
}

/// Multiplies every component by the scalar function f.
inline VectorField scaled(const ScalarExpr& f, const VectorField& x, std::string name) {
    std::vector<ScalarExpr> comps;
    for (const auto& c : x.components) comps.push_back(simplify(f * c));
    return VectorField(std::move(name), std::move(comps), x.domain);
}

/// The coordinate field d/dx_i on R^n.
inline VectorField coordinate_field(std::size_t n, int i, std::string name = {}) {
    std::vector<ScalarExpr> comps(n, constant(0.0));
    comps.at(static_cast<std::size_t>(i)) = constant(1.0);
    return VectorField(name.empty() ? "d" + std::to_string(i) : std::move(name), std::move(comps));
}

/// A procedural generator r -> X_r standing in for an infinite family.
struct FamilyRule {
    std::string id;
    std::vector<double> samples;  // default parameter grid
    std::function<VectorField(double)> generate;
};

struct Family {
    std::size_t dimension = 0;
    std::vector<VectorField> members;
    std::optional<FamilyRule> rule;
    bool symmetric = false;

    Family() = default;
    Family(std::size_t n, std::vector<VectorField> fields, std::optional<FamilyRule> r = std::nullopt)
        : dimension(n), members(std::move(fields)), rule(std::move(r)) {
        for (const auto& m : members) {
            if (m.dimension() != dimension) throw DimensionMismatch("member " + m.name + " has the wrong dimension");
        }
    }

    /// Parameters sampled when the caller gives none.
    [[nodiscard]] std::vector<double> default_samples() const { return rule ? rule->samples : std::vector<double>{}; }

    /// Explicit members followed by the rule members at each parameter. A
    /// symmetric family also yields -X for every member whose negation is not
    /// already listed.
    [[nodiscard]] std::vector<VectorField> materialize(std::span<const double> samples) const;
    [[nodiscard]] std::vector<VectorField> materialize() const {
        const auto s = default_samples();
        return materialize(s);
    }
};

inline bool same_components(const VectorField& a, const VectorField& b) {
    if (a.components.size() != b.components.size()) return false;
    for (std::size_t i = 0; i < a.components.size(); ++i) {
        if (!(simplify(a.components[i]) == simplify(b.components[i]))) return false;
    }
    return true;
}

inline std::vector<VectorField> Family::materialize(std::span<const double> samples) const {
    std::vector<VectorField> out = members;
    if (symmetric) {
        for (const auto& m : members) {
            const VectorField neg = -m;
            const bool listed = std::any_of(members.begin(), members.end(),
                                            [&](const VectorField& o) { return same_components(o, neg); });
            if (!listed) out.push_back(neg);
        }
    }
    if (rule) {
        for (double r : samples) {
            VectorField x = rule->generate(r);
            if (x.dimension() != dimension) throw DimensionMismatch("rule member has the wrong dimension");
            out.push_back(x);
            if (symmetric) out.push_back(-x);
        }
    }
    return out;
}

/// [X, Y]^k = sum_i X^i d_i Y^k - Y^i d_i X^k, simplified. The result lives on
/// the intersection of the two domains.
inline VectorField lie_bracket(const VectorField& x, const VectorField& y) {
    if (x.dimension() != y.dimension()) throw DimensionMismatch("lie_bracket of fields with different dimensions");
    const std::size_t n = x.dimension();
    std::vector<ScalarExpr> comps;
    comps.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        ScalarExpr acc = constant(0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const int ii = static_cast<int>(i);
            acc = acc + (x.components[i] * partial(y.components[k], ii) - y.components[i] * partial(x.components[k], ii));
        }
        comps.push_back(simplify(acc));
    }
    std::vector<Guard> dom = x.domain;
    dom.insert(dom.end(), y.domain.begin(), y.domain.end());
    return VectorField("[" + x.name + "," + y.name + "]", std::move(comps), std::move(dom));
}

struct FamilyValues {
    std::vector<Vector> vectors;         // one per evaluated member, in order
    std::vector<std::size_t> indices;    // index into materialize(samples)
    std::vector<std::string> skipped;    // members whose domain excludes p
};

/// X(p) for every explicit member and every sampled rule member.
inline FamilyValues evaluate_family(const Family& f, const Point& p, std::span<const double> samples) {
    if (p.size() != f.dimension) throw DimensionMismatch("point dimension does not match family");
    FamilyValues out;
    const auto all = f.materialize(samples);
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (!all[i].contains(p)) {
            out.skipped.push_back(all[i].name);
            continue;
        }
        out.vectors.push_back(all[i].at(p));
        out.indices.push_back(i);
    }
    return out;
}

inline FamilyValues evaluate_family(const Family& f, const Point& p) {
    const auto s = f.default_samples();
    return evaluate_family(f, p, s);
}

/// Values of an already materialized member list; members whose domain
/// excludes p are skipped.
inline std::vector<Vector> member_values(std::span<const VectorField> members, const Point& p) {
    std::vector<Vector> out;
    for (const auto& m : members) {
        if (m.contains(p)) out.push_back(m.at(p));
    }
    return out;
}

/// Appends -X for each explicit member and sets the symmetric flag. A family
/// that is already symmetric is returned unchanged.
inline Family symmetrize(const Family& f) {
    if (f.symmetric) return f;
    Family out = f;
    for (const auto& m : f.members) out.members.push_back(-m);
    out.symmetric = true;
    return out;
}

struct LieClosure {
    Family family;
    int rank = 0;
};

/// Adjoins brackets up to `depth`, keeping a new bracket only when its value
/// at p leaves the current pointwise span (relative tolerance `tol`).
/// Rule members are not part of the closure.
inline LieClosure lie_closure(const Family& f, int depth, const Point& p, double tol = 1e-8) {
    if (depth < 0) throw std::invalid_argument("lie_closure depth must be nonnegative");
    if (p.size() != f.dimension) throw DimensionMismatch("point dimension does not match family");
    LieClosure out{Family(f.dimension, f.members), 0};
    out.family.symmetric = f.symmetric;

    auto values = [&](const std::vector<VectorField>& ms) {
        return member_values(ms, p);
    };
    auto rank_of = [&](const std::vector<VectorField>& ms) {
        return numerical_rank(columns_to_matrix(values(ms), f.dimension), tol);
    };

    std::vector<VectorField> all = f.members;
    out.rank = rank_of(all);
    if (depth == 0) return out;

    std::vector<VectorField> frontier = all;
    for (int level = 1; level <= depth && out.rank < static_cast<int>(f.dimension); ++level) {
        std::vector<VectorField> fresh;
        for (const auto& a : f.members) {
            for (const auto& b : frontier) {
                VectorField br = lie_bracket(a, b);
                if (!br.contains(p)) continue;
                std::vector<VectorField> trial = all;
                trial.push_back(br);
                const int r = rank_of(trial);
                if (r > out.rank) {
                    out.rank = r;
                    all.push_back(br);
                    fresh.push_back(br);
                }
            }
        }
        if (fresh.empty()) break;
        frontier = std::move(fresh);
    }
    out.family.members = std::move(all);
    return out;
}

inline constexpr int kDefaultClosureDepth = 4;

inline LieClosure lie_closure(const Family& f, const Point& p) { return lie_closure(f, kDefaultClosureDepth, p); }

}  // namespace orbitkit
