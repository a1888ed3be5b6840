#pragma once

// Named procedural rules. A rule maps a parameter r > 0 to one member field;
// families reference rules by id so they can be stored as JSON.

#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "orbitkit/fields.hpp"

namespace orbitkit {

inline const std::vector<double>& default_rule_samples() {
    static const std::vector<double> grid{0.4, 0.2, 0.1, 0.05};
    return grid;
}

/// Flat step on [0, 1]: 0 for u <= 0, 1 for u >= 1, smooth and flat at both
/// ends. Built as e^{-1/u} / (e^{-1/u} + e^{-1/(1-u)}) on the open interval.
inline ScalarExpr flat_step(const ScalarExpr& u) {
    const ScalarExpr a = exp(constant(-1.0) / u);
    const ScalarExpr b = exp(constant(-1.0) / (constant(1.0) - u));
    return piecewise({{ge_zero(u - constant(1.0)), constant(1.0)}, {gt_zero(u), a / (a + b)}}, constant(0.0));
}

/// Bump g_r on R^2: 0 on the closed disk of radius r, 1 outside radius 2r.
inline ScalarExpr flat_bump(double r) {
    const ScalarExpr x = var(0), y = var(1);
    const ScalarExpr rho2 = x * x + y * y;
    const double r2 = r * r;
    return flat_step((rho2 - constant(r2)) / constant(3.0 * r2));
}

/// f d/dx + g_r d/dy with f = 1 + x^2: a member of the module of fields whose
/// vertical part vanishes near the origin.
inline VectorField arjen_member(double r) {
    if (!(r > 0.0)) throw std::invalid_argument("rule parameter must be positive");
    const ScalarExpr x = var(0);
    char label[32];
    std::snprintf(label, sizeof label, "X_r=%g", r);
    return VectorField(label, {constant(1.0) + x * x, flat_bump(r)});
}

inline FamilyRule make_rule(const std::string& id, std::vector<double> samples) {
    if (id == "arjen-bump") {
        if (samples.empty()) samples = default_rule_samples();
        return FamilyRule{id, std::move(samples), arjen_member};
    }
    throw std::invalid_argument("unknown rule id \"" + id + "\"");
}

}  // namespace orbitkit
