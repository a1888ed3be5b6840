#pragma once

// Flows of vector fields, their Jacobians, and compositions of flows (words).
// Integration uses the Dormand-Prince 5(4) embedded pair with error control
// on the full state (base point plus Jacobian when requested).

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "orbitkit/fields.hpp"

namespace orbitkit {

inline constexpr double kEscapeRadius = 1e8;
inline constexpr double kMaxFlowTime = 1e3;
inline constexpr double kDefaultFlowTol = 1e-9;

enum class FlowStatus { ok, escaped, guard_violation, step_underflow };

inline const char* to_string(FlowStatus s) {
    switch (s) {
        case FlowStatus::ok: return "ok";
        case FlowStatus::escaped: return "escaped";
        case FlowStatus::guard_violation: return "guard-violation";
        case FlowStatus::step_underflow: return "step-underflow";
    }
    return "?";
}

struct FlowResult {
    Point endpoint;
    std::optional<Eigen::MatrixXd> jacobian;
    FlowStatus status = FlowStatus::ok;
    long accepted_steps = 0;
    std::optional<std::size_t> failed_step;  // word step that failed (apply_word only)

    [[nodiscard]] bool ok() const { return status == FlowStatus::ok; }
};

/// One trace row: (s, x_1, ..., x_n).
using TraceRow = std::vector<double>;

/// A field with its symbolic Jacobian, ready for repeated integration.
class CompiledField {
public:
    explicit CompiledField(VectorField f) : field_(std::move(f)) {
        const std::size_t n = field_.dimension();
        jac_.resize(n * n);
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t i = 0; i < n; ++i) jac_[k * n + i] = partial(field_.components[k], static_cast<int>(i));
        }
    }

    [[nodiscard]] const VectorField& field() const { return field_; }
    [[nodiscard]] std::size_t dimension() const { return field_.dimension(); }

    /// Right-hand side of the base (and optionally variational) system.
    /// Returns false when the state leaves the domain or evaluation fails.
    bool rhs(std::span<const double> state, std::span<double> out, bool with_jacobian) const {
        const std::size_t n = dimension();
        const std::span<const double> x = state.first(n);
        try {
            if (!field_.contains<double>(x)) return false;
            for (std::size_t k = 0; k < n; ++k) out[k] = eval<double>(field_.components[k], x);
            if (with_jacobian) {
                // dJ/ds = DX(x) J, J stored row-major after x.
                thread_local std::vector<double> dx;
                dx.resize(n * n);
                for (std::size_t q = 0; q < n * n; ++q) dx[q] = eval<double>(jac_[q], x);
                for (std::size_t k = 0; k < n; ++k) {
                    for (std::size_t j = 0; j < n; ++j) {
                        double s = 0.0;
                        for (std::size_t i = 0; i < n; ++i) s += dx[k * n + i] * state[n + i * n + j];
                        out[n + k * n + j] = s;
                    }
                }
            }
        } catch (const DomainError&) {
            return false;
        }
        for (double v : out) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    [[nodiscard]] Eigen::MatrixXd jacobian_at(const Point& p) const {
        const std::size_t n = dimension();
        Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = eval(jac_[k * n + i], p);
            }
        }
        return m;
    }

private:
    VectorField field_;
    std::vector<ScalarExpr> jac_;
};

inline std::vector<CompiledField> compile(std::span<const VectorField> fields) {
    std::vector<CompiledField> out;
    out.reserve(fields.size());
    for (const auto& f : fields) out.emplace_back(f);
    return out;
}

namespace detail {

// Dormand-Prince coefficients.
inline constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
inline constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
inline constexpr double kB5[7] = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0.0};
inline constexpr double kB4[7] = {5179.0 / 57600, 0.0, 7571.0 / 16695, 393.0 / 640, -92097.0 / 339200, 187.0 / 2100,
                                  1.0 / 40};

inline double state_norm(std::span<const double> y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += y[i] * y[i];
    return std::sqrt(s);
}

}  // namespace detail

/// Integrates X from x0 for time t (either sign). With `with_jacobian` the
/// variational equation is integrated alongside; `trace`, when given,
/// receives (s, x) at the start and after every accepted step.
inline FlowResult integrate(const CompiledField& x, const Point& x0, double t, double tol, bool with_jacobian,
                            std::vector<TraceRow>* trace = nullptr) {
    const std::size_t n = x.dimension();
    if (x0.size() != n) throw DimensionMismatch("flow: start point dimension differs from field");
    if (!(tol > 0.0)) throw std::invalid_argument("flow tolerance must be positive");
    if (!std::isfinite(t) || std::fabs(t) > kMaxFlowTime) throw std::invalid_argument("flow time must satisfy |t| <= 1e3");

    const std::size_t m = with_jacobian ? n + n * n : n;
    std::vector<double> y(m, 0.0);
    std::copy(x0.begin(), x0.end(), y.begin());
    if (with_jacobian) {
        for (std::size_t i = 0; i < n; ++i) y[n + i * n + i] = 1.0;
    }

    FlowResult res;
    auto finish = [&](FlowStatus st) {
        res.status = st;
        res.endpoint.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
        if (with_jacobian) {
            Eigen::MatrixXd j(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t c = 0; c < n; ++c) j(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = y[n + r * n + c];
            }
            res.jacobian = std::move(j);
        }
        return res;
    };
    auto record = [&](double s) {
        if (!trace) return;
        TraceRow row{s};
        row.insert(row.end(), y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
        trace->push_back(std::move(row));
    };

    std::array<std::vector<double>, 7> k;
    for (auto& v : k) v.assign(m, 0.0);
    if (!x.rhs(y, k[0], with_jacobian)) {
        // The start point itself is outside the domain or not evaluable.
        return finish(x.field().contains(x0) ? FlowStatus::step_underflow : FlowStatus::guard_violation);
    }
    record(0.0);
    if (t == 0.0) return finish(FlowStatus::ok);

    const double dir = t > 0 ? 1.0 : -1.0;
    const double total = std::fabs(t);
    const double h_min = 1e-14 * total;
    double s = 0.0;
    double h = total / 100.0;
    std::vector<double> stage(m), y5(m), err(m);
    bool last_reject_guard = false;
    constexpr long kMaxSteps = 1'000'000;

    while (s < total) {
        if (res.accepted_steps >= kMaxSteps) return finish(FlowStatus::step_underflow);
        bool final_step = false;
        if (s + h >= total) {
            h = total - s;
            final_step = true;
        }
        const double hs = dir * h;

        bool evaluable = true;
        for (int st = 1; st < 7 && evaluable; ++st) {
            for (std::size_t i = 0; i < m; ++i) {
                double acc = y[i];
                for (int j = 0; j < st; ++j) acc += hs * detail::kA[st][j] * k[static_cast<std::size_t>(j)][i];
                stage[i] = acc;
            }
            if (st == 6) y5 = stage;  // row 6 of A equals the 5th-order weights
            evaluable = x.rhs(stage, k[static_cast<std::size_t>(st)], with_jacobian);
        }

        double err_norm = 0.0;
        if (evaluable) {
            for (std::size_t i = 0; i < m; ++i) {
                double e = 0.0;
                for (int j = 0; j < 7; ++j) e += (detail::kB5[j] - detail::kB4[j]) * k[static_cast<std::size_t>(j)][i];
                e *= hs;
                const double sc = tol + tol * std::max(std::fabs(y[i]), std::fabs(y5[i]));
                err_norm = std::max(err_norm, std::fabs(e) / sc);
            }
            if (!std::isfinite(err_norm)) evaluable = false;
        }

        if (evaluable && err_norm <= 1.0) {
            y.swap(y5);
            k[0].swap(k[6]);  // FSAL: f(y_new) is the last stage
            ++res.accepted_steps;
            s = final_step ? total : s + h;
            record(dir * s);
            if (detail::state_norm(y, n) > kEscapeRadius) return finish(FlowStatus::escaped);
            last_reject_guard = false;
            const double fac = err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
            h *= fac;
        } else {
            if (!evaluable) {
                last_reject_guard = true;
                h *= 0.5;
            } else {
                last_reject_guard = false;
                h *= std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 0.9);
            }
            if (h < h_min) return finish(last_reject_guard ? FlowStatus::guard_violation : FlowStatus::step_underflow);
        }
    }
    return finish(FlowStatus::ok);
}

inline FlowResult flow(const VectorField& x, const Point& x0, double t, double tol = kDefaultFlowTol) {
    return integrate(CompiledField(x), x0, t, tol, false);
}

inline FlowResult flow_with_jacobian(const VectorField& x, const Point& x0, double t, double tol = kDefaultFlowTol) {
    return integrate(CompiledField(x), x0, t, tol, true);
}

// ---------------------------------------------------------------------------
// Words

struct WordStep {
    std::size_t index = 0;
    double time = 0.0;

    friend bool operator==(const WordStep&, const WordStep&) = default;
};

/// Steps are applied first to last: [(i1,t1), (i2,t2)] means phi^{X_i2}_{t2}
/// after phi^{X_i1}_{t1}.
using Word = std::vector<WordStep>;

/// Strict weak order by (length, steps lexicographically).
inline bool word_less(const Word& a, const Word& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].index != b[i].index) return a[i].index < b[i].index;
        if (a[i].time != b[i].time) return a[i].time < b[i].time;
    }
    return false;
}

inline FlowResult apply_word(std::span<const CompiledField> members, const Word& w, const Point& x0,
                             double tol = kDefaultFlowTol, bool with_jacobian = false) {
    const std::size_t n = x0.size();
    FlowResult out;
    out.endpoint = x0;
    Eigen::MatrixXd j = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t s = 0; s < w.size(); ++s) {
        if (w[s].index >= members.size()) throw std::out_of_range("word step refers to member " + std::to_string(w[s].index));
        FlowResult step = integrate(members[w[s].index], out.endpoint, w[s].time, tol, with_jacobian);
        out.accepted_steps += step.accepted_steps;
        out.endpoint = std::move(step.endpoint);
        if (with_jacobian) j = (*step.jacobian) * j;
        if (!step.ok()) {
            out.status = step.status;
            out.failed_step = s;
            break;
        }
    }
    if (with_jacobian) out.jacobian = std::move(j);
    return out;
}

inline FlowResult apply_word(const Family& f, const Word& w, const Point& x0, double tol = kDefaultFlowTol,
                             bool with_jacobian = false) {
    const auto fields = f.materialize();
    const auto compiled = compile(fields);
    return apply_word(compiled, w, x0, tol, with_jacobian);
}

}  // namespace orbitkit
