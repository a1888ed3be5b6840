#pragma once

// Ranks, span membership, and bounded-coefficient fits of tangent vectors.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "orbitkit/fields.hpp"
#include "orbitkit/linalg.hpp"

namespace orbitkit {

inline constexpr double kDefaultRankTol = 1e-8;
inline constexpr double kDefaultCap = 1e3;
inline constexpr double kDefaultFitTol = 1e-8;

/// Tangent vectors at a point. The rank is computed on first use.
class SubspaceBasis {
public:
    SubspaceBasis() = default;
    SubspaceBasis(Point point, std::vector<Vector> vectors, double tol = kDefaultRankTol)
        : point_(std::move(point)), vectors_(std::move(vectors)), tol_(tol) {
        for (const auto& v : vectors_) {
            if (v.size() != point_.size()) throw DimensionMismatch("basis vector dimension differs from its point");
        }
    }

    [[nodiscard]] const Point& point() const { return point_; }
    [[nodiscard]] const std::vector<Vector>& vectors() const { return vectors_; }
    [[nodiscard]] double tol() const { return tol_; }
    [[nodiscard]] std::size_t dimension() const { return point_.size(); }

    [[nodiscard]] int rank() const {
        if (!rank_) rank_ = numerical_rank(columns_to_matrix(vectors_, dimension()), tol_);
        return *rank_;
    }

    /// Orthonormal basis of the numerical span.
    [[nodiscard]] const std::vector<Vector>& orthonormal() const {
        if (!orthonormal_) orthonormal_ = orthonormal_range(columns_to_matrix(vectors_, dimension()), tol_);
        return *orthonormal_;
    }

private:
    Point point_;
    std::vector<Vector> vectors_;
    double tol_ = kDefaultRankTol;
    mutable std::optional<int> rank_;
    mutable std::optional<std::vector<Vector>> orthonormal_;
};

inline int rank_of(const std::vector<Vector>& values, std::size_t n, double tol = kDefaultRankTol) {
    if (values.empty()) return 0;
    return numerical_rank(columns_to_matrix(values, n), tol);
}

inline int rank_at(const Family& f, const Point& p, double tol, std::span<const double> samples) {
    return rank_of(evaluate_family(f, p, samples).vectors, f.dimension, tol);
}

inline int rank_at(const Family& f, const Point& p, double tol = kDefaultRankTol) {
    const auto s = f.default_samples();
    return rank_at(f, p, tol, s);
}

/// Rank at p of an already materialized member list.
inline int rank_at(std::span<const VectorField> members, const Point& p, double tol = kDefaultRankTol) {
    return rank_of(member_values(members, p), p.size(), tol);
}

struct SpanTest {
    bool contained = false;
    double residual = 0.0;
};

/// True iff ||v - proj(v)|| <= tol * (1 + ||v||).
inline SpanTest span_contains(const SubspaceBasis& b, const Vector& v, double tol = kDefaultRankTol) {
    if (v.size() != b.dimension()) throw DimensionMismatch("span_contains: vector dimension differs from basis");
    const double r = norm(orthogonal_residual(b.orthonormal(), v));
    return {r <= tol * (1.0 + norm(v)), r};
}

/// Greedy choice of members whose values at x span the family's span there:
/// repeatedly take the member with the largest component orthogonal to the
/// ones already chosen (lowest index on ties) until `target_rank` is reached.
inline std::vector<std::size_t> select_spanning(std::span<const VectorField> members, const Point& x, int target_rank) {
    std::vector<std::size_t> chosen;
    std::vector<Vector> q;
    std::vector<std::optional<Vector>> values(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (members[i].contains(x)) values[i] = members[i].at(x);
    }
    while (static_cast<int>(chosen.size()) < target_rank) {
        double best = 0.0;
        std::optional<std::size_t> pick;
        Vector best_res;
        for (std::size_t i = 0; i < members.size(); ++i) {
            if (!values[i] || std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
            Vector r = orthogonal_residual(q, *values[i]);
            const double nr = norm(r);
            if (nr > best) {
                best = nr;
                pick = i;
                best_res = std::move(r);
            }
        }
        if (!pick || best <= kRankAbsoluteFloor) break;
        chosen.push_back(*pick);
        for (double& c : best_res) c /= best;
        q.push_back(std::move(best_res));
    }
    return chosen;
}

// ---------------------------------------------------------------------------
// Coefficient fits

/// A tangent vector to be expressed in terms of generator values at `point`.
/// Values are wide so that flat functions keep their size far below the
/// double range.
struct FitTarget {
    Point point;
    WideVector value;
};

inline WideVector widen(const Vector& v) { return WideVector(v.begin(), v.end()); }

inline FitTarget make_target(Point p, const Vector& v) { return {std::move(p), widen(v)}; }

/// Values of `x` at each point, evaluated in wide arithmetic. Points outside
/// the field's domain, or where evaluation fails, are dropped and counted.
inline std::vector<FitTarget> field_targets(const VectorField& x, std::span<const Point> points,
                                            std::size_t* dropped = nullptr) {
    std::vector<FitTarget> out;
    for (const auto& p : points) {
        const WideVector wp = widen(p);
        try {
            if (!x.contains<WideReal>(wp)) {
                if (dropped) ++*dropped;
                continue;
            }
            out.push_back({p, x.at<WideReal>(wp)});
        } catch (const DomainError&) {
            if (dropped) ++*dropped;
        }
    }
    return out;
}

enum class FitStatus { fit, coefficient_blowup, residual_failure };

inline const char* to_string(FitStatus s) {
    switch (s) {
        case FitStatus::fit: return "fit";
        case FitStatus::coefficient_blowup: return "coefficient-blowup";
        case FitStatus::residual_failure: return "residual-failure";
    }
    return "?";
}

struct PointFit {
    Point point;
    std::vector<double> coefficients;  // one per generator; 0 for generators undefined at the point
    double residual = 0.0;
    double max_coefficient = 0.0;
    bool residual_ok = true;
    bool bounded = true;
};

struct FitReport {
    FitStatus status = FitStatus::fit;
    std::vector<PointFit> points;
    double max_residual = 0.0;
    double max_coefficient = 0.0;
    std::optional<Point> witness;  // worst offending point, if any

    [[nodiscard]] bool ok() const { return status == FitStatus::fit; }
};

namespace detail {
inline WideReal wide_norm(const WideVector& v) {
    WideReal s(0.0);
    for (const auto& x : v) s += x * x;
    return sqrt(s);
}

/// Columns of generator values at p; generators undefined at p give a zero
/// column so coefficient indices stay aligned.
inline std::vector<WideVector> generator_columns(std::span<const VectorField> gens, const Point& p) {
    const WideVector wp = widen(p);
    std::vector<WideVector> cols;
    cols.reserve(gens.size());
    for (const auto& g : gens) {
        WideVector c(p.size(), WideReal(0.0));
        try {
            if (g.contains<WideReal>(wp)) c = g.at<WideReal>(wp);
        } catch (const DomainError&) {
        }
        cols.push_back(std::move(c));
    }
    return cols;
}
}  // namespace detail

enum class ResidualScale {
    absolute,  // residual <= tol * (1 + ||target||)
    relative,  // residual <= tol * ||target||; flat targets keep their direction
};

/// Per point, the minimum-norm least-squares coefficients of the target in
/// terms of the generator values. `fit` iff every residual passes the scale
/// test and every |coefficient| is at most cap; `coefficient-blowup` iff
/// only the cap is violated.
inline FitReport fit_coefficients(const std::vector<FitTarget>& targets, std::span<const VectorField> generators,
                                  double cap = kDefaultCap, double tol = kDefaultFitTol,
                                  ResidualScale scale = ResidualScale::absolute) {
    FitReport rep;
    double worst_ratio = 0.0, worst_coef = 0.0;
    std::optional<Point> residual_witness, coef_witness;
    bool any_residual = false, any_blowup = false;

    for (const auto& t : targets) {
        const auto cols = detail::generator_columns(generators, t.point);
        const WideLeastSquares ls = wide_min_norm_lstsq(cols, t.value);
        PointFit pf;
        pf.point = t.point;
        WideReal max_c(0.0);
        for (const auto& c : ls.coefficients) {
            pf.coefficients.push_back(c.to_double());
            max_c = std::max(max_c, abs(c));
        }
        const WideReal tn = detail::wide_norm(t.value);
        const WideReal bound = WideReal(tol) * (scale == ResidualScale::absolute ? WideReal(1.0) + tn : tn);
        pf.residual = ls.residual.to_double();
        pf.max_coefficient = max_c.to_double();
        pf.residual_ok = ls.residual <= bound;
        pf.bounded = max_c <= WideReal(cap);

        rep.max_residual = std::max(rep.max_residual, pf.residual);
        rep.max_coefficient = std::max(rep.max_coefficient, pf.max_coefficient);
        if (!pf.residual_ok) {
            any_residual = true;
            const double ratio = bound.is_zero() ? HUGE_VAL : (ls.residual / bound).to_double();
            if (ratio > worst_ratio || !residual_witness) {
                worst_ratio = ratio;
                residual_witness = t.point;
            }
        } else if (!pf.bounded) {
            any_blowup = true;
            if (pf.max_coefficient > worst_coef || !coef_witness) {
                worst_coef = pf.max_coefficient;
                coef_witness = t.point;
            }
        }
        rep.points.push_back(std::move(pf));
    }
    if (any_residual) {
        rep.status = FitStatus::residual_failure;
        rep.witness = residual_witness;
    } else if (any_blowup) {
        rep.status = FitStatus::coefficient_blowup;
        rep.witness = coef_witness;
    }
    return rep;
}

inline FitReport fit_coefficients(const std::vector<FitTarget>& targets, const Family& generators,
                                  double cap = kDefaultCap, double tol = kDefaultFitTol,
                                  ResidualScale scale = ResidualScale::absolute) {
    const auto gens = generators.materialize();
    return fit_coefficients(targets, std::span<const VectorField>(gens), cap, tol, scale);
}

/// Pointwise containment with no bound on coefficients: the target,
/// normalized, must lie within `tol` of the span of the normalized generator
/// values (numerical rank cut 1e-10). Status is `fit` or `residual-failure`;
/// `residual` in each PointFit is the normalized residual.
inline FitReport fit_pointwise(const std::vector<FitTarget>& targets, std::span<const VectorField> generators,
                               double tol = kDefaultFitTol) {
    FitReport rep;
    double worst = 0.0;
    for (const auto& t : targets) {
        const auto cols = detail::generator_columns(generators, t.point);
        PointFit pf;
        pf.point = t.point;
        const WideReal tn = detail::wide_norm(t.value);
        if (!tn.is_zero()) {
            std::vector<Vector> unit_cols;
            for (const auto& c : cols) {
                const WideReal cn = detail::wide_norm(c);
                if (cn.is_zero()) continue;
                Vector u;
                for (const auto& x : c) u.push_back((x / cn).to_double());
                unit_cols.push_back(std::move(u));
            }
            Vector ut;
            for (const auto& x : t.value) ut.push_back((x / tn).to_double());
            const auto q = unit_cols.empty() ? std::vector<Vector>{}
                                             : orthonormal_range(columns_to_matrix(unit_cols, ut.size()), 1e-10);
            pf.residual = norm(orthogonal_residual(q, ut));
            pf.residual_ok = pf.residual <= tol;
        }
        rep.max_residual = std::max(rep.max_residual, pf.residual);
        if (!pf.residual_ok && (pf.residual > worst || !rep.witness)) {
            worst = pf.residual;
            rep.witness = t.point;
            rep.status = FitStatus::residual_failure;
        }
        rep.points.push_back(std::move(pf));
    }
    return rep;
}

}  // namespace orbitkit
