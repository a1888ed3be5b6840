#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "orbitkit/wide_real.hpp"

namespace orbitkit {

using Point = std::vector<double>;
using Vector = std::vector<double>;
using WideVector = std::vector<WideReal>;

/// Singular values below this never count toward a rank.
inline constexpr double kRankAbsoluteFloor = 1e-12;

inline double norm(const Vector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline Eigen::MatrixXd columns_to_matrix(const std::vector<Vector>& cols, std::size_t rows) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        for (std::size_t i = 0; i < rows; ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j][i];
    }
    return m;
}

/// Count of singular values above max(rel_tol * sigma_max, kRankAbsoluteFloor).
inline int numerical_rank(const Eigen::MatrixXd& m, double rel_tol) {
    if (m.size() == 0) return 0;
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0) return 0;
    const double cut = std::max(rel_tol * s(0), kRankAbsoluteFloor);
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) r += s(i) > cut ? 1 : 0;
    return r;
}

/// Orthonormal basis of the numerical column space (same cut as numerical_rank).
inline std::vector<Vector> orthonormal_range(const Eigen::MatrixXd& m, double rel_tol) {
    std::vector<Vector> out;
    if (m.size() == 0) return out;
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    const double cut = std::max(rel_tol * (s.size() ? s(0) : 0.0), kRankAbsoluteFloor);
    for (Eigen::Index j = 0; j < s.size(); ++j) {
        if (s(j) <= cut) break;
        Vector u(static_cast<std::size_t>(m.rows()));
        for (Eigen::Index i = 0; i < m.rows(); ++i) u[static_cast<std::size_t>(i)] = svd.matrixU()(i, j);
        out.push_back(std::move(u));
    }
    return out;
}

/// Component of `v` orthogonal to the span of an orthonormal set.
inline Vector orthogonal_residual(const std::vector<Vector>& orthonormal, const Vector& v) {
    Vector r = v;
    // Two passes of modified Gram-Schmidt.
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& q : orthonormal) {
            double d = 0.0;
            for (std::size_t i = 0; i < r.size(); ++i) d += q[i] * r[i];
            for (std::size_t i = 0; i < r.size(); ++i) r[i] -= d * q[i];
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Minimum-norm least squares over WideReal

struct WideLeastSquares {
    WideVector coefficients;
    WideReal residual;  // ||target - A * coefficients||
    int rank = 0;
};

namespace detail {
inline WideReal dot(const WideVector& a, const WideVector& b) {
    WideReal s(0.0);
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}
}  // namespace detail

/// Minimum-norm least-squares solution of A c = t with A given as columns.
///
/// The rank is decided on the column-normalized matrix (relative cut
/// `rel_tol`), so a column that is tiny but independent still counts. The
/// solution itself comes from a one-sided Jacobi SVD of the raw columns,
/// which keeps small singular values accurate when the columns differ only
/// in scale. The largest `rank` singular triplets are used.
inline WideLeastSquares wide_min_norm_lstsq(const std::vector<WideVector>& cols, const WideVector& target,
                                            double rel_tol = 1e-10) {
    const std::size_t m = cols.size();
    const std::size_t n = target.size();
    WideLeastSquares out;
    out.coefficients.assign(m, WideReal(0.0));

    // Rank of the normalized matrix.
    Eigen::MatrixXd normalized = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < m; ++j) {
        const WideReal nrm = sqrt(detail::dot(cols[j], cols[j]));
        if (nrm.is_zero()) continue;
        for (std::size_t i = 0; i < n; ++i) {
            normalized(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (cols[j][i] / nrm).to_double();
        }
    }
    int rank = 0;
    if (m > 0) {
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(normalized);
        const auto& s = svd.singularValues();
        for (Eigen::Index i = 0; i < s.size(); ++i) rank += s(i) > rel_tol * s(0) && s(i) > 0.0 ? 1 : 0;
    }
    out.rank = rank;

    // One-sided Jacobi on the raw columns: A V = W with W orthogonal columns.
    std::vector<WideVector> w = cols;
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < m; ++p) {
            for (std::size_t q = p + 1; q < m; ++q) {
                const WideReal alpha = detail::dot(w[p], w[p]);
                const WideReal beta = detail::dot(w[q], w[q]);
                const WideReal gamma = detail::dot(w[p], w[q]);
                if (gamma.is_zero() || alpha.is_zero() || beta.is_zero()) continue;
                if (abs(gamma) <= WideReal(1e-15) * sqrt(alpha * beta)) continue;
                const double zeta = ((beta - alpha) / (WideReal(2.0) * gamma)).to_double();
                double t = 0.0;
                if (std::isfinite(zeta)) {
                    t = (zeta >= 0 ? 1.0 : -1.0) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                }
                if (t == 0.0) continue;
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < n; ++i) {
                    const WideReal a = w[p][i], b = w[q][i];
                    w[p][i] = WideReal(c) * a - WideReal(s) * b;
                    w[q][i] = WideReal(s) * a + WideReal(c) * b;
                }
                for (std::size_t i = 0; i < m; ++i) {
                    const double a = v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p));
                    const double b = v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q));
                    v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = c * a - s * b;
                    v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)) = s * a + c * b;
                }
                rotated = true;
            }
        }
        if (!rotated) break;
    }

    std::vector<std::pair<WideReal, std::size_t>> sigma;
    for (std::size_t j = 0; j < m; ++j) sigma.emplace_back(sqrt(detail::dot(w[j], w[j])), j);
    std::stable_sort(sigma.begin(), sigma.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    for (int l = 0; l < rank && static_cast<std::size_t>(l) < sigma.size(); ++l) {
        const auto& [sv, j] = sigma[static_cast<std::size_t>(l)];
        if (sv.is_zero()) break;
        const WideReal weight = detail::dot(w[j], target) / (sv * sv);
        for (std::size_t i = 0; i < m; ++i) {
            out.coefficients[i] += WideReal(v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) * weight;
        }
    }

    WideReal res2(0.0);
    for (std::size_t i = 0; i < n; ++i) {
        WideReal r = target[i];
        for (std::size_t j = 0; j < m; ++j) r -= cols[j][i] * out.coefficients[j];
        res2 += r * r;
    }
    out.residual = sqrt(res2);
    return out;
}

}  // namespace orbitkit
