#pragma once

// Sampled orbits and attainable sets, and the saturated distribution at a
// point (the tangent space of the orbit).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iomanip>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "orbitkit/flows.hpp"
#include "orbitkit/frames.hpp"
#include "orbitkit/parallel.hpp"
#include "orbitkit/sampling.hpp"

namespace orbitkit {

inline constexpr double kDefaultCell = 0.05;

using CellKey = std::vector<std::int64_t>;

inline CellKey cell_of(const Point& p, double cell) {
    CellKey k;
    k.reserve(p.size());
    for (double x : p) k.push_back(static_cast<std::int64_t>(std::floor(x / cell)));
    return k;
}

struct OrbitCloud {
    Point base;
    std::vector<Point> points;  // points[0] is the base point
    std::vector<Word> words;    // words[i] carries base to points[i]
    double cell = kDefaultCell;
    std::uint64_t seed = 0;
    long budget_spent = 0;
    long failures = 0;

    [[nodiscard]] std::set<CellKey> cells() const {
        std::set<CellKey> out;
        for (const auto& p : points) out.insert(cell_of(p, cell));
        return out;
    }
};

struct OrbitOptions {
    long budget = 2000;
    double tmax = 1.0;
    std::uint64_t seed = 0;
    double tol = kDefaultFlowTol;
    double cell = kDefaultCell;
    unsigned threads = 1;
};

namespace detail {

inline OrbitCloud sample_cloud(const Family& f, const Point& x0, const OrbitOptions& opt, bool attainable) {
    if (opt.budget <= 0) throw std::invalid_argument("orbit budget must be positive");
    if (!(opt.tmax > 0.0)) throw std::invalid_argument("orbit tmax must be positive");
    if (x0.size() != f.dimension) throw DimensionMismatch("start point dimension does not match family");

    OrbitCloud cloud;
    cloud.base = x0;
    cloud.cell = opt.cell;
    cloud.seed = opt.seed;
    cloud.points.push_back(x0);
    cloud.words.emplace_back();
    std::set<CellKey> seen{cell_of(x0, opt.cell)};

    const auto fields = f.materialize();
    if (fields.empty()) return cloud;
    const auto compiled = compile(fields);

    Rng rng(opt.seed);
    std::size_t next_parent = 0;
    constexpr long kBatch = 32;

    struct Candidate {
        std::size_t parent;
        WordStep step;
        FlowResult result;
        Word word;
    };

    while (cloud.budget_spent < opt.budget) {
        const long count = std::min(kBatch, opt.budget - cloud.budget_spent);
        std::vector<Candidate> batch(static_cast<std::size_t>(count));
        const std::size_t stored = cloud.points.size();
        for (auto& c : batch) {
            c.parent = next_parent++ % stored;
            c.step.index = rng.index(compiled.size());
            c.step.time = attainable ? rng.uniform(0.0, opt.tmax) : rng.uniform(-opt.tmax, opt.tmax);
        }
        parallel_for(batch.size(), opt.threads, [&](std::size_t i) {
            Candidate& c = batch[i];
            c.result = integrate(compiled[c.step.index], cloud.points[c.parent], c.step.time, opt.tol, false);
            c.word = cloud.words[c.parent];
            c.word.push_back(c.step);
        });
        cloud.budget_spent += count;

        std::vector<std::size_t> order(batch.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return word_less(batch[a].word, batch[b].word); });
        for (std::size_t i : order) {
            Candidate& c = batch[i];
            if (!c.result.ok()) {
                ++cloud.failures;
                continue;
            }
            if (seen.insert(cell_of(c.result.endpoint, opt.cell)).second) {
                cloud.points.push_back(std::move(c.result.endpoint));
                cloud.words.push_back(std::move(c.word));
            }
        }
    }
    return cloud;
}

}  // namespace detail

/// Breadth-first sampling of the F-orbit of x0: parents are visited
/// round-robin, members and times (uniform in [-tmax, tmax]) are drawn from a
/// seeded stream, and an endpoint is kept when its hash cell is new. Flows
/// run in batches of 32; each batch is committed in (word length, word)
/// order, so the cloud does not depend on the thread count.
inline OrbitCloud sample_orbit(const Family& f, const Point& x0, const OrbitOptions& opt = {}) {
    return detail::sample_cloud(f, x0, opt, false);
}

/// As sample_orbit with times drawn from [0, tmax].
inline OrbitCloud sample_attainable(const Family& f, const Point& x0, const OrbitOptions& opt = {}) {
    return detail::sample_cloud(f, x0, opt, true);
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string word_to_string(const Word& w) {
    std::string s;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i) s += ';';
        s += std::to_string(w[i].index) + ':' + format_double(w[i].time);
    }
    return s;
}

/// CSV with header x1,...,xn,word.
inline void write_cloud_csv(std::ostream& os, const OrbitCloud& c) {
    for (std::size_t i = 0; i < c.base.size(); ++i) os << 'x' << (i + 1) << ',';
    os << "word\n";
    for (std::size_t k = 0; k < c.points.size(); ++k) {
        for (double x : c.points[k]) os << format_double(x) << ',';
        os << word_to_string(c.words[k]) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Saturation

struct Saturation {
    int dim = 0;
    SubspaceBasis basis;  // orthonormal vectors at the base point
    bool stable = true;   // false when the budget ran out while still growing
    long flows_used = 0;
};

struct SaturationOptions {
    long budget = 2000;
    double tol = kDefaultRankTol;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    double flow_tol = 1e-10;
    double tmax = 2.0;
    int sweep = 64;
    int max_word = 3;
};

namespace detail {

/// Adjoins v to the orthonormal set q when it is numerically independent.
inline bool adjoin(std::vector<Vector>& q, const Vector& v, double rel) {
    const double nv = norm(v);
    if (!(nv > kRankAbsoluteFloor)) return false;
    Vector r = orthogonal_residual(q, v);
    const double nr = norm(r);
    if (!(nr > rel * nv)) return false;
    for (double& x : r) x /= nr;
    q.push_back(std::move(r));
    return true;
}

}  // namespace detail

/// Smallest F-invariant subspace at x0 containing D^F_{x0}, estimated by
/// pulling member values back from points on random words: for a word with
/// endpoint y and Jacobian J, J^{-1} X(y) lies in the orbit's tangent space
/// at x0. Sweeps of random words continue until a full sweep adds nothing,
/// the dimension reaches n, or the flow budget is spent.
inline Saturation orbit_tangent_dim(const Family& f, const Point& x0, const SaturationOptions& opt = {}) {
    if (opt.budget <= 0) throw std::invalid_argument("saturation budget must be positive");
    const std::size_t n = f.dimension;
    if (x0.size() != n) throw DimensionMismatch("start point dimension does not match family");

    const auto fields = f.materialize();
    const std::vector<Vector> at_x0 = member_values(fields, x0);
    std::vector<Vector> q = at_x0.empty() ? std::vector<Vector>{}
                                          : orthonormal_range(columns_to_matrix(at_x0, n), opt.tol);
    Saturation out;
    auto done = [&](bool stable) {
        out.dim = static_cast<int>(q.size());
        out.basis = SubspaceBasis(x0, q, opt.tol);
        out.stable = stable;
        return out;
    };

    bool all_zero = true;
    for (const auto& v : at_x0) {
        for (double c : v) all_zero = all_zero && c == 0.0;
    }
    if (all_zero) return done(true);  // every flow fixes x0

    const auto compiled = compile(fields);
    const double rel = std::max(1e-6, opt.tol);
    Rng rng(opt.seed);

    while (q.size() < n) {
        if (out.flows_used >= opt.budget) return done(false);
        std::vector<Word> words(static_cast<std::size_t>(opt.sweep));
        for (auto& w : words) {
            const int len = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(opt.max_word)));
            for (int s = 0; s < len; ++s) {
                w.push_back({rng.index(compiled.size()), rng.uniform(-opt.tmax, opt.tmax)});
            }
        }
        // Trim the sweep to the remaining budget.
        long remaining = opt.budget - out.flows_used;
        std::size_t used_words = 0;
        for (; used_words < words.size(); ++used_words) {
            const long len = static_cast<long>(words[used_words].size());
            if (len > remaining) break;
            remaining -= len;
        }
        words.resize(used_words);
        if (words.empty()) return done(false);

        std::vector<std::vector<Vector>> pulled(words.size());
        std::vector<long> flows(words.size(), 0);
        parallel_for(words.size(), opt.threads, [&](std::size_t wi) {
            Point y = x0;
            Eigen::MatrixXd j = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
            for (const auto& step : words[wi]) {
                FlowResult r = integrate(compiled[step.index], y, step.time, opt.flow_tol, true);
                ++flows[wi];
                if (!r.ok()) break;
                y = std::move(r.endpoint);
                j = (*r.jacobian) * j;
                const Eigen::PartialPivLU<Eigen::MatrixXd> lu(j);
                for (const auto& field : fields) {
                    if (!field.contains(y)) continue;
                    Vector v;
                    try {
                        v = field.at(y);
                    } catch (const DomainError&) {
                        continue;
                    }
                    const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(n));
                    const Eigen::VectorXd u = lu.solve(b);
                    if (!u.allFinite()) continue;
                    pulled[wi].emplace_back(u.data(), u.data() + n);
                }
            }
        });

        bool grew = false;
        for (std::size_t wi = 0; wi < words.size(); ++wi) {
            out.flows_used += flows[wi];
            for (const auto& v : pulled[wi]) {
                if (q.size() >= n) break;
                grew = detail::adjoin(q, v, rel) || grew;
            }
        }
        if (!grew) return done(static_cast<int>(used_words) == opt.sweep || q.size() >= n);
    }
    return done(true);
}

}  // namespace orbitkit
