#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "orbitkit/linalg.hpp"

namespace orbitkit {

/// Seeded generator with a portable uniform draw (the standard
/// distributions are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) % n; }

    /// Uniform direction on the unit sphere of R^n.
    Vector direction(std::size_t n) {
        for (;;) {
            Vector v(n);
            for (auto& x : v) x = uniform(-1.0, 1.0);
            const double r = norm(v);
            if (r > 1e-3 && r <= 1.0) {
                for (auto& x : v) x /= r;
                return v;
            }
        }
    }

private:
    std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed and an index.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline double radical_inverse(std::uint64_t index, unsigned base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (index > 0) {
        r += f * static_cast<double>(index % base);
        index /= base;
        f *= inv;
    }
    return r;
}

/// Axis-aligned box, optionally cut to the shell r_min <= |p - center| <= r_max
/// around its center.
struct Region {
    Point lo;
    Point hi;
    std::optional<double> r_min;
    std::optional<double> r_max;

    static Region box(Point lo, Point hi) { return Region{std::move(lo), std::move(hi), std::nullopt, std::nullopt}; }
    static Region ball(const Point& center, double radius) {
        Region r;
        for (double c : center) {
            r.lo.push_back(c - radius);
            r.hi.push_back(c + radius);
        }
        r.r_max = radius;
        return r;
    }
    static Region shell(const Point& center, double r_in, double r_out) {
        Region r = ball(center, r_out);
        r.r_min = r_in;
        return r;
    }

    [[nodiscard]] std::size_t dimension() const { return lo.size(); }
    [[nodiscard]] Point center() const {
        Point c(lo.size());
        for (std::size_t i = 0; i < lo.size(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
        return c;
    }
    [[nodiscard]] double min_half_width() const {
        double w = HUGE_VAL;
        for (std::size_t i = 0; i < lo.size(); ++i) w = std::min(w, 0.5 * (hi[i] - lo[i]));
        return w;
    }
    [[nodiscard]] bool contains(const Point& p) const {
        for (std::size_t i = 0; i < lo.size(); ++i) {
            if (p[i] < lo[i] || p[i] > hi[i]) return false;
        }
        if (r_min || r_max) {
            const Point c = center();
            double s = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - c[i]) * (p[i] - c[i]);
            const double r = std::sqrt(s);
            if (r_min && r < *r_min) return false;
            if (r_max && r > *r_max) return false;
        }
        return true;
    }
};

/// First `count` Halton points (bases 2, 3, 5, 7, ...) that fall in the region.
inline std::vector<Point> halton_sample(const Region& region, std::size_t count) {
    static constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19};
    const std::size_t n = region.dimension();
    if (n > std::size(kPrimes)) throw std::invalid_argument("halton_sample supports at most 8 dimensions");
    std::vector<Point> out;
    for (std::uint64_t k = 1; out.size() < count && k < 64 * count + 64; ++k) {
        Point p(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = region.lo[i] + (region.hi[i] - region.lo[i]) * radical_inverse(k, kPrimes[i]);
        }
        if (region.contains(p)) out.push_back(std::move(p));
    }
    return out;
}

/// Points center + radius * 2^{-k} * u_k for k = 0..count-1, with directions
/// u_k drawn from a fixed stream. Probes the neighbourhood of a suspected
/// singular point at geometrically shrinking distances.
inline std::vector<Point> approach_sequence(const Point& center, double radius, std::size_t count,
                                            std::uint64_t seed = 0x5eed) {
    Rng rng(seed);
    std::vector<Point> out;
    for (std::size_t k = 0; k < count; ++k) {
        const Vector u = rng.direction(center.size());
        const double r = std::ldexp(radius, -static_cast<int>(k));
        Point p(center.size());
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = center[i] + r * u[i];
        out.push_back(std::move(p));
    }
    return out;
}

/// Sample used by the region-wide checkers: Halton points plus, when the
/// region contains its center, an approach sequence toward the center of
/// radius 0.2 * (smallest half-width).
inline std::vector<Point> region_probe_sample(const Region& region, std::size_t count, std::size_t approach = 16) {
    std::vector<Point> pts = halton_sample(region, count);
    const Point c = region.center();
    if (region.contains(c)) {
        for (auto& p : approach_sequence(c, 0.2 * region.min_half_width(), approach)) {
            if (region.contains(p)) pts.push_back(std::move(p));
        }
    }
    return pts;
}

}  // namespace orbitkit
