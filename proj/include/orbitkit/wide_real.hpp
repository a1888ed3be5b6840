#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace orbitkit {

/// Real number stored as a double mantissa in [0.5, 1) and a 64-bit binary
/// exponent. Precision is that of a double; the exponent range is large
/// enough that e^{-1/r^2} stays nonzero for any r a double can hold.
///
/// Flat functions underflow to exactly zero in double long before their
/// ratios (the coefficients a bracket fit needs) become interesting. Fits are
/// evaluated in this type so those ratios stay computable.
class WideReal {
public:
    constexpr WideReal() = default;
    WideReal(double v) { assign(v, 0); }  // NOLINT(google-explicit-constructor)

    static WideReal from_parts(double mantissa, std::int64_t exponent) {
        WideReal r;
        r.assign(mantissa, exponent);
        return r;
    }

    [[nodiscard]] double mantissa() const { return mant_; }
    [[nodiscard]] std::int64_t exponent() const { return exp_; }
    [[nodiscard]] bool is_zero() const { return mant_ == 0.0; }
    [[nodiscard]] bool is_finite() const { return std::isfinite(mant_); }

    /// Saturating conversion: values below the double range become 0, values
    /// above it become +-inf.
    [[nodiscard]] double to_double() const {
        if (mant_ == 0.0 || !std::isfinite(mant_)) return mant_;
        if (exp_ > 2000) return mant_ > 0 ? HUGE_VAL : -HUGE_VAL;
        if (exp_ < -2000) return mant_ > 0 ? 0.0 : -0.0;
        return std::ldexp(mant_, static_cast<int>(exp_));
    }

    /// log2(|x|), finite for every nonzero value.
    [[nodiscard]] double log2_abs() const {
        return std::log2(std::fabs(mant_)) + static_cast<double>(exp_);
    }

    WideReal operator-() const { return from_raw(-mant_, exp_); }

    friend WideReal operator*(const WideReal& a, const WideReal& b) {
        WideReal r;
        r.assign(a.mant_ * b.mant_, a.exp_ + b.exp_);
        return r;
    }
    friend WideReal operator/(const WideReal& a, const WideReal& b) {
        WideReal r;
        r.assign(a.mant_ / b.mant_, a.exp_ - b.exp_);
        return r;
    }
    friend WideReal operator+(const WideReal& a, const WideReal& b) {
        if (a.mant_ == 0.0) return b;
        if (b.mant_ == 0.0) return a;
        if (!a.is_finite() || !b.is_finite()) return WideReal(a.mant_ + b.mant_);
        const std::int64_t d = a.exp_ - b.exp_;
        if (d > 60) return a;
        if (d < -60) return b;
        WideReal r;
        if (d >= 0) {
            r.assign(a.mant_ + std::ldexp(b.mant_, static_cast<int>(-d)), a.exp_);
        } else {
            r.assign(std::ldexp(a.mant_, static_cast<int>(d)) + b.mant_, b.exp_);
        }
        return r;
    }
    friend WideReal operator-(const WideReal& a, const WideReal& b) { return a + (-b); }

    WideReal& operator+=(const WideReal& o) { return *this = *this + o; }
    WideReal& operator-=(const WideReal& o) { return *this = *this - o; }
    WideReal& operator*=(const WideReal& o) { return *this = *this * o; }
    WideReal& operator/=(const WideReal& o) { return *this = *this / o; }

    friend bool operator==(const WideReal& a, const WideReal& b) {
        return a.mant_ == b.mant_ && (a.mant_ == 0.0 || a.exp_ == b.exp_);
    }
    friend bool operator<(const WideReal& a, const WideReal& b) { return compare(a, b) < 0; }
    friend bool operator>(const WideReal& a, const WideReal& b) { return compare(a, b) > 0; }
    friend bool operator<=(const WideReal& a, const WideReal& b) { return compare(a, b) <= 0; }
    friend bool operator>=(const WideReal& a, const WideReal& b) { return compare(a, b) >= 0; }

private:
    static WideReal from_raw(double m, std::int64_t e) {
        WideReal r;
        r.mant_ = m;
        r.exp_ = e;
        return r;
    }

    void assign(double m, std::int64_t e) {
        if (m == 0.0 || !std::isfinite(m)) {
            mant_ = m;
            exp_ = 0;
            return;
        }
        int k = 0;
        mant_ = std::frexp(m, &k);
        exp_ = e + k;
    }

    static int compare(const WideReal& a, const WideReal& b) {
        const int sa = (a.mant_ > 0) - (a.mant_ < 0);
        const int sb = (b.mant_ > 0) - (b.mant_ < 0);
        if (sa != sb) return sa < sb ? -1 : 1;
        if (sa == 0) return 0;
        int mag = 0;
        if (a.exp_ != b.exp_) {
            mag = a.exp_ < b.exp_ ? -1 : 1;
        } else {
            const double fa = std::fabs(a.mant_), fb = std::fabs(b.mant_);
            mag = (fa > fb) - (fa < fb);
        }
        return sa > 0 ? mag : -mag;
    }

    double mant_ = 0.0;
    std::int64_t exp_ = 0;
};

inline WideReal abs(const WideReal& x) { return x.mantissa() < 0 ? -x : x; }

inline WideReal sqrt(const WideReal& x) {
    if (x.is_zero()) return x;
    std::int64_t e = x.exponent();
    double m = x.mantissa();
    if (e % 2 != 0) {
        m *= 2.0;
        e -= 1;
    }
    return WideReal::from_parts(std::sqrt(m), e / 2);
}

/// exp for arguments far outside the double range of exp(). Arguments whose
/// magnitude exceeds ~1e18 saturate (0 or inf).
inline WideReal exp(const WideReal& x) {
    const double xd = x.to_double();
    if (!std::isfinite(xd)) return xd > 0 ? WideReal(HUGE_VAL) : WideReal(0.0);
    if (std::fabs(xd) < 700.0) return WideReal(std::exp(xd));
    if (std::fabs(xd) > 1e18) return xd > 0 ? WideReal(HUGE_VAL) : WideReal(0.0);
    const double y = xd / std::numbers::ln2;
    const double k = std::floor(y);
    const double frac = xd - k * std::numbers::ln2;
    return WideReal::from_parts(std::exp(frac), static_cast<std::int64_t>(k));
}

inline WideReal sin(const WideReal& x) { return WideReal(std::sin(x.to_double())); }
inline WideReal cos(const WideReal& x) { return WideReal(std::cos(x.to_double())); }

inline WideReal pow(WideReal base, int n) {
    const bool invert = n < 0;
    unsigned k = invert ? static_cast<unsigned>(-static_cast<long>(n)) : static_cast<unsigned>(n);
    WideReal acc(1.0);
    while (k != 0) {
        if (k & 1u) acc *= base;
        base *= base;
        k >>= 1u;
    }
    return invert ? WideReal(1.0) / acc : acc;
}

}  // namespace orbitkit
