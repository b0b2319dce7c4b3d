#pragma once

#include "infhom/types.hpp"

#include <cmath>
#include <string>

namespace infhom {

/// Value in [0, +inf] (or any finite real) with an explicit infinity tag.
/// Infeasibility is never encoded as a large float.
class ExtReal {
public:
    constexpr ExtReal() = default;

    ExtReal(double v) : value_(v) {  // NOLINT(google-explicit-constructor)
        if (!std::isfinite(v)) throw ParameterError("ExtReal: non-finite double " + std::to_string(v));
    }

    static constexpr ExtReal infinity() {
        ExtReal r;
        r.finite_ = false;
        return r;
    }

    constexpr bool is_finite() const noexcept { return finite_; }
    constexpr bool is_infinite() const noexcept { return !finite_; }

    double value() const {
        if (!finite_) throw DomainError("ExtReal: value() of +inf");
        return value_;
    }

    double value_or(double fallback) const noexcept { return finite_ ? value_ : fallback; }

    ExtReal& operator+=(const ExtReal& o) {
        if (!o.finite_) finite_ = false;
        if (finite_) value_ += o.value_;
        return *this;
    }

    friend ExtReal operator+(ExtReal a, const ExtReal& b) { return a += b; }

    /// Scaling by a nonnegative factor; 0 * inf is taken as inf.
    friend ExtReal operator*(double s, const ExtReal& a) {
        if (!a.finite_) return infinity();
        return ExtReal(s * a.value_);
    }

    friend bool operator==(const ExtReal& a, const ExtReal& b) {
        if (a.finite_ != b.finite_) return false;
        return !a.finite_ || a.value_ == b.value_;
    }

    friend bool operator<(const ExtReal& a, const ExtReal& b) {
        if (!a.finite_) return false;
        if (!b.finite_) return true;
        return a.value_ < b.value_;
    }

    friend bool operator<=(const ExtReal& a, const ExtReal& b) { return !(b < a); }
    friend bool operator>(const ExtReal& a, const ExtReal& b) { return b < a; }
    friend bool operator>=(const ExtReal& a, const ExtReal& b) { return !(a < b); }

    friend ExtReal max(const ExtReal& a, const ExtReal& b) { return a < b ? b : a; }
    friend ExtReal min(const ExtReal& a, const ExtReal& b) { return b < a ? b : a; }

    std::string to_string() const;

private:
    double value_ = 0.0;
    bool finite_ = true;
};

}  // namespace infhom
