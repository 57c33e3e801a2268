#pragma once

#include <cmath>
#include <limits>
#include <ostream>

#include "specvar/errors.hpp"

namespace specvar {

// A finite real or +inf.
class ExtendedValue {
public:
    ExtendedValue() = default;

    ExtendedValue(double v) {  // NOLINT(google-explicit-constructor)
        if (std::isnan(v)) throw Error(ErrorKind::NonFinite, "ExtendedValue: NaN");
        if (v == -std::numeric_limits<double>::infinity())
            throw Error(ErrorKind::NonFinite, "ExtendedValue: -inf is not representable");
        if (std::isinf(v)) {
            infinite_ = true;
        } else {
            value_ = v;
        }
    }

    static ExtendedValue infinity() {
        ExtendedValue e;
        e.infinite_ = true;
        return e;
    }

    bool is_finite() const noexcept { return !infinite_; }
    bool is_infinite() const noexcept { return infinite_; }

    double value() const {
        if (infinite_) throw Error(ErrorKind::NonFinite, "ExtendedValue: value() of +inf");
        return value_;
    }

    double as_double() const noexcept {
        return infinite_ ? std::numeric_limits<double>::infinity() : value_;
    }

    friend ExtendedValue operator+(const ExtendedValue& a, const ExtendedValue& b) {
        if (a.infinite_ || b.infinite_) return infinity();
        return ExtendedValue(a.value_ + b.value_);
    }

    // Scaling by c >= 0; 0 * inf is taken as 0.
    friend ExtendedValue operator*(double c, const ExtendedValue& a) {
        if (c < 0) throw Error(ErrorKind::AssumptionViolated, "ExtendedValue: negative scale");
        if (a.infinite_) return c == 0 ? ExtendedValue(0.0) : infinity();
        return ExtendedValue(c * a.value_);
    }

    friend bool operator==(const ExtendedValue& a, const ExtendedValue& b) {
        return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
    }
    friend bool operator<(const ExtendedValue& a, const ExtendedValue& b) {
        return a.as_double() < b.as_double();
    }
    friend bool operator<=(const ExtendedValue& a, const ExtendedValue& b) { return !(b < a); }
    friend bool operator>(const ExtendedValue& a, const ExtendedValue& b) { return b < a; }
    friend bool operator>=(const ExtendedValue& a, const ExtendedValue& b) { return !(a < b); }

    friend std::ostream& operator<<(std::ostream& os, const ExtendedValue& a) {
        if (a.infinite_) return os << "+inf";
        return os << a.value_;
    }

private:
    double value_ = 0.0;
    bool infinite_ = false;
};

}  // namespace specvar
