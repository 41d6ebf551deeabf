#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace qhyper {

/// Complex number stored as mantissa * 2^exponent so that long products of
/// Pochhammer factors neither overflow nor underflow. The magnitude lives in
/// the binary exponent, the phase in the mantissa.
class ScaledComplex {
 public:
  using value_type = std::complex<double>;

  ScaledComplex() = default;
  explicit ScaledComplex(value_type v) : re_(v.real()), im_(v.imag()) {
    normalize();
  }

  static ScaledComplex zero() {
    ScaledComplex z;
    z.re_ = 0.0;
    z.im_ = 0.0;
    return z;
  }

  /// mantissa * 2^exp2, renormalized.
  static ScaledComplex from_parts(value_type mantissa, std::int64_t exp2) {
    ScaledComplex z;
    z.re_ = mantissa.real();
    z.im_ = mantissa.imag();
    z.exp2_ = exp2;
    z.normalize();
    return z;
  }

  bool is_zero() const { return re_ == 0.0 && im_ == 0.0; }
  value_type mantissa() const { return {re_, im_}; }
  std::int64_t exponent() const { return exp2_; }

  void mul(value_type f) {
    const double r = re_ * f.real() - im_ * f.imag();
    const double i = re_ * f.imag() + im_ * f.real();
    re_ = r;
    im_ = i;
    check_range();
  }

  void div(value_type f) {
    // Smith's algorithm keeps the intermediate in range.
    const double a = f.real();
    const double b = f.imag();
    double r;
    double i;
    if (std::abs(a) >= std::abs(b)) {
      const double t = b / a;
      const double d = a + b * t;
      r = (re_ + im_ * t) / d;
      i = (im_ - re_ * t) / d;
    } else {
      const double t = a / b;
      const double d = a * t + b;
      r = (re_ * t + im_) / d;
      i = (im_ * t - re_) / d;
    }
    re_ = r;
    im_ = i;
    check_range();
  }

  ScaledComplex& operator*=(const ScaledComplex& o) {
    mul(o.mantissa());
    exp2_ += o.exp2_;
    return *this;
  }

  ScaledComplex& operator/=(const ScaledComplex& o) {
    div(o.mantissa());
    exp2_ -= o.exp2_;
    return *this;
  }

  friend ScaledComplex operator*(ScaledComplex a, const ScaledComplex& b) {
    a *= b;
    return a;
  }
  friend ScaledComplex operator/(ScaledComplex a, const ScaledComplex& b) {
    a /= b;
    return a;
  }

  /// Principal log of the represented value (magnitude part is exact up to
  /// rounding of the mantissa).
  value_type log() const {
    return std::log(mantissa()) +
           static_cast<double>(exp2_) * 0.69314718055994530942;
  }

  /// Plain complex value; overflows to inf / underflows to 0 when the
  /// exponent is out of double range.
  value_type value() const {
    if (is_zero()) return {0.0, 0.0};
    const auto e = static_cast<int>(
        exp2_ > 4000 ? 4000 : (exp2_ < -4000 ? -4000 : exp2_));
    return {std::ldexp(re_, e), std::ldexp(im_, e)};
  }

  /// Principal square root.
  ScaledComplex sqrt() const {
    ScaledComplex s = *this;
    if (s.is_zero()) return s;
    if (s.exp2_ % 2 != 0) {
      s.re_ *= 2.0;
      s.im_ *= 2.0;
      s.exp2_ -= 1;
    }
    const auto root = std::sqrt(s.mantissa());
    s.re_ = root.real();
    s.im_ = root.imag();
    s.exp2_ /= 2;
    s.normalize();
    return s;
  }

  double log_abs() const {
    return std::log(std::abs(mantissa())) +
           static_cast<double>(exp2_) * 0.69314718055994530942;
  }

 private:
  void check_range() {
    const double a = std::fmax(std::fabs(re_), std::fabs(im_));
    if (a > 0x1p300 || (a < 0x1p-300 && a != 0.0)) normalize();
  }

  void normalize() {
    const double a = std::fmax(std::fabs(re_), std::fabs(im_));
    if (a == 0.0 || !std::isfinite(a)) return;
    int e = 0;
    std::frexp(a, &e);
    re_ = std::ldexp(re_, -e);
    im_ = std::ldexp(im_, -e);
    exp2_ += e;
  }

  double re_ = 1.0;
  double im_ = 0.0;
  std::int64_t exp2_ = 0;
};

}  // namespace qhyper
