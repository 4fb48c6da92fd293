#pragma once

// Signed fixed-point fractions and the widened saturating accumulator.
//
// A Fraction with n bits holds a numerator N in [-2^(n-1), 2^(n-1)-1] and
// represents N / 2^(n-1), i.e. a value in [-1, 1). A WideValue keeps the same
// scale but has g extra guard bits of integer range, so with the default
// g = 3 an 8-bit datapath carries 11-bit intermediates in [-8, 8).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>

#include "elsa/error.hpp"

namespace elsa {

inline constexpr int kMinBits = 2;
inline constexpr int kMaxBits = 16;
inline constexpr int kDefaultGuardBits = 3;
inline constexpr int kMaxGuardBits = 12;

namespace fxp_detail {

constexpr std::int64_t max_numerator(int total_bits) {
  return (std::int64_t{1} << (total_bits - 1)) - 1;
}
constexpr std::int64_t min_numerator(int total_bits) {
  return -(std::int64_t{1} << (total_bits - 1));
}
constexpr std::int32_t clamp_to(std::int64_t v, int total_bits) {
  return static_cast<std::int32_t>(
      std::clamp(v, min_numerator(total_bits), max_numerator(total_bits)));
}

inline void check_bits(int bits) {
  if (bits < kMinBits || bits > kMaxBits)
    throw ContractViolation("fraction width must be in [2, 16] bits, got " +
                            std::to_string(bits));
}

inline void check_guard(int guard) {
  if (guard < 0 || guard > kMaxGuardBits)
    throw ContractViolation("guard bits must be in [0, 12], got " +
                            std::to_string(guard));
}

}  // namespace fxp_detail

class Fraction {
 public:
  Fraction() = default;

  Fraction(std::int32_t numerator, int bits) : num_(numerator), bits_(bits) {
    fxp_detail::check_bits(bits);
    if (numerator < fxp_detail::min_numerator(bits) ||
        numerator > fxp_detail::max_numerator(bits))
      throw ContractViolation("numerator " + std::to_string(numerator) +
                              " out of range for " + std::to_string(bits) +
                              "-bit fraction");
  }

  static Fraction zero(int bits) { return Fraction(0, bits); }
  static Fraction max(int bits) {
    fxp_detail::check_bits(bits);
    return Fraction(static_cast<std::int32_t>(fxp_detail::max_numerator(bits)),
                    bits);
  }
  static Fraction min(int bits) {
    fxp_detail::check_bits(bits);
    return Fraction(static_cast<std::int32_t>(fxp_detail::min_numerator(bits)),
                    bits);
  }
  // Clamps instead of rejecting out-of-range numerators.
  static Fraction saturate(std::int64_t numerator, int bits) {
    fxp_detail::check_bits(bits);
    return Fraction(fxp_detail::clamp_to(numerator, bits), bits);
  }

  std::int32_t numerator() const { return num_; }
  int bits() const { return bits_; }
  std::int32_t scale() const { return std::int32_t{1} << (bits_ - 1); }
  double to_real() const { return static_cast<double>(num_) / scale(); }

  // n-bit two's complement pattern of the numerator.
  std::uint32_t pattern() const {
    return static_cast<std::uint32_t>(num_) & ((std::uint32_t{1} << bits_) - 1);
  }
  // Bit x_k of the two's complement encoding, k in [0, n-1]; x_{n-1} is the sign.
  bool bit(int k) const { return ((pattern() >> k) & 1U) != 0; }
  bool sign_bit() const { return num_ < 0; }

  friend bool operator==(const Fraction&, const Fraction&) = default;

 private:
  std::int32_t num_ = 0;
  int bits_ = 8;
};

class WideValue {
 public:
  WideValue() = default;

  // `bits` is the operand width n that fixes the scale 1/2^(n-1);
  // the numerator range is that of an (n + guard)-bit integer.
  WideValue(std::int32_t numerator, int bits, int guard = kDefaultGuardBits)
      : num_(numerator), bits_(bits), guard_(guard) {
    fxp_detail::check_bits(bits);
    fxp_detail::check_guard(guard);
    if (numerator < fxp_detail::min_numerator(bits + guard) ||
        numerator > fxp_detail::max_numerator(bits + guard))
      throw ContractViolation("numerator " + std::to_string(numerator) +
                              " out of range for " +
                              std::to_string(bits + guard) + "-bit wide value");
  }

  static WideValue zero(int bits, int guard = kDefaultGuardBits) {
    return WideValue(0, bits, guard);
  }
  static WideValue max(int bits, int guard = kDefaultGuardBits) {
    fxp_detail::check_bits(bits);
    fxp_detail::check_guard(guard);
    return WideValue(
        static_cast<std::int32_t>(fxp_detail::max_numerator(bits + guard)),
        bits, guard);
  }
  static WideValue min(int bits, int guard = kDefaultGuardBits) {
    fxp_detail::check_bits(bits);
    fxp_detail::check_guard(guard);
    return WideValue(
        static_cast<std::int32_t>(fxp_detail::min_numerator(bits + guard)),
        bits, guard);
  }
  static WideValue saturate(std::int64_t numerator, int bits,
                            int guard = kDefaultGuardBits) {
    fxp_detail::check_bits(bits);
    fxp_detail::check_guard(guard);
    return WideValue(fxp_detail::clamp_to(numerator, bits + guard), bits, guard);
  }

  std::int32_t numerator() const { return num_; }
  int bits() const { return bits_; }
  int guard() const { return guard_; }
  int total_bits() const { return bits_ + guard_; }
  std::int32_t scale() const { return std::int32_t{1} << (bits_ - 1); }
  double to_real() const { return static_cast<double>(num_) / scale(); }

  friend bool operator==(const WideValue&, const WideValue&) = default;

 private:
  std::int32_t num_ = 0;
  int bits_ = 8;
  int guard_ = kDefaultGuardBits;
};

inline double to_real(const Fraction& f) { return f.to_real(); }
inline double to_real(const WideValue& v) { return v.to_real(); }

// Round-to-nearest (ties away from zero), then clamp to the fraction range.
inline Fraction quantize(double x, int bits, bool* clamped = nullptr) {
  fxp_detail::check_bits(bits);
  require(!std::isnan(x), "quantize: NaN input");
  const double scaled = std::round(std::ldexp(x, bits - 1));
  const double lo = static_cast<double>(fxp_detail::min_numerator(bits));
  const double hi = static_cast<double>(fxp_detail::max_numerator(bits));
  if (clamped != nullptr) *clamped = scaled < lo || scaled > hi;
  return Fraction(static_cast<std::int32_t>(std::clamp(scaled, lo, hi)), bits);
}

inline WideValue quantize_wide(double x, int bits,
                               int guard = kDefaultGuardBits,
                               bool* clamped = nullptr) {
  fxp_detail::check_bits(bits);
  fxp_detail::check_guard(guard);
  require(!std::isnan(x), "quantize_wide: NaN input");
  const double scaled = std::round(std::ldexp(x, bits - 1));
  const double lo = static_cast<double>(fxp_detail::min_numerator(bits + guard));
  const double hi = static_cast<double>(fxp_detail::max_numerator(bits + guard));
  if (clamped != nullptr) *clamped = scaled < lo || scaled > hi;
  return WideValue(static_cast<std::int32_t>(std::clamp(scaled, lo, hi)), bits,
                   guard);
}

// Number of cycles the original multiplier runs when `w` drives the stream.
inline std::int32_t stream_length(const Fraction& w) {
  return std::abs(w.numerator());
}

// Saturating add. Not associative once an intermediate hits a rail.
inline WideValue sat_add(const WideValue& a, const WideValue& b) {
  require(a.bits() == b.bits() && a.guard() == b.guard(),
          "sat_add: operand widths differ");
  return WideValue::saturate(
      std::int64_t{a.numerator()} + std::int64_t{b.numerator()}, a.bits(),
      a.guard());
}

inline Fraction narrow(const WideValue& v) {
  return Fraction::saturate(v.numerator(), v.bits());
}

inline Fraction narrow(const WideValue& v, int bits) {
  require(bits == v.bits(), "narrow: target width must match the value scale");
  return narrow(v);
}

inline WideValue widen(const Fraction& f, int guard = kDefaultGuardBits) {
  return WideValue(f.numerator(), f.bits(), guard);
}

}  // namespace elsa
