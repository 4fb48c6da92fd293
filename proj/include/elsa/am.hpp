#pragma once

// Stream-based approximate multiplier (AM).
//
// The multiplier computes Z ~ X * W for n-bit fractions. A selector walks the
// bits of X: at cycle c (1-based) it picks index i = ctz(c) + 1 and emits bit
// x_{n-i}, inverted when i = 1 (the sign bit). So x_{n-i} first appears at
// cycle 2^(i-1) and then every 2^i cycles. Each emitted bit is XORed with the
// sign of W and drives an up-down counter (+1 on one, -1 on zero). A down
// counter loaded with |N(W)| stops the unit, and the counter value is the
// numerator of Z.
//
// The accelerated form folds every sign-bit occurrence (all odd cycles) into
// the counter's initial value, leaving floor(|N(W)|/2) cycles that replay the
// even cycles of the original stream.

#include <array>
#include <bit>
#include <cstdint>
#include <cstdlib>

#include "elsa/error.hpp"
#include "elsa/fxp.hpp"

namespace elsa {

// Stream index picked by the selector at a 1-based cycle.
inline int selected_index(std::uint32_t cycle) {
  return std::countr_zero(cycle) + 1;
}

inline bool stream_bit(const Fraction& x, std::int64_t cycle) {
  const std::int64_t last = std::int64_t{1} << (x.bits() - 1);
  require(cycle >= 1 && cycle <= last, "stream_bit: cycle outside [1, 2^(n-1)]");
  const int i = selected_index(static_cast<std::uint32_t>(cycle));
  const bool b = x.bit(x.bits() - i);
  return i == 1 ? !b : b;
}

struct AmProduct {
  Fraction z;
  std::int64_t cycles = 0;
};

struct PreprocessResult {
  std::int32_t ud_init = 0;
  std::int32_t remaining_cycles = 0;
};

inline PreprocessResult preprocess(const Fraction& x, const Fraction& w) {
  require(x.bits() == w.bits(), "preprocess: operand widths differ");
  const std::int32_t length = stream_length(w);
  const std::int32_t sign_hits = (length + 1) / 2;  // odd cycles 1, 3, 5, ...
  const bool up = (!x.sign_bit()) != w.sign_bit();
  return {up ? sign_hits : -sign_hits, length / 2};
}

enum class AmMode { original, accelerated };

/// Cycle-steppable multiplier state.
class AmState {
 public:
  static AmState start(const Fraction& x, const Fraction& w,
                       AmMode mode = AmMode::original) {
    require(x.bits() == w.bits(), "approximate multiply: operand widths differ");
    AmState s;
    s.x_ = x;
    s.w_sign_ = w.sign_bit();
    s.mode_ = mode;
    if (mode == AmMode::original) {
      s.down_counter_ = stream_length(w);
    } else {
      const PreprocessResult pre = preprocess(x, w);
      s.ud_counter_ = pre.ud_init;
      s.down_counter_ = pre.remaining_cycles;
    }
    s.ud_initial_ = s.ud_counter_;
    return s;
  }

  bool done() const { return down_counter_ == 0; }

  // Advances one clock; returns the bit fed to the up-down counter.
  bool step() {
    require(!done(), "AmState::step: multiplication already complete");
    ++cycle_;
    const std::int64_t source =
        mode_ == AmMode::original ? cycle_ : 2 * std::int64_t{cycle_};
    const bool in = stream_bit(x_, source) != w_sign_;
    ud_counter_ += in ? 1 : -1;
    --down_counter_;
    return in;
  }

  void run() {
    while (!done()) step();
  }

  std::int32_t ud_counter() const { return ud_counter_; }
  std::int32_t ud_initial() const { return ud_initial_; }
  std::int32_t down_counter() const { return down_counter_; }
  std::int32_t cycles() const { return cycle_; }
  AmMode mode() const { return mode_; }

  // Counter value clamped to the fraction range (+2^(n-1) is unrepresentable).
  Fraction result() const { return Fraction::saturate(ud_counter_, x_.bits()); }

 private:
  Fraction x_;
  bool w_sign_ = false;
  AmMode mode_ = AmMode::original;
  std::int32_t down_counter_ = 0;
  std::int32_t ud_counter_ = 0;
  std::int32_t ud_initial_ = 0;
  std::int32_t cycle_ = 0;
};

inline AmProduct am_multiply(const Fraction& x, const Fraction& w) {
  AmState s = AmState::start(x, w, AmMode::original);
  s.run();
  return {s.result(), s.cycles()};
}

inline AmProduct am_multiply_fast(const Fraction& x, const Fraction& w) {
  AmState s = AmState::start(x, w, AmMode::accelerated);
  s.run();
  return {s.result(), s.cycles()};
}

/// Closed form of the final up-down count for a fixed stream driver W.
///
/// Over cycles 1..L the index i is selected floor((L + 2^(i-1)) / 2^i) times,
/// so the count is a per-bit weighted sum over the pattern of X. The weights
/// are folded into byte tables once per driver, which lets every lane of an
/// MVM column (and every MVM fed the same scalar) share them.
class StreamKernel {
 public:
  StreamKernel() = default;

  StreamKernel(int bits, std::int32_t driver_numerator) : bits_(bits) {
    fxp_detail::check_bits(bits);
    length_ = std::abs(driver_numerator);
    const std::int32_t sigma = driver_numerator < 0 ? -1 : 1;

    std::array<std::int32_t, kMaxBits> coef{};
    std::int32_t base = 0;
    for (int i = 1; i <= bits; ++i) {
      const std::int32_t occ =
          (length_ + (std::int32_t{1} << (i - 1))) >> i;
      const int k = bits - i;
      if (i == 1) {
        base += occ;
        coef[k] = -2 * occ;
      } else {
        base -= occ;
        coef[k] = 2 * occ;
      }
    }
    base_ = sigma * base;

    lo_bits_ = bits < 8 ? bits : 8;
    hi_bits_ = bits - lo_bits_;
    fill(lo_, 0, lo_bits_, coef, sigma);
    fill(hi_, 8, hi_bits_, coef, sigma);
  }

  int bits() const { return bits_; }
  std::int32_t length() const { return length_; }

  // Unclamped final counter for a multiplicand with the given n-bit pattern.
  std::int32_t count(std::uint32_t pattern) const {
    return base_ + lo_[pattern & 0xFFU] + hi_[(pattern >> 8) & 0xFFU];
  }

  std::int32_t count(const Fraction& x) const { return count(x.pattern()); }

 private:
  static void fill(std::array<std::int32_t, 256>& table, int first, int count,
                   const std::array<std::int32_t, kMaxBits>& coef,
                   std::int32_t sigma) {
    table.fill(0);
    const std::uint32_t entries = std::uint32_t{1} << count;
    for (std::uint32_t b = 1; b < entries; ++b) {
      const int low = std::countr_zero(b);
      table[b] = table[b & (b - 1)] + sigma * coef[first + low];
    }
  }

  int bits_ = 8;
  std::int32_t length_ = 0;
  std::int32_t base_ = 0;
  int lo_bits_ = 0;
  int hi_bits_ = 0;
  std::array<std::int32_t, 256> lo_{};
  std::array<std::int32_t, 256> hi_{};
};

// Per-bit evaluation of the same closed form, without tables. Cheaper than
// building a StreamKernel for a one-off product.
inline std::int32_t am_count(const Fraction& x, const Fraction& w) {
  require(x.bits() == w.bits(), "am_count: operand widths differ");
  const int n = x.bits();
  const std::int32_t length = stream_length(w);
  std::int32_t s = 0;
  for (int i = 1; i <= n; ++i) {
    const std::int32_t occ = (length + (std::int32_t{1} << (i - 1))) >> i;
    const bool b = x.bit(n - i);
    const bool emitted = i == 1 ? !b : b;
    s += emitted ? occ : -occ;
  }
  return w.sign_bit() ? -s : s;
}

}  // namespace elsa
