#pragma once

// Compute units of the LSTM datapath: matrix-vector multiplier (MVM),
// element-wise multiplier (EM), element-wise multiplier-and-adder (EMA),
// ternary adder and the piece-wise linear activations.
//
// Multiplier-bearing units are templates over an arithmetic policy.
// ApproxArithmetic is the accelerator (original AM in the MVM, accelerated AM
// in EM/EMA); ExactArithmetic swaps in exact fixed-point multipliers so the
// same datapath doubles as the exact baseline.

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <cstdlib>
#include <type_traits>
#include <vector>

#include "elsa/am.hpp"
#include "elsa/error.hpp"
#include "elsa/fxp.hpp"
#include "elsa/matrix.hpp"

namespace elsa {

struct ElementProduct {
  std::int32_t numerator = 0;  // at the fraction scale, may exceed n bits
  std::int64_t cycles = 0;
};

struct ApproxArithmetic {
  // One MVM column: every lane shares the scalar's stream and down counter.
  class Column {
   public:
    explicit Column(const Fraction& scalar)
        : kernel_(scalar.bits(), scalar.numerator()),
          mask_((std::uint32_t{1} << scalar.bits()) - 1),
          lo_(static_cast<std::int32_t>(Fraction::min(scalar.bits()).numerator())),
          hi_(static_cast<std::int32_t>(Fraction::max(scalar.bits()).numerator())) {}

    std::int64_t cycles() const { return kernel_.length(); }

    std::int32_t product(std::int32_t x_numerator) const {
      const std::int32_t c =
          kernel_.count(static_cast<std::uint32_t>(x_numerator) & mask_);
      return std::clamp(c, lo_, hi_);
    }

   private:
    StreamKernel kernel_;
    std::uint32_t mask_;
    std::int32_t lo_;
    std::int32_t hi_;
  };

  // Accelerated AM; `gate` drives the stream, `x` supplies the bit pattern.
  static ElementProduct multiply(const Fraction& x, const Fraction& gate) {
    return {Fraction::saturate(am_count(x, gate), x.bits()).numerator(),
            stream_length(gate) / 2};
  }
};

struct ExactArithmetic {
  // Full product truncated toward zero onto the 1/2^(n-1) grid.
  static std::int32_t truncated_product(std::int32_t a, std::int32_t b,
                                        int bits) {
    return static_cast<std::int32_t>((std::int64_t{a} * b) /
                                     (std::int64_t{1} << (bits - 1)));
  }

  class Column {
   public:
    explicit Column(const Fraction& scalar)
        : scalar_(scalar.numerator()), bits_(scalar.bits()) {}

    std::int64_t cycles() const { return 1; }

    std::int32_t product(std::int32_t x_numerator) const {
      return truncated_product(x_numerator, scalar_, bits_);
    }

   private:
    std::int32_t scalar_;
    int bits_;
  };

  static ElementProduct multiply(const Fraction& x, const Fraction& gate) {
    require(x.bits() == gate.bits(), "exact multiply: operand widths differ");
    return {truncated_product(x.numerator(), gate.numerator(), x.bits()), 1};
  }
};

template <class A>
concept Arithmetic = requires(const Fraction& f, std::int32_t v) {
  typename A::Column;
  { A::multiply(f, f) } -> std::same_as<ElementProduct>;
  { typename A::Column(f).product(v) } -> std::same_as<std::int32_t>;
  { typename A::Column(f).cycles() } -> std::same_as<std::int64_t>;
};

/// Matrix-vector multiplier: one multiplier lane per output row, fed one
/// column-scalar pair at a time. Accumulators persist across columns and are
/// only cleared by latch_and_reset().
template <Arithmetic A = ApproxArithmetic>
class MvmUnit {
 public:
  MvmUnit() = default;

  explicit MvmUnit(const Matrix<Fraction>& m, int guard = kDefaultGuardBits)
      : rows_(m.rows()), cols_(m.cols()), guard_(guard) {
    require(!m.empty(), "MvmUnit: empty matrix");
    bits_ = m(0, 0).bits();
    fxp_detail::check_guard(guard);
    colmajor_.resize(rows_ * cols_);
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t c = 0; c < cols_; ++c) {
        require(m(r, c).bits() == bits_, "MvmUnit: mixed operand widths");
        colmajor_[c * rows_ + r] = m(r, c).numerator();
      }
    }
    acc_.assign(rows_, 0);
    consumed_.assign(cols_, false);
    acc_lo_ = static_cast<std::int32_t>(WideValue::min(bits_, guard_).numerator());
    acc_hi_ = static_cast<std::int32_t>(WideValue::max(bits_, guard_).numerator());
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  int bits() const { return bits_; }
  int guard() const { return guard_; }
  std::size_t column_cursor() const { return cursor_; }
  bool complete() const { return cursor_ == cols_ && !column_active_; }
  bool column_consumed(std::size_t c) const { return consumed_.at(c); }

  Fraction entry(std::size_t r, std::size_t c) const {
    return Fraction(colmajor_.at(c * rows_ + r), bits_);
  }

  WideValue accumulator(std::size_t r) const {
    return WideValue(acc_.at(r), bits_, guard_);
  }

  std::int64_t run_column(const Fraction& scalar) {
    require(scalar.bits() == bits_, "mvm_run_column: scalar width differs");
    return run_column(typename A::Column(scalar));
  }

  // Runs the next column against a pre-built stream (shared across units fed
  // the same scalar). Returns the column latency in cycles.
  std::int64_t run_column(const typename A::Column& column) {
    require(!column_active_, "mvm_run_column: a stepped column is in flight");
    require(cursor_ < cols_, "mvm_run_column: all columns already consumed");
    const std::int32_t* col = colmajor_.data() + cursor_ * rows_;
    for (std::size_t r = 0; r < rows_; ++r) {
      acc_[r] = std::clamp(acc_[r] + column.product(col[r]), acc_lo_, acc_hi_);
    }
    consume_cursor();
    return column.cycles();
  }

  // Cycle-level operation of the approximate unit. begin_column() loads the
  // shared down counter with |N(scalar)|; each step() advances every lane by
  // one stream bit; the column retires into the accumulators when the shared
  // counter reaches zero.
  void begin_column(const Fraction& scalar)
    requires std::same_as<A, ApproxArithmetic>
  {
    require(!column_active_, "begin_column: a column is already in flight");
    require(cursor_ < cols_, "begin_column: all columns already consumed");
    require(scalar.bits() == bits_, "begin_column: scalar width differs");
    shared_down_counter_ = stream_length(scalar);
    stream_negative_ = scalar.sign_bit();
    stream_cycle_ = 0;
    lane_counts_.assign(rows_, 0);
    column_active_ = true;
    if (shared_down_counter_ == 0) retire_column();
  }

  void step()
    requires std::same_as<A, ApproxArithmetic>
  {
    require(column_active_, "MvmUnit::step: no column in flight");
    ++stream_cycle_;
    const std::int32_t* col = colmajor_.data() + cursor_ * rows_;
    for (std::size_t r = 0; r < rows_; ++r) {
      const bool in =
          stream_bit(Fraction(col[r], bits_), stream_cycle_) != stream_negative_;
      lane_counts_[r] += in ? 1 : -1;
    }
    if (--shared_down_counter_ == 0) retire_column();
  }

  bool column_active() const { return column_active_; }
  std::int32_t shared_down_counter() const { return shared_down_counter_; }

  // Snapshot of the accumulators, which are then cleared; 0 cycles.
  std::vector<WideValue> latch_and_reset() {
    require(!column_active_, "latch_and_reset: a column is in flight");
    std::vector<WideValue> out;
    out.reserve(rows_);
    for (std::int32_t v : acc_) out.emplace_back(v, bits_, guard_);
    std::fill(acc_.begin(), acc_.end(), 0);
    std::fill(consumed_.begin(), consumed_.end(), false);
    cursor_ = 0;
    return out;
  }

 private:
  void consume_cursor() {
    require(!consumed_[cursor_], "MvmUnit: column charged twice");
    consumed_[cursor_] = true;
    ++cursor_;
  }

  void retire_column() {
    const std::int32_t lo = Fraction::min(bits_).numerator();
    const std::int32_t hi = Fraction::max(bits_).numerator();
    for (std::size_t r = 0; r < rows_; ++r) {
      acc_[r] = std::clamp(acc_[r] + std::clamp(lane_counts_[r], lo, hi),
                           acc_lo_, acc_hi_);
    }
    column_active_ = false;
    consume_cursor();
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  int bits_ = 8;
  int guard_ = kDefaultGuardBits;
  std::vector<std::int32_t> colmajor_;
  std::vector<std::int32_t> acc_;
  std::vector<bool> consumed_;
  std::size_t cursor_ = 0;
  std::int32_t acc_lo_ = 0;
  std::int32_t acc_hi_ = 0;

  bool column_active_ = false;
  bool stream_negative_ = false;
  std::int32_t shared_down_counter_ = 0;
  std::int32_t stream_cycle_ = 0;
  std::vector<std::int32_t> lane_counts_;
};

enum class EmaPhase { mult1, mult2, done };

/// Two back-to-back multiplies into one accumulator: i * c_cand, then
/// f * c_prev. The gates drive the streams.
template <Arithmetic A = ApproxArithmetic>
class EmaUnit {
 public:
  EmaUnit(const Fraction& i_gate, const Fraction& c_cand, const Fraction& f_gate,
          const Fraction& c_prev, int guard = kDefaultGuardBits)
      : i_(i_gate), c_cand_(c_cand), f_(f_gate), c_prev_(c_prev),
        acc_(WideValue::zero(i_gate.bits(), guard)) {
    const int n = i_gate.bits();
    require(c_cand.bits() == n && f_gate.bits() == n && c_prev.bits() == n,
            "ema_step: operand widths differ");
  }

  EmaPhase phase() const { return phase_; }
  const WideValue& accumulator() const { return acc_; }

  // Runs the current multiply to completion; returns its latency.
  std::int64_t run_phase() {
    require(phase_ != EmaPhase::done, "EmaUnit: both phases already ran");
    const ElementProduct p = phase_ == EmaPhase::mult1 ? A::multiply(c_cand_, i_)
                                                       : A::multiply(c_prev_, f_);
    acc_ = WideValue::saturate(std::int64_t{acc_.numerator()} + p.numerator,
                               acc_.bits(), acc_.guard());
    phase_ = phase_ == EmaPhase::mult1 ? EmaPhase::mult2 : EmaPhase::done;
    return p.cycles;
  }

 private:
  Fraction i_, c_cand_, f_, c_prev_;
  WideValue acc_;
  EmaPhase phase_ = EmaPhase::mult1;
};

struct EmaResult {
  WideValue c_new;
  std::int64_t cycles = 0;
};

template <Arithmetic A = ApproxArithmetic>
EmaResult ema_step(const Fraction& i_gate, const Fraction& c_cand,
                   const Fraction& f_gate, const Fraction& c_prev,
                   int guard = kDefaultGuardBits) {
  EmaUnit<A> unit(i_gate, c_cand, f_gate, c_prev, guard);
  std::int64_t cycles = unit.run_phase();
  cycles += unit.run_phase();
  return {unit.accumulator(), cycles};
}

struct EmResult {
  Fraction h;
  std::int64_t cycles = 0;
};

// h = o * tanh(C); the output gate drives the stream.
template <Arithmetic A = ApproxArithmetic>
EmResult em_multiply(const Fraction& o_gate, const Fraction& tanh_c) {
  require(o_gate.bits() == tanh_c.bits(), "em_multiply: operand widths differ");
  const ElementProduct p = A::multiply(tanh_c, o_gate);
  return {Fraction::saturate(p.numerator, o_gate.bits()), p.cycles};
}

// Hard sigmoid: 0 for x <= -2, max fraction for x > 2, x/4 + 1/2 otherwise.
// The /4 is an arithmetic shift of the wide numerator.
inline Fraction hsig(const WideValue& x) {
  const int n = x.bits();
  const std::int64_t one = std::int64_t{1} << (n - 1);
  const std::int64_t v = x.numerator();
  if (v > 2 * one) return Fraction::max(n);
  if (v <= -2 * one) return Fraction::zero(n);
  return Fraction::saturate((v >> 2) + one / 2, n);
}

// Hard tanh: -1 for x <= -1, max fraction for x > 1, x otherwise.
inline Fraction htanh(const WideValue& x) {
  const int n = x.bits();
  const std::int64_t one = std::int64_t{1} << (n - 1);
  const std::int64_t v = x.numerator();
  if (v > one) return Fraction::max(n);
  if (v <= -one) return Fraction::min(n);
  return narrow(x);
}

inline WideValue ternary_add(const WideValue& a, const WideValue& b,
                             const WideValue& bias) {
  require(a.bits() == b.bits() && a.bits() == bias.bits() &&
              a.guard() == b.guard() && a.guard() == bias.guard(),
          "ternary_add: operand widths differ");
  return WideValue::saturate(std::int64_t{a.numerator()} + b.numerator() +
                                 bias.numerator(),
                             a.bits(), a.guard());
}

}  // namespace elsa
