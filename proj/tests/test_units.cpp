#include <gtest/gtest.h>

#include <algorithm>
#include <cstdint>
#include <vector>

#include "elsa/error.hpp"
#include "elsa/matrix.hpp"
#include "elsa/rng.hpp"
#include "elsa/units.hpp"
#include "oracles.hpp"

using namespace elsa;

namespace {

Matrix<Fraction> make_matrix(std::size_t rows, std::size_t cols, int n,
                             const std::vector<std::int32_t>& values) {
  Matrix<Fraction> m(rows, cols, Fraction::zero(n));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = Fraction(values[r * cols + c], n);
  return m;
}

Matrix<Fraction> random_matrix(std::size_t rows, std::size_t cols, int n,
                               SplitMix64& rng) {
  Matrix<Fraction> m(rows, cols, Fraction::zero(n));
  const std::int64_t lo = Fraction::min(n).numerator();
  const std::int64_t hi = Fraction::max(n).numerator();
  for (Fraction& f : m.data()) f = Fraction(static_cast<std::int32_t>(rng.uniform_int(lo, hi)), n);
  return m;
}

}  // namespace

TEST(Mvm, TwoByTwoExampleAgainstLiteralOracle) {
  const int n = 4;
  MvmUnit<> u(make_matrix(2, 2, n, {4, 2, -4, 2}));
  std::int64_t cycles = u.run_column(Fraction(4, n));
  cycles += u.run_column(Fraction(4, n));
  EXPECT_EQ(cycles, 8);
  const std::int32_t row0 = oracle::literal_product(4, 4, n) + oracle::literal_product(2, 4, n);
  const std::int32_t row1 = oracle::literal_product(-4, 4, n) + oracle::literal_product(2, 4, n);
  EXPECT_EQ(u.accumulator(0).numerator(), row0);
  EXPECT_EQ(u.accumulator(1).numerator(), row1);
  EXPECT_EQ(row0, 4);
  EXPECT_EQ(row1, 0);

  const std::vector<WideValue> latched = u.latch_and_reset();
  EXPECT_EQ(latched[0].numerator(), 4);
  EXPECT_EQ(latched[1].numerator(), 0);
  EXPECT_EQ(u.accumulator(0).numerator(), 0);
  EXPECT_EQ(u.accumulator(1).numerator(), 0);
  const std::vector<WideValue> again = u.latch_and_reset();
  EXPECT_EQ(again[0].numerator(), 0);
  EXPECT_EQ(again[1].numerator(), 0);
}

TEST(Mvm, FreshUnitLatchesZeros) {
  MvmUnit<> u(make_matrix(3, 2, 8, {1, 2, 3, 4, 5, 6}));
  for (const WideValue& v : u.latch_and_reset()) EXPECT_EQ(v.numerator(), 0);
}

TEST(Mvm, ZeroScalarCostsNothing) {
  MvmUnit<> u(make_matrix(2, 2, 8, {100, -7, 3, 9}));
  u.run_column(Fraction(64, 8));
  const WideValue before0 = u.accumulator(0);
  const WideValue before1 = u.accumulator(1);
  EXPECT_EQ(u.run_column(Fraction(0, 8)), 0);
  EXPECT_EQ(u.accumulator(0), before0);
  EXPECT_EQ(u.accumulator(1), before1);
}

TEST(Mvm, CursorExhaustionIsAContractViolation) {
  MvmUnit<> u(make_matrix(1, 2, 8, {1, 2}));
  u.run_column(Fraction(3, 8));
  u.run_column(Fraction(3, 8));
  EXPECT_TRUE(u.complete());
  EXPECT_THROW(u.run_column(Fraction(3, 8)), ContractViolation);
  EXPECT_THROW(u.run_column(Fraction(3, 4)), ContractViolation);
}

TEST(Mvm, RowsEqualSaturatingSumOfProducts) {
  SplitMix64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 4 + trial % 5;
    const int guard = trial % 4;
    const std::size_t rows = 1 + static_cast<std::size_t>(rng.uniform_int(0, 5));
    const std::size_t cols = 1 + static_cast<std::size_t>(rng.uniform_int(0, 9));
    const Matrix<Fraction> m = random_matrix(rows, cols, n, rng);
    const Matrix<Fraction> y = random_matrix(1, cols, n, rng);
    MvmUnit<> u(m, guard);
    std::int64_t cycles = 0;
    std::int64_t expect_cycles = 0;
    for (std::size_t k = 0; k < cols; ++k) {
      cycles += u.run_column(y(0, k));
      expect_cycles += stream_length(y(0, k));
    }
    EXPECT_EQ(cycles, expect_cycles);
    const std::vector<WideValue> out = u.latch_and_reset();
    for (std::size_t r = 0; r < rows; ++r) {
      std::int32_t acc = 0;
      for (std::size_t k = 0; k < cols; ++k)
        acc = oracle::clamp_wide(std::int64_t{acc} + am_multiply(m(r, k), y(0, k)).z.numerator(),
                                 n, guard);
      EXPECT_EQ(out[r].numerator(), acc) << "trial " << trial << " row " << r;
    }
  }
}

TEST(Mvm, CycleSteppingMatchesColumnRuns) {
  SplitMix64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 6;
    const Matrix<Fraction> m = random_matrix(4, 5, n, rng);
    const Matrix<Fraction> y = random_matrix(1, 5, n, rng);
    MvmUnit<> fast(m, 0);
    MvmUnit<> stepped(m, 0);
    for (std::size_t k = 0; k < 5; ++k) {
      const std::int64_t cycles = fast.run_column(y(0, k));
      stepped.begin_column(y(0, k));
      std::int64_t steps = 0;
      while (stepped.column_active()) {
        EXPECT_EQ(stepped.shared_down_counter(), cycles - steps);
        stepped.step();
        ++steps;
      }
      EXPECT_EQ(steps, cycles);
    }
    EXPECT_EQ(fast.latch_and_reset(), stepped.latch_and_reset());
  }
}

TEST(Mvm, ExactPolicyTruncatesTowardZero) {
  MvmUnit<ExactArithmetic> u(make_matrix(2, 1, 4, {5, -5}));
  EXPECT_EQ(u.run_column(Fraction(6, 4)), 1);
  EXPECT_EQ(u.accumulator(0).numerator(), 3);   // 30/64 -> 3/8
  EXPECT_EQ(u.accumulator(1).numerator(), -3);  // -30/64 -> -3/8
}

TEST(Ema, Examples) {
  const int n = 4;
  const EmaResult a = ema_step(Fraction(6, n), Fraction(5, n), Fraction(0, n), Fraction(-3, n));
  EXPECT_EQ(a.c_new.numerator(), 4);
  EXPECT_EQ(a.cycles, 3);
  const EmaResult b = ema_step(Fraction(0, n), Fraction(5, n), Fraction(0, n), Fraction(5, n));
  EXPECT_EQ(b.c_new.numerator(), 0);
  EXPECT_EQ(b.cycles, 0);
  const EmaResult c = ema_step(Fraction(6, n), Fraction(5, n), Fraction(6, n), Fraction(5, n));
  EXPECT_EQ(c.c_new.numerator(), 8);
  EXPECT_EQ(c.cycles, 6);
}

TEST(Ema, PhasesShareTheAccumulator) {
  EmaUnit<> u(Fraction(6, 4), Fraction(5, 4), Fraction(6, 4), Fraction(5, 4));
  EXPECT_EQ(u.phase(), EmaPhase::mult1);
  EXPECT_EQ(u.run_phase(), 3);
  EXPECT_EQ(u.accumulator().numerator(), 4);
  EXPECT_EQ(u.phase(), EmaPhase::mult2);
  EXPECT_EQ(u.run_phase(), 3);
  EXPECT_EQ(u.accumulator().numerator(), 8);
  EXPECT_EQ(u.phase(), EmaPhase::done);
  EXPECT_THROW(u.run_phase(), ContractViolation);
}

TEST(Ema, ZeroForgetReducesToSingleMultiply) {
  for (std::int32_t i = -128; i <= 127; i += 3) {
    for (std::int32_t c = -128; c <= 127; c += 5) {
      const EmaResult r = ema_step(Fraction(i, 8), Fraction(c, 8), Fraction(0, 8), Fraction(77, 8));
      const EmResult e = em_multiply(Fraction(i, 8), Fraction(c, 8));
      EXPECT_EQ(r.c_new.numerator(), e.h.numerator());
      EXPECT_EQ(r.cycles, e.cycles);
    }
  }
}

TEST(Em, Examples) {
  const EmResult a = em_multiply(Fraction(6, 4), Fraction(5, 4));
  EXPECT_EQ(a.h, Fraction(4, 4));
  EXPECT_EQ(a.cycles, 3);
  const EmResult b = em_multiply(Fraction(0, 4), Fraction(5, 4));
  EXPECT_EQ(b.h, Fraction(0, 4));
  EXPECT_EQ(b.cycles, 0);
  const EmResult c = em_multiply(Fraction(1, 4), Fraction(-3, 4));
  EXPECT_EQ(c.cycles, 0);
  EXPECT_EQ(c.h.numerator(), preprocess(Fraction(-3, 4), Fraction(1, 4)).ud_init);
}

TEST(Em, ExactPolicyIsSingleCycle) {
  const EmResult r = em_multiply<ExactArithmetic>(Fraction(6, 4), Fraction(5, 4));
  EXPECT_EQ(r.h.numerator(), 3);
  EXPECT_EQ(r.cycles, 1);
}

TEST(Activations, HsigExamples) {
  EXPECT_EQ(hsig(WideValue(0, 8)).numerator(), 64);
  EXPECT_EQ(hsig(quantize_wide(3.0, 8)), Fraction::max(8));
  EXPECT_EQ(hsig(quantize_wide(-2.0, 8)).numerator(), 0);
  EXPECT_EQ(hsig(quantize_wide(2.0, 8)), Fraction::max(8));
  EXPECT_EQ(hsig(WideValue(-1, 8)).numerator(), 63);  // arithmetic shift floors
}

TEST(Activations, HtanhExamples) {
  EXPECT_EQ(htanh(quantize_wide(0.5, 8)).numerator(), 64);
  EXPECT_EQ(htanh(quantize_wide(1.5, 8)), Fraction::max(8));
  EXPECT_EQ(htanh(quantize_wide(-3.0, 8)), Fraction::min(8));
  EXPECT_EQ(htanh(quantize_wide(1.0, 8)), Fraction::max(8));
}

TEST(Activations, MatchLiteralDefinitionsOverWholeRange) {
  for (int n : {4, 8}) {
    for (int guard : {0, 3}) {
      const std::int32_t lo = WideValue::min(n, guard).numerator();
      const std::int32_t hi = WideValue::max(n, guard).numerator();
      std::int32_t prev = -1;
      for (std::int32_t v = lo; v <= hi; ++v) {
        const Fraction s = hsig(WideValue(v, n, guard));
        EXPECT_EQ(s.numerator(), oracle::hard_sigmoid(v, n));
        EXPECT_GE(s.numerator(), prev);
        EXPECT_GE(s.numerator(), 0);
        prev = s.numerator();
        EXPECT_EQ(htanh(WideValue(v, n, guard)).numerator(), oracle::hard_tanh(v, n));
      }
    }
  }
}

TEST(Activations, HtanhIsIdentityOnFractions) {
  for (std::int32_t v = -128; v <= 127; ++v)
    EXPECT_EQ(htanh(widen(Fraction(v, 8))), Fraction(v, 8));
}

TEST(TernaryAdd, Examples) {
  EXPECT_EQ(ternary_add(WideValue(1, 8), WideValue(2, 8), WideValue(3, 8)).numerator(), 6);
  const WideValue m = WideValue::max(8);
  EXPECT_EQ(ternary_add(m, m, m), m);
  EXPECT_EQ(ternary_add(WideValue(37, 8), WideValue(-37, 8), WideValue(0, 8)).numerator(), 0);
  const WideValue lo = WideValue::min(8);
  EXPECT_EQ(ternary_add(lo, lo, m).numerator(), -1024);
  EXPECT_THROW(ternary_add(WideValue(0, 8), WideValue(0, 4), WideValue(0, 8)), ContractViolation);
}
