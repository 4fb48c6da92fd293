#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "elsa/error.hpp"

namespace elsa {

/// Numerator magnitudes of every multiplier driver seen during a layer run,
/// i.e. the operands whose size sets the cycle counts. Indices are 1-based
/// to match the timing formulas: t in [1, T], j in [1, N] (j in [1, M] for
/// the input). Hidden-state magnitudes also cover t = 0 (the initial state).
class MagnitudeTrace {
 public:
  MagnitudeTrace() = default;
  MagnitudeTrace(std::size_t timesteps, std::size_t hidden, std::size_t input_dim)
      : timesteps_(timesteps),
        hidden_(hidden),
        input_dim_(input_dim),
        x_(timesteps * input_dim, 0),
        h_((timesteps + 1) * hidden, 0),
        i_(timesteps * hidden, 0),
        f_(timesteps * hidden, 0),
        o_(timesteps * hidden, 0) {}

  // Square trace (M = N), the shape the analytic model is defined for.
  MagnitudeTrace(std::size_t timesteps, std::size_t hidden)
      : MagnitudeTrace(timesteps, hidden, hidden) {}

  std::size_t timesteps() const { return timesteps_; }
  std::size_t hidden() const { return hidden_; }
  std::size_t input_dim() const { return input_dim_; }

  std::int32_t& mx(std::size_t t, std::size_t j) { return x_[gate_index(t, j, input_dim_)]; }
  std::int32_t& mh(std::size_t t, std::size_t j) { return h_[hidden_index(t, j)]; }
  std::int32_t& mi(std::size_t t, std::size_t j) { return i_[gate_index(t, j, hidden_)]; }
  std::int32_t& mf(std::size_t t, std::size_t j) { return f_[gate_index(t, j, hidden_)]; }
  std::int32_t& mo(std::size_t t, std::size_t j) { return o_[gate_index(t, j, hidden_)]; }

  std::int32_t mx(std::size_t t, std::size_t j) const { return x_[gate_index(t, j, input_dim_)]; }
  std::int32_t mh(std::size_t t, std::size_t j) const { return h_[hidden_index(t, j)]; }
  std::int32_t mi(std::size_t t, std::size_t j) const { return i_[gate_index(t, j, hidden_)]; }
  std::int32_t mf(std::size_t t, std::size_t j) const { return f_[gate_index(t, j, hidden_)]; }
  std::int32_t mo(std::size_t t, std::size_t j) const { return o_[gate_index(t, j, hidden_)]; }

  std::int32_t max_entry() const {
    std::int32_t m = 0;
    for (const auto* v : {&x_, &h_, &i_, &f_, &o_})
      for (std::int32_t e : *v) m = e > m ? e : m;
    return m;
  }

  friend bool operator==(const MagnitudeTrace&, const MagnitudeTrace&) = default;

 private:
  std::size_t gate_index(std::size_t t, std::size_t j, std::size_t width) const {
    require(t >= 1 && t <= timesteps_ && j >= 1 && j <= width,
            "MagnitudeTrace: index out of range");
    return (t - 1) * width + (j - 1);
  }
  std::size_t hidden_index(std::size_t t, std::size_t j) const {
    require(t <= timesteps_ && j >= 1 && j <= hidden_,
            "MagnitudeTrace: index out of range");
    return t * hidden_ + (j - 1);
  }

  std::size_t timesteps_ = 0;
  std::size_t hidden_ = 0;
  std::size_t input_dim_ = 0;
  std::vector<std::int32_t> x_, h_, i_, f_, o_;
};

}  // namespace elsa
