// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "fpcert/network.hpp"

namespace fpcert {

// Record of one network execution: the emulated floating-point run and,
// alongside it, the exact real-arithmetic run (rationals are closed under
// the affine+ReLU pipeline, so the reference incurs zero rounding).
struct Trace {
  // preacts[l-1] holds a_hat_l = fl(fl(W_l z_hat_{l-1}) + b_l).
  std::vector<std::vector<FpValue>> preacts;
  // acts[0] is the input; acts[l] = phi_l(preacts[l-1]) entrywise exact.
  std::vector<std::vector<FpValue>> acts;
  // exact_acts mirrors acts under real arithmetic (empty if not requested).
  std::vector<RVec> exact_acts;
  bool overflowed = false;
};

// Emulated forward pass in fmt: per layer a row-wise fp_dot matvec, an
// entrywise rounded bias add, then the (FP-exact) activation. Inputs must be
// exactly representable in fmt. Overflow is recorded in the trace, not
// thrown.
Trace fp_forward(const Network& net, std::span<const FpValue> x, const FpFormat& fmt,
                 bool with_exact = true);

// Index of the maximum output component, ties to the lowest index.
// Throws ExecError if the forward pass overflowed.
std::size_t classify(const Network& net, std::span<const FpValue> x, const FpFormat& fmt);
std::size_t argmax_outputs(const Trace& trace);

// Exact rational difference of the two FP outputs y_hat_{i*} - y_hat_j (the
// certified quantity; no extra rounding on the subtraction).
Rat fp_margin(const Trace& trace, std::size_t i_star, std::size_t j);

// Exact argmax of the real-arithmetic outputs (requires with_exact traces).
std::size_t argmax_exact_outputs(const Trace& trace);

// Upper bound on || z_hat_{L-1}(x) - z_hat^hi_{L-1}(x) ||_2 between two
// formats. Throws ExecError if either pass overflows.
Rat measured_deviation(const Network& net, std::span<const FpValue> x,
                       const FpFormat& fmt_lo, const FpFormat& fmt_hi);

}  // namespace fpcert
