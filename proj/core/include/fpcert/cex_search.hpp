// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fpcert/certifier.hpp"

namespace fpcert {

// A real-vs-floating-point robustness counterexample: x0 is certified
// eps-robust by the real-arithmetic check, yet x1 lies within eps of x0 and
// the emulated FP execution classifies it differently.
struct CexTriple {
  std::vector<FpValue> x0;
  std::vector<FpValue> x1;
  Rat eps;
  std::size_t class0 = 0;
  std::size_t class1 = 0;
};

struct SearchConfig {
  int max_deepfool_iters = 200;
  Rat overshoot = Rat(1, 50);  // 0.02
  int bisection_iters = 80;
  int expansion_iters = 64;
};

// Gradient of the margin m_{j,i*} at x: reverse-mode accumulation through
// the ReLU masks of the fmt_grad forward pass (subgradient 0 at 0), exact
// rationals once the masks are fixed.
RVec gradient_margin(const Network& net, std::span<const FpValue> x,
                     const FpFormat& fmt_grad, std::size_t i_star, std::size_t j);

// Iterated minimal-l2 DeepFool steps with overshoot, candidates quantized to
// fmt each step; returns a point the emulated execution classifies
// differently from x_nat, or nothing if the search fails.
std::optional<std::vector<FpValue>> find_flip(const Network& net,
                                              std::span<const FpValue> x_nat,
                                              const FpFormat& fmt, const SearchConfig& cfg);

// Binary search on the segment [x_nat, x_t] for a pair (x0_init, x1) with
// x0_init real-arithmetic-certified at ||x0_init - x1||_2-up while x1 is
// FP-classified differently.
std::optional<std::pair<std::vector<FpValue>, std::vector<FpValue>>> boundary_pair(
    const Network& net, std::span<const FpValue> x_nat, std::span<const FpValue> x_t,
    const FpFormat& fmt, const SearchConfig& cfg);

// Expands x0 outward along the segment direction while the real-arithmetic
// certificate and the classification both hold; never shrinks eps.
CexTriple expand(const Network& net,
                 const std::pair<std::vector<FpValue>, std::vector<FpValue>>& pair,
                 const FpFormat& fmt, const SearchConfig& cfg);

// find_flip -> boundary_pair -> expand, with the resulting triple
// independently re-verified.
std::optional<CexTriple> search_cex(const Network& net, std::span<const FpValue> x_nat,
                                    const FpFormat& fmt, const SearchConfig& cfg);

// Independent re-check of the three CexTriple invariants.
bool verify_triple(const Network& net, const CexTriple& triple, const FpFormat& fmt);

// Compensating-bias adversary: zero hidden biases except b_{L-1} = B on
// every entry, and b_L = -(W_L . B*ones) rounded entrywise to the storage
// format. Weights are untouched, so margin Lipschitz constants are exactly
// preserved while the floating-point deviation explodes.
Network inject_bias_adversary(const Network& net, const Rat& bias);

}  // namespace fpcert
