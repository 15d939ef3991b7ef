// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fpcert/linalg.hpp"
#include "fpcert/roots.hpp"

namespace fpcert {

// Per-layer norm cache. Every *_up field is a sound rational upper bound on
// its exact counterpart; the *_linf fields are exact.
struct LayerNorms {
  Rat spec_up;          // >= ||W||_2
  Rat abs_spec_up;      // >= || |W| ||_2
  RVec row_l2_up;       // per-row Euclidean norms, upper bounds
  RVec row_linf;        // per-row max-abs entries, exact
  Rat max_row_l2_up;
  Rat max_row_linf;
  Rat bias_l2_up;
  Rat bias_linf;        // exact
};

// Final-layer quantities for one competing-class pair (i*, j); symmetric
// in the pair.
struct PairNorms {
  Rat diff_row_l2_up;     // >= ||W_{L,i*} - W_{L,j}||_2
  Rat sum_abs_row_l2_up;  // >= || |W_{L,i*}| + |W_{L,j}| ||_2
  Rat bias_abs_sum;       // |b_{L,i*}| + |b_{L,j}|, exact
};

// Sound upper bound on the spectral norm ||W||_2 via Gram iteration:
// G_1 = W^T W (or W W^T, whichever is smaller), G_{k+1} = G_k G_k, each
// step rescaled by a power of two tracked exactly; the bound is the
// 2^(iters+1)-th root (rounded outward) of the rescaled squared Frobenius
// norm. iters = 0 degrades to the Frobenius bound ||W||_F >= ||W||_2.
Rat gram_spectral_up(const RMat& w, unsigned iters, const Rat& rel_tol = default_root_tol());

LayerNorms layer_norms(const RMat& w, const RVec& b, unsigned iters,
                       const Rat& rel_tol = default_root_tol());

PairNorms pair_norms(const RMat& w_last, const RVec& b_last, std::size_t i_star,
                     std::size_t j);

}  // namespace fpcert
