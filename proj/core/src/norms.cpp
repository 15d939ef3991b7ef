// SPDX-License-Identifier: Apache-2.0
#include "fpcert/norms.hpp"

#include <stdexcept>

namespace fpcert {

Rat gram_spectral_up(const RMat& w, unsigned iters, const Rat& rel_tol) {
  if (w.rows() == 0 || w.cols() == 0) return Rat(0);
  const Rat max_entry = max_abs_entry(w);
  if (sgn(max_entry) == 0) return Rat(0);
  if (iters == 0) return sqrt_up(frobenius_sq(w), rel_tol);
  if (iters > 48) throw std::invalid_argument("gram_spectral_up: iters > 48");

  // Working iterate h with the true Gram iterate equal to 2^scale * h. The
  // scale doubles per step (as the true iterate's magnitude squares), so it
  // must be folded through the final root symbolically, never materialized.
  RMat h = w;
  long scale = 0;
  for (unsigned k = 0; k < iters; ++k) {
    const Rat m = max_abs_entry(h);
    if (sgn(m) == 0) return Rat(0);
    const long e = ceil_log2(m);
    if (e != 0) {
      scale_pow2_inplace(h, -e);
      scale += e;
    }
    if (k == 0) {
      h = h.rows() <= h.cols() ? matmul(h, transpose(h)) : matmul(transpose(h), h);
    } else {
      h = matmul(h, h);  // symmetric PSD from the first step on
    }
    scale *= 2;
  }
  // sigma_max(W)^(2^iters) = lambda_max(G_iters) <= ||G_iters||_F, so
  // ||W||_2 <= (2^(2*scale) * ||h||_F^2)^(1/2^(iters+1)). Halve the exponent
  // alongside each outward-rounded square root.
  Rat radicand = frobenius_sq(h);
  long exponent = 2 * scale;
  const Rat step_tol = rel_tol / static_cast<long>(iters + 1);
  for (unsigned step = 0; step < iters + 1; ++step) {
    if (exponent % 2 != 0) {
      radicand *= 2;
      exponent -= 1;  // toward even, exact for negative exponents too
    }
    exponent /= 2;
    radicand = sqrt_up(radicand, step_tol);
  }
  return pow2(exponent) * radicand;
}

LayerNorms layer_norms(const RMat& w, const RVec& b, unsigned iters, const Rat& rel_tol) {
  if (w.rows() != b.size())
    throw std::invalid_argument("layer_norms: weight/bias dimension mismatch");
  LayerNorms n;
  n.spec_up = gram_spectral_up(w, iters, rel_tol);
  n.abs_spec_up = gram_spectral_up(abs(w), iters, rel_tol);
  n.row_l2_up.resize(w.rows());
  n.row_linf.resize(w.rows());
  n.max_row_l2_up = 0;
  n.max_row_linf = 0;
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const RVec wr = row(w, r);
    n.row_l2_up[r] = l2_norm_up(wr, rel_tol);
    n.row_linf[r] = linf_norm(wr);
    if (n.row_l2_up[r] > n.max_row_l2_up) n.max_row_l2_up = n.row_l2_up[r];
    if (n.row_linf[r] > n.max_row_linf) n.max_row_linf = n.row_linf[r];
  }
  n.bias_l2_up = l2_norm_up(b, rel_tol);
  n.bias_linf = linf_norm(b);
  return n;
}

PairNorms pair_norms(const RMat& w_last, const RVec& b_last, std::size_t i_star,
                     std::size_t j) {
  if (i_star == j) throw std::invalid_argument("pair_norms: classes must differ");
  if (i_star >= w_last.rows() || j >= w_last.rows())
    throw std::invalid_argument("pair_norms: class index out of range");
  const RVec ri = row(w_last, i_star);
  const RVec rj = row(w_last, j);
  PairNorms p;
  p.diff_row_l2_up = l2_norm_up(sub(ri, rj));
  p.sum_abs_row_l2_up = l2_norm_up(add(abs(ri), abs(rj)));
  p.bias_abs_sum = ::abs(b_last[i_star]) + ::abs(b_last[j]);
  return p;
}

}  // namespace fpcert
