// SPDX-License-Identifier: Apache-2.0
#include "fpcert/roots.hpp"

#include <stdexcept>

namespace fpcert {

const Rat& default_root_tol() {
  static const Rat tol = pow2(-80);
  return tol;
}

Rat sqrt_up(const Rat& q, const Rat& rel_tol) {
  if (sgn(q) < 0) throw std::domain_error("sqrt_up: negative argument");
  if (sgn(rel_tol) <= 0) throw std::invalid_argument("sqrt_up: rel_tol must be positive");
  if (sgn(q) == 0) return Rat(0);

  const Int& num = q.get_num();
  const Int& den = q.get_den();
  if (mpz_perfect_square_p(num.get_mpz_t()) && mpz_perfect_square_p(den.get_mpz_t())) {
    Int rn, rd;
    mpz_sqrt(rn.get_mpz_t(), num.get_mpz_t());
    mpz_sqrt(rd.get_mpz_t(), den.get_mpz_t());
    Rat r(rn, rd);
    r.canonicalize();
    return r;
  }

  // Bracket sqrt(q) in [2^h, 2^(h+1)] from floor(log2 q), then bisect.
  const long e = floor_log2(q);
  const long h = e >= 0 ? e / 2 : (e - 1) / 2;
  Rat lo = pow2(h);
  Rat hi = pow2(h + 1);
  const Rat one_plus = Rat(1) + rel_tol;
  Rat mid, mid_sq, bound;
  while (true) {
    bound = lo * one_plus;
    if (hi <= bound) break;
    mid = (lo + hi) / 2;
    mid_sq = mid * mid;
    if (mid_sq >= q) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  // hi^2 >= q throughout; lo <= sqrt(q) gives hi <= sqrt(q)*(1+rel_tol).
  return hi;
}

Rat l2_norm_up(const RVec& v, const Rat& rel_tol) {
  return sqrt_up(sum_sq(v), rel_tol);
}

Rat root_pow2_up(const Rat& q, unsigned k, const Rat& rel_tol) {
  if (sgn(q) < 0) throw std::domain_error("root_pow2_up: negative argument");
  if (k == 0) return q;
  const Rat step_tol = rel_tol / static_cast<long>(k);
  Rat r = q;
  for (unsigned i = 0; i < k; ++i) r = sqrt_up(r, step_tol);
  return r;
}

}  // namespace fpcert
