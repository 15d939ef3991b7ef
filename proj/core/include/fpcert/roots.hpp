// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fpcert/linalg.hpp"
#include "fpcert/rational.hpp"

namespace fpcert {

// Default relative tolerance for upward-rounded roots: 2^-80, far below any
// quantity a binary64 pipeline can distinguish, so the root slack never
// dominates a certificate.
const Rat& default_root_tol();

// Upper bound on sqrt(q): returns s with s*s >= q and s <= sqrt(q)*(1+rel_tol).
// Exact when q is a perfect square of rationals. Bisection keeps the
// upper-bound side unconditional. Throws std::domain_error for q < 0.
Rat sqrt_up(const Rat& q, const Rat& rel_tol = default_root_tol());

// Upper bound on the Euclidean norm of v.
Rat l2_norm_up(const RVec& v, const Rat& rel_tol = default_root_tol());

// Upper bound on q^(1/2^k): k chained sqrt_up calls at per-step tolerance
// rel_tol/k; identity for k = 0.
Rat root_pow2_up(const Rat& q, unsigned k, const Rat& rel_tol = default_root_tol());

}  // namespace fpcert
