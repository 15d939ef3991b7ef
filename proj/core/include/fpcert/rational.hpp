// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace fpcert {

// All bound computations run on exact rationals in canonical form
// (reduced, positive denominator). Roots are the only inexact step and
// are always rounded outward (see roots.hpp).
using Rat = mpq_class;
using Int = mpz_class;

// 2^k as an exact rational; k may be negative.
Rat pow2(long k);

// floor(log2(q)) for q > 0.
long floor_log2(const Rat& q);

// smallest e with q <= 2^e, for q > 0.
long ceil_log2(const Rat& q);

// Exact value of a decimal literal such as "-1.25e-3". Throws
// std::invalid_argument on malformed input.
Rat parse_decimal(std::string_view text);

// Accepts "num/den" as well as decimal literals.
Rat parse_rational(std::string_view text);

// Canonical "num/den" rendering (denominator always present).
std::string to_ratio_string(const Rat& q);

double to_double(const Rat& q);

}  // namespace fpcert
