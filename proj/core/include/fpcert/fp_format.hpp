// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fpcert/rational.hpp"

namespace fpcert {

enum class FormatName { float16, float32, float64, bfloat16, custom };

// Parameters of a binary floating-point format together with the derived
// error-model constants, all held as exact rationals:
//   u     = 2^-p            unit roundoff (round-to-nearest)
//   a_mul = 2^(emin-p)      absolute error bound for subnormal products
//   f_max = (2-2^(1-p))*2^emax   largest finite value
struct FpFormat {
  FormatName name = FormatName::custom;
  int p = 0;     // precision in bits, including the implicit bit
  int emin = 0;  // minimum exponent of normal numbers
  int emax = 0;
  Rat u;
  Rat a_mul;
  Rat f_max;

  friend bool operator==(const FpFormat& a, const FpFormat& b) {
    return a.p == b.p && a.emin == b.emin && a.emax == b.emax;
  }
};

FpFormat make_format(FormatName name);
// Throws std::invalid_argument for unknown names.
FpFormat make_format(std::string_view name);
FpFormat make_custom_format(int p, int emin, int emax);
std::string format_name(const FpFormat& fmt);

// gamma_n = (1+u)^n - 1, exactly (no rounding anywhere).
Rat gamma(long n, const FpFormat& fmt);

// Error constants for a length-n dot product followed by a bias add:
//   a_dot     = (1+gamma_n)   * n * a_mul
//   a_dot_fwd = (1+gamma_{n-1}) * n * a_mul   (n multiplications, n-1 additions)
//   kappa     = gamma_n + u*(1+gamma_n)
struct ErrorConstants {
  long n = 0;
  Rat gamma_n;
  Rat a_dot;
  Rat a_dot_fwd;
  Rat kappa;
};

ErrorConstants error_constants(long n, const FpFormat& fmt);

// Layers whose dot-product length n makes n*u >= 1: certification stays
// sound there but the bounds grow superlinearly and are expected vacuous.
struct ApplicabilityIssue {
  std::size_t layer;  // 1-based
  Rat n_times_u;
};

std::vector<ApplicabilityIssue> applicability_check(const std::vector<long>& widths,
                                                    const FpFormat& fmt);

}  // namespace fpcert
