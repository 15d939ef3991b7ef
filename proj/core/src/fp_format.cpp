// SPDX-License-Identifier: Apache-2.0
#include "fpcert/fp_format.hpp"

#include <stdexcept>

namespace fpcert {

FpFormat make_custom_format(int p, int emin, int emax) {
  // significands are carried in 64-bit integers; 53 bits covers every
  // supported format (binary64 included)
  if (p < 2 || p > 53) throw std::invalid_argument("format precision must be in [2, 53]");
  if (!(emin < 0 && 0 < emax)) throw std::invalid_argument("format needs emin < 0 < emax");
  FpFormat f;
  f.name = FormatName::custom;
  f.p = p;
  f.emin = emin;
  f.emax = emax;
  f.u = pow2(-p);
  f.a_mul = pow2(emin - p);
  f.f_max = (Rat(2) - pow2(1 - p)) * pow2(emax);
  return f;
}

FpFormat make_format(FormatName name) {
  FpFormat f;
  switch (name) {
    case FormatName::float16:
      f = make_custom_format(11, -14, 15);
      break;
    case FormatName::float32:
      f = make_custom_format(24, -126, 127);
      break;
    case FormatName::float64:
      f = make_custom_format(53, -1022, 1023);
      break;
    case FormatName::bfloat16:
      f = make_custom_format(8, -126, 127);
      break;
    case FormatName::custom:
      throw std::invalid_argument("custom formats need explicit parameters");
  }
  f.name = name;
  return f;
}

FpFormat make_format(std::string_view name) {
  if (name == "float16") return make_format(FormatName::float16);
  if (name == "float32") return make_format(FormatName::float32);
  if (name == "float64") return make_format(FormatName::float64);
  if (name == "bfloat16") return make_format(FormatName::bfloat16);
  throw std::invalid_argument("unknown floating-point format: '" + std::string(name) + "'");
}

std::string format_name(const FpFormat& fmt) {
  switch (fmt.name) {
    case FormatName::float16: return "float16";
    case FormatName::float32: return "float32";
    case FormatName::float64: return "float64";
    case FormatName::bfloat16: return "bfloat16";
    case FormatName::custom: break;
  }
  return "custom(p=" + std::to_string(fmt.p) + ",emin=" + std::to_string(fmt.emin) +
         ",emax=" + std::to_string(fmt.emax) + ")";
}

Rat gamma(long n, const FpFormat& fmt) {
  if (n < 0) throw std::invalid_argument("gamma: n must be >= 0");
  if (n == 0) return Rat(0);
  // (1+u)^n - 1 with u = 2^-p: ((2^p+1)^n - 2^(p*n)) / 2^(p*n).
  Int base;
  mpz_ui_pow_ui(base.get_mpz_t(), 2, static_cast<unsigned long>(fmt.p));
  Int num = base + 1;
  mpz_pow_ui(num.get_mpz_t(), num.get_mpz_t(), static_cast<unsigned long>(n));
  Int den;
  mpz_pow_ui(den.get_mpz_t(), base.get_mpz_t(), static_cast<unsigned long>(n));
  num -= den;
  Rat r(num, den);
  r.canonicalize();
  return r;
}

ErrorConstants error_constants(long n, const FpFormat& fmt) {
  if (n < 1) throw std::invalid_argument("error_constants: n must be >= 1");
  ErrorConstants ec;
  ec.n = n;
  ec.gamma_n = gamma(n, fmt);
  const Rat n_a_mul = Rat(static_cast<long>(n)) * fmt.a_mul;
  ec.a_dot = (Rat(1) + ec.gamma_n) * n_a_mul;
  ec.a_dot_fwd = (Rat(1) + gamma(n - 1, fmt)) * n_a_mul;
  ec.kappa = ec.gamma_n + fmt.u * (Rat(1) + ec.gamma_n);
  return ec;
}

std::vector<ApplicabilityIssue> applicability_check(const std::vector<long>& widths,
                                                    const FpFormat& fmt) {
  if (widths.empty()) throw std::invalid_argument("applicability_check: no widths");
  std::vector<ApplicabilityIssue> issues;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    Rat nu = Rat(widths[i]) * fmt.u;
    if (nu >= 1) issues.push_back({i + 1, nu});
  }
  return issues;
}

}  // namespace fpcert
