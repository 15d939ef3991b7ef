// SPDX-License-Identifier: Apache-2.0
#include "fpcert/rational.hpp"

#include <cctype>
#include <cstdlib>
#include <stdexcept>

namespace fpcert {

Rat pow2(long k) {
  Int num, den(1);
  if (k >= 0) {
    mpz_ui_pow_ui(num.get_mpz_t(), 2, static_cast<unsigned long>(k));
  } else {
    num = 1;
    mpz_ui_pow_ui(den.get_mpz_t(), 2, static_cast<unsigned long>(-k));
  }
  Rat r(num, den);
  r.canonicalize();
  return r;
}

long floor_log2(const Rat& q) {
  if (sgn(q) <= 0) throw std::domain_error("floor_log2: argument must be positive");
  const Int& a = q.get_num();
  const Int& b = q.get_den();
  const long la = static_cast<long>(mpz_sizeinbase(a.get_mpz_t(), 2));
  const long lb = static_cast<long>(mpz_sizeinbase(b.get_mpz_t(), 2));
  // 2^(la-1) <= a < 2^la and likewise for b, so the answer is la-lb or la-lb-1.
  const long e = la - lb;
  Int lhs = a, rhs = b;
  if (e >= 0) {
    mpz_mul_2exp(rhs.get_mpz_t(), rhs.get_mpz_t(), static_cast<unsigned long>(e));
  } else {
    mpz_mul_2exp(lhs.get_mpz_t(), lhs.get_mpz_t(), static_cast<unsigned long>(-e));
  }
  return lhs >= rhs ? e : e - 1;
}

long ceil_log2(const Rat& q) {
  const long e = floor_log2(q);
  return q == pow2(e) ? e : e + 1;
}

namespace {

[[noreturn]] void bad_literal(std::string_view text) {
  throw std::invalid_argument("not a numeric literal: '" + std::string(text) + "'");
}

}  // namespace

Rat parse_decimal(std::string_view text) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  bool negative = false;
  if (i < n && (text[i] == '+' || text[i] == '-')) {
    negative = text[i] == '-';
    ++i;
  }
  std::string digits;
  long frac_len = 0;
  bool saw_digit = false;
  while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
    digits.push_back(text[i++]);
    saw_digit = true;
  }
  if (i < n && text[i] == '.') {
    ++i;
    while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
      digits.push_back(text[i++]);
      ++frac_len;
      saw_digit = true;
    }
  }
  if (!saw_digit) bad_literal(text);
  long exp10 = 0;
  if (i < n && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    bool exp_neg = false;
    if (i < n && (text[i] == '+' || text[i] == '-')) {
      exp_neg = text[i] == '-';
      ++i;
    }
    if (i >= n) bad_literal(text);
    long v = 0;
    while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
      v = v * 10 + (text[i++] - '0');
      if (v > 1000000) bad_literal(text);  // keeps 10^|exp| sane
    }
    exp10 = exp_neg ? -v : v;
  }
  if (i != n) bad_literal(text);

  Int mant;
  if (mpz_set_str(mant.get_mpz_t(), digits.c_str(), 10) != 0) bad_literal(text);
  const long k = exp10 - frac_len;
  Int num = mant, den(1);
  Int scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(k >= 0 ? k : -k));
  if (k >= 0) {
    num *= scale;
  } else {
    den = scale;
  }
  if (negative) num = -num;
  Rat r(num, den);
  r.canonicalize();
  return r;
}

Rat parse_rational(std::string_view text) {
  const std::size_t slash = text.find('/');
  if (slash == std::string_view::npos) return parse_decimal(text);
  const std::string num(text.substr(0, slash));
  const std::string den(text.substr(slash + 1));
  Int a, b;
  if (mpz_set_str(a.get_mpz_t(), num.c_str(), 10) != 0 ||
      mpz_set_str(b.get_mpz_t(), den.c_str(), 10) != 0 || sgn(b) == 0) {
    bad_literal(text);
  }
  Rat r(a, b);
  r.canonicalize();
  return r;
}

std::string to_ratio_string(const Rat& q) {
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

double to_double(const Rat& q) { return q.get_d(); }

}  // namespace fpcert
