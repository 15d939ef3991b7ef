// SPDX-License-Identifier: Apache-2.0
#include "fpcert/fp_value.hpp"

#include <cmath>
#include <cstdlib>

namespace fpcert {

namespace {

using u128 = unsigned __int128;
using i128 = __int128;

int bitlen(u128 x) {
  const auto hi = static_cast<std::uint64_t>(x >> 64);
  if (hi != 0) return 128 - __builtin_clzll(hi);
  const auto lo = static_cast<std::uint64_t>(x);
  if (lo == 0) return 0;
  return 64 - __builtin_clzll(lo);
}

// Exponent-field width of the named formats (bias == emax == 2^(w-1)-1).
int exponent_bits(const FpFormat& fmt) {
  switch (fmt.name) {
    case FormatName::float16: return 5;
    case FormatName::float32: return 8;
    case FormatName::float64: return 11;
    case FormatName::bfloat16: return 8;
    case FormatName::custom: break;
  }
  throw std::invalid_argument("bit-pattern I/O needs a named format");
}

int total_bits(const FpFormat& fmt) { return 1 + exponent_bits(fmt) + fmt.p - 1; }

// Round-to-nearest-even of m*2^e into fmt, exact integer arithmetic.
// Requires |m| < 2^121 so every shift below stays inside 128 bits.
FpValue round_dyadic(i128 m, int e, const FpFormat& fmt) {
  if (m == 0) return FpValue();
  const bool neg = m < 0;
  u128 um = neg ? static_cast<u128>(-m) : static_cast<u128>(m);
  const int len = bitlen(um);
  const long val_exp = static_cast<long>(e) + len - 1;  // floor(log2 |value|)
  const long ulp_exp =
      (val_exp >= fmt.emin ? val_exp : static_cast<long>(fmt.emin)) - (fmt.p - 1);
  const long sh = ulp_exp - e;
  u128 rounded;
  if (sh <= 0) {
    rounded = um << static_cast<int>(-sh);  // exact; -sh <= p-1 by construction
  } else if (sh >= 128) {
    rounded = 0;  // |value| far below half the smallest subnormal
  } else {
    const u128 q = um >> static_cast<int>(sh);
    const u128 rem = um - (q << static_cast<int>(sh));
    const u128 half = u128(1) << static_cast<int>(sh - 1);
    rounded = q;
    if (rem > half || (rem == half && (q & 1) != 0)) rounded += 1;
  }
  if (rounded == 0) return FpValue();
  long t = ulp_exp;
  if (rounded == (u128(1) << fmt.p)) {  // rounding crossed a binade
    rounded >>= 1;
    t += 1;
  }
  if (t + bitlen(rounded) - 1 > fmt.emax) return FpValue::infinity(neg);
  auto sig = static_cast<std::int64_t>(static_cast<std::uint64_t>(rounded));
  return FpValue::make_finite(neg ? -sig : sig, static_cast<int>(t));
}

}  // namespace

FpValue FpValue::make_finite(std::int64_t significand, int exp2) {
  FpValue v;
  v.kind_ = Kind::finite;
  if (significand == 0) return v;
  while ((significand & 1) == 0) {
    significand >>= 1;
    ++exp2;
  }
  v.m_ = significand;
  v.e_ = exp2;
  return v;
}

FpValue FpValue::infinity(bool negative) {
  FpValue v;
  v.kind_ = negative ? Kind::neg_inf : Kind::pos_inf;
  return v;
}

FpValue FpValue::quiet_nan() {
  FpValue v;
  v.kind_ = Kind::nan;
  return v;
}

bool FpValue::is_negative() const {
  switch (kind_) {
    case Kind::finite: return m_ < 0;
    case Kind::neg_inf: return true;
    default: return false;
  }
}

Rat FpValue::value() const {
  if (kind_ != Kind::finite) throw ExecError("FpValue::value on non-finite value");
  Rat r(static_cast<long>(m_));
  if (e_ != 0) r *= pow2(e_);
  return r;
}

double FpValue::approx() const {
  switch (kind_) {
    case Kind::pos_inf: return HUGE_VAL;
    case Kind::neg_inf: return -HUGE_VAL;
    case Kind::nan: return std::nan("");
    case Kind::finite: break;
  }
  return std::ldexp(static_cast<double>(m_), e_);
}

FpValue fp_round(const Rat& q, const FpFormat& fmt) {
  const int s = sgn(q);
  if (s == 0) return FpValue();
  Rat aq = ::abs(q);
  const long e = floor_log2(aq);
  const long ulp_exp =
      (e >= fmt.emin ? e : static_cast<long>(fmt.emin)) - (fmt.p - 1);
  Int num = aq.get_num();
  Int den = aq.get_den();
  if (ulp_exp >= 0) {
    mpz_mul_2exp(den.get_mpz_t(), den.get_mpz_t(), static_cast<unsigned long>(ulp_exp));
  } else {
    mpz_mul_2exp(num.get_mpz_t(), num.get_mpz_t(), static_cast<unsigned long>(-ulp_exp));
  }
  Int quo, rem;
  mpz_fdiv_qr(quo.get_mpz_t(), rem.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  rem *= 2;
  const int c = cmp(rem, den);
  if (c > 0 || (c == 0 && mpz_odd_p(quo.get_mpz_t()))) quo += 1;
  if (sgn(quo) == 0) return FpValue();
  Rat magnitude(quo);
  magnitude *= pow2(ulp_exp);
  if (magnitude > fmt.f_max) return FpValue::infinity(s < 0);
  const auto sig = static_cast<std::int64_t>(mpz_get_si(quo.get_mpz_t()));
  return FpValue::make_finite(s < 0 ? -sig : sig, static_cast<int>(ulp_exp));
}

FpValue fp_round_value(const FpValue& v, const FpFormat& fmt) {
  if (!v.is_finite()) return v;
  return round_dyadic(v.significand(), v.exp2(), fmt);
}

FpValue fp_from_double(double d) {
  if (std::isnan(d)) return FpValue::quiet_nan();
  if (std::isinf(d)) return FpValue::infinity(d < 0);
  if (d == 0.0) return FpValue();
  int exp = 0;
  const double fr = std::frexp(d, &exp);
  const auto sig = static_cast<std::int64_t>(std::ldexp(fr, 53));  // exact
  return FpValue::make_finite(sig, exp - 53);
}

FpValue fp_mul(const FpValue& a, const FpValue& b, const FpFormat& fmt) {
  if (a.is_nan() || b.is_nan()) return FpValue::quiet_nan();
  if (!a.is_finite() || !b.is_finite()) {
    if (a.is_zero() || b.is_zero()) return FpValue::quiet_nan();  // inf * 0
    return FpValue::infinity(a.is_negative() != b.is_negative());
  }
  const i128 prod = static_cast<i128>(a.significand()) * b.significand();
  return round_dyadic(prod, a.exp2() + b.exp2(), fmt);
}

FpValue fp_add(const FpValue& a, const FpValue& b, const FpFormat& fmt) {
  if (a.is_nan() || b.is_nan()) return FpValue::quiet_nan();
  if (!a.is_finite() || !b.is_finite()) {
    if (a.is_finite()) return b;
    if (b.is_finite()) return a;
    if (a.kind() == b.kind()) return a;
    return FpValue::quiet_nan();  // opposite infinities
  }
  const FpValue& hi = a.exp2() >= b.exp2() ? a : b;
  const FpValue& lo = a.exp2() >= b.exp2() ? b : a;
  const int d = hi.exp2() - lo.exp2();
  if (lo.is_zero()) return fp_round_value(hi, fmt);
  if (d <= 63) {
    const i128 sum = (static_cast<i128>(hi.significand()) << d) + lo.significand();
    return round_dyadic(sum, lo.exp2(), fmt);
  }
  // Exponents too far apart for the 128-bit path; exact rational fallback.
  return fp_round(hi.value() + lo.value(), fmt);
}

FpValue fp_dot_tracked(std::span<const FpValue> a, std::span<const FpValue> b,
                       const FpFormat& fmt, bool* saw_nonfinite) {
  if (a.size() != b.size()) throw std::invalid_argument("fp_dot: length mismatch");
  FpValue s;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const FpValue p = fp_mul(a[k], b[k], fmt);
    if (saw_nonfinite != nullptr && !p.is_finite()) *saw_nonfinite = true;
    s = k == 0 ? p : fp_add(s, p, fmt);
    if (saw_nonfinite != nullptr && !s.is_finite()) *saw_nonfinite = true;
  }
  return s;
}

FpValue fp_dot(std::span<const FpValue> a, std::span<const FpValue> b,
               const FpFormat& fmt) {
  return fp_dot_tracked(a, b, fmt, nullptr);
}

bool representable(const FpValue& v, const FpFormat& fmt) {
  return v.is_finite() && fp_round_value(v, fmt) == v;
}

std::vector<FpValue> quantize(const RVec& xs, const FpFormat& fmt) {
  std::vector<FpValue> out;
  out.reserve(xs.size());
  for (const Rat& x : xs) out.push_back(fp_round(x, fmt));
  return out;
}

std::vector<FpValue> quantize(std::span<const double> xs, const FpFormat& fmt) {
  std::vector<FpValue> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(fp_round_value(fp_from_double(x), fmt));
  return out;
}

RVec values(std::span<const FpValue> xs) {
  RVec out;
  out.reserve(xs.size());
  for (const FpValue& x : xs) out.push_back(x.value());
  return out;
}

std::vector<double> approx_values(std::span<const FpValue> xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (const FpValue& x : xs) out.push_back(x.approx());
  return out;
}

std::string encode_hex(const FpValue& v, const FpFormat& fmt) {
  if (!representable(v, fmt))
    throw std::invalid_argument("encode_hex: value not representable in " + format_name(fmt));
  const int nbits = total_bits(fmt);
  const int bias = fmt.emax;
  std::uint64_t bits = 0;
  if (!v.is_zero()) {
    const std::int64_t m = v.significand();
    const bool neg = m < 0;
    const auto um = static_cast<std::uint64_t>(neg ? -m : m);
    const int len = 64 - __builtin_clzll(um);
    const long val_exp = static_cast<long>(v.exp2()) + len - 1;
    std::uint64_t efield, frac;
    if (val_exp >= fmt.emin) {
      // normal: um << (p - len) has its top bit at position p-1
      frac = (um << (fmt.p - len)) - (std::uint64_t(1) << (fmt.p - 1));
      efield = static_cast<std::uint64_t>(val_exp + bias);
    } else {
      frac = um << (v.exp2() - (fmt.emin - fmt.p + 1));
      efield = 0;
    }
    bits = (static_cast<std::uint64_t>(neg) << (nbits - 1)) |
           (efield << (fmt.p - 1)) | frac;
  }
  const int digits = nbits / 4;
  std::string out(static_cast<std::size_t>(digits), '0');
  for (int i = digits - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = "0123456789abcdef"[bits & 0xf];
    bits >>= 4;
  }
  return out;
}

FpValue decode_hex(std::string_view hex, const FpFormat& fmt) {
  const int wbits = exponent_bits(fmt);
  const int nbits = total_bits(fmt);
  const int digits = nbits / 4;
  if (hex.size() != static_cast<std::size_t>(digits))
    throw std::invalid_argument("decode_hex: expected " + std::to_string(digits) +
                                " hex digits, got '" + std::string(hex) + "'");
  std::uint64_t bits = 0;
  for (char ch : hex) {
    int d;
    if (ch >= '0' && ch <= '9') d = ch - '0';
    else if (ch >= 'a' && ch <= 'f') d = ch - 'a' + 10;
    else if (ch >= 'A' && ch <= 'F') d = ch - 'A' + 10;
    else throw std::invalid_argument("decode_hex: bad digit in '" + std::string(hex) + "'");
    bits = (bits << 4) | static_cast<std::uint64_t>(d);
  }
  const bool neg = ((bits >> (nbits - 1)) & 1) != 0;
  const std::uint64_t efield = (bits >> (fmt.p - 1)) & ((std::uint64_t(1) << wbits) - 1);
  const std::uint64_t frac = bits & ((std::uint64_t(1) << (fmt.p - 1)) - 1);
  const std::uint64_t emask = (std::uint64_t(1) << wbits) - 1;
  if (efield == emask) {
    return frac == 0 ? FpValue::infinity(neg) : FpValue::quiet_nan();
  }
  std::int64_t m;
  int e;
  if (efield == 0) {
    m = static_cast<std::int64_t>(frac);
    e = fmt.emin - fmt.p + 1;
  } else {
    m = static_cast<std::int64_t>(frac | (std::uint64_t(1) << (fmt.p - 1)));
    e = static_cast<int>(efield) - fmt.emax - fmt.p + 1;
  }
  return FpValue::make_finite(neg ? -m : m, e);  // -0 collapses to +0 here
}

}  // namespace fpcert
