// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpcert/fp_format.hpp"
#include "fpcert/linalg.hpp"

namespace fpcert {

struct ExecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One floating-point datum: a dyadic value significand*2^exp2 with the
// significand held odd (or zero), or a special value. -0 is normalized
// to +0. The significand of any supported format fits in 53 bits, so a
// plain int64 carries every finite value exactly.
class FpValue {
 public:
  enum class Kind : std::uint8_t { finite, pos_inf, neg_inf, nan };

  FpValue() = default;  // +0

  static FpValue make_finite(std::int64_t significand, int exp2);
  static FpValue infinity(bool negative);
  static FpValue quiet_nan();

  Kind kind() const { return kind_; }
  bool is_finite() const { return kind_ == Kind::finite; }
  bool is_nan() const { return kind_ == Kind::nan; }
  bool is_zero() const { return kind_ == Kind::finite && m_ == 0; }
  bool is_negative() const;

  std::int64_t significand() const { return m_; }
  int exp2() const { return e_; }

  Rat value() const;      // pre: finite
  double approx() const;  // exact for every finite value of supported formats

  friend bool operator==(const FpValue& a, const FpValue& b) {
    return a.kind_ == b.kind_ && a.m_ == b.m_ && a.e_ == b.e_;
  }

 private:
  std::int64_t m_ = 0;
  int e_ = 0;
  Kind kind_ = Kind::finite;
};

// Round-to-nearest, ties-to-even with gradual underflow. Magnitudes whose
// rounded value exceeds f_max become +-inf. This is the authoritative
// software definition; the dyadic fast path inside fp_add/fp_mul is checked
// against it bit-for-bit.
FpValue fp_round(const Rat& q, const FpFormat& fmt);

// Re-rounds an existing (finite or not) value into fmt.
FpValue fp_round_value(const FpValue& v, const FpFormat& fmt);

// Exact conversion from a native double (binary64 is a superset of every
// supported significand width).
FpValue fp_from_double(double d);

FpValue fp_add(const FpValue& a, const FpValue& b, const FpFormat& fmt);
FpValue fp_mul(const FpValue& a, const FpValue& b, const FpFormat& fmt);

// Sequential left-to-right dot product, no FMA:
// s_0 = fl(a_0 b_0); s_k = fl(s_{k-1} + fl(a_k b_k)).
FpValue fp_dot(std::span<const FpValue> a, std::span<const FpValue> b,
               const FpFormat& fmt);
// Same, reporting whether any intermediate was non-finite.
FpValue fp_dot_tracked(std::span<const FpValue> a, std::span<const FpValue> b,
                       const FpFormat& fmt, bool* saw_nonfinite);

bool representable(const FpValue& v, const FpFormat& fmt);

std::vector<FpValue> quantize(const RVec& xs, const FpFormat& fmt);
std::vector<FpValue> quantize(std::span<const double> xs, const FpFormat& fmt);
RVec values(std::span<const FpValue> xs);
std::vector<double> approx_values(std::span<const FpValue> xs);

// Bit-pattern I/O for the named IEEE-style formats (lowercase hex, fixed
// width). encode requires a finite value; decode may yield inf/nan, which
// callers are expected to reject where finiteness is required.
std::string encode_hex(const FpValue& v, const FpFormat& fmt);
FpValue decode_hex(std::string_view hex, const FpFormat& fmt);

}  // namespace fpcert
