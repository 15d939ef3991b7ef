// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "fpcert/rational.hpp"

namespace fpcert {

using RVec = std::vector<Rat>;

// Dense rational matrix, row-major, dimensions fixed at construction.
class RMat {
 public:
  RMat() = default;
  RMat(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), a_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Rat& operator()(std::size_t r, std::size_t c) { return a_[r * cols_ + c]; }
  const Rat& operator()(std::size_t r, std::size_t c) const {
    return a_[r * cols_ + c];
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Rat> a_;
};

RVec matvec(const RMat& m, const RVec& v);
RMat matmul(const RMat& a, const RMat& b);
RMat transpose(const RMat& m);
RMat abs(const RMat& m);
RVec abs(const RVec& v);
RVec row(const RMat& m, std::size_t r);
RVec add(const RVec& a, const RVec& b);
RVec sub(const RVec& a, const RVec& b);
Rat dot(const RVec& a, const RVec& b);
Rat sum_sq(const RVec& v);
Rat frobenius_sq(const RMat& m);
Rat linf_norm(const RVec& v);
Rat max_abs_entry(const RMat& m);

// Entrywise multiplication by 2^k (exact).
void scale_pow2_inplace(RMat& m, long k);

}  // namespace fpcert
