// SPDX-License-Identifier: Apache-2.0
#include "fpcert/linalg.hpp"

#include <stdexcept>

namespace fpcert {

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace

RVec matvec(const RMat& m, const RVec& v) {
  require(m.cols() == v.size(), "matvec: dimension mismatch");
  RVec out(m.rows());
  Rat term;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Rat acc(0);
    for (std::size_t c = 0; c < m.cols(); ++c) {
      term = m(r, c) * v[c];
      acc += term;
    }
    out[r] = acc;
  }
  return out;
}

RMat matmul(const RMat& a, const RMat& b) {
  require(a.cols() == b.rows(), "matmul: dimension mismatch");
  RMat out(a.rows(), b.cols());
  Rat term;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < b.cols(); ++c) {
      Rat acc(0);
      for (std::size_t k = 0; k < a.cols(); ++k) {
        term = a(r, k) * b(k, c);
        acc += term;
      }
      out(r, c) = acc;
    }
  }
  return out;
}

RMat transpose(const RMat& m) {
  RMat out(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(c, r) = m(r, c);
  return out;
}

RMat abs(const RMat& m) {
  RMat out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = ::abs(m(r, c));
  return out;
}

RVec abs(const RVec& v) {
  RVec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = ::abs(v[i]);
  return out;
}

RVec row(const RMat& m, std::size_t r) {
  require(r < m.rows(), "row: index out of range");
  RVec out(m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c) out[c] = m(r, c);
  return out;
}

RVec add(const RVec& a, const RVec& b) {
  require(a.size() == b.size(), "add: dimension mismatch");
  RVec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

RVec sub(const RVec& a, const RVec& b) {
  require(a.size() == b.size(), "sub: dimension mismatch");
  RVec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Rat dot(const RVec& a, const RVec& b) {
  require(a.size() == b.size(), "dot: dimension mismatch");
  Rat acc(0), term;
  for (std::size_t i = 0; i < a.size(); ++i) {
    term = a[i] * b[i];
    acc += term;
  }
  return acc;
}

Rat sum_sq(const RVec& v) {
  Rat acc(0), term;
  for (const Rat& x : v) {
    term = x * x;
    acc += term;
  }
  return acc;
}

Rat frobenius_sq(const RMat& m) {
  Rat acc(0), term;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      term = m(r, c) * m(r, c);
      acc += term;
    }
  }
  return acc;
}

Rat linf_norm(const RVec& v) {
  Rat best(0);
  for (const Rat& x : v) {
    Rat a = ::abs(x);
    if (a > best) best = a;
  }
  return best;
}

Rat max_abs_entry(const RMat& m) {
  Rat best(0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      Rat a = ::abs(m(r, c));
      if (a > best) best = a;
    }
  }
  return best;
}

void scale_pow2_inplace(RMat& m, long k) {
  const Rat f = pow2(k);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) *= f;
}

}  // namespace fpcert
