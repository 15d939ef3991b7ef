// SPDX-License-Identifier: Apache-2.0
#include "fpcert/fp_exec.hpp"

#include <stdexcept>

namespace fpcert {

namespace {

FpValue fp_relu(const FpValue& v) {
  switch (v.kind()) {
    case FpValue::Kind::nan: return v;
    case FpValue::Kind::pos_inf: return v;
    case FpValue::Kind::neg_inf: return FpValue();
    case FpValue::Kind::finite: break;
  }
  return v.significand() < 0 ? FpValue() : v;
}

Rat exact_relu(const Rat& q) { return sgn(q) < 0 ? Rat(0) : q; }

}  // namespace

Trace fp_forward(const Network& net, std::span<const FpValue> x, const FpFormat& fmt,
                 bool with_exact) {
  if (x.size() != net.n_in())
    throw std::invalid_argument("fp_forward: input dimension mismatch");
  for (const FpValue& v : x) {
    if (!representable(v, fmt))
      throw std::invalid_argument("fp_forward: input entry not representable in " +
                                  format_name(fmt));
  }

  Trace trace;
  trace.acts.reserve(net.depth() + 1);
  trace.preacts.reserve(net.depth());
  trace.acts.emplace_back(x.begin(), x.end());
  if (with_exact) {
    trace.exact_acts.reserve(net.depth() + 1);
    trace.exact_acts.push_back(values(x));
  }

  for (std::size_t l = 0; l < net.depth(); ++l) {
    const Layer& layer = net.layers()[l];
    const std::vector<FpValue>& z_prev = trace.acts.back();
    const std::size_t n = layer.in_dim();
    const std::size_t m = layer.out_dim();

    std::vector<FpValue> pre(m);
    for (std::size_t r = 0; r < m; ++r) {
      bool nonfinite = false;
      const std::span<const FpValue> wrow(layer.W_fp.data() + r * n, n);
      const FpValue s = fp_dot_tracked(wrow, z_prev, fmt, &nonfinite);
      const FpValue a = fp_add(s, layer.b_fp[r], fmt);
      if (nonfinite || !a.is_finite()) trace.overflowed = true;
      pre[r] = a;
    }

    std::vector<FpValue> act(m);
    for (std::size_t r = 0; r < m; ++r)
      act[r] = layer.act == ActivationTag::relu ? fp_relu(pre[r]) : pre[r];
    trace.preacts.push_back(std::move(pre));
    trace.acts.push_back(std::move(act));

    if (with_exact) {
      RVec a_exact = matvec(layer.W, trace.exact_acts.back());
      for (std::size_t r = 0; r < m; ++r) {
        a_exact[r] += layer.b[r];
        if (layer.act == ActivationTag::relu) a_exact[r] = exact_relu(a_exact[r]);
      }
      trace.exact_acts.push_back(std::move(a_exact));
    }
  }
  return trace;
}

std::size_t argmax_outputs(const Trace& trace) {
  const std::vector<FpValue>& y = trace.acts.back();
  if (trace.overflowed) throw ExecError("argmax on an overflowed execution");
  std::size_t best = 0;
  for (std::size_t i = 1; i < y.size(); ++i) {
    // strict >: ties keep the lowest index
    if (y[i].value() > y[best].value()) best = i;
  }
  return best;
}

std::size_t classify(const Network& net, std::span<const FpValue> x, const FpFormat& fmt) {
  const Trace trace = fp_forward(net, x, fmt, /*with_exact=*/false);
  return argmax_outputs(trace);
}

Rat fp_margin(const Trace& trace, std::size_t i_star, std::size_t j) {
  const std::vector<FpValue>& y = trace.acts.back();
  if (i_star == j) throw std::invalid_argument("fp_margin: classes must differ");
  if (i_star >= y.size() || j >= y.size())
    throw std::invalid_argument("fp_margin: class index out of range");
  return y[i_star].value() - y[j].value();
}

std::size_t argmax_exact_outputs(const Trace& trace) {
  if (trace.exact_acts.empty()) throw std::invalid_argument("trace lacks exact activations");
  const RVec& y = trace.exact_acts.back();
  std::size_t best = 0;
  for (std::size_t i = 1; i < y.size(); ++i)
    if (y[i] > y[best]) best = i;
  return best;
}

Rat measured_deviation(const Network& net, std::span<const FpValue> x,
                       const FpFormat& fmt_lo, const FpFormat& fmt_hi) {
  if (net.depth() < 1) throw std::invalid_argument("measured_deviation: empty network");
  const Trace lo = fp_forward(net, x, fmt_lo, /*with_exact=*/false);
  const Trace hi = fp_forward(net, x, fmt_hi, /*with_exact=*/false);
  if (lo.overflowed || hi.overflowed)
    throw ExecError("measured_deviation: forward pass overflowed");
  const std::size_t pen = net.depth() - 1;  // activations entering the final layer
  const RVec zl = values(lo.acts[pen]);
  const RVec zh = values(hi.acts[pen]);
  return l2_norm_up(sub(zl, zh));
}

}  // namespace fpcert
