// SPDX-License-Identifier: Apache-2.0
#include "fpcert/cex_search.hpp"

#include <cmath>
#include <stdexcept>

namespace fpcert {

namespace {

void validate(const SearchConfig& cfg) {
  if (cfg.max_deepfool_iters <= 0 || sgn(cfg.overshoot) <= 0 || cfg.bisection_iters <= 0 ||
      cfg.expansion_iters <= 0)
    throw std::invalid_argument("search config values must be positive");
}

std::vector<double> to_doubles(std::span<const FpValue> xs) { return approx_values(xs); }

std::vector<FpValue> quantize_doubles(const std::vector<double>& xs, const FpFormat& fmt) {
  return quantize(std::span<const double>(xs.data(), xs.size()), fmt);
}

double norm2(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::optional<std::size_t> try_classify(const Network& net, std::span<const FpValue> x,
                                        const FpFormat& fmt) {
  try {
    return classify(net, x, fmt);
  } catch (const ExecError&) {
    return std::nullopt;
  }
}

}  // namespace

RVec gradient_margin(const Network& net, std::span<const FpValue> x,
                     const FpFormat& fmt_grad, std::size_t i_star, std::size_t j) {
  if (i_star == j) throw std::invalid_argument("gradient_margin: classes must differ");
  const Trace trace = fp_forward(net, x, fmt_grad, /*with_exact=*/false);
  if (trace.overflowed) throw ExecError("gradient_margin: forward pass overflowed");

  const std::size_t depth = net.depth();
  const Layer& last = net.layers().back();
  RVec g = sub(row(last.W, i_star), row(last.W, j));
  for (std::size_t l = depth - 1; l >= 1; --l) {
    const Layer& layer = net.layers()[l - 1];
    // ReLU mask of the fmt_grad execution; inactive (or exactly 0) kills the path
    for (std::size_t r = 0; r < g.size(); ++r) {
      const FpValue& pre = trace.preacts[l - 1][r];
      const bool active = pre.is_finite() && pre.significand() > 0;
      if (!active) g[r] = 0;
    }
    RVec gn(layer.in_dim(), Rat(0));
    for (std::size_t r = 0; r < layer.out_dim(); ++r) {
      if (sgn(g[r]) == 0) continue;
      for (std::size_t c = 0; c < layer.in_dim(); ++c) gn[c] += layer.W(r, c) * g[r];
    }
    g = std::move(gn);
  }
  return g;
}

std::optional<std::vector<FpValue>> find_flip(const Network& net,
                                              std::span<const FpValue> x_nat,
                                              const FpFormat& fmt, const SearchConfig& cfg) {
  validate(cfg);
  const FpFormat grad_fmt = make_format(FormatName::float64);
  const auto c0_opt = try_classify(net, x_nat, fmt);
  if (!c0_opt) throw ExecError("find_flip: starting point overflows");
  const std::size_t c0 = *c0_opt;
  const double overshoot = 1.0 + to_double(cfg.overshoot);

  std::vector<FpValue> x(x_nat.begin(), x_nat.end());
  for (int iter = 0; iter < cfg.max_deepfool_iters; ++iter) {
    Trace trace;
    try {
      trace = fp_forward(net, x, fmt, /*with_exact=*/false);
    } catch (const std::invalid_argument&) {
      return std::nullopt;
    }
    if (trace.overflowed) return std::nullopt;
    if (argmax_outputs(trace) != c0) return x;

    // classic multiclass DeepFool: pick the closest linearized boundary
    double best_ratio = 0;
    double best_val = 0, best_n2 = 0;
    std::vector<double> best_w;
    bool have = false;
    for (std::size_t j = 0; j < net.n_out(); ++j) {
      if (j == c0) continue;
      RVec g;
      try {
        g = gradient_margin(net, x, grad_fmt, c0, j);
      } catch (const ExecError&) {
        return std::nullopt;
      }
      std::vector<double> w(g.size());
      for (std::size_t k = 0; k < g.size(); ++k) w[k] = to_double(g[k]);
      double n2 = 0;
      for (double v : w) n2 += v * v;
      if (n2 == 0) continue;
      const double val = to_double(fp_margin(trace, c0, j));
      const double ratio = std::abs(val) / std::sqrt(n2);
      if (!have || ratio < best_ratio) {
        have = true;
        best_ratio = ratio;
        best_val = val;
        best_n2 = n2;
        best_w = std::move(w);
      }
    }
    if (!have) return std::nullopt;  // no boundary reachable (e.g. constant classifier)

    std::vector<double> xd = to_doubles(x);
    double scale = overshoot * best_val / best_n2;
    std::vector<FpValue> next = x;
    for (int grow = 0; grow < 48; ++grow) {
      std::vector<double> cand = xd;
      for (std::size_t k = 0; k < cand.size(); ++k) cand[k] -= scale * best_w[k];
      next = quantize_doubles(cand, fmt);
      if (!(next == x)) break;  // step survived quantization
      scale *= 2;
    }
    if (next == x) return std::nullopt;
    x = std::move(next);
  }
  return std::nullopt;
}

std::optional<std::pair<std::vector<FpValue>, std::vector<FpValue>>> boundary_pair(
    const Network& net, std::span<const FpValue> x_nat, std::span<const FpValue> x_t,
    const FpFormat& fmt, const SearchConfig& cfg) {
  validate(cfg);
  if (x_nat.size() != x_t.size()) throw std::invalid_argument("boundary_pair: dim mismatch");
  const auto c_nat = try_classify(net, x_nat, fmt);
  const auto c_t = try_classify(net, x_t, fmt);
  if (!c_nat || !c_t) return std::nullopt;
  if (*c_nat == *c_t)
    throw std::invalid_argument("boundary_pair: endpoints must classify differently");

  const std::vector<double> a = to_doubles(x_nat);
  const std::vector<double> b = to_doubles(x_t);
  std::vector<FpValue> lo_pt(x_nat.begin(), x_nat.end());
  std::vector<FpValue> hi_pt(x_t.begin(), x_t.end());
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < cfg.bisection_iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    std::vector<double> pd(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) pd[k] = a[k] + mid * (b[k] - a[k]);
    std::vector<FpValue> pt = quantize_doubles(pd, fmt);
    if (pt == lo_pt || pt == hi_pt) break;  // quantization resolution reached
    const auto c = try_classify(net, pt, fmt);
    if (!c) return std::nullopt;
    if (*c == *c_nat) {
      lo = mid;
      lo_pt = std::move(pt);
    } else {
      hi = mid;
      hi_pt = std::move(pt);
    }
  }

  const Rat eps = l2_norm_up(sub(values(lo_pt), values(hi_pt)));
  if (sgn(eps) == 0) return std::nullopt;
  if (!real_arith_certify(net, lo_pt, eps).certified) return std::nullopt;
  return std::make_pair(std::move(lo_pt), std::move(hi_pt));
}

CexTriple expand(const Network& net,
                 const std::pair<std::vector<FpValue>, std::vector<FpValue>>& pair,
                 const FpFormat& fmt, const SearchConfig& cfg) {
  validate(cfg);
  const std::vector<FpValue>& x0_init = pair.first;
  const std::vector<FpValue>& x1 = pair.second;
  const std::size_t c0 = classify(net, x0_init, fmt);

  CexTriple triple;
  triple.x1 = x1;
  triple.class1 = classify(net, x1, fmt);
  triple.x0 = x0_init;
  triple.class0 = c0;
  triple.eps = l2_norm_up(sub(values(x0_init), values(x1)));

  const std::vector<double> base = to_doubles(x0_init);
  std::vector<double> dir = to_doubles(x0_init);
  const std::vector<double> x1d = to_doubles(x1);
  for (std::size_t k = 0; k < dir.size(); ++k) dir[k] -= x1d[k];
  const double dn = norm2(dir);
  if (dn == 0) return triple;
  for (double& d : dir) d /= dn;

  auto probe = [&](double t, CexTriple* out) {
    std::vector<double> cand = base;
    for (std::size_t k = 0; k < cand.size(); ++k) cand[k] += t * dir[k];
    std::vector<FpValue> q = quantize_doubles(cand, fmt);
    const auto c = try_classify(net, q, fmt);
    if (!c || *c != c0) return false;
    const Rat eps = l2_norm_up(sub(values(q), values(x1)));
    if (eps < triple.eps) return false;  // outward only
    if (!real_arith_certify(net, q, eps).certified) return false;
    out->x0 = std::move(q);
    out->eps = eps;
    return true;
  };

  int budget = cfg.expansion_iters;
  double t = dn, last_good = 0.0, first_bad = -1.0;
  while (budget > 0) {  // exponential growth phase
    --budget;
    if (probe(t, &triple)) {
      last_good = t;
      t *= 2;
    } else {
      first_bad = t;
      break;
    }
  }
  if (first_bad > 0) {  // refine between the last accepted and first rejected offset
    double lo = last_good, hi = first_bad;
    while (budget-- > 0 && hi - lo > 1e-12 * (1.0 + hi)) {
      const double mid = 0.5 * (lo + hi);
      if (probe(mid, &triple)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
  }
  return triple;
}

std::optional<CexTriple> search_cex(const Network& net, std::span<const FpValue> x_nat,
                                    const FpFormat& fmt, const SearchConfig& cfg) {
  const auto x_t = find_flip(net, x_nat, fmt, cfg);
  if (!x_t) return std::nullopt;
  const auto pair = boundary_pair(net, x_nat, *x_t, fmt, cfg);
  if (!pair) return std::nullopt;
  CexTriple triple = expand(net, *pair, fmt, cfg);
  if (!verify_triple(net, triple, fmt)) return std::nullopt;
  return triple;
}

bool verify_triple(const Network& net, const CexTriple& triple, const FpFormat& fmt) {
  if (triple.x0.size() != triple.x1.size()) return false;
  const Rat dist = l2_norm_up(sub(values(triple.x0), values(triple.x1)));
  if (dist > triple.eps) return false;
  const auto c0 = try_classify(net, triple.x0, fmt);
  const auto c1 = try_classify(net, triple.x1, fmt);
  if (!c0 || !c1 || *c0 != triple.class0 || *c1 != triple.class1) return false;
  if (triple.class0 == triple.class1) return false;
  return real_arith_certify(net, triple.x0, triple.eps).certified;
}

Network inject_bias_adversary(const Network& net, const Rat& bias) {
  if (net.depth() < 2)
    throw std::invalid_argument("inject_bias_adversary: need at least 2 layers");
  const FpFormat& fmt = net.storage_format();
  {
    const FpValue qb = fp_round(bias, fmt);
    if (!qb.is_finite() || qb.value() != bias)
      throw std::invalid_argument("inject_bias_adversary: bias not representable in " +
                                  format_name(fmt));
  }
  const std::size_t depth = net.depth();
  std::vector<RVec> biases(depth);
  for (std::size_t l = 0; l + 2 < depth; ++l)
    biases[l] = RVec(net.layers()[l].out_dim(), Rat(0));
  biases[depth - 2] = RVec(net.layers()[depth - 2].out_dim(), bias);

  // b_L = -(W_L . B*ones), exact product rounded entrywise to storage format
  const Layer& last = net.layers()[depth - 1];
  const RVec flat(last.in_dim(), bias);
  RVec comp = matvec(last.W, flat);
  RVec b_last(comp.size());
  for (std::size_t i = 0; i < comp.size(); ++i) {
    const FpValue v = fp_round(-comp[i], fmt);
    if (!v.is_finite())
      throw std::invalid_argument(
          "inject_bias_adversary: compensating bias overflows the storage format");
    b_last[i] = v.is_zero() ? Rat(0) : v.value();
  }
  biases[depth - 1] = std::move(b_last);
  return replace_biases(net, std::move(biases));
}

}  // namespace fpcert
