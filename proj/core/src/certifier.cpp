// SPDX-License-Identifier: Apache-2.0
#include "fpcert/certifier.hpp"

#include <stdexcept>

namespace fpcert {

std::vector<Rat> radii(const Network& net, const Rat& x_norm_up, const Rat& eps) {
  if (sgn(eps) < 0) throw std::invalid_argument("radii: eps must be >= 0");
  std::vector<Rat> r;
  r.reserve(net.depth());
  r.push_back(x_norm_up + eps);
  for (std::size_t l = 0; l + 1 < net.depth(); ++l) {
    const Layer& layer = net.layers()[l];
    r.push_back(activation_lipschitz(layer.act) *
                (layer.norms.spec_up * r.back() + layer.norms.bias_l2_up));
  }
  return r;
}

std::variant<OverflowRecord, OverflowFailure> overflow_check_layer(
    const Layer& layer, std::size_t layer_index, const Rat& r_prev, const Rat& d_prev,
    const FpFormat& fmt) {
  if (sgn(r_prev) < 0 || sgn(d_prev) < 0)
    throw std::invalid_argument("overflow_check_layer: negative radius or deviation");
  const ErrorConstants ec = error_constants(static_cast<long>(layer.in_dim()), fmt);
  const Rat reach = r_prev + d_prev;  // bounds ||z_hat_{l-1}||_2 over the ball
  OverflowRecord rec;
  rec.S = layer.norms.max_row_l2_up * reach;
  rec.M = layer.norms.max_row_linf * reach;
  if (!(rec.M < fmt.f_max))
    return OverflowFailure{layer_index, OverflowCond::max_product, rec.M, fmt.f_max};
  rec.dot_bound = rec.S * (Rat(1) + ec.gamma_n) + ec.a_dot_fwd;
  const Rat with_bias = rec.dot_bound + layer.norms.bias_linf;
  if (!(with_bias < fmt.f_max))
    return OverflowFailure{layer_index, OverflowCond::dot_sum, with_bias, fmt.f_max};
  return rec;
}

LayerCoeffs layer_coeffs(const Layer& layer, const FpFormat& fmt) {
  const ErrorConstants ec = error_constants(static_cast<long>(layer.in_dim()), fmt);
  const Rat& lphi = activation_lipschitz(layer.act);
  const Rat sqrt_m = sqrt_up(Rat(static_cast<long>(layer.out_dim())));
  LayerCoeffs co;
  co.alpha = lphi * (layer.norms.spec_up + ec.kappa * layer.norms.abs_spec_up);
  co.beta_slope = lphi * ec.kappa * layer.norms.abs_spec_up;
  co.beta_const =
      lphi * (fmt.u * layer.norms.bias_l2_up + (Rat(1) + fmt.u) * ec.a_dot * sqrt_m);
  return co;
}

PairCoeffs pair_coeffs(const Network& net, std::size_t i_star, std::size_t j,
                       const FpFormat& fmt) {
  if (i_star == j) throw std::invalid_argument("pair_coeffs: classes must differ");
  const PairNorms& pn = net.output_pair_norms(i_star, j);
  const Layer& last = net.layers().back();
  const ErrorConstants ec = error_constants(static_cast<long>(last.in_dim()), fmt);
  PairCoeffs pc;
  pc.alpha = pn.diff_row_l2_up + ec.kappa * pn.sum_abs_row_l2_up;
  pc.beta_slope = ec.kappa * pn.sum_abs_row_l2_up;
  pc.beta_const = fmt.u * pn.bias_abs_sum + Rat(2) * (Rat(1) + fmt.u) * ec.a_dot;
  return pc;
}

PropagateResult propagate(const Network& net, std::span<const FpValue> x, const Rat& eps,
                          const FpFormat& fmt) {
  if (sgn(eps) < 0) throw std::invalid_argument("propagate: eps must be >= 0");
  if (x.size() != net.n_in()) throw std::invalid_argument("propagate: input dim mismatch");
  for (const FpValue& v : x)
    if (!representable(v, fmt))
      throw std::invalid_argument("propagate: input not representable in " +
                                  format_name(fmt));

  DeviationState st;
  st.center.assign(x.begin(), x.end());
  st.eps = eps;
  st.radii = radii(net, l2_norm_up(values(x)), eps);
  st.devs.reserve(net.depth());
  st.devs.push_back(Rat(0));  // the network input is exact
  st.overflow_cert.reserve(net.depth());

  const std::size_t depth = net.depth();
  for (std::size_t l = 1; l <= depth; ++l) {
    const Layer& layer = net.layers()[l - 1];
    auto check = overflow_check_layer(layer, l, st.radii[l - 1], st.devs[l - 1], fmt);
    if (auto* fail = std::get_if<OverflowFailure>(&check)) return *fail;
    st.overflow_cert.push_back(std::get<OverflowRecord>(check));
    if (l <= depth - 1) {
      const LayerCoeffs co = layer_coeffs(layer, fmt);
      st.devs.push_back(co.alpha * st.devs[l - 1] + co.beta(st.radii[l - 1]));
    }
  }
  return st;
}

std::variant<std::pair<Rat, Rat>, OverflowFailure> error_terms(
    const Network& net, std::span<const FpValue> x, const Rat& eps, const FpFormat& fmt,
    std::size_t i_star, std::size_t j) {
  PropagateResult ball = propagate(net, x, eps, fmt);
  if (auto* fail = std::get_if<OverflowFailure>(&ball)) return *fail;
  PropagateResult ctr = propagate(net, x, Rat(0), fmt);
  if (auto* fail = std::get_if<OverflowFailure>(&ctr)) return *fail;
  const DeviationState& sb = std::get<DeviationState>(ball);
  const DeviationState& sc = std::get<DeviationState>(ctr);
  const PairCoeffs pc = pair_coeffs(net, i_star, j, fmt);
  const std::size_t pen = net.depth() - 1;
  Rat e_ctr = pc.alpha * sc.devs[pen] + pc.beta(sc.radii[pen]);
  Rat e_ball = pc.alpha * sb.devs[pen] + pc.beta(sb.radii[pen]);
  return std::make_pair(std::move(e_ctr), std::move(e_ball));
}

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::certified: return "certified";
    case Verdict::not_certified: return "not_certified";
    case Verdict::overflow_risk: return "overflow_risk";
    case Verdict::vacuous: return "vacuous";
  }
  return "?";
}

Rat certification_slack(const Rat& margin_hat, const Rat& lipschitz, const Rat& eps,
                        const Rat& e_ctr, const Rat& e_ball) {
  return margin_hat - lipschitz * eps - (e_ctr + e_ball);
}

Certificate certify(const Network& net, std::span<const FpValue> x, const Rat& eps,
                    const FpFormat& fmt, CertMode mode, const FpFormat* hi_fmt_in) {
  if (sgn(eps) <= 0) throw std::invalid_argument("certify: eps must be > 0");
  Certificate cert;
  cert.mode = mode;
  cert.degradation = Rat(0);

  FpFormat hi_fmt;
  if (mode == CertMode::hybrid) {
    hi_fmt = hi_fmt_in != nullptr ? *hi_fmt_in : make_format(FormatName::float64);
    if (!(hi_fmt.u < fmt.u))
      throw std::invalid_argument(
          "certify: hybrid reference format must have strictly smaller unit roundoff");
  }

  PropagateResult ball = propagate(net, x, eps, fmt);
  if (auto* fail = std::get_if<OverflowFailure>(&ball)) {
    cert.verdict = Verdict::overflow_risk;
    cert.overflow = *fail;
    return cert;
  }
  PropagateResult ctr = propagate(net, x, Rat(0), fmt);
  if (auto* fail = std::get_if<OverflowFailure>(&ctr)) {
    // unreachable when the ball check passed (r and D are monotone in eps)
    cert.verdict = Verdict::overflow_risk;
    cert.overflow = *fail;
    return cert;
  }
  const DeviationState& sb = std::get<DeviationState>(ball);
  const DeviationState& sc = std::get<DeviationState>(ctr);
  const std::size_t pen = net.depth() - 1;

  const Trace trace = fp_forward(net, x, fmt, /*with_exact=*/false);
  if (trace.overflowed)
    throw ExecError("certify: forward pass overflowed despite an overflow certificate");
  cert.i_star = argmax_outputs(trace);

  // Hybrid center deviation: measured lo-vs-hi distance plus the
  // high-precision worst-case bound; licensed only by a successful
  // high-precision overflow certificate at (x, 0).
  Rat d_ctr = sc.devs[pen];
  if (mode == CertMode::hybrid) {
    PropagateResult hi_ctr = propagate(net, x, Rat(0), hi_fmt);
    if (std::holds_alternative<DeviationState>(hi_ctr)) {
      const DeviationState& sh = std::get<DeviationState>(hi_ctr);
      d_ctr = measured_deviation(net, x, fmt, hi_fmt) + sh.devs[pen];
    } else {
      cert.hybrid_fallback = true;
    }
  }

  bool all_positive = true;
  bool all_vacuous = true;
  for (std::size_t j = 0; j < net.n_out(); ++j) {
    if (j == cert.i_star) continue;
    const PairCoeffs pc = pair_coeffs(net, cert.i_star, j, fmt);
    ClassRecord rec;
    rec.j = j;
    rec.margin_hat = fp_margin(trace, cert.i_star, j);
    rec.lipschitz = margin_lipschitz(net, cert.i_star, j);
    rec.e_ctr = pc.alpha * d_ctr + pc.beta(sc.radii[pen]);
    rec.e_ball = pc.alpha * sb.devs[pen] + pc.beta(sb.radii[pen]);
    rec.slack = certification_slack(rec.margin_hat, rec.lipschitz, eps, rec.e_ctr, rec.e_ball);
    if (sgn(rec.slack) <= 0) all_positive = false;
    // would this class fail even as eps -> 0 (where E_ball -> E_ctr)?
    if (rec.margin_hat - 2 * rec.e_ctr > 0) all_vacuous = false;
    cert.degradation += rec.e_ctr + rec.e_ball;
    cert.classes.push_back(std::move(rec));
  }
  cert.verdict = all_positive  ? Verdict::certified
                 : all_vacuous ? Verdict::vacuous
                               : Verdict::not_certified;
  return cert;
}

RVec exact_outputs(const Network& net, const RVec& x) {
  if (x.size() != net.n_in())
    throw std::invalid_argument("exact_outputs: input dim mismatch");
  RVec z = x;
  for (const Layer& layer : net.layers()) {
    RVec a = matvec(layer.W, z);
    for (std::size_t r = 0; r < a.size(); ++r) {
      a[r] += layer.b[r];
      if (layer.act == ActivationTag::relu && sgn(a[r]) < 0) a[r] = 0;
    }
    z = std::move(a);
  }
  return z;
}

RealVerdict real_arith_certify(const Network& net, std::span<const FpValue> x,
                               const Rat& eps) {
  if (sgn(eps) <= 0) throw std::invalid_argument("real_arith_certify: eps must be > 0");
  const RVec y = exact_outputs(net, values(x));
  RealVerdict rv;
  rv.i_star = 0;
  for (std::size_t i = 1; i < y.size(); ++i)
    if (y[i] > y[rv.i_star]) rv.i_star = i;
  rv.certified = true;
  bool first = true;
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (j == rv.i_star) continue;
    const Rat slack = (y[rv.i_star] - y[j]) - margin_lipschitz(net, rv.i_star, j) * eps;
    if (first || slack < rv.min_slack) rv.min_slack = slack;
    first = false;
    if (sgn(slack) <= 0) rv.certified = false;
  }
  return rv;
}

}  // namespace fpcert
