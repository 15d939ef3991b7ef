// SPDX-License-Identifier: Apache-2.0
#include <random>

#include "doctest.h"
#include "fpcert/certifier.hpp"
#include "test_support.hpp"

using namespace fpcert;

namespace {

const FpFormat f16 = make_format(FormatName::float16);
const FpFormat f32 = make_format(FormatName::float32);
const FpFormat f64 = make_format(FormatName::float64);

Network zero_net(const FpFormat& fmt, std::size_t n_in, std::size_t hidden,
                 std::size_t n_out) {
  std::vector<LayerData> lds(2);
  lds[0].W = RMat(hidden, n_in);
  lds[0].b = RVec(hidden, Rat(0));
  lds[0].act = ActivationTag::relu;
  lds[1].W = RMat(n_out, hidden);
  lds[1].b = RVec(n_out, Rat(0));
  lds[1].act = ActivationTag::identity;
  return make_network(fmt, std::move(lds), 0);
}

std::vector<Rat> closed_form_devs(const Network& net, const FpFormat& fmt,
                                  const std::vector<Rat>& r) {
  // D_l = sum_j beta_j(r_{j-1}) * prod_{i>j} alpha_i
  std::vector<LayerCoeffs> co;
  for (std::size_t l = 0; l + 1 < net.depth(); ++l)
    co.push_back(layer_coeffs(net.layers()[l], fmt));
  std::vector<Rat> d{Rat(0)};
  for (std::size_t l = 1; l <= co.size(); ++l) {
    Rat acc(0);
    for (std::size_t j = 1; j <= l; ++j) {
      Rat term = co[j - 1].beta(r[j - 1]);
      for (std::size_t i = j + 1; i <= l; ++i) term *= co[i - 1].alpha;
      acc += term;
    }
    d.push_back(acc);
  }
  return d;
}

}  // namespace

TEST_CASE("radii examples") {
  // all-zero weights and biases: r_l = 0 for l >= 1
  const Network zn = zero_net(f32, 3, 4, 2);
  const auto r0 = radii(zn, Rat(7, 2), Rat(1, 2));
  CHECK(r0.size() == 2);
  CHECK(r0[0] == 4);
  CHECK(r0[1] == 0);

  // identity hidden layer with zero bias is a fixed point up to root tol
  {
    std::vector<LayerData> lds(2);
    lds[0].W = RMat(2, 2);
    lds[0].W(0, 0) = lds[0].W(1, 1) = 1;
    lds[0].b = RVec(2, Rat(0));
    lds[0].act = ActivationTag::relu;
    lds[1].W = RMat(2, 2);
    lds[1].W(0, 1) = 1;
    lds[1].W(1, 0) = 1;
    lds[1].b = RVec(2, Rat(0));
    lds[1].act = ActivationTag::identity;
    const Network net = make_network(f32, std::move(lds), 20);
    const auto r = radii(net, Rat(2), Rat(0));
    CHECK(r[1] >= r[0]);
    CHECK(r[1] <= r[0] * (1 + Rat(1, 1000000)));
  }

  // x=0, eps=0.3, spec_up=2 exactly, bias_l2_up=1, relu: r_1 = 1.6
  {
    std::vector<LayerData> lds(2);
    lds[0].W = RMat(1, 1);
    lds[0].W(0, 0) = 2;
    lds[0].b = RVec(1, Rat(1));
    lds[0].act = ActivationTag::relu;
    lds[1].W = RMat(2, 1);
    lds[1].W(0, 0) = 1;
    lds[1].W(1, 0) = -1;
    lds[1].b = RVec(2, Rat(0));
    lds[1].act = ActivationTag::identity;
    const Network net = make_network(f32, std::move(lds), 4);
    const auto r = radii(net, Rat(0), Rat(3, 10));
    CHECK(r[1] == Rat(8, 5));
  }

  CHECK_THROWS_AS(radii(zn, Rat(1), Rat(-1)), std::invalid_argument);
}

TEST_CASE("overflow_check_layer") {
  // zero layer passes in any format
  const Network zn = zero_net(f16, 2, 2, 2);
  const auto ok = overflow_check_layer(zn.layers()[0], 1, Rat(1000), Rat(0), f16);
  REQUIRE(std::holds_alternative<OverflowRecord>(ok));
  CHECK(std::get<OverflowRecord>(ok).S == 0);
  CHECK(std::get<OverflowRecord>(ok).M == 0);

  // float16 with |w| = 300 and reach 300: M = 9e4 > 65504 fails the product check
  {
    std::vector<LayerData> lds(1);
    lds[0].W = RMat(2, 1);
    lds[0].W(0, 0) = 300;
    lds[0].W(1, 0) = 1;
    lds[0].b = RVec(2, Rat(0));
    lds[0].act = ActivationTag::identity;
    const Network net = make_network(f16, std::move(lds), 0);
    const auto res = overflow_check_layer(net.layers()[0], 1, Rat(300), Rat(0), f16);
    REQUIRE(std::holds_alternative<OverflowFailure>(res));
    const OverflowFailure& fail = std::get<OverflowFailure>(res);
    CHECK(fail.cond == OverflowCond::max_product);
    CHECK(fail.lhs == 90000);
    CHECK(fail.f_max == 65504);
  }

  // float32 at MNIST-scale magnitudes passes with enormous headroom
  {
    fpcert::testing::Rng rng(8);
    const Network net =
        fpcert::testing::random_net(rng, f32, {784, 128, 10}, -0.08, 0.08, -0.1, 0.1, 0);
    const auto res = overflow_check_layer(net.layers()[0], 1, Rat(1000), Rat(1), f32);
    CHECK(std::holds_alternative<OverflowRecord>(res));
  }
}

TEST_CASE("layer_coeffs") {
  // zero layer: alpha = 0 and only the absolute dot-error term survives
  const Network zn = zero_net(f32, 3, 4, 2);
  const LayerCoeffs co = layer_coeffs(zn.layers()[0], f32);
  const ErrorConstants ec = error_constants(3, f32);
  CHECK(co.alpha == 0);
  CHECK(co.beta_slope == 0);
  CHECK(co.beta_const == (1 + f32.u) * ec.a_dot * sqrt_up(Rat(4)));

  // identity 1x1 relu layer: alpha = 1 + kappa_1 exactly (norms are exact here)
  {
    std::vector<LayerData> lds(2);
    lds[0].W = RMat(1, 1);
    lds[0].W(0, 0) = 1;
    lds[0].b = RVec(1, Rat(0));
    lds[0].act = ActivationTag::relu;
    lds[1].W = RMat(2, 1);
    lds[1].W(0, 0) = 1;
    lds[1].W(1, 0) = -1;
    lds[1].b = RVec(2, Rat(0));
    lds[1].act = ActivationTag::identity;
    const Network net = make_network(f32, std::move(lds), 2);
    const LayerCoeffs c1 = layer_coeffs(net.layers()[0], f32);
    const ErrorConstants e1 = error_constants(1, f32);
    CHECK(c1.alpha == 1 + e1.kappa);
  }

  // beta is affine with nonnegative slope: monotone in r
  fpcert::testing::Rng rng(21);
  const Network net = fpcert::testing::random_net(rng, f32, {4, 5, 3}, -2, 2, -1, 1, 2);
  const LayerCoeffs c = layer_coeffs(net.layers()[0], f32);
  const Rat r(7, 3);
  CHECK(c.beta(2 * r) >= c.beta(r));
}

TEST_CASE("propagate examples") {
  // zero net at x=0, eps=0: radii zero, D_1 is the absolute term only
  const Network zn = zero_net(f32, 3, 4, 2);
  const auto x0 = quantize(RVec(3, Rat(0)), f32);
  const auto res = propagate(zn, x0, Rat(0), f32);
  REQUIRE(std::holds_alternative<DeviationState>(res));
  const DeviationState& st = std::get<DeviationState>(res);
  CHECK(st.devs[0] == 0);
  const ErrorConstants ec = error_constants(3, f32);
  CHECK(st.devs[1] == (1 + f32.u) * ec.a_dot * sqrt_up(Rat(4)));
  CHECK(st.overflow_cert.size() == 2);

  CHECK_THROWS_AS(propagate(zn, x0, Rat(-1), f32), std::invalid_argument);
}

TEST_CASE("recursion equals the closed form exactly") {
  fpcert::testing::Rng rng(55);
  for (int rep = 0; rep < 10; ++rep) {
    const Network net =
        fpcert::testing::random_net(rng, f32, {5, 7, 6, 4}, -1.5, 1.5, -0.5, 0.5, 1);
    const auto x = fpcert::testing::random_input(rng, 5, -1, 1, f32);
    const auto res = propagate(net, x, Rat(1, 10), f32);
    REQUIRE(std::holds_alternative<DeviationState>(res));
    const DeviationState& st = std::get<DeviationState>(res);
    const auto closed = closed_form_devs(net, f32, st.radii);
    REQUIRE(closed.size() == st.devs.size());
    for (std::size_t l = 0; l < closed.size(); ++l) CHECK(closed[l] == st.devs[l]);
  }
}

TEST_CASE("pair_coeffs examples") {
  // identical rows: the difference term vanishes
  {
    std::vector<LayerData> lds(1);
    lds[0].W = RMat(2, 2);
    lds[0].W(0, 0) = lds[0].W(0, 1) = 2;
    lds[0].W(1, 0) = lds[0].W(1, 1) = 2;
    lds[0].b = RVec(2, Rat(0));
    lds[0].act = ActivationTag::identity;
    const Network net = make_network(f32, std::move(lds), 2);
    const PairCoeffs pc = pair_coeffs(net, 0, 1, f32);
    const ErrorConstants ec = error_constants(2, f32);
    CHECK(pc.alpha == ec.kappa * net.output_pair_norms(0, 1).sum_abs_row_l2_up);
  }
  // zero final layer: alpha = 0, beta(r) = 2(1+u) a_dot(n_L)
  {
    const Network zn = zero_net(f32, 3, 4, 2);
    const PairCoeffs pc = pair_coeffs(zn, 0, 1, f32);
    const ErrorConstants ec = error_constants(4, f32);
    CHECK(pc.alpha == 0);
    CHECK(pc.beta_slope == 0);
    CHECK(pc.beta(Rat(12)) == 2 * (1 + f32.u) * ec.a_dot);
  }
  // rows e1, e2, zero bias, n_L = 2
  {
    std::vector<LayerData> lds(1);
    lds[0].W = RMat(2, 2);
    lds[0].W(0, 0) = 1;
    lds[0].W(1, 1) = 1;
    lds[0].b = RVec(2, Rat(0));
    lds[0].act = ActivationTag::identity;
    const Network net = make_network(f32, std::move(lds), 2);
    const PairCoeffs pc = pair_coeffs(net, 0, 1, f32);
    const ErrorConstants ec = error_constants(2, f32);
    const Rat lo_sq = Rat(2) * (1 + ec.kappa) * (1 + ec.kappa);
    const Rat hi_sq = lo_sq * (1 + pow2(-70));
    CHECK(pc.alpha * pc.alpha >= lo_sq);
    CHECK(pc.alpha * pc.alpha <= hi_sq);
  }
  const Network zn = zero_net(f32, 2, 2, 2);
  CHECK_THROWS_AS(pair_coeffs(zn, 1, 1, f32), std::invalid_argument);
}

TEST_CASE("error_terms") {
  const Network zn = zero_net(f32, 3, 4, 2);
  const auto x = quantize(RVec(3, Rat(0)), f32);
  // eps = 0: both states coincide
  {
    const auto res = error_terms(zn, x, Rat(0), f32, 0, 1);
    REQUIRE(std::holds_alternative<std::pair<Rat, Rat>>(res));
    const auto& [e_ctr, e_ball] = std::get<std::pair<Rat, Rat>>(res);
    CHECK(e_ctr == e_ball);
    const ErrorConstants ec = error_constants(4, f32);
    CHECK(e_ctr == 2 * (1 + f32.u) * ec.a_dot);
  }
  // random net: E_ball dominates E_ctr for eps > 0
  fpcert::testing::Rng rng(91);
  const Network net = fpcert::testing::random_net(rng, f32, {4, 6, 3}, -1, 1, -.5, .5, 2);
  const auto xr = fpcert::testing::random_input(rng, 4, -1, 1, f32);
  const auto res = error_terms(net, xr, Rat(3, 10), f32, 0, 1);
  REQUIRE(std::holds_alternative<std::pair<Rat, Rat>>(res));
  const auto& [e_ctr, e_ball] = std::get<std::pair<Rat, Rat>>(res);
  CHECK(e_ball >= e_ctr);
}

TEST_CASE("monotonicity of radii, deviations and error terms in eps") {
  fpcert::testing::Rng rng(92);
  const Network net = fpcert::testing::random_net(rng, f32, {4, 6, 5, 3}, -1, 1, -.5, .5, 1);
  const auto x = fpcert::testing::random_input(rng, 4, -1, 1, f32);
  const Rat e1(1, 100), e2(3, 10);
  const auto r1 = propagate(net, x, e1, f32);
  const auto r2 = propagate(net, x, e2, f32);
  REQUIRE(std::holds_alternative<DeviationState>(r1));
  REQUIRE(std::holds_alternative<DeviationState>(r2));
  const DeviationState& s1 = std::get<DeviationState>(r1);
  const DeviationState& s2 = std::get<DeviationState>(r2);
  for (std::size_t l = 0; l < s1.radii.size(); ++l) CHECK(s1.radii[l] <= s2.radii[l]);
  for (std::size_t l = 0; l < s1.devs.size(); ++l) CHECK(s1.devs[l] <= s2.devs[l]);
}

TEST_CASE("certification_slack arithmetic") {
  CHECK(certification_slack(Rat(1), Rat(1), Rat(3, 10), Rat(1, 20), Rat(1, 20)) ==
        Rat(3, 5));
  CHECK(certification_slack(Rat(1), Rat(1), Rat(3, 10), Rat(2, 5), Rat(2, 5)) ==
        Rat(-1, 10));
}

TEST_CASE("certify end-to-end") {
  // wide-margin 1-layer net at a tiny radius certifies
  std::vector<LayerData> lds(1);
  lds[0].W = RMat(2, 2);
  lds[0].W(0, 0) = 4;
  lds[0].W(1, 1) = 1;
  lds[0].b = RVec(2, Rat(0));
  lds[0].act = ActivationTag::identity;
  const Network net = make_network(f32, std::move(lds), 3);
  const auto x = quantize(RVec{Rat(1), Rat(0)}, f32);

  const Certificate good = certify(net, x, Rat(1, 100), f32);
  CHECK(good.verdict == Verdict::certified);
  CHECK(good.i_star == 0);
  REQUIRE(good.classes.size() == 1);
  CHECK(good.classes[0].slack > 0);

  const Certificate bad = certify(net, x, Rat(10), f32);
  CHECK(bad.verdict == Verdict::not_certified);

  CHECK_THROWS_AS(certify(net, x, Rat(0), f32), std::invalid_argument);
}

TEST_CASE("certify reports overflow risk with the failing layer") {
  std::vector<LayerData> lds(1);
  lds[0].W = RMat(2, 2);
  lds[0].W(0, 0) = Rat(60000);
  lds[0].W(1, 1) = Rat(60000);
  lds[0].b = RVec(2, Rat(0));
  lds[0].act = ActivationTag::identity;
  const Network net = make_network(f16, std::move(lds), 1);
  const auto x = quantize(RVec{Rat(1), Rat(1)}, f16);
  const Certificate cert = certify(net, x, Rat(4), f16);
  CHECK(cert.verdict == Verdict::overflow_risk);
  REQUIRE(cert.overflow.has_value());
  CHECK(cert.overflow->layer == 1);
}

TEST_CASE("hybrid certification tightens the center term") {
  fpcert::testing::Rng rng(1001);
  for (int rep = 0; rep < 5; ++rep) {
    const Network net =
        fpcert::testing::random_net(rng, f32, {6, 10, 8, 4}, -0.8, 0.8, -0.2, 0.2, 2);
    const auto x = fpcert::testing::random_input(rng, 6, -1, 1, f32);
    const Certificate std_cert = certify(net, x, Rat(1, 1000), f32, CertMode::standard);
    const Certificate hyb_cert = certify(net, x, Rat(1, 1000), f32, CertMode::hybrid);
    REQUIRE(std_cert.classes.size() == hyb_cert.classes.size());
    CHECK(!hyb_cert.hybrid_fallback);
    for (std::size_t k = 0; k < std_cert.classes.size(); ++k) {
      CHECK(hyb_cert.classes[k].e_ctr <= std_cert.classes[k].e_ctr);
      CHECK(hyb_cert.classes[k].e_ball == std_cert.classes[k].e_ball);
      CHECK(hyb_cert.classes[k].slack >= std_cert.classes[k].slack);
    }
  }
  const Network net = zero_net(f32, 2, 2, 2);
  const auto x = quantize(RVec(2, Rat(0)), f32);
  const FpFormat same = f32;
  CHECK_THROWS_AS(certify(net, x, Rat(1), f32, CertMode::hybrid, &same),
                  std::invalid_argument);
}

TEST_CASE("measured deviation stays below the certified bound") {
  fpcert::testing::Rng rng(777);
  for (int rep = 0; rep < 5; ++rep) {
    const Network net =
        fpcert::testing::random_net(rng, f32, {5, 8, 3}, -1, 1, -.3, .3, 2);
    const auto x = fpcert::testing::random_input(rng, 5, -1, 1, f32);
    const auto res = propagate(net, x, Rat(0), f32);
    REQUIRE(std::holds_alternative<DeviationState>(res));
    const Rat meas = measured_deviation(net, x, f32, f64);
    CHECK(meas <= std::get<DeviationState>(res).devs[net.depth() - 1]);
  }
}

TEST_CASE("sampled pairwise margin deviation stays below the final-layer bound") {
  fpcert::testing::Rng rng(515);
  for (int rep = 0; rep < 5; ++rep) {
    const Network net =
        fpcert::testing::random_net(rng, f32, {5, 10, 8, 4}, -1.5, 1.5, -0.5, 0.5, 2);
    const auto x = fpcert::testing::random_input(rng, 5, -1, 1, f32);
    const Rat eps(1, 20);
    const auto res = propagate(net, x, eps, f32);
    REQUIRE(std::holds_alternative<DeviationState>(res));
    const DeviationState& st = std::get<DeviationState>(res);
    const std::size_t pen = net.depth() - 1;
    for (int s = 0; s < 200; ++s) {
      const auto xp = fpcert::testing::sample_in_ball(
          rng, x, eps, f32,
          s % 3 == 0 ? fpcert::testing::BallSample::boundary
                     : fpcert::testing::BallSample::uniform);
      const Trace t = fp_forward(net, xp, f32);
      REQUIRE(!t.overflowed);
      const RVec& y_exact = t.exact_acts.back();
      for (std::size_t i = 0; i < net.n_out(); ++i)
        for (std::size_t j = i + 1; j < net.n_out(); ++j) {
          const Rat m_hat = fp_margin(t, i, j);
          const Rat m_exact = y_exact[i] - y_exact[j];
          const PairCoeffs pc = pair_coeffs(net, i, j, f32);
          CHECK(::abs(m_hat - m_exact) <= pc.alpha * st.devs[pen] + pc.beta(st.radii[pen]));
        }
    }
  }
}

TEST_CASE("real_arith_certify") {
  const Network zn = zero_net(f32, 3, 4, 2);
  const auto x0 = quantize(RVec(3, Rat(0)), f32);
  CHECK(!real_arith_certify(zn, x0, Rat(1, 10)).certified);  // zero margins

  std::vector<LayerData> lds(1);
  lds[0].W = RMat(2, 2);
  lds[0].W(0, 0) = 8;
  lds[0].b = RVec(2, Rat(0));
  lds[0].act = ActivationTag::identity;
  const Network net = make_network(f32, std::move(lds), 2);
  const auto x = quantize(RVec{Rat(1), Rat(0)}, f32);
  const RealVerdict rv = real_arith_certify(net, x, Rat(1, 100));
  CHECK(rv.certified);
  CHECK(rv.i_star == 0);
  CHECK(rv.min_slack > 0);
  CHECK_THROWS_AS(real_arith_certify(net, x, Rat(0)), std::invalid_argument);
}
