// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <fstream>
#include <random>

#include "doctest.h"
#include "fpcert/certifier.hpp"
#include "fpcert/network.hpp"
#include "test_support.hpp"

using namespace fpcert;

namespace {

const FpFormat f32 = make_format(FormatName::float32);

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/fpcert_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

Network two_class_identity() {
  std::vector<LayerData> lds(1);
  lds[0].W = RMat(2, 2);
  lds[0].W(0, 0) = 1;
  lds[0].W(1, 1) = 1;
  lds[0].b = RVec(2, Rat(0));
  lds[0].act = ActivationTag::identity;
  return make_network(f32, std::move(lds), 2);
}

}  // namespace

TEST_CASE("builder validates the model invariants") {
  // single identity layer is a valid network
  const Network net = two_class_identity();
  CHECK(net.depth() == 1);
  CHECK(net.n_in() == 2);
  CHECK(net.n_out() == 2);

  // relu on the output layer is rejected
  {
    std::vector<LayerData> lds(1);
    lds[0].W = RMat(2, 2);
    lds[0].b = RVec(2, Rat(0));
    lds[0].act = ActivationTag::relu;
    CHECK_THROWS_AS(make_network(f32, std::move(lds), 0), ModelError);
  }
  // identity on a hidden layer is rejected
  {
    std::vector<LayerData> lds(2);
    lds[0].W = RMat(2, 2);
    lds[0].b = RVec(2, Rat(0));
    lds[0].act = ActivationTag::identity;
    lds[1].W = RMat(2, 2);
    lds[1].b = RVec(2, Rat(0));
    lds[1].act = ActivationTag::identity;
    CHECK_THROWS_AS(make_network(f32, std::move(lds), 0), ModelError);
  }
  // dimension chain mismatch
  {
    std::vector<LayerData> lds(2);
    lds[0].W = RMat(3, 2);
    lds[0].b = RVec(3, Rat(0));
    lds[0].act = ActivationTag::relu;
    lds[1].W = RMat(2, 4);
    lds[1].b = RVec(2, Rat(0));
    lds[1].act = ActivationTag::identity;
    CHECK_THROWS_AS(make_network(f32, std::move(lds), 0), ModelError);
  }
  // a weight that is not a float32 value
  {
    std::vector<LayerData> lds(1);
    lds[0].W = RMat(2, 2);
    lds[0].W(0, 0) = Rat(1, 10);  // 0.1 has no exact binary32 representation
    lds[0].b = RVec(2, Rat(0));
    lds[0].act = ActivationTag::identity;
    CHECK_THROWS_AS(make_network(f32, std::move(lds), 0), ModelError);
  }
  // one output class only
  {
    std::vector<LayerData> lds(1);
    lds[0].W = RMat(1, 2);
    lds[0].b = RVec(1, Rat(0));
    lds[0].act = ActivationTag::identity;
    CHECK_THROWS_AS(make_network(f32, std::move(lds), 0), ModelError);
  }
}

TEST_CASE("mnist-shaped network builds and reloads with nine layers") {
  fpcert::testing::Rng rng(31);
  std::vector<std::size_t> dims{784};
  for (int i = 0; i < 8; ++i) dims.push_back(128);
  dims.push_back(10);
  const Network net =
      fpcert::testing::random_net(rng, f32, dims, -0.05, 0.05, -0.01, 0.01, 0);
  CHECK(net.depth() == 9);
  CHECK(net.n_in() == 784);
  CHECK(net.n_out() == 10);

  TempFile file("mnist_shaped.json");
  save_model(net, file.path);
  const Network again = load_model(file.path);
  CHECK(again.depth() == 9);
  CHECK(again.layers()[0].W_fp == net.layers()[0].W_fp);
  CHECK(again.layers()[8].b_fp == net.layers()[8].b_fp);
}

TEST_CASE("model JSON loader") {
  TempFile file("model.json");

  SUBCASE("hex weights load and round-trip") {
    write_file(file.path, R"({
      "format": "float32",
      "layers": [
        {"activation": "relu",
         "weights_hex": [["3f800000", "00000000"], ["00000000", "40000000"]],
         "bias_hex": ["3f000000", "00000000"]},
        {"activation": "identity",
         "weights_hex": [["3f800000", "00000000"], ["00000000", "3f800000"]],
         "bias_hex": ["00000000", "00000000"]}
      ]})");
    const Network net = load_model(file.path);
    CHECK(net.depth() == 2);
    CHECK(net.layers()[0].W(0, 0) == 1);
    CHECK(net.layers()[0].W(1, 1) == 2);
    CHECK(net.layers()[0].b[0] == Rat(1, 2));

    TempFile copy("model_copy.json");
    save_model(net, copy.path);
    const Network again = load_model(copy.path);
    for (std::size_t l = 0; l < net.depth(); ++l) {
      CHECK(again.layers()[l].W_fp == net.layers()[l].W_fp);
      CHECK(again.layers()[l].b_fp == net.layers()[l].b_fp);
      CHECK(again.layers()[l].norms.spec_up == net.layers()[l].norms.spec_up);
    }
  }

  SUBCASE("decimal weights must round-trip through the format") {
    write_file(file.path, R"({
      "format": "float32",
      "layers": [
        {"activation": "identity",
         "weights": [["0.5", "0"], ["0", "-2"]],
         "bias": ["0", "0"]}
      ]})");
    const Network net = load_model(file.path);
    CHECK(net.layers()[0].W(0, 0) == Rat(1, 2));
    CHECK(net.layers()[0].W(1, 1) == -2);

    write_file(file.path, R"({
      "format": "float32",
      "layers": [
        {"activation": "identity",
         "weights": [["0.1", "0"], ["0", "1"]],
         "bias": ["0", "0"]}
      ]})");
    CHECK_THROWS_AS(load_model(file.path), ModelError);
  }

  SUBCASE("bad activation and non-finite weights are rejected") {
    write_file(file.path, R"({
      "format": "float32",
      "layers": [
        {"activation": "sigmoid",
         "weights_hex": [["3f800000", "00000000"], ["00000000", "3f800000"]],
         "bias_hex": ["00000000", "00000000"]}
      ]})");
    CHECK_THROWS_AS(load_model(file.path), ModelError);

    write_file(file.path, R"({
      "format": "float32",
      "layers": [
        {"activation": "identity",
         "weights_hex": [["7f800000", "00000000"], ["00000000", "3f800000"]],
         "bias_hex": ["00000000", "00000000"]}
      ]})");
    CHECK_THROWS_AS(load_model(file.path), ModelError);
  }

  SUBCASE("ragged weights are rejected") {
    write_file(file.path, R"({
      "format": "float32",
      "layers": [
        {"activation": "identity",
         "weights_hex": [["3f800000", "00000000"], ["00000000"]],
         "bias_hex": ["00000000", "00000000"]}
      ]})");
    CHECK_THROWS_AS(load_model(file.path), ModelError);
  }

  SUBCASE("embedded norms are validated") {
    const Network net = two_class_identity();
    TempFile saved("model_norms.json");
    save_model(net, saved.path);
    CHECK(load_model(saved.path).layers()[0].norms.spec_up ==
          net.layers()[0].norms.spec_up);

    // tamper: claim a spectral bound below the exact row-norm witness
    std::ifstream in(saved.path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string from = "\"spec_up\": \"";
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    const auto end = text.find('"', pos + from.size());
    text.replace(pos, end + 1 - pos, "\"spec_up\": \"1/2\"");
    write_file(file.path, text);
    CHECK_THROWS_AS(load_model(file.path), ModelError);
  }
}

TEST_CASE("margin_lipschitz") {
  // single layer: the empty hidden product leaves just the row difference
  const Network net = two_class_identity();
  CHECK(margin_lipschitz(net, 0, 1) == net.output_pair_norms(0, 1).diff_row_l2_up);
  CHECK_THROWS_AS(margin_lipschitz(net, 1, 1), std::invalid_argument);

  // identical output rows give a zero constant
  {
    std::vector<LayerData> lds(1);
    lds[0].W = RMat(2, 2);
    lds[0].W(0, 0) = lds[0].W(0, 1) = 1;
    lds[0].W(1, 0) = lds[0].W(1, 1) = 1;
    lds[0].b = RVec(2, Rat(0));
    lds[0].act = ActivationTag::identity;
    const Network same = make_network(f32, std::move(lds), 1);
    CHECK(margin_lipschitz(same, 0, 1) == 0);
  }

  // W1 = 2I (relu), output rows e1, e2: constant is 2*sqrt(2) up to root tol
  {
    std::vector<LayerData> lds(2);
    lds[0].W = RMat(2, 2);
    lds[0].W(0, 0) = lds[0].W(1, 1) = 2;
    lds[0].b = RVec(2, Rat(0));
    lds[0].act = ActivationTag::relu;
    lds[1].W = RMat(2, 2);
    lds[1].W(0, 0) = 1;
    lds[1].W(1, 1) = 1;
    lds[1].b = RVec(2, Rat(0));
    lds[1].act = ActivationTag::identity;
    const Network net2 = make_network(f32, std::move(lds), 20);
    const Rat lip = margin_lipschitz(net2, 0, 1);
    CHECK(lip * lip >= 8);
    CHECK(lip * lip <= Rat(8) * (1 + Rat(1, 100000)));
  }
}

TEST_CASE("sampled margin Lipschitz soundness") {
  fpcert::testing::Rng rng(404);
  for (int rep = 0; rep < 4; ++rep) {
    const Network net =
        fpcert::testing::random_net(rng, f32, {5, 8, 8, 3}, -1.5, 1.5, -0.5, 0.5, 3);
    for (int s = 0; s < 250; ++s) {
      const auto x1 = fpcert::testing::random_input(rng, 5, -2, 2, f32);
      const auto x2 = fpcert::testing::random_input(rng, 5, -2, 2, f32);
      const RVec y1 = exact_outputs(net, values(x1));
      const RVec y2 = exact_outputs(net, values(x2));
      const Rat dist_up = l2_norm_up(sub(values(x1), values(x2)));
      for (std::size_t i = 0; i < net.n_out(); ++i)
        for (std::size_t j = 0; j < net.n_out(); ++j) {
          if (i == j) continue;
          const Rat dm = ::abs((y1[i] - y1[j]) - (y2[i] - y2[j]));
          CHECK(dm <= margin_lipschitz(net, i, j) * dist_up);
        }
    }
  }
}

TEST_CASE("replace_biases keeps weight norms and updates bias norms") {
  fpcert::testing::Rng rng(3);
  const Network net = fpcert::testing::random_net(rng, f32, {4, 6, 3}, -1, 1, -1, 1, 2);
  std::vector<RVec> nb{RVec(6, Rat(2)), RVec(3, Rat(0))};
  const Network swapped = replace_biases(net, nb);
  for (std::size_t l = 0; l < net.depth(); ++l) {
    CHECK(swapped.layers()[l].norms.spec_up == net.layers()[l].norms.spec_up);
    CHECK(swapped.layers()[l].norms.abs_spec_up == net.layers()[l].norms.abs_spec_up);
    CHECK(swapped.layers()[l].norms.row_l2_up == net.layers()[l].norms.row_l2_up);
  }
  CHECK(swapped.layers()[0].norms.bias_linf == 2);
  CHECK(swapped.layers()[1].norms.bias_l2_up == 0);
  CHECK(margin_lipschitz(swapped, 0, 1) == margin_lipschitz(net, 0, 1));
}
