// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fpcert/fp_format.hpp"
#include "fpcert/fp_value.hpp"
#include "fpcert/norms.hpp"

namespace fpcert {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ActivationTag { relu, identity };

// Both supported activations are pointwise, zero-preserving, FP-exact and
// 1-Lipschitz.
const Rat& activation_lipschitz(ActivationTag tag);

struct Layer {
  RMat W;
  RVec b;
  ActivationTag act = ActivationTag::relu;
  LayerNorms norms;
  // Storage-format images of W and b (row-major) for the FP emulator; the
  // loader guarantees these are exact, so the cache is lossless.
  std::vector<FpValue> W_fp;
  std::vector<FpValue> b_fp;

  std::size_t in_dim() const { return W.cols(); }
  std::size_t out_dim() const { return W.rows(); }
};

struct LayerData {
  RMat W;
  RVec b;
  ActivationTag act = ActivationTag::relu;
};

// Immutable dense feed-forward model: ReLU on hidden layers, identity on the
// output layer, every weight exactly a value of the storage format. Norm
// caches (per-layer and final-layer pairwise) are populated at construction.
class Network {
 public:
  const std::vector<Layer>& layers() const { return layers_; }
  std::size_t depth() const { return layers_.size(); }
  std::size_t n_in() const { return n_in_; }
  std::size_t n_out() const { return n_out_; }
  const FpFormat& storage_format() const { return storage_; }
  int gram_iters() const { return gram_iters_; }

  const PairNorms& output_pair_norms(std::size_t i, std::size_t j) const;
  const Rat& hidden_spec_product() const { return hidden_spec_product_; }

  friend Network make_network_with_norms(const FpFormat&, std::vector<Layer>, int);

 private:
  Network() = default;
  std::vector<Layer> layers_;
  std::size_t n_in_ = 0;
  std::size_t n_out_ = 0;
  FpFormat storage_;
  int gram_iters_ = 0;
  std::vector<PairNorms> pair_norms_;  // upper-triangle cache, i < j
  Rat hidden_spec_product_;
};

inline constexpr int kDefaultGramIters = 8;

// Validates invariants, computes norm caches, builds the network.
Network make_network(const FpFormat& storage, std::vector<LayerData> layer_data,
                     int gram_iters = kDefaultGramIters);

// Variant for callers that already hold (sound) norm caches in each Layer;
// the caches are trusted as given, everything else is validated.
Network make_network_with_norms(const FpFormat& storage, std::vector<Layer> layers,
                                int gram_iters);

// Loads the JSON model format (see README). Embedded norm caches are
// validated against recomputation before use.
Network load_model(const std::string& path,
                   std::optional<int> gram_iters_override = std::nullopt);

// Writes the model with hex-exact weights and embedded norm caches. Extra
// top-level string fields (e.g. provenance) are passed through verbatim.
void save_model(const Network& net, const std::string& path,
                const std::map<std::string, std::string>& extra = {});

// Sound upper bound on the global margin Lipschitz constant
// L_{j,i*} = ||W_{L,i*} - W_{L,j}||_2-up * prod_{l<L} ||W_l||_2-up.
Rat margin_lipschitz(const Network& net, std::size_t i_star, std::size_t j);

// Copy of net with new bias vectors; weight-derived norm caches are reused,
// bias-derived ones recomputed. Margin Lipschitz constants are untouched.
Network replace_biases(const Network& net, std::vector<RVec> new_biases);

// FNV-1a 64-bit content hash, as 16 lowercase hex digits (provenance, not
// security).
std::string fnv1a64_file(const std::string& path);

}  // namespace fpcert
