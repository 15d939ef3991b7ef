// SPDX-License-Identifier: Apache-2.0
#include "fpcert/network.hpp"

#include <fstream>

#include "json.hpp"

namespace fpcert {

using nlohmann::json;

const Rat& activation_lipschitz(ActivationTag) {
  static const Rat one(1);
  return one;
}

namespace {

std::size_t pair_index(std::size_t n, std::size_t i, std::size_t j) {
  // upper-triangle index for i < j within an n x n grid
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

void check_entry_representable(const Rat& q, const FpFormat& fmt, const char* what,
                               std::size_t layer) {
  const FpValue v = fp_round(q, fmt);
  if (!v.is_finite() || v.value() != q) {
    throw ModelError(std::string(what) + " entry in layer " + std::to_string(layer + 1) +
                     " is not exactly representable in " + format_name(fmt));
  }
}

std::vector<FpValue> to_fp_cache(const RMat& m, const FpFormat& fmt) {
  std::vector<FpValue> out;
  out.reserve(m.rows() * m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out.push_back(fp_round(m(r, c), fmt));
  return out;
}

std::vector<FpValue> to_fp_cache(const RVec& v, const FpFormat& fmt) {
  std::vector<FpValue> out;
  out.reserve(v.size());
  for (const Rat& q : v) out.push_back(fp_round(q, fmt));
  return out;
}

void validate_structure(const FpFormat& storage, const std::vector<Layer>& layers) {
  if (layers.empty()) throw ModelError("model has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    if (layer.W.rows() == 0 || layer.W.cols() == 0)
      throw ModelError("layer " + std::to_string(l + 1) + " is empty");
    if (layer.W.rows() != layer.b.size())
      throw ModelError("layer " + std::to_string(l + 1) + ": bias length " +
                       std::to_string(layer.b.size()) + " does not match " +
                       std::to_string(layer.W.rows()) + " rows");
    if (l > 0 && layer.W.cols() != layers[l - 1].W.rows())
      throw ModelError("layer " + std::to_string(l + 1) +
                       ": input dim does not chain with previous layer");
    const bool is_last = l + 1 == layers.size();
    if (is_last && layer.act != ActivationTag::identity)
      throw ModelError("output layer must use identity activation");
    if (!is_last && layer.act != ActivationTag::relu)
      throw ModelError("hidden layer " + std::to_string(l + 1) + " must use relu");
    for (std::size_t r = 0; r < layer.W.rows(); ++r)
      for (std::size_t c = 0; c < layer.W.cols(); ++c)
        check_entry_representable(layer.W(r, c), storage, "weight", l);
    for (const Rat& q : layer.b) check_entry_representable(q, storage, "bias", l);
  }
  if (layers.back().W.rows() < 2) throw ModelError("model needs at least 2 output classes");
}

}  // namespace

Network make_network_with_norms(const FpFormat& storage, std::vector<Layer> layers,
                                int gram_iters) {
  validate_structure(storage, layers);
  Network net;
  net.storage_ = storage;
  net.gram_iters_ = gram_iters;
  for (Layer& layer : layers) {
    layer.W_fp = to_fp_cache(layer.W, storage);
    layer.b_fp = to_fp_cache(layer.b, storage);
  }
  net.layers_ = std::move(layers);
  net.n_in_ = net.layers_.front().in_dim();
  net.n_out_ = net.layers_.back().out_dim();

  net.hidden_spec_product_ = Rat(1);
  for (std::size_t l = 0; l + 1 < net.layers_.size(); ++l)
    net.hidden_spec_product_ *= net.layers_[l].norms.spec_up;

  const Layer& last = net.layers_.back();
  net.pair_norms_.reserve(net.n_out_ * (net.n_out_ - 1) / 2);
  for (std::size_t i = 0; i < net.n_out_; ++i)
    for (std::size_t j = i + 1; j < net.n_out_; ++j)
      net.pair_norms_.push_back(pair_norms(last.W, last.b, i, j));
  return net;
}

Network make_network(const FpFormat& storage, std::vector<LayerData> layer_data,
                     int gram_iters) {
  if (gram_iters < 0) throw std::invalid_argument("gram_iters must be >= 0");
  std::vector<Layer> layers;
  layers.reserve(layer_data.size());
  for (LayerData& ld : layer_data) {
    Layer layer;
    layer.W = std::move(ld.W);
    layer.b = std::move(ld.b);
    layer.act = ld.act;
    layer.norms = layer_norms(layer.W, layer.b, static_cast<unsigned>(gram_iters));
    layers.push_back(std::move(layer));
  }
  return make_network_with_norms(storage, std::move(layers), gram_iters);
}

const PairNorms& Network::output_pair_norms(std::size_t i, std::size_t j) const {
  if (i == j) throw std::invalid_argument("output_pair_norms: classes must differ");
  if (i >= n_out_ || j >= n_out_)
    throw std::invalid_argument("output_pair_norms: class index out of range");
  if (i > j) std::swap(i, j);
  return pair_norms_[pair_index(n_out_, i, j)];
}

Rat margin_lipschitz(const Network& net, std::size_t i_star, std::size_t j) {
  return net.output_pair_norms(i_star, j).diff_row_l2_up * net.hidden_spec_product();
}

namespace {

ActivationTag parse_activation(const std::string& tag) {
  if (tag == "relu") return ActivationTag::relu;
  if (tag == "identity") return ActivationTag::identity;
  throw ModelError("unsupported activation '" + tag + "'");
}

Rat rat_field(const json& j, const char* what) {
  if (!j.is_string()) throw ModelError(std::string("expected rational string for ") + what);
  try {
    return parse_rational(j.get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ModelError(std::string("bad rational for ") + what + ": " + e.what());
  }
}

FpValue weight_from_json(const json& j, const FpFormat& fmt, std::size_t layer) {
  FpValue v;
  if (j.is_string()) {
    v = decode_hex(j.get<std::string>(), fmt);
  } else {
    throw ModelError("layer " + std::to_string(layer + 1) +
                     ": weights must be hex bit-pattern strings");
  }
  if (!v.is_finite())
    throw ModelError("layer " + std::to_string(layer + 1) + ": non-finite weight");
  return v;
}

// Decimal-form weights must denote exactly a storage-format value; the
// loader never quantizes model parameters silently.
FpValue weight_from_decimal(const json& j, const FpFormat& fmt, std::size_t layer) {
  if (!j.is_string())
    throw ModelError("layer " + std::to_string(layer + 1) +
                     ": decimal weights must be strings");
  const Rat q = parse_decimal(j.get<std::string>());
  const FpValue v = fp_round(q, fmt);
  if (!v.is_finite() || v.value() != q)
    throw ModelError("layer " + std::to_string(layer + 1) + ": decimal weight '" +
                     j.get<std::string>() + "' does not round-trip through " +
                     format_name(fmt));
  return v;
}

// Embedded norm caches are trusted only after two checks: the recomputed
// bounds must not exceed them beyond root tolerance, and they must dominate
// exact lower-bound witnesses (row/column norms for spectral bounds,
// squared sums for Euclidean ones). Exact fields must match exactly.
void validate_embedded_norms(const Layer& layer, const LayerNorms& embedded,
                             const LayerNorms& recomputed) {
  static const Rat slack = Rat(1) + pow2(-76);
  auto check_up = [&](const Rat& emb, const Rat& rec, const char* what) {
    if (rec > emb * slack)
      throw ModelError(std::string("embedded ") + what +
                       " is tighter than recomputation allows");
  };
  check_up(embedded.spec_up, recomputed.spec_up, "spec_up");
  check_up(embedded.abs_spec_up, recomputed.abs_spec_up, "abs_spec_up");
  check_up(embedded.bias_l2_up, recomputed.bias_l2_up, "bias_l2_up");
  if (embedded.row_l2_up.size() != layer.W.rows() ||
      embedded.row_linf.size() != layer.W.rows())
    throw ModelError("embedded norms have wrong row count");
  if (embedded.row_linf != recomputed.row_linf || embedded.bias_linf != recomputed.bias_linf)
    throw ModelError("embedded exact norms (linf) do not match the weights");

  // exact lower witnesses: sigma_max dominates every row and column norm
  Rat max_row_sq(0), max_col_sq(0);
  for (std::size_t r = 0; r < layer.W.rows(); ++r) {
    const Rat rs = sum_sq(row(layer.W, r));
    if (rs > max_row_sq) max_row_sq = rs;
    check_up(embedded.row_l2_up[r], recomputed.row_l2_up[r], "row_l2_up");
    if (embedded.row_l2_up[r] * embedded.row_l2_up[r] < rs)
      throw ModelError("embedded row_l2_up falls below the exact row norm");
  }
  for (std::size_t c = 0; c < layer.W.cols(); ++c) {
    Rat cs(0);
    for (std::size_t r = 0; r < layer.W.rows(); ++r) cs += layer.W(r, c) * layer.W(r, c);
    if (cs > max_col_sq) max_col_sq = cs;
  }
  const Rat spec_sq = embedded.spec_up * embedded.spec_up;
  if (spec_sq < max_row_sq || spec_sq < max_col_sq)
    throw ModelError("embedded spec_up falls below an exact lower bound");
  const Rat abs_spec_sq = embedded.abs_spec_up * embedded.abs_spec_up;
  if (abs_spec_sq < max_row_sq || abs_spec_sq < max_col_sq)
    throw ModelError("embedded abs_spec_up falls below an exact lower bound");
  if (embedded.bias_l2_up * embedded.bias_l2_up < sum_sq(layer.b))
    throw ModelError("embedded bias_l2_up falls below the exact bias norm");
}

LayerNorms norms_from_json(const json& j) {
  LayerNorms n;
  n.spec_up = rat_field(j.at("spec_up"), "spec_up");
  n.abs_spec_up = rat_field(j.at("abs_spec_up"), "abs_spec_up");
  for (const json& e : j.at("row_l2_up")) n.row_l2_up.push_back(rat_field(e, "row_l2_up"));
  for (const json& e : j.at("row_linf")) n.row_linf.push_back(rat_field(e, "row_linf"));
  n.bias_l2_up = rat_field(j.at("bias_l2_up"), "bias_l2_up");
  n.bias_linf = rat_field(j.at("bias_linf"), "bias_linf");
  n.max_row_l2_up = 0;
  for (const Rat& r : n.row_l2_up)
    if (r > n.max_row_l2_up) n.max_row_l2_up = r;
  n.max_row_linf = 0;
  for (const Rat& r : n.row_linf)
    if (r > n.max_row_linf) n.max_row_linf = r;
  return n;
}

json norms_to_json(const LayerNorms& n) {
  json j;
  j["spec_up"] = to_ratio_string(n.spec_up);
  j["abs_spec_up"] = to_ratio_string(n.abs_spec_up);
  json rows = json::array(), linf = json::array();
  for (const Rat& r : n.row_l2_up) rows.push_back(to_ratio_string(r));
  for (const Rat& r : n.row_linf) linf.push_back(to_ratio_string(r));
  j["row_l2_up"] = std::move(rows);
  j["row_linf"] = std::move(linf);
  j["bias_l2_up"] = to_ratio_string(n.bias_l2_up);
  j["bias_linf"] = to_ratio_string(n.bias_linf);
  return j;
}

}  // namespace

Network load_model(const std::string& path, std::optional<int> gram_iters_override) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ModelError("model file '" + path + "' is not valid JSON: " + e.what());
  }
  try {
    const FpFormat storage = make_format(doc.at("format").get<std::string>());
    int gram_iters = doc.value("gram_iters", kDefaultGramIters);
    if (gram_iters_override) gram_iters = *gram_iters_override;
    if (gram_iters < 0) throw ModelError("gram_iters must be >= 0");

    std::vector<Layer> layers;
    for (const json& jl : doc.at("layers")) {
      Layer layer;
      layer.act = parse_activation(jl.at("activation").get<std::string>());
      const bool hex_form = jl.contains("weights_hex");
      const json& jw = hex_form ? jl.at("weights_hex") : jl.at("weights");
      const json& jb = hex_form ? jl.at("bias_hex") : jl.at("bias");
      const std::size_t rows = jw.size();
      if (rows == 0) throw ModelError("layer with no rows");
      const std::size_t cols = jw.at(0).size();
      layer.W = RMat(rows, cols);
      const std::size_t lidx = layers.size();
      for (std::size_t r = 0; r < rows; ++r) {
        const json& jrow = jw.at(r);
        if (jrow.size() != cols) throw ModelError("ragged weight matrix");
        for (std::size_t c = 0; c < cols; ++c) {
          const FpValue v = hex_form ? weight_from_json(jrow.at(c), storage, lidx)
                                     : weight_from_decimal(jrow.at(c), storage, lidx);
          layer.W(r, c) = v.is_zero() ? Rat(0) : v.value();
        }
      }
      layer.b.resize(jb.size());
      for (std::size_t r = 0; r < jb.size(); ++r) {
        const FpValue v = hex_form ? weight_from_json(jb.at(r), storage, lidx)
                                   : weight_from_decimal(jb.at(r), storage, lidx);
        layer.b[r] = v.is_zero() ? Rat(0) : v.value();
      }
      const LayerNorms recomputed =
          layer_norms(layer.W, layer.b, static_cast<unsigned>(gram_iters));
      if (jl.contains("norms") && !gram_iters_override.has_value()) {
        const LayerNorms embedded = norms_from_json(jl.at("norms"));
        validate_embedded_norms(layer, embedded, recomputed);
        layer.norms = embedded;
      } else {
        layer.norms = recomputed;
      }
      layers.push_back(std::move(layer));
    }
    return make_network_with_norms(storage, std::move(layers), gram_iters);
  } catch (const json::exception& e) {
    throw ModelError("model file '" + path + "' does not match the schema: " + e.what());
  }
}

void save_model(const Network& net, const std::string& path,
                const std::map<std::string, std::string>& extra) {
  json doc;
  doc["format"] = format_name(net.storage_format());
  doc["gram_iters"] = net.gram_iters();
  json layers = json::array();
  for (const Layer& layer : net.layers()) {
    json jl;
    jl["activation"] = layer.act == ActivationTag::relu ? "relu" : "identity";
    json w = json::array();
    for (std::size_t r = 0; r < layer.W.rows(); ++r) {
      json jrow = json::array();
      for (std::size_t c = 0; c < layer.W.cols(); ++c)
        jrow.push_back(encode_hex(layer.W_fp[r * layer.W.cols() + c], net.storage_format()));
      w.push_back(std::move(jrow));
    }
    jl["weights_hex"] = std::move(w);
    json b = json::array();
    for (const FpValue& v : layer.b_fp) b.push_back(encode_hex(v, net.storage_format()));
    jl["bias_hex"] = std::move(b);
    jl["norms"] = norms_to_json(layer.norms);
    layers.push_back(std::move(jl));
  }
  doc["layers"] = std::move(layers);
  for (const auto& [key, value] : extra) doc[key] = value;
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write model file '" + path + "'");
  out << doc.dump(1) << "\n";
}

Network replace_biases(const Network& net, std::vector<RVec> new_biases) {
  if (new_biases.size() != net.depth())
    throw std::invalid_argument("replace_biases: need one bias vector per layer");
  std::vector<Layer> layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (new_biases[l].size() != layers[l].out_dim())
      throw std::invalid_argument("replace_biases: bias length mismatch at layer " +
                                  std::to_string(l + 1));
    layers[l].b = std::move(new_biases[l]);
    layers[l].norms.bias_l2_up = l2_norm_up(layers[l].b);
    layers[l].norms.bias_linf = linf_norm(layers[l].b);
  }
  return make_network_with_norms(net.storage_format(), std::move(layers), net.gram_iters());
}

std::string fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for hashing");
  std::uint64_t h = 1469598103934665603ull;
  char ch;
  while (in.get(ch)) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ull;
  }
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = "0123456789abcdef"[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace fpcert
