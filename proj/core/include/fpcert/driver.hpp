// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fpcert/cex_search.hpp"

namespace fpcert {

struct Dataset {
  std::vector<long> labels;
  std::vector<std::vector<FpValue>> inputs;  // quantized to the run format
  std::size_t size() const { return labels.size(); }
};

// CSV rows are "label, f1, ..., f_{n_in}" with decimal features; features
// are quantized to fmt at load (inputs must be format values) and reports
// record them hex-exactly.
Dataset load_dataset_csv(const std::string& path, const FpFormat& fmt, std::size_t n_in);

// eps_l2 / sqrt_up(n_in): the l-infinity ball of this radius is contained
// in the l2 ball of radius eps_l2.
Rat eps_linf_of_l2(const Rat& eps_l2, std::size_t n_in);

struct CertifyOptions {
  std::string model_path;
  std::string data_path;
  std::string out_path;  // empty: do not write
  Rat eps;
  FpFormat fmt;
  CertMode mode = CertMode::standard;
  std::optional<FpFormat> hi_fmt;  // hybrid reference; default float64
  std::optional<int> gram_iters;
  unsigned threads = 0;
};

struct InstanceResult {
  std::size_t index = 0;
  long true_label = -1;
  long predicted = -1;  // -1 when the forward pass overflows
  Verdict verdict = Verdict::not_certified;
  bool real_certified = false;
  std::optional<Rat> slack_min;
  std::optional<Rat> e_ctr_max;
  std::optional<Rat> e_ball_max;
  std::optional<Rat> degradation;
  std::optional<std::size_t> overflow_layer;
  std::int64_t time_ns = 0;
  std::vector<std::string> input_hex;
  // per-instance sums over competing classes, feeding the aggregates
  Rat sum_error_terms;
  Rat sum_eps_lipschitz;
  bool margin_usable = false;
};

struct Aggregates {
  std::size_t instances = 0;
  std::size_t overflow_excluded = 0;
  std::optional<Rat> verified_robustness_real;  // fractions in [0,1]
  std::optional<Rat> verified_robustness_fp;
  std::optional<Rat> delta_robustness_pp;  // percentage points
  std::optional<Rat> margin_increase;
  std::optional<Rat> vra;
};

struct Report {
  // config echo
  std::string model_path;
  std::string model_hash;
  std::string data_path;
  std::string format;
  std::string mode;
  std::string hi_format;  // empty unless hybrid
  Rat eps;
  Rat eps_linf;
  int gram_iters = 0;
  std::vector<ApplicabilityIssue> applicability;

  std::vector<InstanceResult> instances;
  Aggregates aggregates;
};

Report run_certify(const CertifyOptions& opt);
std::string report_to_json(const Report& report);
void write_report(const Report& report, const std::string& path);

struct SearchOptions {
  std::string model_path;
  std::string data_path;
  std::string out_path;
  FpFormat fmt;
  std::size_t n = 1;
  SearchConfig cfg;
  std::optional<int> gram_iters;
  unsigned threads = 0;
};

struct SearchOutcome {
  std::vector<CexTriple> triples;
  std::vector<std::size_t> start_index;  // dataset row each triple came from
  std::size_t requested = 0;
  std::size_t starts_tried = 0;
};

SearchOutcome run_search_cex(const SearchOptions& opt);
std::string search_to_json(const SearchOutcome& outcome, const SearchOptions& opt,
                           const std::string& model_hash);

// Loads, injects the compensating-bias adversary, writes the biased model
// with provenance (original file hash and the bias value).
void run_make_adversarial(const std::string& model_path, const Rat& bias,
                          const std::string& out_path);

// Recomputes norm caches (optionally with a different Gram iteration count)
// and writes the model with the caches embedded.
void run_norms(const std::string& model_path, std::optional<int> gram_iters,
               const std::string& out_path);

}  // namespace fpcert
