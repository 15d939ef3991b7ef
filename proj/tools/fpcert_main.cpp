// SPDX-License-Identifier: Apache-2.0
//
// fpcert: sound robustness certification for dense ReLU networks under
// floating-point execution semantics, plus the counterexample-search and
// bias-adversary tooling around it.

#include <iostream>

#include "CLI11.hpp"
#include "fpcert/driver.hpp"

namespace {

fpcert::FpFormat parse_format(const std::string& name) { return fpcert::make_format(name); }

void print_applicability(const fpcert::Report& report) {
  for (const fpcert::ApplicabilityIssue& issue : report.applicability) {
    std::cerr << "warning: layer " << issue.layer << " has n*u = "
              << fpcert::to_double(issue.n_times_u)
              << " >= 1; certification stays sound but is expected vacuous\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"floating-point-sound robustness certifier for dense ReLU networks"};
  app.require_subcommand(1);

  // --- certify ---
  std::string model, data, out, eps_str, format = "float32", mode = "standard";
  std::string hi_format = "float64";
  int gram_iters = -1;
  unsigned threads = 0;

  CLI::App* certify = app.add_subcommand("certify", "certify a dataset at a given radius");
  certify->add_option("--model", model, "model JSON file")->required();
  certify->add_option("--data", data, "dataset CSV file")->required();
  certify->add_option("--eps", eps_str, "l2 perturbation radius (decimal)")->required();
  certify->add_option("--format", format, "execution format")
      ->check(CLI::IsMember({"float16", "float32", "float64", "bfloat16"}));
  certify->add_option("--mode", mode, "certification mode")
      ->check(CLI::IsMember({"standard", "hybrid"}));
  certify->add_option("--hi-format", hi_format, "hybrid high-precision format");
  certify->add_option("--gram-iters", gram_iters, "override Gram iteration count");
  certify->add_option("--threads", threads, "worker threads (0 = hardware)");
  certify->add_option("--out", out, "report JSON path");

  // --- search-cex ---
  std::string s_model, s_data, s_out, s_format = "float32";
  std::size_t s_n = 1;
  int s_gram_iters = -1;
  unsigned s_threads = 0;
  fpcert::SearchConfig cfg;
  std::string overshoot_str;

  CLI::App* search = app.add_subcommand(
      "search-cex", "search for real-certified / FP-misclassified triples");
  search->add_option("--model", s_model, "model JSON file")->required();
  search->add_option("--data", s_data, "dataset CSV of starting points")->required();
  search->add_option("--format", s_format, "execution format")
      ->check(CLI::IsMember({"float16", "float32", "float64", "bfloat16"}));
  search->add_option("--n", s_n, "number of triples to find")->required();
  search->add_option("--max-iters", cfg.max_deepfool_iters, "DeepFool iteration cap");
  search->add_option("--overshoot", overshoot_str, "DeepFool overshoot (decimal)");
  search->add_option("--bisection-iters", cfg.bisection_iters, "boundary bisection steps");
  search->add_option("--expansion-iters", cfg.expansion_iters, "expansion probe budget");
  search->add_option("--gram-iters", s_gram_iters, "override Gram iteration count");
  search->add_option("--threads", s_threads, "worker threads (0 = hardware)");
  search->add_option("--out", s_out, "triples JSON path");

  // --- make-adversarial ---
  std::string a_model, a_out, bias_str = "1000000";
  CLI::App* adv = app.add_subcommand("make-adversarial",
                                     "inject compensating biases into a model");
  adv->add_option("--model", a_model, "model JSON file")->required();
  adv->add_option("--bias", bias_str, "flat bias B (decimal)");
  adv->add_option("--out", a_out, "output model path")->required();

  // --- norms ---
  std::string n_model, n_out;
  int n_gram_iters = -1;
  CLI::App* norms = app.add_subcommand("norms", "precompute and embed norm caches");
  norms->add_option("--model", n_model, "model JSON file")->required();
  norms->add_option("--gram-iters", n_gram_iters, "Gram iteration count");
  norms->add_option("--out", n_out, "output model path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (certify->parsed()) {
      fpcert::CertifyOptions opt;
      opt.model_path = model;
      opt.data_path = data;
      opt.out_path = out;
      opt.eps = fpcert::parse_decimal(eps_str);
      opt.fmt = parse_format(format);
      opt.mode = mode == "hybrid" ? fpcert::CertMode::hybrid : fpcert::CertMode::standard;
      if (opt.mode == fpcert::CertMode::hybrid) opt.hi_fmt = parse_format(hi_format);
      if (gram_iters >= 0) opt.gram_iters = gram_iters;
      opt.threads = threads;
      const fpcert::Report report = fpcert::run_certify(opt);
      print_applicability(report);
      const fpcert::Aggregates& agg = report.aggregates;
      std::cout << "instances: " << agg.instances << "\n";
      if (agg.verified_robustness_real) {
        std::cout << "verified robustness (real): "
                  << fpcert::to_double(*agg.verified_robustness_real) * 100 << "%\n"
                  << "verified robustness (fp):   "
                  << fpcert::to_double(*agg.verified_robustness_fp) * 100 << "%\n"
                  << "delta robustness:           "
                  << fpcert::to_double(*agg.delta_robustness_pp) << " pp\n"
                  << "vra:                        " << fpcert::to_double(*agg.vra) * 100
                  << "%\n";
        if (agg.margin_increase)
          std::cout << "margin increase:            "
                    << fpcert::to_double(*agg.margin_increase) * 100 << "%\n";
      }
      if (agg.overflow_excluded > 0)
        std::cout << "instances excluded from margin aggregate (overflow risk): "
                  << agg.overflow_excluded << "\n";
    } else if (search->parsed()) {
      fpcert::SearchOptions opt;
      opt.model_path = s_model;
      opt.data_path = s_data;
      opt.out_path = s_out;
      opt.fmt = parse_format(s_format);
      opt.n = s_n;
      if (!overshoot_str.empty()) cfg.overshoot = fpcert::parse_decimal(overshoot_str);
      opt.cfg = cfg;
      if (s_gram_iters >= 0) opt.gram_iters = s_gram_iters;
      opt.threads = s_threads;
      const fpcert::SearchOutcome outcome = fpcert::run_search_cex(opt);
      if (outcome.triples.size() < opt.n)
        std::cerr << "warning: found " << outcome.triples.size() << " of " << opt.n
                  << " requested counterexamples\n";
      std::cout << "found " << outcome.triples.size() << " triple(s) over "
                << outcome.starts_tried << " start(s)\n";
    } else if (adv->parsed()) {
      fpcert::run_make_adversarial(a_model, fpcert::parse_decimal(bias_str), a_out);
      std::cout << "wrote biased model to " << a_out << "\n";
    } else if (norms->parsed()) {
      std::optional<int> iters;
      if (n_gram_iters >= 0) iters = n_gram_iters;
      fpcert::run_norms(n_model, iters, n_out);
      std::cout << "wrote model with embedded norms to " << n_out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
