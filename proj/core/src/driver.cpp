// SPDX-License-Identifier: Apache-2.0
#include "fpcert/driver.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "fpcert/parallel.hpp"
#include "json.hpp"

namespace fpcert {

using nlohmann::json;

Dataset load_dataset_csv(const std::string& path, const FpFormat& fmt, std::size_t n_in) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
  Dataset ds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::stringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != n_in + 1)
      throw std::runtime_error("dataset '" + path + "' line " + std::to_string(lineno) +
                               ": expected " + std::to_string(n_in + 1) + " fields, got " +
                               std::to_string(cells.size()));
    char* end = nullptr;
    const long label = std::strtol(cells[0].c_str(), &end, 10);
    if (end == cells[0].c_str())
      throw std::runtime_error("dataset line " + std::to_string(lineno) + ": bad label");
    std::vector<FpValue> input;
    input.reserve(n_in);
    for (std::size_t i = 1; i < cells.size(); ++i) {
      std::size_t a = cells[i].find_first_not_of(" \t\r");
      std::size_t b = cells[i].find_last_not_of(" \t\r");
      if (a == std::string::npos)
        throw std::runtime_error("dataset line " + std::to_string(lineno) + ": empty field");
      const FpValue v = fp_round(parse_decimal(cells[i].substr(a, b - a + 1)), fmt);
      if (!v.is_finite())
        throw std::runtime_error("dataset line " + std::to_string(lineno) +
                                 ": feature overflows " + format_name(fmt));
      input.push_back(v);
    }
    ds.labels.push_back(label);
    ds.inputs.push_back(std::move(input));
  }
  return ds;
}

Rat eps_linf_of_l2(const Rat& eps_l2, std::size_t n_in) {
  if (n_in < 1) throw std::invalid_argument("eps_linf_of_l2: n_in must be >= 1");
  return eps_l2 / sqrt_up(Rat(static_cast<long>(n_in)));
}

namespace {

json rat_json(const Rat& q) {
  json j;
  j["ratio"] = to_ratio_string(q);
  j["approx"] = to_double(q);
  return j;
}

json opt_rat_json(const std::optional<Rat>& q) {
  if (!q) return nullptr;
  return rat_json(*q);
}

}  // namespace

Report run_certify(const CertifyOptions& opt) {
  if (sgn(opt.eps) <= 0) throw std::invalid_argument("certify: eps must be > 0");
  const Network net = load_model(opt.model_path, opt.gram_iters);
  const Dataset ds = load_dataset_csv(opt.data_path, opt.fmt, net.n_in());
  const FpFormat hi_fmt =
      opt.hi_fmt ? *opt.hi_fmt : make_format(FormatName::float64);

  Report report;
  report.model_path = opt.model_path;
  report.model_hash = fnv1a64_file(opt.model_path);
  report.data_path = opt.data_path;
  report.format = format_name(opt.fmt);
  report.mode = opt.mode == CertMode::hybrid ? "hybrid" : "standard";
  if (opt.mode == CertMode::hybrid) report.hi_format = format_name(hi_fmt);
  report.eps = opt.eps;
  report.eps_linf = eps_linf_of_l2(opt.eps, net.n_in());
  report.gram_iters = net.gram_iters();
  {
    std::vector<long> widths;
    for (const Layer& layer : net.layers()) widths.push_back(static_cast<long>(layer.in_dim()));
    report.applicability = applicability_check(widths, opt.fmt);
  }

  report.instances.resize(ds.size());
  parallel_for(ds.size(), opt.threads, [&](std::size_t i) {
    InstanceResult& res = report.instances[i];
    res.index = i;
    res.true_label = ds.labels[i];
    res.sum_error_terms = Rat(0);
    res.sum_eps_lipschitz = Rat(0);
    const std::vector<FpValue>& x = ds.inputs[i];
    res.input_hex.reserve(x.size());
    for (const FpValue& v : x) res.input_hex.push_back(encode_hex(v, opt.fmt));

    const auto t0 = std::chrono::steady_clock::now();
    res.real_certified = real_arith_certify(net, x, opt.eps).certified;
    try {
      const std::size_t pred = classify(net, x, opt.fmt);
      res.predicted = static_cast<long>(pred);
    } catch (const ExecError&) {
      res.predicted = -1;
    }
    const Certificate cert =
        certify(net, x, opt.eps, opt.fmt, opt.mode,
                opt.mode == CertMode::hybrid ? &hi_fmt : nullptr);
    const auto t1 = std::chrono::steady_clock::now();
    res.time_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();

    res.verdict = cert.verdict;
    if (cert.verdict == Verdict::overflow_risk) {
      if (cert.overflow) res.overflow_layer = cert.overflow->layer;
      return;
    }
    res.margin_usable = true;
    bool first = true;
    for (const ClassRecord& rec : cert.classes) {
      if (first || rec.slack < *res.slack_min) res.slack_min = rec.slack;
      if (first || rec.e_ctr > *res.e_ctr_max) res.e_ctr_max = rec.e_ctr;
      if (first || rec.e_ball > *res.e_ball_max) res.e_ball_max = rec.e_ball;
      first = false;
      res.sum_error_terms += rec.e_ctr + rec.e_ball;
      res.sum_eps_lipschitz += opt.eps * rec.lipschitz;
    }
    res.degradation = cert.degradation;
  });

  Aggregates& agg = report.aggregates;
  agg.instances = ds.size();
  if (ds.size() > 0) {
    long real_count = 0, fp_count = 0, vra_count = 0;
    Rat sum_e(0), sum_lip(0);
    for (const InstanceResult& res : report.instances) {
      if (res.real_certified) ++real_count;
      if (res.verdict == Verdict::certified) ++fp_count;
      if (res.verdict == Verdict::certified && res.predicted == res.true_label) ++vra_count;
      if (res.margin_usable) {
        sum_e += res.sum_error_terms;
        sum_lip += res.sum_eps_lipschitz;
      } else {
        ++agg.overflow_excluded;
      }
    }
    const Rat n(static_cast<long>(ds.size()));
    agg.verified_robustness_real = Rat(real_count) / n;
    agg.verified_robustness_fp = Rat(fp_count) / n;
    agg.delta_robustness_pp =
        (*agg.verified_robustness_real - *agg.verified_robustness_fp) * 100;
    agg.vra = Rat(vra_count) / n;
    if (sgn(sum_lip) > 0) agg.margin_increase = sum_e / sum_lip;
  }

  if (!opt.out_path.empty()) write_report(report, opt.out_path);
  return report;
}

std::string report_to_json(const Report& report) {
  json doc;
  json cfg;
  cfg["model"] = report.model_path;
  cfg["model_fnv1a64"] = report.model_hash;
  cfg["data"] = report.data_path;
  cfg["format"] = report.format;
  cfg["mode"] = report.mode;
  if (!report.hi_format.empty()) cfg["hi_format"] = report.hi_format;
  cfg["eps"] = rat_json(report.eps);
  cfg["eps_linf"] = rat_json(report.eps_linf);
  cfg["gram_iters"] = report.gram_iters;
  json warn = json::array();
  for (const ApplicabilityIssue& issue : report.applicability) {
    json w;
    w["layer"] = issue.layer;
    w["n_times_u"] = rat_json(issue.n_times_u);
    warn.push_back(std::move(w));
  }
  cfg["applicability_warnings"] = std::move(warn);
  doc["config"] = std::move(cfg);

  json instances = json::array();
  for (const InstanceResult& res : report.instances) {
    json ji;
    ji["index"] = res.index;
    ji["true_label"] = res.true_label;
    ji["predicted"] = res.predicted;
    ji["verdict"] = std::string(verdict_name(res.verdict));
    ji["real_verdict"] = res.real_certified ? "certified" : "not_certified";
    ji["eps"] = rat_json(report.eps);
    ji["slack_min"] = opt_rat_json(res.slack_min);
    ji["e_ctr_max"] = opt_rat_json(res.e_ctr_max);
    ji["e_ball_max"] = opt_rat_json(res.e_ball_max);
    ji["degradation"] = opt_rat_json(res.degradation);
    if (res.overflow_layer) ji["overflow_layer"] = *res.overflow_layer;
    ji["time_ns"] = res.time_ns;
    ji["input_hex"] = res.input_hex;
    instances.push_back(std::move(ji));
  }
  doc["instances"] = std::move(instances);

  json agg;
  agg["instances"] = report.aggregates.instances;
  agg["overflow_excluded"] = report.aggregates.overflow_excluded;
  agg["verified_robustness_real"] = opt_rat_json(report.aggregates.verified_robustness_real);
  agg["verified_robustness_fp"] = opt_rat_json(report.aggregates.verified_robustness_fp);
  agg["delta_robustness_pp"] = opt_rat_json(report.aggregates.delta_robustness_pp);
  agg["margin_increase"] = opt_rat_json(report.aggregates.margin_increase);
  agg["vra"] = opt_rat_json(report.aggregates.vra);
  doc["aggregates"] = std::move(agg);
  return doc.dump(1) + "\n";
}

void write_report(const Report& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report '" + path + "'");
  out << report_to_json(report);
}

SearchOutcome run_search_cex(const SearchOptions& opt) {
  if (opt.n < 1) throw std::invalid_argument("search-cex: n must be >= 1");
  const Network net = load_model(opt.model_path, opt.gram_iters);
  const Dataset ds = load_dataset_csv(opt.data_path, opt.fmt, net.n_in());

  SearchOutcome outcome;
  outcome.requested = opt.n;
  unsigned workers = opt.threads == 0 ? std::thread::hardware_concurrency() : opt.threads;
  if (workers == 0) workers = 1;
  const std::size_t block = static_cast<std::size_t>(workers) * 4;

  std::size_t begin = 0;
  while (begin < ds.size() && outcome.triples.size() < opt.n) {
    const std::size_t end = std::min(ds.size(), begin + block);
    std::vector<std::optional<CexTriple>> found(end - begin);
    parallel_for(end - begin, opt.threads, [&](std::size_t k) {
      try {
        found[k] = search_cex(net, ds.inputs[begin + k], opt.fmt, opt.cfg);
      } catch (const ExecError&) {
        found[k] = std::nullopt;
      }
    });
    for (std::size_t k = 0; k < found.size() && outcome.triples.size() < opt.n; ++k) {
      if (found[k]) {
        outcome.triples.push_back(std::move(*found[k]));
        outcome.start_index.push_back(begin + k);
      }
    }
    outcome.starts_tried = end;
    begin = end;
  }
  if (!opt.out_path.empty()) {
    std::ofstream os(opt.out_path);
    if (!os) throw std::runtime_error("cannot write '" + opt.out_path + "'");
    os << search_to_json(outcome, opt, fnv1a64_file(opt.model_path));
  }
  return outcome;
}

std::string search_to_json(const SearchOutcome& outcome, const SearchOptions& opt,
                           const std::string& model_hash) {
  json doc;
  json cfg;
  cfg["model"] = opt.model_path;
  cfg["model_fnv1a64"] = model_hash;
  cfg["data"] = opt.data_path;
  cfg["format"] = format_name(opt.fmt);
  cfg["requested"] = outcome.requested;
  cfg["max_deepfool_iters"] = opt.cfg.max_deepfool_iters;
  cfg["overshoot"] = rat_json(opt.cfg.overshoot);
  cfg["bisection_iters"] = opt.cfg.bisection_iters;
  cfg["expansion_iters"] = opt.cfg.expansion_iters;
  doc["config"] = std::move(cfg);

  json triples = json::array();
  for (std::size_t i = 0; i < outcome.triples.size(); ++i) {
    const CexTriple& t = outcome.triples[i];
    json jt;
    json x0 = json::array(), x1 = json::array();
    for (const FpValue& v : t.x0) x0.push_back(encode_hex(v, opt.fmt));
    for (const FpValue& v : t.x1) x1.push_back(encode_hex(v, opt.fmt));
    jt["x0_hex"] = std::move(x0);
    jt["x1_hex"] = std::move(x1);
    jt["eps"] = rat_json(t.eps);
    jt["class0"] = t.class0;
    jt["class1"] = t.class1;
    jt["start_index"] = outcome.start_index[i];
    triples.push_back(std::move(jt));
  }
  doc["triples"] = std::move(triples);
  doc["found"] = outcome.triples.size();
  doc["starts_tried"] = outcome.starts_tried;
  if (outcome.triples.size() < outcome.requested)
    doc["warning"] = "found fewer counterexamples than requested";
  return doc.dump(1) + "\n";
}

void run_make_adversarial(const std::string& model_path, const Rat& bias,
                          const std::string& out_path) {
  const Network net = load_model(model_path);
  const Network biased = inject_bias_adversary(net, bias);
  std::map<std::string, std::string> extra;
  extra["original_model_fnv1a64"] = fnv1a64_file(model_path);
  extra["bias_injection"] = to_ratio_string(bias);
  save_model(biased, out_path, extra);
}

void run_norms(const std::string& model_path, std::optional<int> gram_iters,
               const std::string& out_path) {
  const Network net = load_model(model_path, gram_iters);
  save_model(net, out_path);
}

}  // namespace fpcert
