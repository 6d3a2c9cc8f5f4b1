// Config-driven experiment harness: strict experiment configs, deterministic
// check suites over every module, canonical machine-readable reports, and
// file load/store for the CLI object kinds.
#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "swapkit/core.hpp"
#include "swapkit/cube.hpp"
#include "swapkit/extract.hpp"
#include "swapkit/norms.hpp"
#include "swapkit/report.hpp"
#include "swapkit/testers.hpp"
#include "swapkit/threeap.hpp"
#include "swapkit/tridist.hpp"

namespace swapkit {

// ---------------------------------------------------------------------------
// File load/store
// ---------------------------------------------------------------------------

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open file");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline void store_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open file for writing");
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error(path + ": write failed");
}

inline const std::set<std::string>& object_kinds() {
  static const std::set<std::string> kinds{"function", "tridist", "denseset", "dpinstance"};
  return kinds;
}

inline FunctionTable load_function(const std::string& path) {
  json j = load_json_file(path);
  try {
    return function_table_from_json(j);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline TriDist load_tridist(const std::string& path) {
  json j = load_json_file(path);
  try {
    return TriDist::from_json(j);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline DenseSet load_denseset(const std::string& path) {
  json j = load_json_file(path);
  try {
    return DenseSet::from_json(j);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline DPInstance load_dpinstance(const std::string& path) {
  json j = load_json_file(path);
  try {
    return dp_instance_from_json(j);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline void store_function(const std::string& path, const FunctionTable& f) {
  store_json_file(path, function_table_to_json(f));
}
inline void store_tridist(const std::string& path, const TriDist& d) {
  store_json_file(path, d.to_json());
}
inline void store_denseset(const std::string& path, const DenseSet& s) {
  store_json_file(path, s.to_json());
}
inline void store_dpinstance(const std::string& path, const DPInstance& inst) {
  store_json_file(path, dp_instance_to_json(inst));
}

// ---------------------------------------------------------------------------
// Experiment configuration (strict schema)
// ---------------------------------------------------------------------------

struct ExperimentBudgets {
  std::size_t exact_domain_max = kExactDomainMax;
  std::int64_t mc_samples = 20000;
  double wall_clock_seconds = 600.0;
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      "norm-identities", "swap-properties", "ninety-nine",  "peel",
      "path-trick",      "bounded-product", "diamond",      "dp",
      "sse",             "threeap-step",    "full-suite"};
  return names;
}

inline const std::map<std::string, std::set<std::string>>& experiment_param_schema() {
  static const std::map<std::string, std::set<std::string>> schema{
      {"norm-identities", {"trials", "n", "sigma", "input_file", "input_kind"}},
      {"swap-properties", {"trials"}},
      {"ninety-nine", {"trials"}},
      {"peel", {"trials"}},
      {"path-trick", {"trials", "input_file", "input_kind"}},
      {"bounded-product", {"trials"}},
      {"diamond", {"trials", "modulus", "input_file", "input_kind"}},
      {"dp", {"seeds", "n", "K", "rho", "eta", "input_file", "input_kind"}},
      {"sse", {"trials", "n", "rho", "gamma"}},
      {"threeap-step", {"seeds", "delta", "input_file", "input_kind"}},
      {"full-suite", {}},
  };
  return schema;
}

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  std::map<std::string, json> params;
  ExperimentBudgets budgets;

  void validate() const {
    auto it = experiment_param_schema().find(experiment);
    if (it == experiment_param_schema().end())
      throw std::invalid_argument("ExperimentConfig: unknown experiment '" + experiment + "'");
    for (const auto& [k, v] : params) {
      if (!it->second.count(k))
        throw std::invalid_argument("ExperimentConfig: unknown param '" + k +
                                    "' for experiment '" + experiment + "'");
      (void)v;
    }
    if (budgets.wall_clock_seconds <= 0.0)
      throw std::invalid_argument("ExperimentConfig: wall_clock_seconds must be positive");
    if (budgets.mc_samples < 1)
      throw std::invalid_argument("ExperimentConfig: mc_samples must be >= 1");
  }

  json to_json() const {
    json j;
    j["experiment"] = experiment;
    j["seed"] = seed;
    json p = json::object();
    for (const auto& [k, v] : params) p[k] = v;
    j["params"] = std::move(p);
    j["budgets"] = json{{"exact_domain_max", budgets.exact_domain_max},
                        {"mc_samples", budgets.mc_samples},
                        {"wall_clock_seconds", budgets.wall_clock_seconds}};
    return j;
  }

  static ExperimentConfig from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("ExperimentConfig: config must be an object");
    static const std::set<std::string> top{"experiment", "seed", "params", "budgets"};
    for (const auto& [k, v] : j.items()) {
      if (!top.count(k))
        throw std::invalid_argument("ExperimentConfig: unknown top-level key '" + k + "'");
      (void)v;
    }
    ExperimentConfig cfg;
    if (!j.contains("experiment") || !j.at("experiment").is_string())
      throw std::invalid_argument("ExperimentConfig: missing field 'experiment'");
    cfg.experiment = j.at("experiment").get<std::string>();
    if (!j.contains("seed") || !j.at("seed").is_number_integer())
      throw std::invalid_argument("ExperimentConfig: missing field 'seed'");
    cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("params")) {
      if (!j.at("params").is_object())
        throw std::invalid_argument("ExperimentConfig: 'params' must be an object");
      for (const auto& [k, v] : j.at("params").items()) cfg.params[k] = v;
    }
    if (j.contains("budgets")) {
      const json& b = j.at("budgets");
      if (!b.is_object()) throw std::invalid_argument("ExperimentConfig: 'budgets' must be an object");
      static const std::set<std::string> bk{"exact_domain_max", "mc_samples", "wall_clock_seconds"};
      for (const auto& [k, v] : b.items()) {
        if (!bk.count(k))
          throw std::invalid_argument("ExperimentConfig: unknown budget key '" + k + "'");
        (void)v;
      }
      if (b.contains("exact_domain_max"))
        cfg.budgets.exact_domain_max = b.at("exact_domain_max").get<std::size_t>();
      if (b.contains("mc_samples")) cfg.budgets.mc_samples = b.at("mc_samples").get<std::int64_t>();
      if (b.contains("wall_clock_seconds"))
        cfg.budgets.wall_clock_seconds = b.at("wall_clock_seconds").get<double>();
    }
    cfg.validate();
    return cfg;
  }
};

namespace detail {

inline double json_to_double(const json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      std::size_t pos = 0;
      double d = std::stod(v.get<std::string>(), &pos);
      if (pos == v.get<std::string>().size()) return d;
    } catch (...) {
    }
  }
  throw std::invalid_argument("ExperimentConfig: param '" + key + "' must be numeric");
}

inline double param_double(const ExperimentConfig& cfg, const std::string& key, double dflt) {
  auto it = cfg.params.find(key);
  return it == cfg.params.end() ? dflt : json_to_double(it->second, key);
}

inline int param_int(const ExperimentConfig& cfg, const std::string& key, int dflt) {
  double d = param_double(cfg, key, (double)dflt);
  int i = (int)std::llround(d);
  if (std::abs(d - (double)i) > 1e-9)
    throw std::invalid_argument("ExperimentConfig: param '" + key + "' must be an integer");
  return i;
}

inline std::string param_str(const ExperimentConfig& cfg, const std::string& key,
                             const std::string& dflt) {
  auto it = cfg.params.find(key);
  if (it == cfg.params.end()) return dflt;
  if (!it->second.is_string())
    throw std::invalid_argument("ExperimentConfig: param '" + key + "' must be a string");
  return it->second.get<std::string>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Runner context
// ---------------------------------------------------------------------------

struct ExperimentContext {
  ExperimentConfig cfg;
  ExperimentReport report;
  std::string prefix;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::chrono::steady_clock::time_point mark = start;

  double elapsed_seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  // False once the wall-clock budget is exhausted; appends one explicit
  // truncation record the first time it trips.
  bool guard() {
    if (report.truncated) return false;
    if (elapsed_seconds() <= cfg.budgets.wall_clock_seconds) return true;
    report.truncated = true;
    CheckRecord c;
    c.name = prefix + "wall-clock-truncated";
    c.anchor = "plumbing";
    c.value = elapsed_seconds();
    c.threshold = cfg.budgets.wall_clock_seconds;
    c.verdict = false;
    report.add(std::move(c));
    return false;
  }

  void add(const std::string& name, const std::string& anchor, double value, double threshold,
           bool verdict, double std_error = 0.0, json detail = json()) {
    CheckRecord c;
    c.name = prefix + name;
    c.anchor = anchor;
    c.value = value;
    c.threshold = threshold;
    c.verdict = verdict;
    c.std_error = std_error;
    c.detail = std::move(detail);
    auto now = std::chrono::steady_clock::now();
    c.runtime_ms = std::chrono::duration<double, std::milli>(now - mark).count();
    mark = now;
    report.add(std::move(c));
  }

  // value must stay at or below threshold.
  void le(const std::string& name, const std::string& anchor, double value, double threshold,
          double std_error = 0.0) {
    add(name, anchor, value, threshold, value <= threshold, std_error);
  }
  // value must reach at least threshold.
  void ge(const std::string& name, const std::string& anchor, double value, double threshold,
          double std_error = 0.0) {
    add(name, anchor, value, threshold, value >= threshold, std_error);
  }
  void flag(const std::string& name, const std::string& anchor, bool ok) {
    add(name, anchor, ok ? 1.0 : 0.0, 0.5, ok);
  }
};

// ---------------------------------------------------------------------------
// Shared synthesis helpers
// ---------------------------------------------------------------------------

namespace detail {

inline FunctionTable random_unimodular_product_table(const std::vector<int>& alpha, Rng& rng,
                                                     ProductFunction* out_p = nullptr) {
  ProductFunction P;
  for (int k : alpha) {
    std::vector<cplx> fac;
    for (int a = 0; a < k; ++a) fac.push_back(rng.next_unit_complex());
    P.factors.push_back(std::move(fac));
  }
  if (out_p) *out_p = P;
  return product_to_table(P);
}

// Unit-2-norm product plus Gaussian noise; returns (f, c = 1 - swap(f)).
inline std::pair<FunctionTable, double> perturbed_product(const std::vector<int>& alpha,
                                                          double sigma, Rng& rng) {
  FunctionTable f = random_unimodular_product_table(alpha, rng);
  for (auto& v : f.values) v += sigma * cplx{rng.next_gaussian(), rng.next_gaussian()};
  double l2 = l2_norm(f);
  for (auto& v : f.values) v /= l2;
  double c = 1.0 - swap_inner(f).value.real();
  return {f, c};
}

inline FunctionTable random_direct_sum(const std::vector<int>& alphabets, int p, Rng& rng) {
  std::vector<std::vector<int>> parts;
  for (int k : alphabets) {
    std::vector<int> part((std::size_t)k);
    for (auto& v : part) v = (int)rng.next_int(p);
    parts.push_back(std::move(part));
  }
  FunctionTable f = FunctionTable::zeros(alphabets);
  std::vector<int> x;
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    index_tuple(alphabets, idx, x);
    int s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += parts[i][(std::size_t)x[i]];
    f.values[idx] = cplx{(double)(s % p), 0.0};
  }
  return f;
}

inline TriDist random_connected_tridist(Rng& rng, int sx, int sy, int sz, double keep = 0.6) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    TriDist d(sx, sy, sz);
    double total = 0.0;
    for (auto& p : d.probs)
      if (rng.next_bool(keep)) {
        p = 0.05 + rng.next_double();
        total += p;
      }
    if (total <= 0.0) continue;
    for (auto& p : d.probs) p /= total;
    if (pairwise_connected(d).connected) return d;
  }
  throw std::runtime_error("random_connected_tridist: failed to sample");
}

inline TriDist f3_threeap_dist() {
  std::vector<std::array<int, 3>> supp;
  for (int x = 0; x < 3; ++x)
    for (int a = 0; a < 2; ++a) supp.push_back({x, (x + a) % 3, (x + 2 * a) % 3});
  return TriDist::uniform_on(3, 3, 3, supp);
}

inline FunctionTable random_bounded_table(const std::vector<int>& alpha, Rng& rng) {
  FunctionTable f = FunctionTable::zeros(alpha);
  for (auto& v : f.values) v = (0.2 + 0.8 * rng.next_double()) * rng.next_unit_complex();
  return f;
}

inline std::vector<std::vector<int>> all_subsets(int n) {
  std::vector<std::vector<int>> out;
  for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
    std::vector<int> S;
    for (int c = 0; c < n; ++c)
      if (mask & (1ULL << c)) S.push_back(c);
    out.push_back(std::move(S));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Individual experiments
// ---------------------------------------------------------------------------

inline void run_norm_identities(ExperimentContext& ctx, Rng rng) {
  const ExperimentConfig& cfg = ctx.cfg;
  int trials = param_int(cfg, "trials", 20);
  int n = param_int(cfg, "n", 3);
  int sigma = param_int(cfg, "sigma", 2);
  std::string input = param_str(cfg, "input_file", "");

  std::vector<FunctionTable> fs;
  if (!input.empty()) {
    std::string kind = param_str(cfg, "input_kind", "function");
    if (kind != "function")
      throw std::invalid_argument("norm-identities: input_kind must be 'function'");
    fs.push_back(load_function(input));
  } else {
    std::vector<int> alpha((std::size_t)n, sigma);
    for (int t = 0; t < trials; ++t) fs.push_back(random_table(alpha, rng));
  }

  double id_viol = 0.0, full_viol = 0.0, real_viol = 0.0;
  for (const FunctionTable& f : fs) {
    cplx sw = swap_inner(f).value;
    cplx avg{0.0, 0.0};
    auto subsets = all_subsets(f.n());
    for (const auto& S : subsets) avg += box_inner(S, f).value;
    avg /= (double)subsets.size();
    id_viol = std::max(id_viol, std::abs(sw - avg));
    std::vector<int> allc;
    for (int c = 0; c < f.n(); ++c) allc.push_back(c);
    full_viol = std::max(full_viol, std::abs(swap_T(allc, f).value - sw));
    real_viol = std::max(real_viol, std::max(std::abs(sw.imag()), std::max(0.0, -sw.real())));
  }
  if (!ctx.guard()) return;
  ctx.le("box-average-identity", "exchange-set-average", id_viol, 1e-10);
  ctx.le("full-set-exchange-average", "exchange-set-average", full_viol, 1e-10);
  ctx.le("self-value-real-nonnegative", "four-point-form-positivity", real_viol, 1e-10);

  double tri_viol = -std::numeric_limits<double>::infinity();
  double hom_viol = 0.0;
  for (const FunctionTable& f : fs) {
    FunctionTable g = random_table(f.alphabets, rng);
    tri_viol = std::max(tri_viol, swap_norm(add(f, g)) - swap_norm(f) - swap_norm(g));
    cplx c = 2.5 * rng.next_unit_complex();
    hom_viol = std::max(hom_viol, std::abs(swap_norm(scale(f, c)) - std::abs(c) * swap_norm(f)));
  }
  if (!ctx.guard()) return;
  ctx.le("triangle-inequality", "norm-axioms", tri_viol, 1e-9);
  ctx.le("absolute-homogeneity", "norm-axioms", hom_viol, 1e-9);

  double uni_viol = 0.0;
  for (int t = 0; t < std::max(trials, 5); ++t) {
    std::vector<int> alpha((std::size_t)std::max(n, 1), std::max(sigma, 2));
    FunctionTable u = random_unimodular_product_table(alpha, rng);
    uni_viol = std::max(uni_viol, std::abs(swap_inner(u).value.real() - 1.0));
  }
  if (!ctx.guard()) return;
  ctx.le("unimodular-product-value-one", "product-function-value", uni_viol, 1e-9);

  // Monte-Carlo estimator agrees with exact enumeration within 5 sigma.
  const FunctionTable& f0 = fs.front();
  NormEstimate mc = swap_inner_mc(f0, cfg.budgets.mc_samples, rng.child(0xAB));
  double diff = std::abs(mc.value - swap_inner(f0).value);
  ctx.le("mc-exact-consistency", "sampling-estimator", diff, 5.0 * mc.std_error + 1e-9,
         mc.std_error);
}

inline void run_swap_properties(ExperimentContext& ctx, Rng rng) {
  int trials = param_int(ctx.cfg, "trials", 25);
  std::vector<int> alpha{2, 2};
  double l2_viol = -1e300, cs1_viol = -1e300, cs2_viol = -1e300;
  double box_cs_viol = -1e300, box4_viol = -1e300, box_l2_viol = -1e300;
  auto subsets = all_subsets(2);
  for (int t = 0; t < trials; ++t) {
    auto f1 = random_table(alpha, rng), f2 = random_table(alpha, rng);
    auto f3 = random_table(alpha, rng), f4 = random_table(alpha, rng);
    double lhs = std::abs(swap_inner(f1, f2, f3, f4).value);
    l2_viol = std::max(l2_viol, lhs - l2_norm(f1) * l2_norm(f2) * l2_norm(f3) * l2_norm(f4));
    double a = swap_inner(f1, f2, f1, f2).value.real();
    double b = swap_inner(f3, f4, f3, f4).value.real();
    cs1_viol = std::max(cs1_viol, lhs * lhs - a * b);
    cs2_viol = std::max(cs2_viol,
                        a * a - swap_inner(f1).value.real() * swap_inner(f2).value.real());
    for (const auto& S : subsets) {
      double box = std::abs(box_inner(S, f1, f2, f3, f4).value);
      // Mirrored pairing: couple (f1,f3) and (f2,f4).
      double c13 = box_inner(S, f1, f3, f3, f1).value.real();
      double c24 = box_inner(S, f2, f4, f4, f2).value.real();
      box_cs_viol = std::max(box_cs_viol, box * box - c13 * c24);
      double prod = box_inner(S, f1).value.real() * box_inner(S, f2).value.real() *
                    box_inner(S, f3).value.real() * box_inner(S, f4).value.real();
      box4_viol = std::max(box4_viol, std::pow(box, 4.0) - prod);
      box_l2_viol =
          std::max(box_l2_viol, box_inner(S, f1).value.real() - std::pow(l2_norm(f1), 4.0));
    }
  }
  if (!ctx.guard()) return;
  ctx.le("quadruple-l2-product-bound", "cauchy-schwarz-family", l2_viol, 1e-9);
  ctx.le("swap-cs-first-display", "cauchy-schwarz-family", cs1_viol, 1e-9);
  ctx.le("swap-cs-second-display", "cauchy-schwarz-family", cs2_viol, 1e-9);
  ctx.le("box-cs-mirrored-pairing", "cauchy-schwarz-family", box_cs_viol, 1e-9);
  ctx.le("box-fourth-power-bound", "cauchy-schwarz-family", box4_viol, 1e-9);
  ctx.le("box-l2-fourth-bound", "cauchy-schwarz-family", box_l2_viol, 1e-9);

  // Orthonormal pairs via Gram-Schmidt in expectation norms.
  double ortho_max = 0.0;
  int ortho_checked = 0;
  for (int t = 0; t < std::max(50, trials) && ortho_checked < 50; ++t) {
    auto h1 = random_table({2, 2}, rng);
    auto h2 = random_table({2, 2}, rng);
    h1 = scale(h1, 1.0 / l2_norm(h1));
    h2 = sub(h2, scale(h1, inner_product(h2, h1)));
    if (l2_norm(h2) < 1e-6) continue;
    h2 = scale(h2, 1.0 / l2_norm(h2));
    ortho_max = std::max(ortho_max, swap_inner(h1, h2, h1, h2).value.real());
    ++ortho_checked;
  }
  if (!ctx.guard()) return;
  ctx.le("orthonormal-pair-bound", "orthogonal-pair-decay", ortho_max, 2.0 / 3.0 + 1e-9);

  // Restriction monotonicity with exact enumeration over every fixed set.
  double mono_viol = -1e300;
  for (int t = 0; t < 3; ++t) {
    auto f = random_table({2, 2, 2}, rng);
    double base = std::sqrt(std::max(0.0, swap_inner(f).value.real()));
    for (const auto& I : all_subsets(3)) {
      std::vector<int> sub_alpha;
      for (int c : I) sub_alpha.push_back(f.alphabets[(std::size_t)c]);
      double mean = 0.0;
      std::size_t count = domain_size(sub_alpha);
      std::vector<int> z;
      for (std::size_t i = 0; i < count; ++i) {
        index_tuple(sub_alpha, i, z);
        auto fr = restrict_table(f, Restriction{I, z});
        mean += std::sqrt(std::max(0.0, swap_inner(fr).value.real()));
      }
      mean /= (double)count;
      mono_viol = std::max(mono_viol, base - mean);
    }
  }
  ctx.le("restriction-monotonicity", "restriction-averaging", mono_viol, 1e-9);
}

inline void run_ninety_nine(ExperimentContext& ctx, Rng rng) {
  int trials = param_int(ctx.cfg, "trials", 20);
  double top_viol = -1e300, corr_viol = -1e300, resid_viol = -1e300;
  int synthesized = 0;
  for (int t = 0; synthesized < trials && t < 40 * trials; ++t) {
    double sigma = 0.002 + 0.03 * rng.next_double();
    auto [f, c] = perturbed_product({2, 2, 2}, sigma, rng);
    if (c <= 0.0 || c > 0.05) continue;
    PartitionSVD svd = partition_svd(f, {0});
    if (svd.triples.empty()) continue;
    double l1sq = sqr(svd.triples[0].lambda);
    top_viol = std::max(top_viol, (1.0 - 3.0 * c) - l1sq);
    ExtractResult ex = extract_product_99(f);
    corr_viol = std::max(corr_viol, (1.0 - 10.0 * c) - ex.corr);
    resid_viol = std::max(resid_viol, (1.0 - c) - swap_inner(svd.triples[0].h).value.real());
    ++synthesized;
    if (!ctx.guard()) return;
  }
  ctx.ge("synthesized-count", "plumbing", (double)synthesized, (double)trials);
  ctx.le("top-singular-value-floor", "near-product-svd", top_viol, 1e-9);
  ctx.le("greedy-extraction-correlation", "near-product-extraction", corr_viol, 1e-9);
  ctx.le("residual-value-monotone", "near-product-svd", resid_viol, 1e-9);
}

inline void run_peel(ExperimentContext& ctx, Rng rng) {
  int trials = param_int(ctx.cfg, "trials", 3);
  const double eps = 0.5, gamma = 0.3;
  const double ceps = std::pow(eps, -5.0);
  bool terminated = true;
  double book_viol = 0.0, phi_viol = 0.0, small_viol = -1e300;
  for (int t = 0; t < trials; ++t) {
    auto f = random_table({2, 2, 2}, rng);
    f = scale(f, 1.0 / l2_norm(f));
    PeelTrace trace = peel_iterate(f, eps, gamma, 4, rng.child((std::uint64_t)t));
    terminated = terminated && !trace.termination.empty() && !trace.steps.empty();
    for (const PeelStep& s : trace.steps) {
      book_viol = std::max(book_viol, std::abs(s.f_l2 - l2_norm(s.f_t)));
      book_viol = std::max(book_viol, std::abs(s.swap_f - swap_inner(s.f_t).value.real()));
      double fl2sq = sqr(s.f_l2);
      if (fl2sq > 1e-12) {
        double phi =
            (ceps * std::sqrt(std::max(0.0, s.swap_f)) - sqr(s.delta_l2)) / fl2sq;
        phi_viol = std::max(phi_viol, std::abs(phi - s.phi));
      }
      if (s.termination == "delta_small")
        small_viol =
            std::max(small_viol, std::sqrt(std::max(0.0, s.swap_delta)) - gamma * fl2sq);
    }
    if (!ctx.guard()) return;
  }
  ctx.flag("trace-terminates", "iterative-peeling", terminated);
  ctx.le("per-step-bookkeeping", "iterative-peeling", book_viol, 1e-9);
  ctx.le("potential-recomputation", "iterative-peeling", phi_viol, 1e-9);
  ctx.le("small-residual-exit-condition", "iterative-peeling", small_viol, 1e-12);
}

inline void run_path_trick(ExperimentContext& ctx, Rng rng) {
  std::string input = param_str(ctx.cfg, "input_file", "");
  TriDist mu;
  if (!input.empty()) {
    std::string kind = param_str(ctx.cfg, "input_kind", "tridist");
    if (kind != "tridist")
      throw std::invalid_argument("path-trick: input_kind must be 'tridist'");
    mu = load_tridist(input);
    if (!pairwise_connected(mu).connected)
      throw std::invalid_argument(input + ": tri-distribution must be pairwise connected");
  } else {
    mu = random_connected_tridist(rng, 3, 3, 3);
  }

  // r = 1 reproduces the distribution on every axis.
  double r1_viol = 0.0;
  for (char axis : {'x', 'y', 'z'}) {
    PathTrickResult res = path_trick(mu, axis, 1);
    if (res.dist.probs.size() != mu.probs.size()) {
      r1_viol = 1.0;
      continue;
    }
    for (std::size_t i = 0; i < mu.probs.size(); ++i)
      r1_viol = std::max(r1_viol, std::abs(res.dist.probs[i] - mu.probs[i]));
  }
  if (!ctx.guard()) return;
  ctx.le("r1-distribution-identity", "walk-construction", r1_viol, 1e-12);

  // Lifted correlation dominates the original to the walk power.
  int trials = param_int(ctx.cfg, "trials", 6);
  double lift_viol = -1e300;
  int checked = 0;
  for (int t = 0; checked < trials && t < 40 * trials; ++t) {
    int n = 1 + (int)rng.next_int(2);
    auto f = random_bounded_table(std::vector<int>((std::size_t)n, mu.sx), rng);
    auto g = random_bounded_table(std::vector<int>((std::size_t)n, mu.sy), rng);
    auto h = random_bounded_table(std::vector<int>((std::size_t)n, mu.sz), rng);
    double eps0 = std::abs(tri_correlation(f, g, h, mu).value);
    if (eps0 < 1e-3) continue;
    FunctionTable ht = h_tilde(f, g, mu);
    for (int r = 1; r <= 2; ++r) {
      PathTrickResult plus = path_trick(mu, 'x', r);
      double corr = std::abs(tri_correlation(plus.lift(f), g, ht, plus.dist).value);
      lift_viol = std::max(lift_viol, std::pow(eps0, std::pow(2.0, r)) - corr);
    }
    ++checked;
    if (!ctx.guard()) return;
  }
  ctx.ge("lift-trials-completed", "plumbing", (double)checked, (double)trials);
  ctx.le("lifted-correlation-floor", "walk-correlation-power", lift_viol, 1e-9);

  // Full-support pipeline on the mod-3 progression distribution: every
  // ordered symbol pair admits a symmetry witness, and the walk keeps the
  // first variable's marginal.
  TriDist ap = f3_threeap_dist();
  PipelineResult pipe = full_support_pipeline(ap);
  std::map<std::vector<int>, int> ids;
  for (std::size_t s = 0; s < pipe.step_x.symbol_decode.size(); ++s)
    ids[pipe.step_x.symbol_decode[s]] = (int)s;
  bool witnesses_ok = true;
  for (int a = 0; a < 3 && witnesses_ok; ++a)
    for (int b = 0; b < 3 && witnesses_ok; ++b) {
      if (!ids.count({a, a, b}) || !ids.count({b, a, a})) {
        witnesses_ok = false;
        break;
      }
      SymmetryWitness w = symmetry_witness(pipe.step_x, a, b);
      witnesses_ok = witnesses_ok && pipe.step_x.dist.p(ids[{a, a, b}], w.y, w.z) > 0.0 &&
                     pipe.step_x.dist.p(ids[{b, a, a}], w.y, w.z) > 0.0 && w.alpha > 0.0;
    }
  if (!ctx.guard()) return;
  ctx.flag("pipeline-symmetry-witnesses", "walk-symmetry-decomposition", witnesses_ok);
  auto before = pipe.step_z.dist.marginal_y();
  auto after = pipe.step_x.dist.marginal_y();
  double marg_viol = 0.0;
  for (std::size_t a = 0; a < before.size(); ++a)
    marg_viol = std::max(marg_viol, std::abs(before[a] - after[a]));
  ctx.le("pipeline-marginal-preserved", "walk-construction", marg_viol, 1e-12);
}

inline void run_bounded_product(ExperimentContext& ctx, Rng rng) {
  int trials = param_int(ctx.cfg, "trials", 2);

  // The delta = 0.5 correlation floor.
  {
    ProductFunction P;
    auto f = random_unimodular_product_table({2, 2}, rng, &P);
    for (auto& v : f.values) v *= 0.9;
    for (auto& fac : P.factors)
      for (auto& v : fac) v *= 0.95;
    const double delta = 0.5;
    BoundedProductResult res = to_bounded_product(f, P, delta);
    double uni_viol = 0.0;
    for (const auto& fac : res.P_prime.factors)
      for (const auto& v : fac) uni_viol = std::max(uni_viol, std::abs(std::abs(v) - 1.0));
    double D = std::log(16.0 / sqr(delta));
    double floor = std::pow(delta, 7.0) / (2e6 * (2.0 * D + 1.0));
    if (!ctx.guard()) return;
    ctx.ge("delta-half-correlation-floor", "unimodular-conversion", res.corr, floor);
    ctx.le("output-unimodular", "unimodular-conversion", uni_viol, 1e-12);
  }

  // Planted magnitudes: within 0.9 of the dense scan over the phase line.
  double ratio_min = 1e300;
  for (int t = 0; t < trials; ++t) {
    const int n = 4;
    ProductFunction U;
    auto f = random_unimodular_product_table(std::vector<int>((std::size_t)n, 2), rng, &U);
    for (auto& v : f.values) v = 0.85 * v + 0.1 * rng.next_unit_complex();
    double l4 = lp_norm(f, 4.0);
    if (l4 > 1.0)
      for (auto& v : f.values) v /= l4 * 1.0000001;
    ProductFunction P = U;
    for (auto& fac : P.factors) {
      double n2 = 0.0;
      for (auto& v : fac) {
        v *= std::exp(0.5 * (rng.next_double() - 0.5));
        n2 += std::norm(v);
      }
      double sc = std::sqrt(n2 / (double)fac.size());
      for (auto& v : fac) v /= sc * 1.0000001;
    }
    const double theta_cap = 8.0;
    BoundedProductResult res = to_bounded_product(f, P, 0.3, theta_cap);
    // Dense scan oracle over the same phase-parameter range.
    ProductFunction Q = P;
    std::vector<std::vector<double>> lnR((std::size_t)n);
    for (int i = 0; i < n; ++i)
      for (std::size_t a = 0; a < P.factors[(std::size_t)i].size(); ++a) {
        double m = std::abs(P.factors[(std::size_t)i][a]);
        Q.factors[(std::size_t)i][a] = P.factors[(std::size_t)i][a] / m;
        lnR[(std::size_t)i].push_back(std::log(m));
      }
    const double pi2 = 2.0 * std::acos(-1.0);
    double dense_best = 0.0;
    for (double th = -theta_cap; th <= theta_cap; th += 0.001) {
      ProductFunction PP = Q;
      for (int i = 0; i < n; ++i)
        for (std::size_t a = 0; a < PP.factors[(std::size_t)i].size(); ++a) {
          double ph = pi2 * th * lnR[(std::size_t)i][a];
          PP.factors[(std::size_t)i][a] *= cplx{std::cos(ph), std::sin(ph)};
        }
      dense_best = std::max(dense_best, product_correlation(f, PP));
    }
    if (dense_best > 0.0) ratio_min = std::min(ratio_min, res.corr / dense_best);
    if (!ctx.guard()) return;
  }
  ctx.ge("dense-scan-ratio", "unimodular-conversion", ratio_min, 0.9);
}

inline void run_diamond(ExperimentContext& ctx, Rng rng) {
  int p = param_int(ctx.cfg, "modulus", 3);
  int trials = param_int(ctx.cfg, "trials", 10);
  std::string input = param_str(ctx.cfg, "input_file", "");

  if (!input.empty()) {
    std::string kind = param_str(ctx.cfg, "input_kind", "function");
    if (kind != "function") throw std::invalid_argument("diamond: input_kind must be 'function'");
    FunctionTable f = load_function(input);
    double q = diamond_pass_prob(f, p);
    ctx.add("input-pass-probability", "merge-comparison-test", q, 0.0, true);
    CharacterReduction cr = character_swap_reduction(f, p);
    ctx.le("input-character-identity", "character-reduction",
           std::abs(cr.identity_lhs - cr.identity_rhs), 1e-10);
    double floor = p > 1 ? (p * cr.pass_prob - 1.0) / (double)(p - 1) : 0.0;
    ctx.ge("input-best-character-floor", "character-reduction", cr.best_value, floor - 1e-12);
    return;
  }

  std::vector<int> alphabets{3, 2, 2};
  double min_pass = 1.0;
  for (int t = 0; t < trials; ++t)
    min_pass = std::min(min_pass, diamond_pass_prob(random_direct_sum(alphabets, p, rng), p));
  if (!ctx.guard()) return;
  ctx.ge("direct-sum-perfect-completeness", "merge-comparison-test", min_pass, 1.0);

  double corr_viol = -1e300;
  for (int t = 0; t < trials; ++t) {
    FunctionTable f = random_direct_sum(alphabets, p, rng);
    std::size_t M = f.size();
    int k = 1 + (int)rng.next_int(3);
    std::set<std::size_t> touched;
    while ((int)touched.size() < k) touched.insert((std::size_t)rng.next_int((std::uint64_t)M));
    for (std::size_t idx : touched)
      f.values[idx] = cplx{(double)(((int)f.values[idx].real() + 1) % p), 0.0};
    double eta = (double)k / (double)M;
    corr_viol = std::max(corr_viol, (1.0 - 4.0 * eta) - diamond_pass_prob(f, p));
  }
  if (!ctx.guard()) return;
  ctx.le("corruption-linear-bound", "merge-comparison-test", corr_viol, 1e-12);

  double id_viol = 0.0, floor_viol = -1e300, sum_viol = 0.0;
  for (int t = 0; t < trials; ++t) {
    FunctionTable f = FunctionTable::zeros(alphabets);
    for (auto& v : f.values) v = cplx{(double)rng.next_int(p), 0.0};
    CharacterReduction cr = character_swap_reduction(f, p);
    id_viol = std::max(id_viol, std::abs(cr.identity_lhs - cr.identity_rhs));
    if (p > 1)
      floor_viol = std::max(floor_viol,
                            (p * cr.pass_prob - 1.0) / (double)(p - 1) - cr.best_value);
    FunctionTable ds = random_direct_sum(alphabets, p, rng);
    CharacterReduction crd = character_swap_reduction(ds, p);
    for (double v : crd.values) sum_viol = std::max(sum_viol, std::abs(v - 1.0));
  }
  if (!ctx.guard()) return;
  ctx.le("character-identity", "character-reduction", id_viol, 1e-10);
  ctx.le("best-character-floor", "character-reduction", floor_viol, 1e-12);
  ctx.le("direct-sum-characters-one", "character-reduction", sum_viol, 1e-10);
}

inline void run_dp(ExperimentContext& ctx, Rng rng) {
  std::string input = param_str(ctx.cfg, "input_file", "");
  if (!input.empty()) {
    std::string kind = param_str(ctx.cfg, "input_kind", "dpinstance");
    if (kind != "dpinstance") throw std::invalid_argument("dp: input_kind must be 'dpinstance'");
    DPInstance inst = load_dpinstance(input);
    bool valid = true;
    try {
      inst.validate();
    } catch (...) {
      valid = false;
    }
    ctx.flag("input-instance-valid", "plumbing", valid);
    if (valid) {
      double q = dp_pass_prob(inst, 400, rng.child(1));
      ctx.add("input-pass-probability", "overlap-agreement-test", q, 0.0, true);
    }
    return;
  }

  // Perfect instances: pass probability 1 and exact recovery.
  {
    DPInstance inst = DPInstance::planted(20, 3, 0.4, 0.5, 0.0, 0.0, ctx.cfg.seed ^ 0x99);
    double q = dp_pass_prob(inst, 400, rng.child(2));
    ctx.ge("perfect-instance-pass", "overlap-agreement-test", q, 1.0);
    DPRecoverParams params;
    params.thresholds = DPThresholds{0.0, 0.0, 1.0, 0.0};
    params.vote = DPVoteParams{0.0, 16, 64, 2048};
    params.candidate_sets = 12;
    params.classify_samples = 64;
    params.cluster_radius = 0.1;
    params.test_sets = 40;
    params.agreement_threshold = 1e-9;
    DPRecovery rec = dp_recover_global(inst, params, rng.child(3));
    double gdiff = 0.0;
    for (int x = 0; x < inst.n; ++x) {
      std::vector<double> g = inst.planted_value(x);
      for (int k = 0; k < inst.K; ++k)
        gdiff = std::max(gdiff, std::abs(rec.g[(std::size_t)x][(std::size_t)k] -
                                         g[(std::size_t)k]));
    }
    if (!ctx.guard()) return;
    ctx.le("perfect-recovery-exact", "global-recovery", gdiff, 1e-12);
    ctx.ge("perfect-recovery-agreement", "global-recovery", rec.agreement_rate, 1.0);
  }

  // A fully random instance is not good at small thresholds.
  {
    DPInstance inst = DPInstance::random_instance(30, 8, 0.5, 0.5, 0.3, ctx.cfg.seed ^ 0x42);
    DPThresholds th{0.3, 0.3, 0.5, 0.1};
    DPClassifyResult c = dp_classify(inst, 0b101101101101ULL, th, 200, rng.child(4));
    if (!ctx.guard()) return;
    ctx.flag("random-instance-not-good", "overlap-agreement-test", !c.good);
  }

  // Noisy planted instances: broad agreement at a calibrated threshold.
  int seeds = param_int(ctx.cfg, "seeds", 2);
  int n = param_int(ctx.cfg, "n", 40);
  int K = param_int(ctx.cfg, "K", 4);
  double rho = param_double(ctx.cfg, "rho", 0.3);
  double eta = param_double(ctx.cfg, "eta", 0.05);
  const double alpha = 0.5;
  double D = 3.0 * std::sqrt(eta * K * (alpha * rho * n));
  double min_agreement = 1.0;
  int min_excellent = std::numeric_limits<int>::max();
  for (int s = 0; s < seeds; ++s) {
    DPInstance inst =
        DPInstance::planted(n, K, rho, alpha, D, eta, ctx.cfg.seed * 1000003ULL + (std::uint64_t)s);
    DPRecoverParams params;
    params.thresholds = DPThresholds{D, D, 0.5, 0.5};
    params.vote = DPVoteParams{D, 16, 64, 2048};
    params.candidate_sets = 16;
    params.classify_samples = 64;
    params.cluster_radius = 0.5 * std::sqrt((double)K);
    params.test_sets = 40;
    params.agreement_threshold = 3.0 * std::sqrt(eta * K * rho * n / 6.0) + 1.0;
    DPRecovery rec = dp_recover_global(inst, params, rng.child(0x100 + (std::uint64_t)s));
    min_agreement = std::min(min_agreement, rec.agreement_rate);
    min_excellent = std::min(min_excellent, rec.num_excellent);
    if (!ctx.guard()) return;
  }
  ctx.ge("planted-agreement-rate", "global-recovery", min_agreement, 0.5);
  ctx.ge("planted-excellent-count", "global-recovery", (double)min_excellent, 1.0);
}

inline void run_sse(ExperimentContext& ctx, Rng rng) {
  int n = param_int(ctx.cfg, "n", 10);
  double rho = param_double(ctx.cfg, "rho", 0.9);
  double gamma = param_double(ctx.cfg, "gamma", 0.05);
  int trials = param_int(ctx.cfg, "trials", 10);

  // A constant map collapses every correlated pair.
  {
    auto constant_map = [](std::uint64_t) { return std::vector<double>{0.5, -1.0}; };
    SseProbeResult r = sse_probe(constant_map, n, rho, gamma, 0.1, 2000, rng.child(1));
    ctx.ge("constant-map-local-collapse", "local-global-probe", r.p_local, 1.0);
    bool ranges = r.p_local >= 0.0 && r.p_local <= 1.0 && r.p_global >= 0.0 &&
                  r.p_global <= 1.0 && r.bucket_mass >= 0.0 && r.bucket_mass <= 1.0 &&
                  r.global_threshold >= 0.1;
    ctx.flag("probe-output-ranges", "local-global-probe", ranges);
  }
  if (!ctx.guard()) return;

  // Noise stability endpoints and monotonicity for real-valued functions.
  double end_viol = 0.0, mono_viol = -1e300;
  for (int t = 0; t < 3; ++t) {
    FunctionTable f = FunctionTable::zeros({2, 2, 2});
    for (auto& v : f.values) v = cplx{rng.next_gaussian(), 0.0};
    double s1 = noise_stability(f, 1.0);
    double s0 = noise_stability(f, 0.0);
    end_viol = std::max(end_viol, std::abs(s1 - sqr(l2_norm(f))));
    cplx mean = inner_product(f, FunctionTable::constant(f.alphabets, cplx{1, 0}));
    end_viol = std::max(end_viol, std::abs(s0 - std::norm(mean)));
    double prev = -1e300;
    for (double r : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      double s = noise_stability(f, r);
      mono_viol = std::max(mono_viol, prev - s);
      prev = s;
    }
  }
  if (!ctx.guard()) return;
  ctx.le("noise-stability-endpoints", "noise-stability", end_viol, 1e-9);
  ctx.le("noise-stability-monotone", "noise-stability", mono_viol, 1e-9);

  // Collision probability of a set under correlated biased pairs lies
  // between the squared measure and the measure itself.
  double lower_viol = -1e300, upper_viol = -1e300;
  for (int t = 0; t < trials; ++t) {
    std::vector<bool> A((std::size_t)1 << n, false);
    double density = 0.05 + 0.4 * rng.next_double();
    for (std::size_t i = 0; i < A.size(); ++i) A[i] = rng.next_bool(density);
    double mu = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i)
      if (A[i]) {
        int pc = std::popcount((std::uint64_t)i);
        mu += std::pow(rho, pc) * std::pow(1.0 - rho, n - pc);
      }
    double coll = collision_probability(A, n, rho, gamma);
    lower_viol = std::max(lower_viol, sqr(mu) - coll);
    upper_viol = std::max(upper_viol, coll - mu);
    if (!ctx.guard()) return;
  }
  ctx.le("collision-lower-bound", "collision-probability", lower_viol, 1e-9);
  ctx.le("collision-upper-bound", "collision-probability", upper_viol, 1e-9);
}

inline void run_threeap_step(ExperimentContext& ctx, Rng rng) {
  std::string input = param_str(ctx.cfg, "input_file", "");
  if (!input.empty()) {
    std::string kind = param_str(ctx.cfg, "input_kind", "denseset");
    if (kind != "denseset")
      throw std::invalid_argument("threeap-step: input_kind must be 'denseset'");
    DenseSet A = load_denseset(input);
    ConstraintSet S = ConstraintSet::three_ap(A.sigma);
    std::optional<Triple> t = find_valid_triple(A, S);
    ctx.flag("input-triple-search-complete", "constrained-triple-search", true);
    DensityStepOutcome out = density_increment_step(A, S, DensityStepParams{}, rng.child(7));
    bool legal = out.kind == "triple" || out.kind == "increment" ||
                 out.kind == "no_triple_certificate" || out.kind == "inconclusive";
    // A found triple and a triple-free certificate must agree with the search.
    if (t.has_value()) legal = legal && out.kind != "no_triple_certificate";
    ctx.flag("input-step-outcome-legal", "density-increment-step", legal);
    return;
  }

  ConstraintSet ap3 = ConstraintSet::three_ap(3);
  ConstraintVerdict v = validate_constraint_set(ap3);
  ctx.flag("progression-set-valid", "constraint-set-conditions", v.diagonal && v.connected);

  ConstraintSet five;
  five.sigma = 3;
  five.triples = {{0, 0, 0}, {0, 1, 2}, {1, 1, 1}, {1, 2, 0}, {2, 2, 2}};
  std::sort(five.triples.begin(), five.triples.end());
  ConstraintVerdict v5 = validate_constraint_set(five);
  ctx.flag("five-triple-set-valid", "constraint-set-conditions", v5.diagonal && v5.connected);

  // Increment distribution mass formulas, exact.
  {
    const double delta = 0.3;
    const int n = 9, m = 3;
    TriDist mu = build_mu_increment(ap3, delta, n);
    double diag = 1.0 / m - delta / (m * std::sqrt((double)n));
    double off = delta / (std::sqrt((double)n) * (double)((int)ap3.triples.size() - m));
    double mass_viol = 0.0, total = 0.0;
    for (const auto& t : ap3.triples) {
      double p = mu.p(t[0], t[1], t[2]);
      double want = (t[0] == t[1] && t[1] == t[2]) ? diag : off;
      mass_viol = std::max(mass_viol, std::abs(p - want));
      total += p;
    }
    mass_viol = std::max(mass_viol, std::abs(total - 1.0));
    ctx.le("increment-mass-formula", "increment-distribution", mass_viol, 1e-15);
  }
  if (!ctx.guard()) return;

  // Density under the skewed first marginal stays within 2*delta of alpha.
  {
    const double delta = 0.2;
    const int n = 3;
    TriDist mu = build_mu_increment(five, delta, n);
    std::vector<double> mx = mu.marginal_x();
    double viol = -1e300;
    for (int t = 0; t < 10; ++t) {
      DenseSet A = DenseSet::random(3, n, 0.3 + 0.4 * rng.next_double(), rng);
      FunctionTable ind = A.indicator();
      double e = 0.0;
      std::vector<int> x;
      for (std::size_t i = 0; i < ind.size(); ++i) {
        index_tuple(ind.alphabets, i, x);
        double w = 1.0;
        for (int xc : x) w *= mx[(std::size_t)xc];
        e += w * ind.values[i].real();
      }
      viol = std::max(viol, (A.density() - 2.0 * delta) - e);
    }
    ctx.le("skewed-marginal-density-floor", "increment-distribution", viol, 1e-12);
  }
  if (!ctx.guard()) return;

  // The stored regression value: exhaustive triple-free maximum at n = 2.
  {
    const int kMaxTripleFreeF3n2 = 6;
    int best = 0;
    DenseSet probe = DenseSet::empty(3, 2);
    for (std::uint64_t mask = 0; mask < 512; ++mask) {
      for (std::size_t i = 0; i < 9; ++i) probe.set(i, (mask >> i) & 1ULL);
      bool has = false;
      std::vector<int> x, y, z;
      for (std::size_t a = 0; a < 9 && !has; ++a) {
        if (!probe.contains(a)) continue;
        index_tuple(probe.alphabets(), a, x);
        for (std::size_t b = 0; b < 9 && !has; ++b) {
          if (!probe.contains(b)) continue;
          index_tuple(probe.alphabets(), b, y);
          for (std::size_t c = 0; c < 9 && !has; ++c) {
            if (!probe.contains(c)) continue;
            index_tuple(probe.alphabets(), c, z);
            has = is_valid_triple(ap3, x, y, z);
          }
        }
      }
      if (!has) best = std::max(best, (int)std::popcount(mask));
    }
    ctx.ge("triple-free-maximum-regression", "constrained-triple-search", (double)best,
           (double)kMaxTripleFreeF3n2);
    ctx.le("triple-free-maximum-regression-upper", "constrained-triple-search", (double)best,
           (double)kMaxTripleFreeF3n2);
  }
  if (!ctx.guard()) return;

  // The full space yields a triple immediately; dense random sets always do.
  {
    DensityStepOutcome out =
        density_increment_step(DenseSet::full(3, 3), ap3, DensityStepParams{}, rng.child(11));
    ctx.flag("full-space-triple", "density-increment-step", out.kind == "triple");
  }
  int seeds = param_int(ctx.cfg, "seeds", 5);
  int found = 0;
  for (int s = 0; s < seeds; ++s) {
    DenseSet A = DenseSet::random(3, 3, 0.9, rng);
    DensityStepOutcome out = density_increment_step(A, ap3, DensityStepParams{}, rng.child(20 + (std::uint64_t)s));
    if (out.kind == "triple") ++found;
    if (!ctx.guard()) return;
  }
  ctx.ge("dense-random-triples", "density-increment-step", (double)found, (double)seeds);
}

inline void run_single_experiment(ExperimentContext& ctx, const std::string& name) {
  // Fixed per-experiment seed streams keep full-suite runs independent of
  // execution order.
  static const std::map<std::string, std::uint64_t> streams{
      {"norm-identities", 1}, {"swap-properties", 2}, {"ninety-nine", 3}, {"peel", 4},
      {"path-trick", 5},      {"bounded-product", 6}, {"diamond", 7},     {"dp", 8},
      {"sse", 9},             {"threeap-step", 10}};
  Rng rng = Rng(ctx.cfg.seed).child(streams.at(name));
  if (name == "norm-identities") run_norm_identities(ctx, rng);
  else if (name == "swap-properties") run_swap_properties(ctx, rng);
  else if (name == "ninety-nine") run_ninety_nine(ctx, rng);
  else if (name == "peel") run_peel(ctx, rng);
  else if (name == "path-trick") run_path_trick(ctx, rng);
  else if (name == "bounded-product") run_bounded_product(ctx, rng);
  else if (name == "diamond") run_diamond(ctx, rng);
  else if (name == "dp") run_dp(ctx, rng);
  else if (name == "sse") run_sse(ctx, rng);
  else if (name == "threeap-step") run_threeap_step(ctx, rng);
  else throw std::invalid_argument("run_experiment: unknown experiment '" + name + "'");
}

}  // namespace detail

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentContext ctx;
  ctx.cfg = cfg;
  ctx.report.config = cfg.to_json();
  if (cfg.experiment == "full-suite") {
    for (const std::string& name : experiment_names()) {
      if (name == "full-suite") continue;
      ctx.prefix = name + "/";
      detail::run_single_experiment(ctx, name);
      if (ctx.report.truncated) break;
    }
  } else {
    detail::run_single_experiment(ctx, cfg.experiment);
  }
  return ctx.report;
}

// ---------------------------------------------------------------------------
// Object generation for the CLI
// ---------------------------------------------------------------------------

inline json generate_object(const std::string& kind, std::uint64_t seed,
                            const std::map<std::string, json>& params) {
  auto check_params = [&](std::set<std::string> allowed) {
    for (const auto& [k, v] : params) {
      if (!allowed.count(k))
        throw std::invalid_argument("gen: unknown param '" + k + "' for kind '" + kind + "'");
      (void)v;
    }
  };
  ExperimentConfig shim;  // reuse the numeric param accessors
  shim.experiment = "full-suite";
  shim.params = params;
  Rng rng(seed);
  if (kind == "function") {
    check_params({"n", "sigma"});
    int n = detail::param_int(shim, "n", 3);
    int sigma = detail::param_int(shim, "sigma", 2);
    return function_table_to_json(random_table(std::vector<int>((std::size_t)n, sigma), rng));
  }
  if (kind == "tridist") {
    check_params({"sigma"});
    int sigma = detail::param_int(shim, "sigma", 3);
    return detail::random_connected_tridist(rng, sigma, sigma, sigma).to_json();
  }
  if (kind == "denseset") {
    check_params({"sigma", "n", "density"});
    int sigma = detail::param_int(shim, "sigma", 3);
    int n = detail::param_int(shim, "n", 3);
    double density = detail::param_double(shim, "density", 0.5);
    return DenseSet::random(sigma, n, density, rng).to_json();
  }
  if (kind == "dpinstance") {
    check_params({"n", "K", "rho", "alpha", "D", "eta"});
    int n = detail::param_int(shim, "n", 24);
    int K = detail::param_int(shim, "K", 3);
    double rho = detail::param_double(shim, "rho", 0.4);
    double alpha = detail::param_double(shim, "alpha", 0.5);
    double D = detail::param_double(shim, "D", 1.0);
    double eta = detail::param_double(shim, "eta", 0.1);
    return dp_instance_to_json(DPInstance::planted(n, K, rho, alpha, D, eta, seed));
  }
  throw std::invalid_argument("gen: unknown kind '" + kind + "'");
}

// Which experiment a file kind routes to under `check`.
inline std::string default_experiment_for_kind(const std::string& kind) {
  if (kind == "function") return "norm-identities";
  if (kind == "tridist") return "path-trick";
  if (kind == "denseset") return "threeap-step";
  if (kind == "dpinstance") return "dp";
  throw std::invalid_argument("check: unknown kind '" + kind + "'");
}

inline bool experiment_accepts_kind(const std::string& experiment, const std::string& kind) {
  if (kind == "function") return experiment == "norm-identities" || experiment == "diamond";
  if (kind == "tridist") return experiment == "path-trick";
  if (kind == "denseset") return experiment == "threeap-step";
  if (kind == "dpinstance") return experiment == "dp";
  return false;
}

// Infer the object kind of a stored file from its top-level fields.
inline std::string sniff_object_kind(const json& j) {
  if (!j.is_object()) throw std::runtime_error("object file: expected a JSON object");
  if (j.contains("alphabets") && j.contains("values")) return "function";
  if (j.contains("probs")) return "tridist";
  if (j.contains("bits") || j.contains("words")) return "denseset";
  if (j.contains("rho") && j.contains("alpha")) return "dpinstance";
  throw std::runtime_error("object file: unrecognized object layout");
}

}  // namespace swapkit
