// Machine-readable experiment reports: per-check records with values,
// thresholds and verdicts, emitted as JSON lines (and optionally CSV).
// Reports are canonical: checks are sorted by name and timing information is
// excluded unless explicitly requested, so identical configurations yield
// byte-identical output.
#pragma once

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "swapkit/core.hpp"

namespace swapkit {

struct CheckRecord {
  std::string name;
  std::string anchor;  // which documented property the check exercises, or "plumbing"
  double value = 0.0;
  double threshold = 0.0;
  bool verdict = false;
  double std_error = 0.0;    // 0 for exact checks
  double runtime_ms = 0.0;   // emitted only when timing is requested
  json detail;               // optional extra payload

  json to_json(bool timing) const {
    json j;
    j["type"] = "check";
    j["name"] = name;
    j["anchor"] = anchor;
    j["value"] = value;
    j["threshold"] = threshold;
    j["verdict"] = verdict;
    j["std_error"] = std_error;
    if (timing) j["runtime_ms"] = runtime_ms;
    if (!detail.is_null()) j["detail"] = detail;
    return j;
  }
};

struct ExperimentReport {
  json config;  // echo of the configuration that produced the report
  std::vector<CheckRecord> checks;
  bool truncated = false;  // wall-clock budget ran out before completion

  bool overall_pass() const {
    if (truncated) return false;
    for (const auto& c : checks)
      if (!c.verdict) return false;
    return true;
  }

  void add(CheckRecord c) { checks.push_back(std::move(c)); }

  // Canonical JSON-lines rendering: config, checks sorted by name, summary.
  std::string to_jsonl(bool timing = false) const {
    std::vector<const CheckRecord*> order;
    order.reserve(checks.size());
    for (const auto& c : checks) order.push_back(&c);
    std::stable_sort(order.begin(), order.end(),
                     [](const CheckRecord* a, const CheckRecord* b) { return a->name < b->name; });
    std::ostringstream out;
    json cfg;
    cfg["type"] = "config";
    cfg["config"] = config;
    out << cfg.dump() << "\n";
    std::size_t failures = 0;
    for (const CheckRecord* c : order) {
      if (!c->verdict) ++failures;
      out << c->to_json(timing).dump() << "\n";
    }
    json summary;
    summary["type"] = "summary";
    summary["checks"] = checks.size();
    summary["failures"] = failures;
    summary["truncated"] = truncated;
    summary["overall_pass"] = overall_pass();
    out << summary.dump() << "\n";
    return out.str();
  }

  std::string to_csv() const {
    std::vector<const CheckRecord*> order;
    for (const auto& c : checks) order.push_back(&c);
    std::stable_sort(order.begin(), order.end(),
                     [](const CheckRecord* a, const CheckRecord* b) { return a->name < b->name; });
    std::ostringstream out;
    out << "name,anchor,value,threshold,std_error,verdict\n";
    for (const CheckRecord* c : order)
      out << c->name << "," << c->anchor << "," << c->value << "," << c->threshold << ","
          << c->std_error << "," << (c->verdict ? "pass" : "fail") << "\n";
    return out.str();
  }
};

}  // namespace swapkit
