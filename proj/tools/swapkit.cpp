// Experiment harness CLI.
//
//   swapkit run   --config <file> [--csv <out>] [--timing]
//   swapkit gen   --kind <function|tridist|denseset|dpinstance> --out <file>
//                 --seed <s> [--param k=v ...]
//   swapkit check --file <object> [--experiment <name>] [--seed <s>]
//
// Reports are JSON lines on stdout; exit code 0 iff every check passes.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "swapkit/experiments.hpp"

namespace {

std::map<std::string, swapkit::json> parse_kv_params(const std::vector<std::string>& kvs) {
  std::map<std::string, swapkit::json> params;
  for (const std::string& kv : kvs) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::invalid_argument("--param expects key=value, got '" + kv + "'");
    std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
    try {
      std::size_t pos = 0;
      double d = std::stod(val, &pos);
      if (pos == val.size()) {
        if (d == (double)(long long)d)
          params[key] = (long long)d;
        else
          params[key] = d;
        continue;
      }
    } catch (...) {
    }
    params[key] = val;
  }
  return params;
}

int emit_report(const swapkit::ExperimentReport& report, const std::string& csv_path,
                bool timing) {
  std::cout << report.to_jsonl(timing);
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) {
      std::cerr << "error: " << csv_path << ": cannot open file for writing\n";
      return 2;
    }
    out << report.to_csv();
  }
  return report.overall_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"swap/box norm experiment harness"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  std::string config_path, csv_path;
  bool timing = false;
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  run->add_option("--csv", csv_path, "also write per-check CSV rows to this file");
  run->add_flag("--timing", timing, "include per-check runtime_ms in the report");

  // gen
  auto* gen = app.add_subcommand("gen", "generate a random object file");
  std::string gen_kind, gen_out;
  std::uint64_t gen_seed = 0;
  std::vector<std::string> gen_params;
  gen->add_option("--kind", gen_kind, "function|tridist|denseset|dpinstance")->required();
  gen->add_option("--out", gen_out, "output path")->required();
  gen->add_option("--seed", gen_seed, "generator seed")->required();
  gen->add_option("--param", gen_params, "key=value generator parameter (repeatable)");

  // check
  auto* chk = app.add_subcommand("check", "run an experiment against a stored object");
  std::string chk_file, chk_experiment;
  std::uint64_t chk_seed = 1;
  chk->add_option("--file", chk_file, "object file to check")->required();
  chk->add_option("--experiment", chk_experiment,
                  "experiment to run (default: inferred from the object kind)");
  chk->add_option("--seed", chk_seed, "experiment seed (default 1)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      swapkit::json j = swapkit::load_json_file(config_path);
      swapkit::ExperimentConfig cfg = swapkit::ExperimentConfig::from_json(j);
      return emit_report(swapkit::run_experiment(cfg), csv_path, timing);
    }
    if (gen->parsed()) {
      swapkit::json obj =
          swapkit::generate_object(gen_kind, gen_seed, parse_kv_params(gen_params));
      swapkit::store_json_file(gen_out, obj);
      std::cout << "{\"type\":\"gen\",\"kind\":\"" << gen_kind << "\",\"out\":\"" << gen_out
                << "\"}\n";
      return 0;
    }
    if (chk->parsed()) {
      swapkit::json obj = swapkit::load_json_file(chk_file);
      std::string kind = swapkit::sniff_object_kind(obj);
      std::string experiment =
          chk_experiment.empty() ? swapkit::default_experiment_for_kind(kind) : chk_experiment;
      if (!swapkit::experiment_accepts_kind(experiment, kind))
        throw std::invalid_argument("check: experiment '" + experiment +
                                    "' does not accept objects of kind '" + kind + "'");
      swapkit::ExperimentConfig cfg;
      cfg.experiment = experiment;
      cfg.seed = chk_seed;
      cfg.params["input_file"] = chk_file;
      cfg.params["input_kind"] = kind;
      cfg.validate();
      return emit_report(swapkit::run_experiment(cfg), "", false);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
