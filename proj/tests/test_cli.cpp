#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "swapkit/experiments.hpp"

using namespace swapkit;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

json minimal_config(const std::string& experiment) {
  return json{{"experiment", experiment}, {"seed", 7}};
}

}  // namespace

TEST_CASE("experiment config: strict schema", "[cli]") {
  SECTION("a minimal config parses and round-trips") {
    ExperimentConfig cfg = ExperimentConfig::from_json(minimal_config("norm-identities"));
    REQUIRE(cfg.experiment == "norm-identities");
    REQUIRE(cfg.seed == 7);
    ExperimentConfig back = ExperimentConfig::from_json(cfg.to_json());
    REQUIRE(back.to_json() == cfg.to_json());
  }
  SECTION("unknown top-level keys are rejected") {
    json j = minimal_config("norm-identities");
    j["extra"] = 1;
    REQUIRE_THROWS_AS(ExperimentConfig::from_json(j), std::invalid_argument);
  }
  SECTION("seed is required") {
    json j{{"experiment", "norm-identities"}};
    REQUIRE_THROWS_AS(ExperimentConfig::from_json(j), std::invalid_argument);
  }
  SECTION("unknown experiments are rejected") {
    REQUIRE_THROWS_AS(ExperimentConfig::from_json(minimal_config("nope")), std::invalid_argument);
  }
  SECTION("unknown params for the experiment are rejected") {
    json j = minimal_config("norm-identities");
    j["params"] = json{{"bogus", 1}};
    REQUIRE_THROWS_AS(ExperimentConfig::from_json(j), std::invalid_argument);
  }
  SECTION("unknown budget keys are rejected") {
    json j = minimal_config("norm-identities");
    j["budgets"] = json{{"cpu_seconds", 1}};
    REQUIRE_THROWS_AS(ExperimentConfig::from_json(j), std::invalid_argument);
  }
  SECTION("budgets must be positive") {
    json j = minimal_config("norm-identities");
    j["budgets"] = json{{"wall_clock_seconds", -1.0}};
    REQUIRE_THROWS_AS(ExperimentConfig::from_json(j), std::invalid_argument);
  }
}

TEST_CASE("norm-identities: at least six checks, all passing", "[cli]") {
  ExperimentConfig cfg = ExperimentConfig::from_json(minimal_config("norm-identities"));
  cfg.params["trials"] = 8;
  ExperimentReport rep = run_experiment(cfg);
  REQUIRE(rep.checks.size() >= 6);
  for (const CheckRecord& c : rep.checks) {
    INFO(c.name << " value=" << c.value << " threshold=" << c.threshold);
    REQUIRE(c.verdict);
  }
  REQUIRE(rep.overall_pass());
  REQUIRE_FALSE(rep.truncated);
}

TEST_CASE("identical configs produce byte-identical reports", "[cli]") {
  ExperimentConfig cfg = ExperimentConfig::from_json(minimal_config("norm-identities"));
  cfg.params["trials"] = 4;
  std::string a = run_experiment(cfg).to_jsonl();
  std::string b = run_experiment(cfg).to_jsonl();
  REQUIRE(a == b);
  REQUIRE(a.find("\"type\":\"config\"") != std::string::npos);
  REQUIRE(a.find("\"type\":\"summary\"") != std::string::npos);
  // Timing is excluded from the canonical rendering.
  REQUIRE(a.find("runtime_ms") == std::string::npos);
  REQUIRE(run_experiment(cfg).to_jsonl(true).find("runtime_ms") != std::string::npos);
}

TEST_CASE("report ordering is canonical and CSV matches the checks", "[cli]") {
  ExperimentConfig cfg = ExperimentConfig::from_json(minimal_config("peel"));
  cfg.params["trials"] = 2;
  ExperimentReport rep = run_experiment(cfg);
  std::string csv = rep.to_csv();
  std::size_t lines = std::count(csv.begin(), csv.end(), '\n');
  REQUIRE(lines == rep.checks.size() + 1);  // header + one row per check
  // JSON lines: config + checks + summary, sorted check names.
  std::string out = rep.to_jsonl();
  REQUIRE(std::count(out.begin(), out.end(), '\n') == (long)rep.checks.size() + 2);
  std::vector<std::string> names;
  std::istringstream in(out);
  std::string line;
  while (std::getline(in, line)) {
    json j = json::parse(line);
    if (j.at("type") == "check") names.push_back(j.at("name").get<std::string>());
  }
  REQUIRE(std::is_sorted(names.begin(), names.end()));
}

TEST_CASE("an exhausted wall clock truncates the report honestly", "[cli]") {
  ExperimentConfig cfg = ExperimentConfig::from_json(minimal_config("norm-identities"));
  cfg.params["trials"] = 2;
  cfg.budgets.wall_clock_seconds = 1e-9;
  ExperimentReport rep = run_experiment(cfg);
  REQUIRE(rep.truncated);
  REQUIRE_FALSE(rep.overall_pass());
  bool has_marker = false;
  for (const CheckRecord& c : rep.checks)
    if (c.name == "wall-clock-truncated") {
      has_marker = true;
      REQUIRE_FALSE(c.verdict);
    }
  REQUIRE(has_marker);
}

TEST_CASE("running an unknown experiment throws", "[cli]") {
  ExperimentConfig cfg;
  cfg.experiment = "nope";
  cfg.seed = 1;
  REQUIRE_THROWS_AS(run_experiment(cfg), std::invalid_argument);
}

TEST_CASE("load/store round trips for every object kind", "[cli]") {
  Rng rng(17);
  SECTION("function") {
    std::string path = temp_path("swapkit_cli_f.json");
    FunctionTable f = random_table({2, 3}, rng);
    store_function(path, f);
    FunctionTable g = load_function(path);
    REQUIRE(g.alphabets == f.alphabets);
    for (std::size_t i = 0; i < f.size(); ++i) REQUIRE(g.values[i] == f.values[i]);
    std::remove(path.c_str());
  }
  SECTION("tridist") {
    std::string path = temp_path("swapkit_cli_t.json");
    TriDist d = detail::random_connected_tridist(rng, 3, 3, 3);
    store_tridist(path, d);
    TriDist e = load_tridist(path);
    REQUIRE(e.probs == d.probs);
    std::remove(path.c_str());
  }
  SECTION("denseset") {
    std::string path = temp_path("swapkit_cli_d.json");
    DenseSet s = DenseSet::random(3, 3, 0.4, rng);
    store_denseset(path, s);
    DenseSet r = load_denseset(path);
    REQUIRE(r.bits == s.bits);
    REQUIRE(r.density() == s.density());
    std::remove(path.c_str());
  }
  SECTION("dpinstance") {
    std::string path = temp_path("swapkit_cli_p.json");
    DPInstance inst = DPInstance::planted(12, 2, 0.4, 0.5, 1.0, 0.1, 99);
    store_dpinstance(path, inst);
    DPInstance back = load_dpinstance(path);
    REQUIRE(back.n == inst.n);
    REQUIRE(back.gen.kind == inst.gen.kind);
    REQUIRE(back.gen.seed == inst.gen.seed);
    REQUIRE(back.value_at(0b101, 0) == inst.value_at(0b101, 0));
    std::remove(path.c_str());
  }
}

TEST_CASE("malformed files carry path and field diagnostics", "[cli]") {
  SECTION("a file missing a field names it") {
    std::string path = temp_path("swapkit_cli_missing.json");
    write_text(path, "{\"alphabets\": [2, 2]}");
    try {
      load_function(path);
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      std::string msg = e.what();
      REQUIRE(msg.find(path) != std::string::npos);
      REQUIRE(msg.find("values") != std::string::npos);
    }
    std::remove(path.c_str());
  }
  SECTION("a syntactically truncated file reports a parse error with the path") {
    std::string path = temp_path("swapkit_cli_trunc.json");
    write_text(path, "{\"alphabets\": [2,");
    REQUIRE_THROWS_WITH(load_function(path), Catch::Matchers::ContainsSubstring(path));
    std::remove(path.c_str());
  }
  SECTION("a missing file reports the path") {
    REQUIRE_THROWS_WITH(load_function(temp_path("swapkit_does_not_exist.json")),
                        Catch::Matchers::ContainsSubstring("cannot open"));
  }
}

TEST_CASE("dense set to indicator conversion preserves density", "[cli]") {
  Rng rng(23);
  DenseSet s = DenseSet::random(3, 3, 0.6, rng);
  FunctionTable ind = s.indicator();
  std::size_t count = 0;
  for (const cplx& v : ind.values)
    if (v.real() > 0.5) ++count;
  REQUIRE(count == s.count());
  REQUIRE((double)count / (double)ind.size() == s.density());
}

TEST_CASE("object generation is strict and produces valid objects", "[cli]") {
  SECTION("unknown generator params are rejected") {
    REQUIRE_THROWS_AS(generate_object("function", 1, {{"bogus", json(1)}}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(generate_object("nope", 1, {}), std::invalid_argument);
  }
  SECTION("each kind generates a loadable object that sniffs back to its kind") {
    for (std::string kind : {"function", "tridist", "denseset", "dpinstance"}) {
      json obj = generate_object(kind, 5, {});
      REQUIRE(sniff_object_kind(obj) == kind);
    }
    TriDist d = TriDist::from_json(generate_object("tridist", 5, {}));
    REQUIRE(pairwise_connected(d).connected);
    DPInstance inst = dp_instance_from_json(generate_object("dpinstance", 5, {}));
    REQUIRE_NOTHROW(inst.validate());
  }
}

TEST_CASE("check routing pairs kinds with experiments", "[cli]") {
  REQUIRE(default_experiment_for_kind("function") == "norm-identities");
  REQUIRE(default_experiment_for_kind("tridist") == "path-trick");
  REQUIRE(default_experiment_for_kind("denseset") == "threeap-step");
  REQUIRE(default_experiment_for_kind("dpinstance") == "dp");
  REQUIRE(experiment_accepts_kind("diamond", "function"));
  REQUIRE_FALSE(experiment_accepts_kind("diamond", "tridist"));
  REQUIRE_FALSE(experiment_accepts_kind("dp", "function"));
}

TEST_CASE("file-backed experiments accept their objects", "[cli]") {
  Rng rng(29);
  SECTION("a stored dense set runs through the density step") {
    std::string path = temp_path("swapkit_cli_step.json");
    store_denseset(path, DenseSet::random(3, 3, 0.9, rng));
    ExperimentConfig cfg;
    cfg.experiment = "threeap-step";
    cfg.seed = 3;
    cfg.params["input_file"] = path;
    cfg.params["input_kind"] = "denseset";
    cfg.validate();
    ExperimentReport rep = run_experiment(cfg);
    REQUIRE(rep.overall_pass());
    std::remove(path.c_str());
  }
  SECTION("a stored integer-valued function runs through the diamond tester") {
    std::string path = temp_path("swapkit_cli_diamond.json");
    FunctionTable f = FunctionTable::zeros({3, 2, 2});
    for (auto& v : f.values) v = cplx{(double)rng.next_int(3), 0.0};
    store_function(path, f);
    ExperimentConfig cfg;
    cfg.experiment = "diamond";
    cfg.seed = 3;
    cfg.params["input_file"] = path;
    cfg.params["input_kind"] = "function";
    cfg.params["modulus"] = 3;
    cfg.validate();
    ExperimentReport rep = run_experiment(cfg);
    REQUIRE(rep.overall_pass());
    std::remove(path.c_str());
  }
}
