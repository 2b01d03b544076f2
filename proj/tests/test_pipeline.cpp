#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mseg/error.hpp"
#include "mseg/pipeline.hpp"

using namespace mseg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("mseg_pipeline_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Synthesizes a standard scenario into `dir` and returns a config pointing at it.
PipelineConfig scenario_config(const TempDir& dir, StandardScenarioOptions opt) {
  PipelineConfig c;
  c.synth = opt;
  c.seed = opt.seed;
  c.synth_dir = dir / "synth";
  run_synth(c);
  c.log_path = dir / "synth/flows.csv";
  c.scope_path = dir / "synth/scope.txt";
  c.ground_truth_path = dir / "synth/ground_truth.csv";
  c.out_dir = dir / "out";
  return c;
}

std::map<std::string, std::string> artifacts(const std::string& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename() != "timing.json") out[e.path().filename().string()] = slurp(e.path());
  }
  return out;
}

/// Every member sends only to network objects, so an endpoint's samples depend
/// on its own traffic alone.
ScenarioSpec object_only_spec() {
  ScenarioSpec spec;
  spec.group_count = 3;
  spec.endpoints_per_group = {3};
  spec.windows = 4;
  spec.flows_per_endpoint_window = 8;
  spec.objects = {{*Cidr::parse("192.0.2.0/24"), "partner"}, {*Cidr::parse("198.51.100.0/24"), "saas"}};
  spec.profiles = {
      BehaviorProfile{{ServiceTemplate{TemplatePeer::to_object("partner"), "TCP", 443}}},
      BehaviorProfile{{ServiceTemplate{TemplatePeer::to_object("saas"), "TCP", 8443}}},
      BehaviorProfile{{ServiceTemplate{TemplatePeer::to_object("saas"), "UDP", 53, 1.0, 2, 300}}},
  };
  return spec;
}

}  // namespace

TEST_CASE("config parsing") {
  std::istringstream in(
      "# comment\n"
      "log = flows.csv\n"
      "scope = scope.txt\n"
      "k = 12\n"
      "pca_dim = 5\n"
      "unknown_policy = map_to_objects\n"
      "seed = 9   # trailing\n");
  auto c = parse_config(in);
  CHECK(c.log_path == "flows.csv");
  CHECK(c.k == std::optional<std::size_t>{12});
  CHECK(std::get<FixedDim>(c.pca_target).value == 5);
  CHECK(c.unknown_policy == UnknownPolicy::map_to_objects);
  CHECK(c.seed == 9);
  CHECK(c.window_seconds == kDefaultWindowSeconds);

  std::istringstream round(config_to_text(c));
  CHECK(config_to_text(parse_config(round)) == config_to_text(c));

  PipelineConfig d;
  CHECK_THROWS_AS(apply_setting(d, "bogus", "1"), UsageError);
  CHECK_THROWS_AS(apply_setting(d, "pca_variance", "1.5"), UsageError);
  CHECK_THROWS_AS(apply_setting(d, "window_seconds", "0"), UsageError);
  CHECK_THROWS_AS(apply_setting(d, "unknown_policy", "keep"), UsageError);
  CHECK_THROWS_AS(apply_setting(d, "k", "-2"), UsageError);
  apply_setting(d, "k_fraction", "0.5");
  CHECK(d.k_fraction == std::optional<double>{0.5});
  CHECK_FALSE(d.k);
  apply_setting(d, "k", "endpoints");
  CHECK_FALSE(d.k);
  CHECK_FALSE(d.k_fraction);
  CHECK_THROWS_AS(load_config("/nonexistent/mseg.conf"), UsageError);
}

TEST_CASE("run_group on a 2x2 scenario") {
  TempDir dir("group");
  StandardScenarioOptions o;
  o.groups = 2;
  o.endpoints_per_group = 2;
  o.windows = 2;
  o.flows_per_endpoint_window = 10;
  o.noise_rate = 0;
  o.disjoint = true;
  auto c = scenario_config(dir, o);
  auto run = run_group(c);
  CHECK(run.groups.endpoint_count() == 4);
  std::istringstream rows(slurp(c.out_dir + "/assignments.csv"));
  std::string line;
  std::size_t count = 0;
  std::getline(rows, line);
  CHECK(line == "endpoint,group_id");
  while (std::getline(rows, line)) count += !line.empty();
  CHECK(count == 4);
  for (const char* f : {"manifest.json", "ingest_report.json", "features.json", "pca_model.json", "cluster_model.json",
                        "mean_distances.csv", "security_groups.json", "timing.json"})
    CHECK(fs::exists(c.out_dir + "/" + f));

  auto first = artifacts(c.out_dir);
  c.workers = 3;
  run_group(c);
  CHECK(artifacts(c.out_dir) == first);

  auto rules = run_rules(c);
  CHECK(rules.flows_checked == rules.flows_allowed);
  auto ruleset_bytes = slurp(c.out_dir + "/ruleset.csv");
  run_rules(c);
  CHECK(slurp(c.out_dir + "/ruleset.csv") == ruleset_bytes);

  auto report = run_eval(c);
  CHECK(report.homogeneity == doctest::Approx(1.0));
  CHECK(report.completeness == doctest::Approx(1.0));
  CHECK(report.v_measure == doctest::Approx(1.0));
  auto eval_text = slurp(c.out_dir + "/eval_report.csv");
  CHECK(eval_text.rfind(std::string(kEvalReportHeader) + "\n", 0) == 0);
}

TEST_CASE("two groups with one service each way give two rules") {
  TempDir dir("two_rules");
  ScenarioSpec spec;
  spec.group_count = 2;
  spec.endpoints_per_group = {2};
  spec.windows = 2;
  spec.flows_per_endpoint_window = 6;
  spec.profiles = {BehaviorProfile{{ServiceTemplate{TemplatePeer::to_group(1), "TCP", 443}}},
                   BehaviorProfile{{ServiceTemplate{TemplatePeer::to_group(0), "UDP", 53}}}};
  write_scenario(generate(spec), dir / "synth");
  PipelineConfig c;
  c.log_path = dir / "synth/flows.csv";
  c.scope_path = dir / "synth/scope.txt";
  c.out_dir = dir / "out";
  auto run = run_group(c);
  CHECK(run.groups.suggested_qty() == 2);
  auto rules = run_rules(c);
  CHECK(rules.ruleset.rules.size() == 2);
  CHECK(rules.hygiene.flag_count() == 0);
}

TEST_CASE("pipeline errors") {
  TempDir dir("errors");
  StandardScenarioOptions o;
  o.groups = 3;
  o.windows = 2;
  auto c = scenario_config(dir, o);

  auto missing = c;
  missing.log_path = dir / "nope.csv";
  try {
    run_group(missing);
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("nope.csv") != std::string::npos);
  }

  run_group(c);
  // Same artifacts, different log: the rules stage must refuse.
  auto log = slurp(c.log_path);
  spit(dir / "other.csv", log.substr(0, log.size() / 2 + log.substr(log.size() / 2).find('\n') + 1));
  auto stale = c;
  stale.log_path = dir / "other.csv";
  CHECK_THROWS_AS(run_rules(stale), DataError);

  auto truth = slurp(c.ground_truth_path);
  std::string trimmed = truth.substr(0, truth.rfind('\n', truth.size() - 2) + 1);
  spit(dir / "partial_truth.csv", trimmed);
  auto partial = c;
  partial.ground_truth_path = dir / "partial_truth.csv";
  try {
    run_eval(partial);
    FAIL("expected an error");
  } catch (const DataError& e) {
    auto missing_ep = truth.substr(trimmed.size(), truth.find(',', trimmed.size()) - trimmed.size());
    CHECK(std::string(e.what()).find(missing_ep) != std::string::npos);
  }

  auto no_out = c;
  no_out.out_dir = dir / "never_written";
  CHECK_THROWS_AS(run_rules(no_out), DataError);
}

TEST_CASE("tuning") {
  TempDir dir("tune");
  StandardScenarioOptions o;
  o.groups = 4;
  o.windows = 3;
  auto c = scenario_config(dir, o);

  spit(dir / "empty_grid.txt", "# nothing\n\n");
  c.grid_path = dir / "empty_grid.txt";
  CHECK_THROWS_AS(run_tune(c), UsageError);

  spit(dir / "one.txt", "k=6\n");
  c.grid_path = dir / "one.txt";
  auto single = run_tune(c);
  CHECK(single.outcome.best_index == 0);
  CHECK(single.best.k == std::optional<std::size_t>{6});
  CHECK(slurp(c.out_dir + "/best_config.txt") == config_to_text(single.best, false));
  CHECK(slurp(c.out_dir + "/best_config.txt").find("workers") == std::string::npos);

  spit(dir / "three.txt", "k=2\nk=4 seed=3\nk_fraction=1.0 pca_variance=0.9\n");
  c.grid_path = dir / "three.txt";
  auto a = run_tune(c);
  auto best_a = slurp(c.out_dir + "/best_config.txt");
  auto report_a = slurp(c.out_dir + "/tune_report.csv");
  auto b = run_tune(c);
  CHECK(a.outcome.best_index == b.outcome.best_index);
  CHECK(slurp(c.out_dir + "/best_config.txt") == best_a);
  CHECK(slurp(c.out_dir + "/tune_report.csv") == report_a);
  CHECK(a.outcome.reports.size() == 3);
  CHECK(a.outcome.reports[0].suggested_group_qty <= 2);

  std::istringstream bad("k=2 nonsense\n");
  CHECK_THROWS_AS(parse_grid(bad, c), UsageError);
}

TEST_CASE("retraining with new endpoints") {
  auto scenario = generate(object_only_spec());
  PipelineConfig c;
  c.unknown_policy = UnknownPolicy::map_to_objects;
  auto base = group_flows(scenario.flows, scenario.scope, c);
  CHECK(base.groups.suggested_qty() == 3);

  SUBCASE("no new endpoints keeps everything") {
    auto r = retrain_with_new_endpoints(base.groups, scenario.flows, {}, scenario.scope, c);
    CHECK(r.run.groups == base.groups);
    CHECK(r.changed_endpoints.empty());
    CHECK(r.added_endpoints.empty());
  }

  SUBCASE("a copy of an existing endpoint joins its group") {
    const Ipv4 twin = *Ipv4::parse("10.0.1.200");
    const Ipv4 source = *Ipv4::parse("10.0.0.5");
    std::vector<FlowRecord> added;
    for (const auto& f : scenario.flows) {
      if (f.src == source) {
        auto copy = f;
        copy.src = twin;
        added.push_back(copy);
      }
    }
    auto r = retrain_with_new_endpoints(base.groups, scenario.flows, added, scenario.scope, c);
    CHECK(r.added_endpoints == std::vector<Ipv4>{twin});
    CHECK(r.run.groups.group_of(twin) == r.run.groups.group_of(source));
    CHECK(r.run.groups.suggested_qty() == 3);
  }

  SUBCASE("an isolated profile opens one more group") {
    const Ipv4 outlier = *Ipv4::parse("10.0.2.1");
    std::vector<FlowRecord> added;
    for (int w = 0; w < 4; ++w)
      for (int i = 0; i < 8; ++i)
        added.push_back({1700000000 + w * 3600 + i * 400, outlier, *Ipv4::parse("192.0.2.77"), "TCP", 9999, 40, 90000});
    auto r = retrain_with_new_endpoints(base.groups, scenario.flows, added, scenario.scope, c);
    CHECK(r.run.groups.suggested_qty() == base.groups.suggested_qty() + 1);
    CHECK(r.changed_endpoints.empty());
    CHECK(r.run.groups.groups().at(*r.run.groups.group_of(outlier)).size() == 1);
  }
}

TEST_CASE("fingerprint tracks inputs and grouping settings only") {
  PipelineConfig c;
  auto base = run_fingerprint("log", "scope", c);
  CHECK(run_fingerprint("log", "scope", c) == base);
  CHECK(run_fingerprint("log2", "scope", c) != base);
  CHECK(run_fingerprint("log", "scope2", c) != base);
  auto seeded = c;
  seeded.seed = 2;
  CHECK(run_fingerprint("log", "scope", seeded) != base);
  auto workers = c;
  workers.workers = 8;
  workers.out_dir = "elsewhere";
  CHECK(run_fingerprint("log", "scope", workers) == base);
}
