#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mseg/error.hpp"
#include "mseg/synth_gen.hpp"

using namespace mseg;

namespace {

ScenarioSpec two_by_two() {
  ScenarioSpec spec;
  spec.group_count = 2;
  spec.endpoints_per_group = {2};
  spec.windows = 1;
  spec.flows_per_endpoint_window = 10;
  spec.profiles = {BehaviorProfile{{ServiceTemplate{TemplatePeer::to_group(1), "TCP", 443}}},
                   BehaviorProfile{{ServiceTemplate{TemplatePeer::to_group(0), "UDP", 53}}}};
  return spec;
}

std::string log_text(const GeneratedScenario& s) {
  std::ostringstream out;
  write_flow_log(out, s.flows);
  return out.str();
}

}  // namespace

TEST_CASE("generate counts and membership") {
  auto s = generate(two_by_two());
  CHECK(s.flows.size() == 40);
  CHECK(s.truth.size() == 4);
  for (const auto& f : s.flows) CHECK(s.scope.is_member(f.src));
  CHECK(log_text(s) == log_text(generate(two_by_two())));

  auto other = two_by_two();
  other.seed = 2;
  other.noise_rate = 0.5;
  CHECK(log_text(generate(other)) != log_text(s));

  auto uneven = two_by_two();
  uneven.endpoints_per_group = {2, 5};
  uneven.windows = 3;
  auto u = generate(uneven);
  CHECK(u.flows.size() == 7 * 3 * 10);
  CHECK(u.truth.size() == 7);
}

TEST_CASE("generate validation") {
  auto bad = two_by_two();
  bad.profiles[0].templates[0].peer = TemplatePeer::to_group(5);
  CHECK_THROWS_AS(generate(bad), DataError);

  bad = two_by_two();
  bad.noise_rate = 1.0;
  CHECK_THROWS_AS(generate(bad), DataError);

  bad = two_by_two();
  bad.profiles[1].templates[0].weight = 0;
  CHECK_THROWS_AS(generate(bad), DataError);

  bad = two_by_two();
  bad.profiles[0].templates[0].peer = TemplatePeer::to_object("nowhere");
  CHECK_THROWS_AS(generate(bad), DataError);
}

TEST_CASE("noise fraction stays within three binomial sigmas") {
  for (double rate : {0.05, 0.2, 0.5}) {
    StandardScenarioOptions o;
    o.groups = 6;
    o.windows = 10;
    o.noise_rate = rate;
    o.seed = 99;
    auto s = generate(standard_scenario(o));
    const double n = static_cast<double>(s.flows.size());
    const double sigma = std::sqrt(n * rate * (1 - rate));
    CHECK(std::abs(static_cast<double>(s.noise_flows) - n * rate) <= 3 * sigma);
    CHECK(s.unknown_flows == 0);
  }
}

TEST_CASE("standard scenario profiles overlap little") {
  StandardScenarioOptions o;
  o.groups = 40;  // group-to-group templates only; object templates are shared on purpose
  auto spec = standard_scenario(o);
  for (std::size_t a = 0; a < spec.profiles.size(); ++a)
    for (std::size_t b = a + 1; b < spec.profiles.size(); ++b)
      CHECK(template_overlap(spec.profiles[a], spec.profiles[b]) <= 0.2 + 1e-12);
  CHECK(template_overlap(spec.profiles[0], spec.profiles[0]) == 1.0);

  o.disjoint = true;
  auto disjoint = standard_scenario(o);
  for (std::size_t a = 0; a < disjoint.profiles.size(); ++a)
    for (std::size_t b = a + 1; b < disjoint.profiles.size(); ++b)
      CHECK(template_overlap(disjoint.profiles[a], disjoint.profiles[b]) == 0.0);
}

TEST_CASE("unknown traffic lands outside every listed block") {
  StandardScenarioOptions o;
  o.groups = 4;
  o.windows = 4;
  o.unknown_rate = 0.3;
  auto s = generate(standard_scenario(o));
  CHECK(s.unknown_flows > 0);
  std::size_t unknown = 0;
  for (const auto& f : s.flows) unknown += s.scope.classify(f.dst).is_unknown();
  CHECK(unknown == s.unknown_flows);
}

TEST_CASE("write_scenario emits the ingest formats") {
  auto dir = std::filesystem::temp_directory_path() / "mseg_synth_test";
  std::filesystem::remove_all(dir);
  auto s = generate(two_by_two());
  write_scenario(s, dir.string());
  auto parsed = parse_flow_log_file((dir / "flows.csv").string());
  CHECK(parsed.records == s.flows);
  CHECK(parsed.malformed == 0);
  auto scope = parse_scope_file((dir / "scope.txt").string());
  CHECK(scope.members() == s.scope.members());
  CHECK(load_ground_truth((dir / "ground_truth.csv").string()) == s.truth);
  std::filesystem::remove_all(dir);
}
