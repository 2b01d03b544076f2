#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mseg/flow_ingest.hpp"
#include "mseg/security_groups.hpp"

namespace mseg {

/// Who a template sends to: every endpoint of a planted group (round-robin,
/// never the sender itself) or a named external object.
struct TemplatePeer {
  enum class Kind { group, object };

  Kind kind = Kind::group;
  std::size_t group = 0;
  std::string object;

  static TemplatePeer to_group(std::size_t g) { return {Kind::group, g, {}}; }
  static TemplatePeer to_object(std::string name) { return {Kind::object, 0, std::move(name)}; }

  friend bool operator==(const TemplatePeer&, const TemplatePeer&) = default;
};

struct ServiceTemplate {
  TemplatePeer peer;
  std::string protocol = "TCP";
  std::uint16_t port = 0;
  double weight = 1.0;
  std::uint64_t packets = 10;
  std::uint64_t bytes = 8000;
};

struct BehaviorProfile {
  std::vector<ServiceTemplate> templates;
};

struct ScenarioSpec {
  std::size_t group_count = 1;
  std::vector<std::size_t> endpoints_per_group;  // one entry, or one per group
  std::size_t windows = 1;
  std::size_t flows_per_endpoint_window = 10;
  std::vector<BehaviorProfile> profiles;  // one per group
  double noise_rate = 0.0;                // fraction of flows replaced by uniform draws
  double unknown_rate = 0.0;              // fraction sent to unlisted external addresses
  std::vector<NetworkObject> objects;     // external object table
  std::int64_t window_seconds = 3600;
  std::int64_t start_time = 1700000000;
  std::uint64_t seed = 1;
};

struct GeneratedScenario {
  std::vector<FlowRecord> flows;
  GroundTruth truth;
  MemberScope scope;
  std::size_t noise_flows = 0;
  std::size_t unknown_flows = 0;
};

inline constexpr const char* kSyntheticMemberBlock = "10.0.0.0/16";

/// Deterministic per seed. Endpoint i gets address 10.0.0.0 + 1 + i. Throws
/// DataError for an invalid spec (including profiles naming a group or object
/// that does not exist).
GeneratedScenario generate(const ScenarioSpec& spec);

struct StandardScenarioOptions {
  std::size_t groups = 10;
  std::size_t endpoints_per_group = 3;
  std::size_t windows = 24;
  std::size_t flows_per_endpoint_window = 20;
  double noise_rate = 0.05;
  double object_rate = 0.0;   // share of template weight aimed at external objects
  double unknown_rate = 0.0;
  /// One single-service template per group, no group shares a template.
  bool disjoint = false;
  std::uint64_t seed = 1;
};

/// Group g serves one service; its profile calls the services of groups
/// g+1, g+7 and g+31 (mod groups) with weights 3:2:1, so two profiles share
/// at most one of their templates. Disjoint mode keeps only the g+1 template.
ScenarioSpec standard_scenario(const StandardScenarioOptions& options);

/// Jaccard overlap of two profiles' template sets, keyed by (peer, protocol, port).
double template_overlap(const BehaviorProfile& a, const BehaviorProfile& b);

/// Writes flows.csv, scope.txt and ground_truth.csv into `dir`.
void write_scenario(const GeneratedScenario& scenario, const std::string& dir);

}  // namespace mseg
