#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mseg/embedding.hpp"
#include "mseg/eval_metrics.hpp"
#include "mseg/feature_space.hpp"
#include "mseg/flow_ingest.hpp"
#include "mseg/grouping.hpp"
#include "mseg/rule_synth.hpp"
#include "mseg/synth_gen.hpp"

namespace mseg {

/// Every tunable of the pipeline. Parsed from `key = value` text; every key
/// has a default, so a minimal config names only input and output paths.
struct PipelineConfig {
  std::string log_path;
  std::string scope_path;
  std::string out_dir = "mseg_out";
  std::string ground_truth_path;
  std::string grid_path;
  std::string synth_dir = "synth";
  std::string dataset = "synthetic";

  std::int64_t window_seconds = kDefaultWindowSeconds;
  std::size_t top_k_ports = kDefaultTopKPorts;
  PcaTarget pca_target = VarianceFraction{0.95};
  std::optional<std::size_t> k;         // absolute cluster count
  std::optional<double> k_fraction;     // fraction of endpoint count
  std::uint64_t seed = 1;
  double tol = 1e-6;
  int max_iter = 300;
  int restarts = 4;
  bool refine = true;
  std::size_t swap_limit = 4096;
  UnknownPolicy unknown_policy = UnknownPolicy::drop_unknown;
  std::size_t workers = 1;
  bool strict = false;
  bool export_features = false;
  double homogeneity_floor = 0.95;

  StandardScenarioOptions synth;
};

/// Applies one `key = value` setting. Throws UsageError for unknown keys or
/// out-of-range values.
void apply_setting(PipelineConfig& config, std::string_view key, std::string_view value);
PipelineConfig parse_config(std::istream& in);
PipelineConfig load_config(const std::string& path);
/// Canonical text form; parse_config(config_to_text(c)) reproduces c. The
/// worker count can be left out since it never changes results.
std::string config_to_text(const PipelineConfig& config, bool include_workers = true);

/// Fingerprint over the flow log bytes, the scope bytes and every setting
/// that influences grouping.
std::string run_fingerprint(const std::string& log_bytes, const std::string& scope_bytes, const PipelineConfig& config);

/// Everything produced by the grouping half, kept in memory.
struct GroupingRun {
  ParseResult parse;
  IngestReport ingest;
  std::vector<ClassifiedFlow> kept;
  FeatureSchema schema;
  SampleMatrix samples;  // standardized
  PcaModel pca;
  Eigen::MatrixXd projected;
  std::size_t requested_k = 0;
  ClusterModel model;
  std::vector<GroupAssignment> assignments;
  SecurityGroups groups;
  std::string fingerprint;
  double runtime_seconds = 0.0;
};

/// filter -> windowize/encode -> standardize -> PCA -> k-means -> assign.
/// The effective k is min(requested k, endpoints, distinct samples).
GroupingRun group_flows(std::span<const FlowRecord> records, const MemberScope& scope, const PipelineConfig& config);

/// Reads the configured inputs, runs group_flows and writes every artifact
/// into config.out_dir.
GroupingRun run_group(const PipelineConfig& config);

struct RulesRun {
  RuleSet ruleset;
  HygieneReport hygiene;
  std::size_t flows_checked = 0;
  std::size_t flows_allowed = 0;
};

/// Synthesizes rules for the grouping artifacts in config.out_dir. Throws
/// DataError when the artifacts were produced from different inputs.
RulesRun run_rules(const PipelineConfig& config);

/// Scores the persisted grouping against config.ground_truth_path.
EvalReport run_eval(const PipelineConfig& config);

struct TuneRun {
  TuneOutcome outcome;
  std::vector<PipelineConfig> candidates;
  PipelineConfig best;
};

/// Each grid line holds whitespace-separated `key=value` overrides of the
/// base config.
std::vector<PipelineConfig> parse_grid(std::istream& in, const PipelineConfig& base);
TuneRun run_tune(const PipelineConfig& config);

/// Writes the synthetic scenario described by config.synth into config.synth_dir.
GeneratedScenario run_synth(const PipelineConfig& config);

struct RetrainResult {
  GroupingRun run;
  std::vector<Ipv4> added_endpoints;
  std::vector<Ipv4> changed_endpoints;  // co-membership changed among prior endpoints
};

/// Full refit on the union of existing and new records.
RetrainResult retrain_with_new_endpoints(const SecurityGroups& previous, std::span<const FlowRecord> existing,
                                         std::span<const FlowRecord> added, const MemberScope& scope,
                                         const PipelineConfig& config);

SecurityGroups load_assignments(const std::string& path);

}  // namespace mseg
