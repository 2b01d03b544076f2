// mseg: learn security groups from flow logs and synthesize group-level
// firewall rules.
//
//   mseg synth --config run.conf
//   mseg group --config run.conf [--seed N] [--workers N] [--strict]
//   mseg rules --config run.conf
//   mseg eval  --config run.conf
//   mseg tune  --config run.conf
//
// Exit status: 0 success, 1 usage error, 2 data error, 3 internal error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mseg/error.hpp"
#include "mseg/pipeline.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  bool strict = false;
  std::vector<std::string> settings;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Pipeline config file (key = value lines)")->required();
  cmd->add_option("--seed", flags.seed, "Override the config seed");
  cmd->add_option("--workers", flags.workers, "Worker threads; results do not depend on it")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--strict", flags.strict, "Fail on the first malformed log line");
  cmd->add_option("--set", flags.settings, "Extra key=value setting, applied after the config file");
}

mseg::PipelineConfig resolve(const CommonFlags& flags) {
  auto config = mseg::load_config(flags.config_path);
  for (const auto& kv : flags.settings) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw mseg::UsageError("pipeline_cli", "--set expects key=value, got '" + kv + "'");
    mseg::apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (flags.seed) config.seed = *flags.seed;
  if (flags.workers) config.workers = *flags.workers;
  if (flags.strict) config.strict = true;
  return config;
}

int run_synth(const mseg::PipelineConfig& config) {
  auto scenario = mseg::run_synth(config);
  std::printf("wrote %zu flows for %zu endpoints to %s (noise flows %zu, unknown flows %zu)\n",
              scenario.flows.size(), scenario.truth.size(), config.synth_dir.c_str(), scenario.noise_flows,
              scenario.unknown_flows);
  return 0;
}

int run_group(const mseg::PipelineConfig& config) {
  auto run = mseg::run_group(config);
  std::printf("records read %zu, kept %zu, dropped unknown %zu, mapped to objects %zu\n",
              run.ingest.records_read, run.ingest.records_kept, run.ingest.records_dropped_unknown,
              run.ingest.records_mapped_to_objects);
  std::printf("samples %zu, features %zu, retained components %zu, k %zu (requested %zu)\n", run.samples.rows(),
              run.schema.dimension(), run.pca.retained_dim(), run.model.k, run.requested_k);
  std::printf("dataset,asset_qty,suggested_group_qty,runtime_s\n%s,%zu,%zu,%.3f\n", config.dataset.c_str(),
              run.groups.endpoint_count(), run.groups.suggested_qty(), run.runtime_seconds);
  return 0;
}

int run_rules(const mseg::PipelineConfig& config) {
  auto out = mseg::run_rules(config);
  std::printf("rules %zu, hygiene flags %zu, flows allowed %zu of %zu\n", out.ruleset.rules.size(),
              out.hygiene.flag_count(), out.flows_allowed, out.flows_checked);
  return 0;
}

int run_eval(const mseg::PipelineConfig& config) {
  auto report = mseg::run_eval(config);
  std::printf("%s\n%s\n%s\n", mseg::kEvalReportHeader, mseg::eval_report_row(report).c_str(),
              mseg::eval_report_summary(report).c_str());
  return 0;
}

int run_tune(const mseg::PipelineConfig& config) {
  auto out = mseg::run_tune(config);
  const auto& best = out.outcome.reports[out.outcome.best_index];
  std::printf("best candidate %zu of %zu%s: homogeneity %.6f, V-measure %.6f\n", out.outcome.best_index,
              out.candidates.size(), out.outcome.below_floor ? " (below homogeneity floor)" : "",
              best.homogeneity, best.v_measure);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Security group discovery and group-level firewall rule synthesis"};
  app.require_subcommand(1);

  CommonFlags flags;
  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const mseg::PipelineConfig&);
  };
  const Command commands[] = {
      {"synth", "Generate a synthetic flow log with planted groups", run_synth},
      {"group", "Learn security groups from a flow log", run_group},
      {"rules", "Synthesize group-level firewall rules", run_rules},
      {"eval", "Score the grouping against ground truth", run_eval},
      {"tune", "Select hyper-parameters against a homogeneity floor", run_tune},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, flags);
    subs.emplace_back(sub, &c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(mseg::ErrorKind::usage);
  }

  try {
    auto config = resolve(flags);
    for (const auto& [sub, cmd] : subs) {
      if (sub->parsed()) return cmd->fn(config);
    }
  } catch (const mseg::Error& e) {
    std::fprintf(stderr, "mseg: %s\n", e.what());
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "mseg: internal error: %s\n", e.what());
    return static_cast<int>(mseg::ErrorKind::internal);
  }
  return static_cast<int>(mseg::ErrorKind::internal);
}
