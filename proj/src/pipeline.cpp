#include "mseg/pipeline.hpp"

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mseg/error.hpp"
#include "mseg/util.hpp"

namespace mseg {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr const char* kModule = "pipeline_cli";

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(kModule, std::string("cannot open ") + what + " '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(kModule, "cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw DataError(kModule, "failed writing '" + path.string() + "'");
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  text = trim(text);
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || p != text.data() + text.size() || text.empty()) {
    throw UsageError(kModule, "setting '" + std::string(key) + "' expects a number, got '" + std::string(text) + "'");
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw UsageError(kModule, "setting '" + std::string(key) + "' expects true/false, got '" + std::string(text) + "'");
}

void require(bool ok, std::string_view key, const char* rule) {
  if (!ok) throw UsageError(kModule, "setting '" + std::string(key) + "' " + rule);
}

std::string grouping_settings(const PipelineConfig& c) {
  std::ostringstream out;
  out << "window_seconds=" << c.window_seconds << ";top_k_ports=" << c.top_k_ports;
  if (const auto* v = std::get_if<VarianceFraction>(&c.pca_target)) {
    out << ";pca_variance=" << format_double(v->value);
  } else {
    out << ";pca_dim=" << std::get<FixedDim>(c.pca_target).value;
  }
  out << ";k=" << (c.k ? std::to_string(*c.k) : "-") << ";k_fraction=" << (c.k_fraction ? format_double(*c.k_fraction) : "-")
      << ";seed=" << c.seed << ";tol=" << format_double(c.tol) << ";max_iter=" << c.max_iter
      << ";restarts=" << c.restarts << ";refine=" << c.refine << ";swap_limit=" << c.swap_limit
      << ";unknown_policy=" << to_string(c.unknown_policy) << ";strict=" << c.strict;
  return out.str();
}

nlohmann::json ingest_json(const GroupingRun& run) {
  return {{"lines_read", run.parse.lines_read},
          {"malformed_lines", run.parse.malformed},
          {"records_read", run.ingest.records_read},
          {"records_kept", run.ingest.records_kept},
          {"records_dropped_unknown", run.ingest.records_dropped_unknown},
          {"records_mapped_to_objects", run.ingest.records_mapped_to_objects},
          {"distinct_endpoints", run.ingest.distinct_endpoints}};
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void persist_grouping(const GroupingRun& run, const PipelineConfig& config) {
  const fs::path dir(config.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(kModule, "cannot create output directory '" + config.out_dir + "': " + ec.message());

  nlohmann::json manifest = {{"format", "mseg-run-v1"},
                             {"fingerprint", run.fingerprint},
                             {"settings", grouping_settings(config)},
                             {"requested_k", run.requested_k},
                             {"effective_k", run.model.k},
                             {"endpoints", run.groups.endpoint_count()},
                             {"samples", run.samples.rows()},
                             {"feature_dimension", run.schema.dimension()},
                             {"retained_dim", run.pca.retained_dim()},
                             {"suggested_group_qty", run.groups.suggested_qty()}};
  write_file(dir / "manifest.json", manifest.dump(1) + "\n");
  write_file(dir / "ingest_report.json", ingest_json(run).dump(1) + "\n");

  nlohmann::json features = {{"format", "mseg-features-v1"},
                             {"schema_fingerprint", run.schema.fingerprint()},
                             {"protocol_vocab", run.schema.protocol_vocab},
                             {"port_vocab", run.schema.port_vocab},
                             {"peer_vocab", run.schema.peer_vocab},
                             {"dimension", run.schema.dimension()},
                             {"standardization_mean", to_vector(run.samples.standardization->mean)},
                             {"standardization_scale", to_vector(run.samples.standardization->scale)}};
  write_file(dir / "features.json", features.dump(1) + "\n");
  save_pca(run.pca, (dir / "pca_model.json").string());

  nlohmann::json cluster_config = {{"requested_k", run.requested_k}, {"tol", config.tol},
                                   {"max_iter", config.max_iter}, {"restarts", config.restarts},
                                   {"run_fingerprint", run.fingerprint}};
  write_file(dir / "cluster_model.json", cluster_model_to_json(run.model, cluster_config.dump()));

  std::ostringstream assignments, distances;
  assignments << "endpoint,group_id\n";
  distances << "endpoint";
  for (std::size_t j = 0; j < run.model.k; ++j) distances << ",d" << j;
  distances << '\n';
  for (const auto& a : run.assignments) {
    assignments << a.endpoint.str() << ',' << a.group_id << '\n';
    distances << a.endpoint.str();
    for (double d : a.mean_distances) distances << ',' << format_double(d);
    distances << '\n';
  }
  write_file(dir / "assignments.csv", assignments.str());
  write_file(dir / "mean_distances.csv", distances.str());

  nlohmann::json groups = {{"suggested_qty", run.groups.suggested_qty()}, {"groups", nlohmann::json::object()}};
  for (const auto& [id, members] : run.groups.groups()) {
    auto& list = groups["groups"][std::to_string(id)] = nlohmann::json::array();
    for (auto m : members) list.push_back(m.str());
  }
  write_file(dir / "security_groups.json", groups.dump(1) + "\n");

  if (config.export_features) {
    std::ostringstream csv;
    write_feature_csv(csv, run.samples);
    write_file(dir / "features.csv", csv.str());
  }

  // Wall-clock timing is the one output that is not reproducible.
  nlohmann::json timing = {{"grouping_runtime_s", run.runtime_seconds}};
  write_file(dir / "timing.json", timing.dump(1) + "\n");
}

nlohmann::json load_json(const fs::path& path) {
  auto text = read_file(path.string(), "artifact");
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(kModule, "malformed artifact '" + path.string() + "': " + e.what());
  }
}

}  // namespace

void apply_setting(PipelineConfig& c, std::string_view key, std::string_view raw) {
  const auto value = trim(raw);
  const std::string v(value);
  if (key == "log") {
    c.log_path = v;
  } else if (key == "scope") {
    c.scope_path = v;
  } else if (key == "out_dir") {
    c.out_dir = v;
  } else if (key == "ground_truth") {
    c.ground_truth_path = v;
  } else if (key == "grid") {
    c.grid_path = v;
  } else if (key == "synth_dir") {
    c.synth_dir = v;
  } else if (key == "dataset") {
    require(!v.empty() && v.find(',') == std::string::npos, key, "must be non-empty without commas");
    c.dataset = v;
  } else if (key == "window_seconds") {
    c.window_seconds = parse_number<std::int64_t>(key, value);
    require(c.window_seconds >= 1, key, "must be >= 1");
  } else if (key == "top_k_ports") {
    c.top_k_ports = parse_number<std::size_t>(key, value);
  } else if (key == "pca_variance") {
    double f = parse_number<double>(key, value);
    require(f > 0.0 && f <= 1.0, key, "must lie in (0, 1]");
    c.pca_target = VarianceFraction{f};
  } else if (key == "pca_dim") {
    auto d = parse_number<std::size_t>(key, value);
    require(d >= 1, key, "must be >= 1");
    c.pca_target = FixedDim{d};
  } else if (key == "k") {
    if (value == "endpoints" || value.empty()) {
      c.k.reset();
      c.k_fraction.reset();
    } else {
      auto k = parse_number<std::size_t>(key, value);
      require(k >= 1, key, "must be >= 1");
      c.k = k;
      c.k_fraction.reset();
    }
  } else if (key == "k_fraction") {
    double f = parse_number<double>(key, value);
    require(f > 0.0 && f <= 1.0, key, "must lie in (0, 1]");
    c.k_fraction = f;
    c.k.reset();
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "tol") {
    c.tol = parse_number<double>(key, value);
    require(c.tol > 0.0, key, "must be > 0");
  } else if (key == "max_iter") {
    c.max_iter = parse_number<int>(key, value);
    require(c.max_iter >= 1, key, "must be >= 1");
  } else if (key == "restarts") {
    c.restarts = parse_number<int>(key, value);
    require(c.restarts >= 1, key, "must be >= 1");
  } else if (key == "refine") {
    c.refine = parse_bool(key, value);
  } else if (key == "swap_limit") {
    c.swap_limit = parse_number<std::size_t>(key, value);
  } else if (key == "unknown_policy") {
    c.unknown_policy = parse_unknown_policy(value);
  } else if (key == "workers") {
    c.workers = parse_number<std::size_t>(key, value);
    require(c.workers >= 1, key, "must be >= 1");
  } else if (key == "strict") {
    c.strict = parse_bool(key, value);
  } else if (key == "export_features") {
    c.export_features = parse_bool(key, value);
  } else if (key == "homogeneity_floor") {
    c.homogeneity_floor = parse_number<double>(key, value);
    require(c.homogeneity_floor >= 0.0 && c.homogeneity_floor <= 1.0, key, "must lie in [0, 1]");
  } else if (key == "synth_groups") {
    c.synth.groups = parse_number<std::size_t>(key, value);
  } else if (key == "synth_endpoints_per_group") {
    c.synth.endpoints_per_group = parse_number<std::size_t>(key, value);
  } else if (key == "synth_windows") {
    c.synth.windows = parse_number<std::size_t>(key, value);
  } else if (key == "synth_flows") {
    c.synth.flows_per_endpoint_window = parse_number<std::size_t>(key, value);
  } else if (key == "synth_noise") {
    c.synth.noise_rate = parse_number<double>(key, value);
  } else if (key == "synth_object_rate") {
    c.synth.object_rate = parse_number<double>(key, value);
  } else if (key == "synth_unknown_rate") {
    c.synth.unknown_rate = parse_number<double>(key, value);
  } else if (key == "synth_disjoint") {
    c.synth.disjoint = parse_bool(key, value);
  } else {
    throw UsageError(kModule, "unknown setting '" + std::string(key) + "'");
  }
}

PipelineConfig parse_config(std::istream& in) {
  PipelineConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError(kModule, "config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    apply_setting(config, trim(view.substr(0, eq)), view.substr(eq + 1));
  }
  return config;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError(kModule, "cannot open config '" + path + "'");
  return parse_config(in);
}

std::string config_to_text(const PipelineConfig& c, bool include_workers) {
  std::ostringstream out;
  out << "log = " << c.log_path << "\n";
  out << "scope = " << c.scope_path << "\n";
  out << "out_dir = " << c.out_dir << "\n";
  out << "ground_truth = " << c.ground_truth_path << "\n";
  out << "grid = " << c.grid_path << "\n";
  out << "synth_dir = " << c.synth_dir << "\n";
  out << "dataset = " << c.dataset << "\n";
  out << "window_seconds = " << c.window_seconds << "\n";
  out << "top_k_ports = " << c.top_k_ports << "\n";
  if (const auto* v = std::get_if<VarianceFraction>(&c.pca_target)) {
    out << "pca_variance = " << format_double(v->value) << "\n";
  } else {
    out << "pca_dim = " << std::get<FixedDim>(c.pca_target).value << "\n";
  }
  if (c.k) {
    out << "k = " << *c.k << "\n";
  } else if (c.k_fraction) {
    out << "k_fraction = " << format_double(*c.k_fraction) << "\n";
  } else {
    out << "k = endpoints\n";
  }
  out << "seed = " << c.seed << "\n";
  out << "tol = " << format_double(c.tol) << "\n";
  out << "max_iter = " << c.max_iter << "\n";
  out << "restarts = " << c.restarts << "\n";
  out << "refine = " << (c.refine ? "true" : "false") << "\n";
  out << "swap_limit = " << c.swap_limit << "\n";
  out << "unknown_policy = " << to_string(c.unknown_policy) << "\n";
  if (include_workers) out << "workers = " << c.workers << "\n";
  out << "strict = " << (c.strict ? "true" : "false") << "\n";
  out << "export_features = " << (c.export_features ? "true" : "false") << "\n";
  out << "homogeneity_floor = " << format_double(c.homogeneity_floor) << "\n";
  out << "synth_groups = " << c.synth.groups << "\n";
  out << "synth_endpoints_per_group = " << c.synth.endpoints_per_group << "\n";
  out << "synth_windows = " << c.synth.windows << "\n";
  out << "synth_flows = " << c.synth.flows_per_endpoint_window << "\n";
  out << "synth_noise = " << format_double(c.synth.noise_rate) << "\n";
  out << "synth_object_rate = " << format_double(c.synth.object_rate) << "\n";
  out << "synth_unknown_rate = " << format_double(c.synth.unknown_rate) << "\n";
  out << "synth_disjoint = " << (c.synth.disjoint ? "true" : "false") << "\n";
  return out.str();
}

std::string run_fingerprint(const std::string& log_bytes, const std::string& scope_bytes, const PipelineConfig& config) {
  Fnv1a h;
  h.update("log").update_u64(log_bytes.size()).update(log_bytes);
  h.update("scope").update_u64(scope_bytes.size()).update(scope_bytes);
  h.update("settings").update(grouping_settings(config));
  return h.hex();
}

GroupingRun group_flows(std::span<const FlowRecord> records, const MemberScope& scope, const PipelineConfig& config) {
  const auto start = Clock::now();
  GroupingRun run;

  auto filtered = filter_flows(records, scope, config.unknown_policy);
  run.ingest = filtered.report;
  run.kept = std::move(filtered.kept);
  if (run.kept.empty()) throw DataError("flow_ingest", "no flows left after filtering unknown traffic");

  run.schema = build_schema(run.kept, config.top_k_ports);
  auto raw = build_samples(windowize(run.kept, config.window_seconds), run.schema);
  run.samples = standardize(raw);

  run.pca = fit_pca(run.samples.values, config.pca_target);
  run.pca.schema_fingerprint = run.schema.fingerprint();
  run.projected = project_rows(run.pca, run.samples.values);

  std::set<Ipv4> endpoints;
  for (const auto& key : run.samples.keys) endpoints.insert(key.endpoint);
  const std::size_t endpoint_count = endpoints.size();
  if (config.k) {
    run.requested_k = *config.k;
  } else if (config.k_fraction) {
    run.requested_k = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(*config.k_fraction * static_cast<double>(endpoint_count))));
  } else {
    run.requested_k = endpoint_count;
  }

  KMeansOptions options;
  options.k = std::min({run.requested_k, endpoint_count, count_distinct_rows(run.projected)});
  options.seed = config.seed;
  options.tol = config.tol;
  options.max_iter = config.max_iter;
  options.restarts = config.restarts;
  options.refine = config.refine;
  options.swap_limit = config.swap_limit;
  options.workers = config.workers;
  run.model = kmeans_fit(run.projected, options);

  run.assignments = assign_endpoints(run.projected, run.samples.keys, run.model, config.workers);
  run.groups = derive_groups(run.assignments);
  run.runtime_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return run;
}

GroupingRun run_group(const PipelineConfig& config) {
  if (config.log_path.empty()) throw UsageError(kModule, "config does not name a flow log ('log')");
  if (config.scope_path.empty()) throw UsageError(kModule, "config does not name a scope file ('scope')");
  const auto start = Clock::now();

  const auto log_bytes = read_file(config.log_path, "flow log");
  const auto scope_bytes = read_file(config.scope_path, "scope file");
  std::istringstream log_stream(log_bytes), scope_stream(scope_bytes);
  ParseOptions parse_options;
  parse_options.strict = config.strict;
  auto parsed = parse_flow_log(log_stream, parse_options);
  auto scope = parse_scope(scope_stream);

  auto run = group_flows(parsed.records, scope, config);
  run.parse = std::move(parsed);
  run.parse.records.clear();
  run.fingerprint = run_fingerprint(log_bytes, scope_bytes, config);
  run.runtime_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  persist_grouping(run, config);
  return run;
}

SecurityGroups load_assignments(const std::string& path) {
  std::istringstream in(read_file(path, "assignments"));
  SecurityGroups groups;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = trim(line);
    if (view.empty() || (line_no == 1 && view == "endpoint,group_id")) continue;
    auto f = split(view, ',');
    auto addr = f.size() == 2 ? Ipv4::parse(f[0]) : std::nullopt;
    std::size_t id = 0;
    auto [p, ec] = f.size() == 2 ? std::from_chars(f[1].data(), f[1].data() + f[1].size(), id)
                                 : std::from_chars_result{nullptr, std::errc::invalid_argument};
    if (!addr || ec != std::errc{}) {
      throw DataError(kModule, "assignments line " + std::to_string(line_no) + " is malformed");
    }
    groups.add(*addr, id);
  }
  return groups;
}

RulesRun run_rules(const PipelineConfig& config) {
  const fs::path dir(config.out_dir);
  auto manifest = load_json(dir / "manifest.json");
  const auto log_bytes = read_file(config.log_path, "flow log");
  const auto scope_bytes = read_file(config.scope_path, "scope file");
  const auto expected = run_fingerprint(log_bytes, scope_bytes, config);
  if (manifest.value("fingerprint", std::string()) != expected) {
    throw DataError(kModule, "grouping artifacts in '" + config.out_dir +
                                 "' are stale: they were produced from a different log, scope or config");
  }

  std::istringstream log_stream(log_bytes), scope_stream(scope_bytes);
  ParseOptions parse_options;
  parse_options.strict = config.strict;
  auto parsed = parse_flow_log(log_stream, parse_options);
  auto scope = parse_scope(scope_stream);
  auto filtered = filter_flows(parsed.records, scope, config.unknown_policy);
  if (filtered.kept.empty()) throw DataError("flow_ingest", "no flows left after filtering unknown traffic");

  auto pca = load_pca((dir / "pca_model.json").string());
  if (build_schema(filtered.kept, config.top_k_ports).fingerprint() != pca.schema_fingerprint) {
    throw DataError(kModule, "feature schema fingerprint does not match the stored model");
  }
  auto groups = load_assignments((dir / "assignments.csv").string());

  RulesRun out;
  out.ruleset = generalize(extract_service_flows(filtered.kept, groups, scope));
  out.hygiene = check_ruleset(out.ruleset, groups, scope);
  for (const auto& f : filtered.kept) {
    ++out.flows_checked;
    if (match(out.ruleset, groups, scope, f.record) == Verdict::allow) ++out.flows_allowed;
  }

  std::ostringstream csv;
  write_ruleset(csv, out.ruleset);
  write_file(dir / "ruleset.csv", csv.str());
  std::ostringstream report;
  report << format_hygiene_report(out.hygiene, out.ruleset);
  report << "flows checked: " << out.flows_checked << "\nflows allowed: " << out.flows_allowed << "\n";
  write_file(dir / "hygiene_report.txt", report.str());
  return out;
}

EvalReport run_eval(const PipelineConfig& config) {
  if (config.ground_truth_path.empty()) throw UsageError(kModule, "config does not name a ground truth file");
  const fs::path dir(config.out_dir);
  auto groups = load_assignments((dir / "assignments.csv").string());
  auto timing = load_json(dir / "timing.json");
  auto truth = load_ground_truth(config.ground_truth_path);
  auto report = evaluate(groups, truth, timing.value("grouping_runtime_s", 0.0), config.dataset);
  write_file(dir / "eval_report.csv", std::string(kEvalReportHeader) + "\n" + eval_report_row(report) + "\n");
  return report;
}

std::vector<PipelineConfig> parse_grid(std::istream& in, const PipelineConfig& base) {
  std::vector<PipelineConfig> grid;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    std::istringstream words{std::string(trim(view))};
    std::string word;
    PipelineConfig candidate = base;
    bool any = false;
    while (words >> word) {
      auto eq = word.find('=');
      if (eq == std::string::npos) {
        throw UsageError(kModule, "grid line " + std::to_string(line_no) + ": expected key=value, got '" + word + "'");
      }
      apply_setting(candidate, word.substr(0, eq), word.substr(eq + 1));
      any = true;
    }
    if (any) grid.push_back(std::move(candidate));
  }
  if (grid.empty()) throw UsageError(kModule, "tuning grid is empty");
  return grid;
}

TuneRun run_tune(const PipelineConfig& config) {
  if (config.grid_path.empty()) throw UsageError(kModule, "config does not name a grid file ('grid')");
  if (config.ground_truth_path.empty()) throw UsageError(kModule, "config does not name a ground truth file");
  std::istringstream grid_stream(read_file(config.grid_path, "grid file"));
  TuneRun out;
  out.candidates = parse_grid(grid_stream, config);
  auto truth = load_ground_truth(config.ground_truth_path);

  std::map<std::tuple<std::string, std::string, bool>, std::pair<std::vector<FlowRecord>, MemberScope>> inputs;
  std::vector<EvalReport> reports;
  for (const auto& candidate : out.candidates) {
    auto key = std::make_tuple(candidate.log_path, candidate.scope_path, candidate.strict);
    auto it = inputs.find(key);
    if (it == inputs.end()) {
      ParseOptions parse_options;
      parse_options.strict = candidate.strict;
      auto parsed = parse_flow_log_file(candidate.log_path, parse_options);
      it = inputs.emplace(key, std::make_pair(std::move(parsed.records), parse_scope_file(candidate.scope_path))).first;
    }
    auto run = group_flows(it->second.first, it->second.second, candidate);
    reports.push_back(evaluate(run.groups, truth, run.runtime_seconds, candidate.dataset));
  }
  out.outcome = select_config(std::move(reports), config.homogeneity_floor);
  out.best = out.candidates[out.outcome.best_index];

  const fs::path dir(config.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(kModule, "cannot create output directory '" + config.out_dir + "'");
  write_file(dir / "best_config.txt", config_to_text(out.best, false));
  std::ostringstream table;
  table << "candidate,selected,below_floor,suggested_group_qty,homogeneity,completeness,v_measure\n";
  for (std::size_t i = 0; i < out.outcome.reports.size(); ++i) {
    const auto& r = out.outcome.reports[i];
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu,%d,%d,%zu,%.6f,%.6f,%.6f\n", i, i == out.outcome.best_index,
                  out.outcome.below_floor ? 1 : 0, r.suggested_group_qty, r.homogeneity, r.completeness, r.v_measure);
    table << buf;
  }
  write_file(dir / "tune_report.csv", table.str());
  return out;
}

GeneratedScenario run_synth(const PipelineConfig& config) {
  auto options = config.synth;
  options.seed = config.seed;
  auto scenario = generate(standard_scenario(options));
  write_scenario(scenario, config.synth_dir);
  return scenario;
}

RetrainResult retrain_with_new_endpoints(const SecurityGroups& previous, std::span<const FlowRecord> existing,
                                         std::span<const FlowRecord> added, const MemberScope& scope,
                                         const PipelineConfig& config) {
  std::vector<FlowRecord> all(existing.begin(), existing.end());
  all.insert(all.end(), added.begin(), added.end());

  RetrainResult out;
  out.run = group_flows(all, scope, config);
  for (const auto& [ep, _] : out.run.groups.membership()) {
    if (!previous.group_of(ep)) out.added_endpoints.push_back(ep);
  }
  out.changed_endpoints = membership_diff(previous, out.run.groups);
  return out;
}

}  // namespace mseg
