#include "mseg/eval_metrics.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "mseg/error.hpp"

namespace mseg {

namespace {

double entropy(std::span<const std::size_t> totals, double n) {
  double h = 0.0;
  for (auto t : totals) {
    if (t == 0) continue;
    double p = static_cast<double>(t) / n;
    h -= p * std::log(p);
  }
  return h;
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

std::size_t ContingencyTable::at(std::int64_t true_class, std::int64_t group) const {
  auto ci = std::find(class_labels.begin(), class_labels.end(), true_class);
  auto gi = std::find(group_labels.begin(), group_labels.end(), group);
  if (ci == class_labels.end() || gi == group_labels.end()) return 0;
  return counts[static_cast<std::size_t>(ci - class_labels.begin())][static_cast<std::size_t>(gi - group_labels.begin())];
}

ContingencyTable contingency(std::span<const std::int64_t> true_labels,
                             std::span<const std::int64_t> predicted_labels) {
  if (true_labels.size() != predicted_labels.size()) {
    throw DataError("eval_metrics", "label lists differ in length: " + std::to_string(true_labels.size()) +
                                        " vs " + std::to_string(predicted_labels.size()));
  }
  if (true_labels.empty()) throw DataError("eval_metrics", "contingency needs at least one item");

  ContingencyTable t;
  std::map<std::int64_t, std::size_t> class_index, group_index;
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  cells.reserve(true_labels.size());
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    auto [ci, new_class] = class_index.emplace(true_labels[i], t.class_labels.size());
    if (new_class) t.class_labels.push_back(true_labels[i]);
    auto [gi, new_group] = group_index.emplace(predicted_labels[i], t.group_labels.size());
    if (new_group) t.group_labels.push_back(predicted_labels[i]);
    cells.emplace_back(ci->second, gi->second);
  }
  t.counts.assign(t.class_labels.size(), std::vector<std::size_t>(t.group_labels.size(), 0));
  t.class_totals.assign(t.class_labels.size(), 0);
  t.group_totals.assign(t.group_labels.size(), 0);
  for (auto [c, g] : cells) {
    ++t.counts[c][g];
    ++t.class_totals[c];
    ++t.group_totals[g];
  }
  t.n = true_labels.size();
  return t;
}

double homogeneity(const ContingencyTable& t) {
  const double n = static_cast<double>(t.n);
  const double h_c = entropy(t.class_totals, n);
  if (h_c == 0.0) return 1.0;
  double h_c_given_k = 0.0;
  for (std::size_t c = 0; c < t.counts.size(); ++c) {
    for (std::size_t k = 0; k < t.group_totals.size(); ++k) {
      auto nck = t.counts[c][k];
      if (nck == 0) continue;
      h_c_given_k -= (static_cast<double>(nck) / n) *
                     std::log(static_cast<double>(nck) / static_cast<double>(t.group_totals[k]));
    }
  }
  return clamp01(1.0 - h_c_given_k / h_c);
}

double completeness(const ContingencyTable& t) {
  const double n = static_cast<double>(t.n);
  const double h_k = entropy(t.group_totals, n);
  if (h_k == 0.0) return 1.0;
  double h_k_given_c = 0.0;
  for (std::size_t c = 0; c < t.counts.size(); ++c) {
    for (std::size_t k = 0; k < t.group_totals.size(); ++k) {
      auto nck = t.counts[c][k];
      if (nck == 0) continue;
      h_k_given_c -= (static_cast<double>(nck) / n) *
                     std::log(static_cast<double>(nck) / static_cast<double>(t.class_totals[c]));
    }
  }
  return clamp01(1.0 - h_k_given_c / h_k);
}

double v_measure(double h, double c) {
  if (h + c == 0.0) return 0.0;
  return 2.0 * h * c / (h + c);
}

EvalReport evaluate(const SecurityGroups& groups, const GroundTruth& truth, double run_time_seconds,
                    std::string dataset) {
  std::vector<std::string> missing;
  std::map<std::string, std::int64_t> class_ids;
  std::vector<std::int64_t> true_labels, predicted;
  for (const auto& [endpoint, group_id] : groups.membership()) {
    auto it = truth.find(endpoint);
    if (it == truth.end()) {
      missing.push_back(endpoint.str());
      continue;
    }
    auto [cls, _] = class_ids.emplace(it->second, static_cast<std::int64_t>(class_ids.size()));
    true_labels.push_back(cls->second);
    predicted.push_back(static_cast<std::int64_t>(group_id));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw DataError("eval_metrics", "ground truth missing for " + std::to_string(missing.size()) +
                                        " grouped endpoint(s): " + list);
  }
  if (true_labels.empty()) throw DataError("eval_metrics", "no grouped endpoints to evaluate");

  auto table = contingency(true_labels, predicted);
  EvalReport r;
  r.dataset = std::move(dataset);
  r.homogeneity = homogeneity(table);
  r.completeness = completeness(table);
  r.v_measure = v_measure(r.homogeneity, r.completeness);
  r.asset_qty = table.n;
  r.true_group_qty = table.class_labels.size();
  r.suggested_group_qty = groups.suggested_qty();
  r.run_time_seconds = run_time_seconds;
  return r;
}

std::string eval_report_row(const EvalReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%zu,%.3f,%.6f,%.6f,%.6f", r.dataset.c_str(), r.asset_qty,
                r.true_group_qty, r.suggested_group_qty, r.run_time_seconds, r.homogeneity, r.completeness,
                r.v_measure);
  return buf;
}

std::string format_percent(double fraction) {
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  double hundredths = std::nearbyint(fraction * 10000.0);
  std::fesetround(saved);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", hundredths / 100.0);
  return buf;
}

std::string eval_report_summary(const EvalReport& r) {
  std::ostringstream out;
  char runtime[32];
  std::snprintf(runtime, sizeof runtime, "%.1fs", r.run_time_seconds);
  out << "dataset " << r.dataset << ": assets " << r.asset_qty << ", groups " << r.true_group_qty
      << ", suggested " << r.suggested_group_qty << ", run-time " << runtime << ", homogeneity "
      << format_percent(r.homogeneity) << ", completeness " << format_percent(r.completeness) << ", V-measure "
      << format_percent(r.v_measure);
  return out.str();
}

}  // namespace mseg
