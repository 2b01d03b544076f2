#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mseg/security_groups.hpp"

namespace mseg {

/// Joint counts of true classes (rows) against predicted groups (columns).
/// Labels are interned in order of first appearance.
struct ContingencyTable {
  std::vector<std::int64_t> class_labels;
  std::vector<std::int64_t> group_labels;
  std::vector<std::vector<std::size_t>> counts;  // [class][group]
  std::vector<std::size_t> class_totals;
  std::vector<std::size_t> group_totals;
  std::size_t n = 0;

  std::size_t at(std::int64_t true_class, std::int64_t group) const;
};

/// Throws DataError on length mismatch or empty input.
ContingencyTable contingency(std::span<const std::int64_t> true_labels,
                             std::span<const std::int64_t> predicted_labels);

/// 1 - H(C|K) / H(C), natural log; 1 when H(C) = 0.
double homogeneity(const ContingencyTable& table);
/// 1 - H(K|C) / H(K); 1 when H(K) = 0.
double completeness(const ContingencyTable& table);
/// Harmonic mean; 0 when h + c = 0.
double v_measure(double h, double c);

struct EvalReport {
  std::string dataset;
  double homogeneity = 0.0;
  double completeness = 0.0;
  double v_measure = 0.0;
  std::size_t asset_qty = 0;
  std::size_t true_group_qty = 0;
  std::size_t suggested_group_qty = 0;
  double run_time_seconds = 0.0;
};

/// Scores grouped endpoints against truth. Throws DataError naming every
/// grouped endpoint that lacks a truth label.
EvalReport evaluate(const SecurityGroups& groups, const GroundTruth& truth, double run_time_seconds,
                    std::string dataset = "synthetic");

inline constexpr const char* kEvalReportHeader =
    "dataset,asset_qty,group_qty,suggested_group_qty,runtime_s,homogeneity,completeness,v_measure";

/// One CSV row in the order of kEvalReportHeader (fractions, not percent).
std::string eval_report_row(const EvalReport& report);
/// Human-readable summary with percentages to two decimals (round half to even).
std::string eval_report_summary(const EvalReport& report);
/// 100 * fraction rounded to two decimals, ties to even.
std::string format_percent(double fraction);

}  // namespace mseg
