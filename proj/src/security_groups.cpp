#include "mseg/security_groups.hpp"

#include <algorithm>
#include <fstream>

#include "mseg/error.hpp"
#include "mseg/util.hpp"

namespace mseg {

void SecurityGroups::add(Ipv4 endpoint, std::size_t group_id) {
  if (!membership_.emplace(endpoint, group_id).second) {
    throw DataError("grouping", "endpoint " + endpoint.str() + " assigned more than once");
  }
  auto& members = groups_[group_id];
  members.insert(std::lower_bound(members.begin(), members.end(), endpoint), endpoint);
}

std::optional<std::size_t> SecurityGroups::group_of(Ipv4 endpoint) const {
  auto it = membership_.find(endpoint);
  if (it == membership_.end()) return std::nullopt;
  return it->second;
}

GroundTruth load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("eval_metrics", "cannot open ground truth '" + path + "'");
  GroundTruth truth;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto fields = split(view, ',');
    if (fields.size() != 2) {
      throw DataError("eval_metrics", "ground truth line " + std::to_string(line_no) + ": expected 2 fields");
    }
    auto addr = Ipv4::parse(trim(fields[0]));
    if (!addr) {
      if (line_no == 1) continue;  // header
      throw DataError("eval_metrics", "ground truth line " + std::to_string(line_no) + ": bad address");
    }
    if (!truth.emplace(*addr, std::string(trim(fields[1]))).second) {
      throw DataError("eval_metrics", "ground truth lists " + addr->str() + " twice");
    }
  }
  return truth;
}

void save_ground_truth(const GroundTruth& truth, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("eval_metrics", "cannot write '" + path + "'");
  out << "endpoint,true_group\n";
  for (const auto& [addr, label] : truth) out << addr.str() << ',' << label << '\n';
}

}  // namespace mseg
