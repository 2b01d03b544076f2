#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mseg/ipv4.hpp"

namespace mseg {

/// Endpoint membership derived from cluster assignments. Group ids are
/// centroid indices; only non-empty groups are present.
class SecurityGroups {
 public:
  SecurityGroups() = default;

  /// Throws DataError if an endpoint is added twice.
  void add(Ipv4 endpoint, std::size_t group_id);

  const std::map<std::size_t, std::vector<Ipv4>>& groups() const { return groups_; }
  const std::map<Ipv4, std::size_t>& membership() const { return membership_; }
  std::optional<std::size_t> group_of(Ipv4 endpoint) const;
  bool has_group(std::size_t group_id) const { return groups_.count(group_id) > 0; }

  std::size_t suggested_qty() const { return groups_.size(); }
  std::size_t endpoint_count() const { return membership_.size(); }

  friend bool operator==(const SecurityGroups&, const SecurityGroups&) = default;

 private:
  std::map<std::size_t, std::vector<Ipv4>> groups_;  // members kept sorted
  std::map<Ipv4, std::size_t> membership_;
};

/// Labeled truth: endpoint -> class label.
using GroundTruth = std::map<Ipv4, std::string>;

/// Reads `endpoint,true_group` rows (header optional).
GroundTruth load_ground_truth(const std::string& path);
void save_ground_truth(const GroundTruth& truth, const std::string& path);

}  // namespace mseg
