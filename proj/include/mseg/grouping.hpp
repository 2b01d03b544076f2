#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mseg/eval_metrics.hpp"
#include "mseg/feature_space.hpp"
#include "mseg/security_groups.hpp"

namespace mseg {

struct KMeansOptions {
  std::size_t k = 1;
  std::uint64_t seed = 0;
  double tol = 1e-6;     // max centroid movement that counts as converged
  int max_iter = 300;
  int restarts = 4;      // k-means++ restarts; lowest inertia wins
  std::size_t local_trials = 1;  // seeding candidates per centroid; 0 = 2 + floor(ln k)
  bool refine = true;            // transfer passes after Lloyd
  std::size_t swap_limit = 4096;  // single-swap search only when k * samples <= this
  std::size_t workers = 1;
};

struct ClusterModel {
  Eigen::MatrixXd centroids;  // k x dim
  std::size_t k = 0;
  double inertia = 0.0;
  int iterations_run = 0;
  std::uint64_t seed = 0;
  int best_restart = 0;
  /// Inertia after the initial assignment and after every Lloyd iteration of
  /// the winning restart, continued through refinement. Non-increasing.
  std::vector<double> inertia_history;

  std::size_t dim() const { return static_cast<std::size_t>(centroids.cols()); }
};

std::size_t count_distinct_rows(const Eigen::MatrixXd& samples);

/// Default seeding candidates per centroid: 2 + floor(ln k).
std::size_t resolve_local_trials(std::size_t k);

/// k-means++ seeding: the first centroid is a uniform draw; each later one is
/// the best (lowest resulting potential) of `local_trials` D^2-weighted draws.
/// local_trials = 1 is the classic scheme, 0 picks resolve_local_trials(k).
/// Throws DataError when k exceeds the distinct rows.
Eigen::MatrixXd kmeans_pp_init(const Eigen::MatrixXd& samples, std::size_t k, std::uint64_t seed,
                               std::size_t workers = 1, std::size_t local_trials = 1);

/// Lloyd iterations from the given centroids. Assignments are exact nearest
/// centroid (ties to the lowest index); bound-based pruning only skips
/// distance evaluations that cannot change the outcome.
ClusterModel lloyd(const Eigen::MatrixXd& samples, Eigen::MatrixXd initial, double tol, int max_iter,
                   std::size_t workers = 1);

/// Hartigan single-point transfers starting from the nearest-centroid
/// partition: a sample moves when the summed squared error drops, counting the
/// shift of both means. Returns the new means, or nullopt if nothing moved.
std::optional<Eigen::MatrixXd> hartigan_transfers(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& centroids,
                                                  int max_passes);

/// Best of `restarts` seeded k-means++ + Lloyd runs. With `refine`, each run
/// is polished by transfer passes, and small problems (k * samples <=
/// swap_limit) also get a single-swap local search.
ClusterModel kmeans_fit(const Eigen::MatrixXd& samples, const KMeansOptions& options);

/// Nearest-centroid label per row (ties to lowest index).
std::vector<std::size_t> nearest_centroids(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& centroids);

struct GroupAssignment {
  Ipv4 endpoint;
  std::size_t group_id = 0;
  std::vector<double> mean_distances;  // one per centroid
};

/// Mean Euclidean distance of the endpoint's samples to every centroid; the
/// argmin (lowest index on ties) is the group.
GroupAssignment assign_endpoint(Ipv4 endpoint, const Eigen::MatrixXd& endpoint_samples, const ClusterModel& model);

/// assign_endpoint for each distinct endpoint in `keys`, in address order.
std::vector<GroupAssignment> assign_endpoints(const Eigen::MatrixXd& projected, std::span<const WindowKey> keys,
                                              const ClusterModel& model, std::size_t workers = 1);

SecurityGroups derive_groups(std::span<const GroupAssignment> assignments);

/// Endpoints present in both groupings whose set of co-members (restricted to
/// endpoints present in both) differs.
std::vector<Ipv4> membership_diff(const SecurityGroups& before, const SecurityGroups& after);

struct TuneOutcome {
  std::size_t best_index = 0;
  bool below_floor = false;
  std::vector<EvalReport> reports;  // one per grid entry
};

/// Among reports with homogeneity >= floor, the highest V-measure; otherwise
/// the highest homogeneity with below_floor set. Ties keep grid order.
TuneOutcome select_config(std::vector<EvalReport> reports, double homogeneity_floor);

/// Fits every grid entry on the projected samples and selects per select_config.
TuneOutcome tune(const Eigen::MatrixXd& projected, std::span<const WindowKey> keys, const GroundTruth& truth,
                 std::span<const KMeansOptions> grid, double homogeneity_floor);

std::string cluster_model_to_json(const ClusterModel& model, const std::string& extra_json = "{}");
ClusterModel cluster_model_from_json(const std::string& text);

}  // namespace mseg
