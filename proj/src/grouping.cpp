#include "mseg/grouping.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "json.hpp"
#include "mseg/error.hpp"
#include "mseg/util.hpp"
#include "parallel.hpp"

namespace mseg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Relative slack on pruning tests so rounding in the bounds can only cause an
// unnecessary rescan, never a skipped one.
constexpr double kBoundSlack = 1e-10;

using ColMatrix = Eigen::MatrixXd;  // dim x count, one point per column

double sqdist(const ColMatrix& a, Eigen::Index i, const ColMatrix& b, Eigen::Index j) {
  return (a.col(i) - b.col(j)).squaredNorm();
}

void validate_options(const KMeansOptions& o) {
  if (o.k < 1) throw UsageError("grouping", "k must be >= 1");
  if (!(o.tol > 0.0)) throw UsageError("grouping", "tol must be > 0");
  if (o.max_iter < 1) throw UsageError("grouping", "max_iter must be >= 1");
  if (o.restarts < 1) throw UsageError("grouping", "restarts must be >= 1");
}

void require_distinct(const Eigen::MatrixXd& samples, std::size_t k) {
  auto distinct = count_distinct_rows(samples);
  if (k > distinct) {
    throw DataError("grouping", "k = " + std::to_string(k) + " exceeds the " + std::to_string(distinct) +
                                    " distinct samples");
  }
}

Eigen::MatrixXd seed_centroids(const ColMatrix& x, std::size_t k, std::uint64_t seed, std::size_t workers,
                               std::size_t local_trials) {
  const auto n = static_cast<std::size_t>(x.cols());
  const std::size_t trials = local_trials > 0 ? local_trials : resolve_local_trials(k);
  Rng rng(seed);
  std::vector<Eigen::Index> chosen;
  chosen.reserve(k);
  chosen.push_back(static_cast<Eigen::Index>(rng.index(n)));

  std::vector<double> d2(n), trial(n), best_d2(n);
  detail::parallel_chunks(n, workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) d2[i] = sqdist(x, static_cast<Eigen::Index>(i), x, chosen.front());
  });
  while (chosen.size() < k) {
    // Draw candidates by D^2 and keep the one leaving the smallest potential
    // (first drawn wins ties). One trial is classic k-means++.
    double best_potential = kInf;
    Eigen::Index best = -1;
    for (std::size_t t = 0; t < trials; ++t) {
      auto next = rng.weighted(d2);
      if (next >= n) throw InternalError("grouping", "k-means++ ran out of distinct samples");
      const auto c = static_cast<Eigen::Index>(next);
      detail::parallel_chunks(n, workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) trial[i] = std::min(d2[i], sqdist(x, static_cast<Eigen::Index>(i), x, c));
      });
      double potential = 0.0;
      for (double v : trial) potential += v;
      if (potential < best_potential) {
        best_potential = potential;
        best = c;
        best_d2.swap(trial);
      }
    }
    chosen.push_back(best);
    d2.swap(best_d2);
  }

  Eigen::MatrixXd centroids(static_cast<Eigen::Index>(k), x.rows());
  for (std::size_t j = 0; j < k; ++j) centroids.row(static_cast<Eigen::Index>(j)) = x.col(chosen[j]).transpose();
  return centroids;
}

}  // namespace

std::size_t count_distinct_rows(const Eigen::MatrixXd& samples) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = samples;
  const auto n = static_cast<std::size_t>(rows.rows());
  const auto d = static_cast<std::size_t>(rows.cols());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto row_ptr = [&](std::size_t i) { return rows.data() + i * d; };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(row_ptr(a), row_ptr(a) + d, row_ptr(b), row_ptr(b) + d);
  });
  std::size_t distinct = n > 0 ? 1 : 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (!std::equal(row_ptr(order[i - 1]), row_ptr(order[i - 1]) + d, row_ptr(order[i]))) ++distinct;
  }
  return distinct;
}

std::size_t resolve_local_trials(std::size_t k) {
  return 2 + static_cast<std::size_t>(std::floor(std::log(static_cast<double>(std::max<std::size_t>(k, 1)))));
}

Eigen::MatrixXd kmeans_pp_init(const Eigen::MatrixXd& samples, std::size_t k, std::uint64_t seed,
                               std::size_t workers, std::size_t local_trials) {
  if (k < 1) throw UsageError("grouping", "k must be >= 1");
  require_distinct(samples, k);
  const ColMatrix x = samples.transpose();
  return seed_centroids(x, k, seed, workers, local_trials);
}

std::vector<std::size_t> nearest_centroids(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& centroids) {
  const ColMatrix x = samples.transpose();
  const ColMatrix c = centroids.transpose();
  std::vector<std::size_t> labels(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    double best = kInf;
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      double d = sqdist(x, i, c, j);
      if (d < best) {
        best = d;
        labels[static_cast<std::size_t>(i)] = static_cast<std::size_t>(j);
      }
    }
  }
  return labels;
}

ClusterModel lloyd(const Eigen::MatrixXd& samples, Eigen::MatrixXd initial, double tol, int max_iter,
                   std::size_t workers) {
  const auto n = static_cast<std::size_t>(samples.rows());
  const auto k = static_cast<std::size_t>(initial.rows());
  if (n == 0 || k == 0) throw DataError("grouping", "k-means needs samples and at least one centroid");
  if (initial.cols() != samples.cols()) throw DataError("grouping", "centroid dimension mismatch");

  const ColMatrix x = samples.transpose();
  ColMatrix c = initial.transpose();
  const auto d = x.rows();
  const auto ik = static_cast<Eigen::Index>(k);

  std::vector<std::size_t> labels(n, 0);
  std::vector<double> upper(n, kInf), lower(n, kInf), d2(n, 0.0);

  auto full_scan = [&](std::size_t i) {
    const auto ii = static_cast<Eigen::Index>(i);
    double best = kInf, second = kInf;
    std::size_t arg = 0;
    for (Eigen::Index j = 0; j < ik; ++j) {
      double dist = sqdist(x, ii, c, j);
      if (dist < best) {
        second = best;
        best = dist;
        arg = static_cast<std::size_t>(j);
      } else if (dist < second) {
        second = dist;
      }
    }
    labels[i] = arg;
    upper[i] = std::sqrt(best);
    lower[i] = std::sqrt(second);
  };

  auto inertia_now = [&] {
    detail::parallel_chunks(n, workers, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        d2[i] = sqdist(x, static_cast<Eigen::Index>(i), c, static_cast<Eigen::Index>(labels[i]));
      }
    });
    double total = 0.0;
    for (double v : d2) total += v;
    return total;
  };

  detail::parallel_chunks(n, workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) full_scan(i);
  });

  ClusterModel model;
  model.k = k;
  model.inertia_history.push_back(inertia_now());

  std::vector<double> moves(k), half_sep(k);
  std::vector<std::size_t> counts(k);
  for (int iter = 1; iter <= max_iter; ++iter) {
    ColMatrix next = ColMatrix::Zero(d, ik);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      next.col(static_cast<Eigen::Index>(labels[i])) += x.col(static_cast<Eigen::Index>(i));
      ++counts[labels[i]];
    }
    std::vector<std::size_t> empty;
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] > 0) {
        next.col(static_cast<Eigen::Index>(j)) /= static_cast<double>(counts[j]);
      } else {
        empty.push_back(j);
      }
    }
    if (!empty.empty()) {
      // Reseed each empty centroid at the sample farthest from its centroid,
      // discounting samples already covered by an earlier reseed.
      std::vector<double> score(n);
      for (std::size_t i = 0; i < n; ++i) {
        score[i] = counts[labels[i]] > 0
                       ? sqdist(x, static_cast<Eigen::Index>(i), next, static_cast<Eigen::Index>(labels[i]))
                       : 0.0;
      }
      for (auto j : empty) {
        auto far = static_cast<std::size_t>(std::max_element(score.begin(), score.end()) - score.begin());
        const auto jj = static_cast<Eigen::Index>(j);
        if (!(score[far] > 0.0)) {
          next.col(jj) = c.col(jj);
          continue;
        }
        next.col(jj) = x.col(static_cast<Eigen::Index>(far));
        for (std::size_t i = 0; i < n; ++i) {
          score[i] = std::min(score[i], sqdist(x, static_cast<Eigen::Index>(i), next, jj));
        }
      }
    }

    double max_move = 0.0;
    std::size_t max_arg = 0;
    double second_move = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      moves[j] = (next.col(jj) - c.col(jj)).norm();
      if (moves[j] > max_move) {
        second_move = max_move;
        max_move = moves[j];
        max_arg = j;
      } else if (moves[j] > second_move) {
        second_move = moves[j];
      }
    }
    c = std::move(next);

    for (std::size_t j = 0; j < k; ++j) {
      double best = kInf;
      for (std::size_t o = 0; o < k; ++o) {
        if (o != j) best = std::min(best, sqdist(c, static_cast<Eigen::Index>(j), c, static_cast<Eigen::Index>(o)));
      }
      half_sep[j] = 0.5 * std::sqrt(best);
    }

    detail::parallel_chunks(n, workers, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        const auto a = labels[i];
        upper[i] += moves[a];
        lower[i] -= (a == max_arg ? second_move : max_move);
        const double bound = std::max(half_sep[a], lower[i]) * (1.0 - kBoundSlack);
        if (upper[i] < bound) continue;
        upper[i] = std::sqrt(sqdist(x, static_cast<Eigen::Index>(i), c, static_cast<Eigen::Index>(a)));
        if (upper[i] < bound) continue;
        full_scan(i);
      }
    });

    model.inertia_history.push_back(inertia_now());
    model.iterations_run = iter;
    if (max_move < tol) break;
  }

  model.centroids = c.transpose();
  model.inertia = model.inertia_history.back();
  return model;
}

std::optional<Eigen::MatrixXd> hartigan_transfers(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& centroids,
                                                  int max_passes) {
  const ColMatrix x = samples.transpose();
  const auto n = static_cast<std::size_t>(x.cols());
  const auto k = static_cast<Eigen::Index>(centroids.rows());
  auto labels = nearest_centroids(samples, centroids);

  ColMatrix sums = ColMatrix::Zero(x.rows(), k);
  std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    sums.col(static_cast<Eigen::Index>(labels[i])) += x.col(static_cast<Eigen::Index>(i));
    counts[labels[i]] += 1.0;
  }
  ColMatrix means(x.rows(), k);
  auto refresh = [&](Eigen::Index j) {
    means.col(j) = counts[static_cast<std::size_t>(j)] > 0 ? ColMatrix(sums.col(j) / counts[static_cast<std::size_t>(j)])
                                                           : ColMatrix(centroids.row(j).transpose());
  };
  for (Eigen::Index j = 0; j < k; ++j) refresh(j);

  bool any = false;
  for (int pass = 0; pass < max_passes; ++pass) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = static_cast<Eigen::Index>(labels[i]);
      const double na = counts[labels[i]];
      if (na <= 1.0) continue;
      const auto ii = static_cast<Eigen::Index>(i);
      // Removing x from a saves na/(na-1)|x-ma|^2; adding it to b costs nb/(nb+1)|x-mb|^2.
      const double gain = na / (na - 1.0) * sqdist(x, ii, means, a);
      double best_cost = kInf;
      Eigen::Index to = a;
      for (Eigen::Index b = 0; b < k; ++b) {
        if (b == a) continue;
        const double nb = counts[static_cast<std::size_t>(b)];
        const double cost = nb / (nb + 1.0) * sqdist(x, ii, means, b);
        if (cost < best_cost) {
          best_cost = cost;
          to = b;
        }
      }
      if (to == a || !(best_cost < gain * (1.0 - kBoundSlack))) continue;
      sums.col(a) -= x.col(ii);
      sums.col(to) += x.col(ii);
      counts[static_cast<std::size_t>(a)] -= 1.0;
      counts[static_cast<std::size_t>(to)] += 1.0;
      refresh(a);
      refresh(to);
      labels[i] = static_cast<std::size_t>(to);
      moved = true;
    }
    if (!moved) break;
    any = true;
  }
  if (!any) return std::nullopt;
  return Eigen::MatrixXd(means.transpose());
}

namespace {

bool improves(double candidate, double current) { return candidate < current * (1.0 - 1e-12) - 1e-300; }

/// Alternates transfer passes and Lloyd polishing until neither changes the
/// partition. The history keeps growing; every step lowers the inertia.
ClusterModel polish(const Eigen::MatrixXd& samples, ClusterModel model, const KMeansOptions& o) {
  for (int round = 0; round < o.max_iter; ++round) {
    auto moved = hartigan_transfers(samples, model.centroids, o.max_iter);
    if (!moved) break;
    auto next = lloyd(samples, std::move(*moved), o.tol, o.max_iter, o.workers);
    if (!improves(next.inertia, model.inertia)) break;
    model.inertia_history.insert(model.inertia_history.end(), next.inertia_history.begin(),
                                 next.inertia_history.end());
    model.iterations_run += next.iterations_run;
    model.centroids = std::move(next.centroids);
    model.inertia = next.inertia;
  }
  return model;
}

/// Single-swap local search: relocate one centroid onto one sample, re-run
/// Lloyd + transfers, keep the first strict improvement, repeat.
ClusterModel swap_search(const Eigen::MatrixXd& samples, ClusterModel model, const KMeansOptions& o) {
  const auto n = samples.rows();
  const auto k = model.centroids.rows();
  bool improved = true;
  while (improved) {
    improved = false;
    for (Eigen::Index j = 0; j < k && !improved; ++j) {
      for (Eigen::Index p = 0; p < n && !improved; ++p) {
        bool taken = false;
        for (Eigen::Index q = 0; q < k && !taken; ++q) taken = model.centroids.row(q) == samples.row(p);
        if (taken) continue;
        Eigen::MatrixXd start = model.centroids;
        start.row(j) = samples.row(p);
        auto candidate = polish(samples, lloyd(samples, std::move(start), o.tol, o.max_iter, o.workers), o);
        if (improves(candidate.inertia, model.inertia)) {
          model = std::move(candidate);
          improved = true;
        }
      }
    }
  }
  return model;
}

}  // namespace

ClusterModel kmeans_fit(const Eigen::MatrixXd& samples, const KMeansOptions& options) {
  validate_options(options);
  require_distinct(samples, options.k);
  const ColMatrix x = samples.transpose();
  const bool swaps = options.refine && options.k * static_cast<std::size_t>(samples.rows()) <= options.swap_limit;

  ClusterModel best;
  for (int r = 0; r < options.restarts; ++r) {
    auto init = seed_centroids(x, options.k, derive_seed(options.seed, static_cast<std::uint64_t>(r)),
                               options.workers, options.local_trials);
    auto run = lloyd(samples, std::move(init), options.tol, options.max_iter, options.workers);
    if (options.refine) run = polish(samples, std::move(run), options);
    if (swaps) run = swap_search(samples, std::move(run), options);
    if (r == 0 || run.inertia < best.inertia) {
      best = std::move(run);
      best.best_restart = r;
    }
  }
  best.seed = options.seed;
  return best;
}

GroupAssignment assign_endpoint(Ipv4 endpoint, const Eigen::MatrixXd& endpoint_samples, const ClusterModel& model) {
  if (endpoint_samples.rows() == 0) {
    throw DataError("grouping", "endpoint " + endpoint.str() + " has no samples to assign");
  }
  if (endpoint_samples.cols() != model.centroids.cols()) {
    throw DataError("grouping", "sample dimension does not match the cluster model");
  }
  GroupAssignment out;
  out.endpoint = endpoint;
  out.mean_distances.assign(model.k, 0.0);
  const double count = static_cast<double>(endpoint_samples.rows());
  for (std::size_t j = 0; j < model.k; ++j) {
    double sum = 0.0;
    for (Eigen::Index s = 0; s < endpoint_samples.rows(); ++s) {
      sum += (endpoint_samples.row(s) - model.centroids.row(static_cast<Eigen::Index>(j))).norm();
    }
    out.mean_distances[j] = sum / count;
  }
  out.group_id = static_cast<std::size_t>(
      std::min_element(out.mean_distances.begin(), out.mean_distances.end()) - out.mean_distances.begin());
  return out;
}

std::vector<GroupAssignment> assign_endpoints(const Eigen::MatrixXd& projected, std::span<const WindowKey> keys,
                                              const ClusterModel& model, std::size_t workers) {
  if (static_cast<std::size_t>(projected.rows()) != keys.size()) {
    throw DataError("grouping", "sample keys do not match projected rows");
  }
  std::map<Ipv4, std::vector<Eigen::Index>> rows_by_endpoint;
  for (std::size_t i = 0; i < keys.size(); ++i) rows_by_endpoint[keys[i].endpoint].push_back(static_cast<Eigen::Index>(i));

  std::vector<std::pair<Ipv4, const std::vector<Eigen::Index>*>> jobs;
  for (const auto& [ep, rows] : rows_by_endpoint) jobs.emplace_back(ep, &rows);

  std::vector<GroupAssignment> out(jobs.size());
  detail::parallel_chunks(jobs.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t t = b; t < e; ++t) {
      const auto& rows = *jobs[t].second;
      Eigen::MatrixXd mine(static_cast<Eigen::Index>(rows.size()), projected.cols());
      for (std::size_t r = 0; r < rows.size(); ++r) mine.row(static_cast<Eigen::Index>(r)) = projected.row(rows[r]);
      out[t] = assign_endpoint(jobs[t].first, mine, model);
    }
  });
  return out;
}

SecurityGroups derive_groups(std::span<const GroupAssignment> assignments) {
  SecurityGroups groups;
  for (const auto& a : assignments) groups.add(a.endpoint, a.group_id);
  return groups;
}

std::vector<Ipv4> membership_diff(const SecurityGroups& before, const SecurityGroups& after) {
  std::set<Ipv4> common;
  for (const auto& [ep, _] : before.membership()) {
    if (after.group_of(ep)) common.insert(ep);
  }
  auto peers = [&](const SecurityGroups& g, Ipv4 ep) {
    std::set<Ipv4> out;
    for (auto other : g.groups().at(*g.group_of(ep))) {
      if (other != ep && common.count(other)) out.insert(other);
    }
    return out;
  };
  std::vector<Ipv4> changed;
  for (auto ep : common) {
    if (peers(before, ep) != peers(after, ep)) changed.push_back(ep);
  }
  return changed;
}

TuneOutcome select_config(std::vector<EvalReport> reports, double homogeneity_floor) {
  if (reports.empty()) throw UsageError("grouping", "tuning grid is empty");
  TuneOutcome out;
  bool found = false;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (reports[i].homogeneity < homogeneity_floor) continue;
    if (!found || reports[i].v_measure > reports[out.best_index].v_measure) {
      out.best_index = i;
      found = true;
    }
  }
  if (!found) {
    out.below_floor = true;
    for (std::size_t i = 1; i < reports.size(); ++i) {
      if (reports[i].homogeneity > reports[out.best_index].homogeneity) out.best_index = i;
    }
  }
  out.reports = std::move(reports);
  return out;
}

TuneOutcome tune(const Eigen::MatrixXd& projected, std::span<const WindowKey> keys, const GroundTruth& truth,
                 std::span<const KMeansOptions> grid, double homogeneity_floor) {
  if (grid.empty()) throw UsageError("grouping", "tuning grid is empty");
  std::vector<EvalReport> reports;
  for (const auto& options : grid) {
    auto start = std::chrono::steady_clock::now();
    auto model = kmeans_fit(projected, options);
    auto groups = derive_groups(assign_endpoints(projected, keys, model, options.workers));
    std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    reports.push_back(evaluate(groups, truth, elapsed.count()));
  }
  return select_config(std::move(reports), homogeneity_floor);
}

std::string cluster_model_to_json(const ClusterModel& model, const std::string& extra_json) {
  nlohmann::json j;
  j["format"] = "mseg-kmeans-v1";
  j["k"] = model.k;
  j["dim"] = model.dim();
  j["seed"] = model.seed;
  j["inertia"] = model.inertia;
  j["iterations_run"] = model.iterations_run;
  j["best_restart"] = model.best_restart;
  j["inertia_history"] = model.inertia_history;
  auto& rows = j["centroids"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < model.centroids.rows(); ++i) {
    Eigen::RowVectorXd row = model.centroids.row(i);
    rows.push_back(std::vector<double>(row.data(), row.data() + row.size()));
  }
  j["config"] = nlohmann::json::parse(extra_json);
  return j.dump(1) + "\n";
}

ClusterModel cluster_model_from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    if (j.at("format") != "mseg-kmeans-v1") throw DataError("grouping", "not a cluster model file");
    ClusterModel m;
    m.k = j.at("k").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.inertia = j.at("inertia").get<double>();
    m.iterations_run = j.at("iterations_run").get<int>();
    m.best_restart = j.at("best_restart").get<int>();
    m.inertia_history = j.at("inertia_history").get<std::vector<double>>();
    const auto rows = j.at("centroids").get<std::vector<std::vector<double>>>();
    const auto dim = j.at("dim").get<std::size_t>();
    if (rows.size() != m.k) throw DataError("grouping", "centroid count does not match k");
    m.centroids.resize(static_cast<Eigen::Index>(m.k), static_cast<Eigen::Index>(dim));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != dim) throw DataError("grouping", "centroid dimension mismatch");
      for (std::size_t c = 0; c < dim; ++c) m.centroids(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("grouping", std::string("malformed cluster model: ") + e.what());
  }
}

}  // namespace mseg
