#pragma once

// Reference implementations used only by tests. They deliberately share no
// code with the library paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <utility>
#include <vector>

namespace oracle {

struct Scores {
  double homogeneity;
  double completeness;
  double v_measure;
};

/// Homogeneity/completeness through mutual information: h = I(C;K)/H(C),
/// c = I(C;K)/H(K), computed from pair counts over the raw label lists.
inline Scores clustering_scores(const std::vector<std::int64_t>& truth, const std::vector<std::int64_t>& pred) {
  const double n = static_cast<double>(truth.size());
  std::map<std::int64_t, double> pc, pk;
  std::map<std::pair<std::int64_t, std::int64_t>, double> pck;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    pc[truth[i]] += 1.0 / n;
    pk[pred[i]] += 1.0 / n;
    pck[{truth[i], pred[i]}] += 1.0 / n;
  }
  auto entropy = [](const std::map<std::int64_t, double>& p) {
    double h = 0.0;
    for (const auto& [_, v] : p) h += -v * std::log(v);
    return h;
  };
  double mi = 0.0;
  for (const auto& [key, v] : pck) mi += v * std::log(v / (pc[key.first] * pk[key.second]));
  const double hc = entropy(pc), hk = entropy(pk);
  Scores s;
  s.homogeneity = hc < 1e-15 ? 1.0 : std::clamp(mi / hc, 0.0, 1.0);
  s.completeness = hk < 1e-15 ? 1.0 : std::clamp(mi / hk, 0.0, 1.0);
  s.v_measure = (s.homogeneity + s.completeness) == 0.0
                    ? 0.0
                    : 2.0 * s.homogeneity * s.completeness / (s.homogeneity + s.completeness);
  return s;
}

/// Cyclic Jacobi rotations on a dense symmetric matrix. Returns eigenvalues in
/// descending order and the matching unit eigenvectors (as columns).
inline std::pair<std::vector<double>, std::vector<std::vector<double>>> jacobi_eigen(
    std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
  for (auto i : order) {
    values.push_back(a[i][i]);
    std::vector<double> col(n);
    for (std::size_t k = 0; k < n; ++k) col[k] = v[k][i];
    vectors.push_back(col);
  }
  return {values, vectors};
}

/// Sample covariance (divisor n - 1) of row-major data.
inline std::vector<std::vector<double>> covariance(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size(), d = rows.front().size();
  std::vector<double> mean(d, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j] / static_cast<double>(n);
  std::vector<std::vector<double>> c(d, std::vector<double>(d, 0.0));
  for (const auto& r : rows)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]) / static_cast<double>(n - 1);
  return c;
}

/// Minimum within-cluster sum of squares over every split of 1-D points into
/// two non-empty clusters (exhaustive over 2^(n-1) labelings).
inline double best_two_partition_sse(const std::vector<double>& points) {
  const std::size_t n = points.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << (n - 1)); ++mask) {
    double sum[2] = {0, 0}, cnt[2] = {0, 0};
    for (std::size_t i = 0; i < n; ++i) {
      int side = (i + 1 < n) && ((mask >> i) & 1) ? 1 : 0;
      sum[side] += points[i];
      cnt[side] += 1;
    }
    if (cnt[0] == 0 || cnt[1] == 0) continue;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int side = (i + 1 < n) && ((mask >> i) & 1) ? 1 : 0;
      double m = sum[side] / cnt[side];
      sse += (points[i] - m) * (points[i] - m);
    }
    best = std::min(best, sse);
  }
  return best;
}

}  // namespace oracle
