#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>

namespace mseg {

/// Keep the fewest components whose cumulative explained variance reaches
/// this fraction, in (0, 1].
struct VarianceFraction {
  double value = 0.95;
};

/// Keep exactly this many components (capped at min(rows - 1, dimension)).
struct FixedDim {
  std::size_t value = 1;
};

using PcaTarget = std::variant<VarianceFraction, FixedDim>;

struct PcaModel {
  Eigen::VectorXd mean;         // input_dim
  Eigen::MatrixXd components;   // retained_dim x input_dim, orthonormal rows
  Eigen::VectorXd eigenvalues;  // retained_dim, descending
  double total_variance = 0.0;  // sum of all (clamped) eigenvalues at fit time
  std::string schema_fingerprint;

  std::size_t retained_dim() const { return static_cast<std::size_t>(components.rows()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(mean.size()); }

  friend bool operator==(const PcaModel&, const PcaModel&) = default;
};

/// Eigendecomposition of the sample covariance (divisor n - 1). Each
/// component's largest-magnitude entry is made positive. Throws UsageError for
/// a bad target and DataError for fewer than two rows or zero total variance.
PcaModel fit_pca(const Eigen::MatrixXd& data, const PcaTarget& target);

/// components * (vector - mean). Throws DataError on dimension mismatch.
Eigen::VectorXd project(const PcaModel& model, const Eigen::VectorXd& vector);
/// Row-wise projection of a samples x input_dim matrix.
Eigen::MatrixXd project_rows(const PcaModel& model, const Eigen::MatrixXd& data);
/// Inverse map from projected coordinates back to input space.
Eigen::MatrixXd back_project(const PcaModel& model, const Eigen::MatrixXd& projected);

/// Retained eigenvalues divided by the total variance of all eigenvalues.
Eigen::VectorXd explained_variance(const PcaModel& model);

std::string pca_to_json(const PcaModel& model);
PcaModel pca_from_json(const std::string& text);
void save_pca(const PcaModel& model, const std::string& path);
PcaModel load_pca(const std::string& path);

}  // namespace mseg
