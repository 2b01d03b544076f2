#include "mseg/embedding.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mseg/error.hpp"

namespace mseg {

namespace {

constexpr double kNegativeEigenTolerance = 1e-8;

std::size_t retained_count(const Eigen::VectorXd& eigenvalues, double total, const PcaTarget& target,
                           std::size_t rows) {
  const auto dim = static_cast<std::size_t>(eigenvalues.size());
  if (const auto* fixed = std::get_if<FixedDim>(&target)) {
    if (fixed->value < 1) throw UsageError("embedding", "fixed_dim must be >= 1");
    return std::min({fixed->value, rows - 1, dim});
  }
  const double fraction = std::get<VarianceFraction>(target).value;
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw UsageError("embedding", "variance fraction must lie in (0, 1]");
  }
  double cumulative = 0.0;
  for (std::size_t m = 0; m < dim; ++m) {
    cumulative += eigenvalues[static_cast<Eigen::Index>(m)];
    if (cumulative / total >= fraction - 1e-12) return m + 1;
  }
  return dim;
}

}  // namespace

PcaModel fit_pca(const Eigen::MatrixXd& data, const PcaTarget& target) {
  const auto n = data.rows();
  const auto d = data.cols();
  if (n < 2) throw DataError("embedding", "PCA needs at least two samples");
  if (d < 1) throw DataError("embedding", "PCA needs at least one feature");
  if (const auto* fixed = std::get_if<FixedDim>(&target); fixed && fixed->value < 1) {
    throw UsageError("embedding", "fixed_dim must be >= 1");
  }

  PcaModel model;
  model.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw InternalError("embedding", "eigendecomposition failed");

  // Eigen returns ascending order.
  Eigen::VectorXd values = solver.eigenvalues().reverse();
  Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();
  const double scale = std::max(1.0, values.size() > 0 ? values[0] : 0.0);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] < -kNegativeEigenTolerance * scale) {
      throw InternalError("embedding", "covariance has a negative eigenvalue " + std::to_string(values[i]));
    }
    values[i] = std::max(values[i], 0.0);
  }
  model.total_variance = values.sum();
  if (!(model.total_variance > 0.0)) {
    throw DataError("embedding", "samples have zero variance; nothing to cluster on");
  }

  const auto m = static_cast<Eigen::Index>(
      retained_count(values, model.total_variance, target, static_cast<std::size_t>(n)));
  if (m < 1) throw DataError("embedding", "no principal components retained");

  model.eigenvalues = values.head(m);
  model.components = vectors.leftCols(m).transpose();
  for (Eigen::Index i = 0; i < m; ++i) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      double mag = std::abs(model.components(i, j));
      if (mag > best) {
        best = mag;
        arg = j;
      }
    }
    if (model.components(i, arg) < 0.0) model.components.row(i) *= -1.0;
  }
  return model;
}

Eigen::VectorXd project(const PcaModel& model, const Eigen::VectorXd& vector) {
  if (vector.size() != model.mean.size()) {
    throw DataError("embedding", "projection dimension mismatch: got " + std::to_string(vector.size()) +
                                     ", model expects " + std::to_string(model.mean.size()));
  }
  return model.components * (vector - model.mean);
}

Eigen::MatrixXd project_rows(const PcaModel& model, const Eigen::MatrixXd& data) {
  if (data.cols() != model.mean.size()) {
    throw DataError("embedding", "projection dimension mismatch: got " + std::to_string(data.cols()) +
                                     ", model expects " + std::to_string(model.mean.size()));
  }
  return (data.rowwise() - model.mean.transpose()) * model.components.transpose();
}

Eigen::MatrixXd back_project(const PcaModel& model, const Eigen::MatrixXd& projected) {
  if (projected.cols() != model.components.rows()) throw DataError("embedding", "back-projection dimension mismatch");
  return (projected * model.components).rowwise() + model.mean.transpose();
}

Eigen::VectorXd explained_variance(const PcaModel& model) {
  if (!(model.total_variance > 0.0)) return Eigen::VectorXd::Zero(model.eigenvalues.size());
  return model.eigenvalues / model.total_variance;
}

std::string pca_to_json(const PcaModel& model) {
  nlohmann::json j;
  j["format"] = "mseg-pca-v1";
  j["input_dim"] = model.input_dim();
  j["retained_dim"] = model.retained_dim();
  j["schema_fingerprint"] = model.schema_fingerprint;
  j["total_variance"] = model.total_variance;
  j["mean"] = std::vector<double>(model.mean.data(), model.mean.data() + model.mean.size());
  j["eigenvalues"] = std::vector<double>(model.eigenvalues.data(), model.eigenvalues.data() + model.eigenvalues.size());
  auto& comps = j["components"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < model.components.rows(); ++i) {
    Eigen::RowVectorXd row = model.components.row(i);
    comps.push_back(std::vector<double>(row.data(), row.data() + row.size()));
  }
  return j.dump(1) + "\n";
}

PcaModel pca_from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    if (j.at("format") != "mseg-pca-v1") throw DataError("embedding", "not a PCA model file");
    PcaModel model;
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto eig = j.at("eigenvalues").get<std::vector<double>>();
    const auto comps = j.at("components").get<std::vector<std::vector<double>>>();
    model.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    model.eigenvalues = Eigen::Map<const Eigen::VectorXd>(eig.data(), static_cast<Eigen::Index>(eig.size()));
    model.components.resize(static_cast<Eigen::Index>(comps.size()), static_cast<Eigen::Index>(mean.size()));
    for (std::size_t i = 0; i < comps.size(); ++i) {
      if (comps[i].size() != mean.size()) throw DataError("embedding", "component length mismatch");
      for (std::size_t c = 0; c < mean.size(); ++c) {
        model.components(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = comps[i][c];
      }
    }
    if (eig.size() != comps.size() || j.at("retained_dim").get<std::size_t>() != comps.size()) {
      throw DataError("embedding", "retained_dim inconsistent with stored components");
    }
    model.total_variance = j.at("total_variance").get<double>();
    model.schema_fingerprint = j.at("schema_fingerprint").get<std::string>();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("embedding", std::string("malformed PCA model: ") + e.what());
  }
}

void save_pca(const PcaModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("embedding", "cannot write '" + path + "'");
  out << pca_to_json(model);
}

PcaModel load_pca(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("embedding", "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return pca_from_json(buf.str());
}

}  // namespace mseg
