#include <cmath>

#include "doctest.h"
#include "mseg/embedding.hpp"
#include "mseg/error.hpp"
#include "mseg/util.hpp"
#include "oracles.hpp"

using namespace mseg;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform() * 2.0 - 1.0 + (j == 0 ? 3.0 * rng.uniform() : 0.0);
  return m;
}

double orthonormality_error(const Eigen::MatrixXd& rows) {
  Eigen::MatrixXd gram = rows * rows.transpose();
  return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("pca on a diagonal line") {
  Eigen::MatrixXd pts(4, 2);
  pts << 1, 1, -1, -1, 2, 2, -2, -2;
  auto model = fit_pca(pts, VarianceFraction{0.95});
  REQUIRE(model.retained_dim() == 1);
  CHECK(model.components(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(model.components(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(explained_variance(model)[0] == doctest::Approx(1.0).epsilon(1e-12));
  // Covariance [[10/3,10/3],[10/3,10/3]] has eigenvalues 20/3 and 0.
  CHECK(model.eigenvalues[0] == doctest::Approx(20.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("full-rank identity projection preserves distances") {
  Rng rng(1);
  auto data = random_matrix(rng, 12, 4);
  auto model = fit_pca(data, FixedDim{4});
  REQUIRE(model.retained_dim() == 4);
  auto projected = project_rows(model, data);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j)
      CHECK(std::abs((projected.row(i) - projected.row(j)).norm() - (data.row(i) - data.row(j)).norm()) < 1e-8);
}

TEST_CASE("rank-1 data and fixed_dim capping") {
  Eigen::MatrixXd data(5, 3);
  for (int i = 0; i < 5; ++i) data.row(i) << i, 2.0 * i, -1.0 * i;
  CHECK(fit_pca(data, VarianceFraction{0.5}).retained_dim() == 1);
  CHECK(explained_variance(fit_pca(data, VarianceFraction{1.0}))[0] == doctest::Approx(1.0));
  CHECK(fit_pca(data, FixedDim{10}).retained_dim() == 3);

  Eigen::MatrixXd two(2, 3);
  two << 0, 1, 2, 3, 4, 5;
  CHECK(fit_pca(two, FixedDim{3}).retained_dim() == 1);  // rows - 1
}

TEST_CASE("pca errors") {
  Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(4, 3, 2.0);
  CHECK_THROWS_AS(fit_pca(constant, VarianceFraction{0.95}), DataError);
  Eigen::MatrixXd ok(3, 2);
  ok << 0, 1, 1, 0, 2, 2;
  CHECK_THROWS_AS(fit_pca(ok, FixedDim{0}), UsageError);
  CHECK_THROWS_AS(fit_pca(ok, VarianceFraction{0.0}), UsageError);
  CHECK_THROWS_AS(fit_pca(ok, VarianceFraction{1.5}), UsageError);
  CHECK_THROWS_AS(fit_pca(Eigen::MatrixXd::Ones(1, 2), VarianceFraction{0.9}), DataError);
  auto model = fit_pca(ok, FixedDim{1});
  CHECK_THROWS_AS(project(model, Eigen::VectorXd::Zero(3)), DataError);
}

TEST_CASE("projection basics") {
  Rng rng(2);
  auto data = random_matrix(rng, 20, 3);
  auto model = fit_pca(data, FixedDim{1});
  CHECK(project(model, model.mean).norm() == 0.0);
  Eigen::VectorXd v = model.mean + 2.0 * model.components.row(0).transpose();
  CHECK(project(model, v)[0] == doctest::Approx(2.0).epsilon(1e-12));

  auto full = fit_pca(data, FixedDim{3});
  auto projected = project_rows(full, data);
  for (int j = 0; j < 3; ++j) {
    double var = projected.col(j).squaredNorm() / 19.0;  // projected data is centered
    CHECK(std::abs(var - full.eigenvalues[j]) < 1e-6);
  }
}

TEST_CASE("explained variance normalizes by the full total") {
  PcaModel m;
  m.eigenvalues = Eigen::Vector2d(3, 1);
  m.total_variance = 4;
  CHECK(explained_variance(m)[0] == 0.75);
  CHECK(explained_variance(m)[1] == 0.25);
  m.eigenvalues = Eigen::Vector2d(2, 1);
  m.total_variance = 4;
  CHECK(explained_variance(m)[0] == 0.5);
  CHECK(explained_variance(m)[1] == 0.25);
}

TEST_CASE("pca agrees with a Jacobi eigendecomposition oracle") {
  Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + static_cast<int>(rng.index(5));
    const int n = d + 2 + static_cast<int>(rng.index(20));
    auto data = random_matrix(rng, n, d);
    auto model = fit_pca(data, FixedDim{static_cast<std::size_t>(d)});
    CHECK(orthonormality_error(model.components) <= 1e-8);

    std::vector<std::vector<double>> rows(n, std::vector<double>(d));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) rows[i][j] = data(i, j);
    auto [values, vectors] = oracle::jacobi_eigen(oracle::covariance(rows));
    for (int i = 0; i < d; ++i) {
      CHECK(std::abs(model.eigenvalues[i] - values[i]) < 1e-6);
      double same = 0, flipped = 0;
      for (int j = 0; j < d; ++j) {
        same = std::max(same, std::abs(model.components(i, j) - vectors[i][j]));
        flipped = std::max(flipped, std::abs(model.components(i, j) + vectors[i][j]));
      }
      CHECK(std::min(same, flipped) < 1e-6);
    }
  }
}

TEST_CASE("reconstruction error does not grow with retained_dim") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto data = random_matrix(rng, 30, 6);
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t m = 1; m <= 6; ++m) {
      auto model = fit_pca(data, FixedDim{m});
      double err = (back_project(model, project_rows(model, data)) - data).squaredNorm();
      CHECK(err <= previous + 1e-9);
      previous = err;
    }
    CHECK(previous < 1e-18 * 30 * 6 + 1e-20 + 1e-12);
  }
}

TEST_CASE("pca is deterministic and persists bit-exactly") {
  Rng rng(4);
  auto data = random_matrix(rng, 25, 5);
  auto a = fit_pca(data, VarianceFraction{0.9});
  auto b = fit_pca(data, VarianceFraction{0.9});
  CHECK(a == b);
  for (Eigen::Index i = 0; i < a.components.rows(); ++i) {
    Eigen::Index arg;
    a.components.row(i).cwiseAbs().maxCoeff(&arg);
    CHECK(a.components(i, arg) > 0.0);
  }
  a.schema_fingerprint = "abc123";
  CHECK(pca_from_json(pca_to_json(a)) == a);
  CHECK_THROWS_AS(pca_from_json("{}"), DataError);
  CHECK_THROWS_AS(pca_from_json("not json"), DataError);
}
