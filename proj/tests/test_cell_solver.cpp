// Periodic cell solves checked against the d = 1 closed form: the flux
// K (theta' + 1) of the solved problem is constant, so
//   theta'(y) = -1 + (1/K(y)) * (∫ 1/K)^{-1},
// and the integrated tensor is the harmonic mean of K. Both sides are
// evaluated with the same trapezoid nodes, so agreement is limited only by
// the solver tolerance.

#include <doctest.h>

#include <cmath>

#include "nscale/cell_solver.hpp"
#include "nscale/errors.hpp"

using namespace nscale;

namespace {

CoefficientField scalar_field_1d(int n, const std::function<double(double)>& k) {
  CoefficientField f;
  f.grid = TorusGrid(1, n);
  f.dim = 1;
  f.level = 1;
  f.values.resize(n);
  for (int i = 0; i < n; ++i) f.values[i] = k(static_cast<double>(i) / n);
  return f;
}

}  // namespace

TEST_CASE("constant coefficient: corrector vanishes") {
  const auto K = scalar_field_1d(32, [](double) { return 0.7; });
  const CorrectorField th = solve_cell(K);
  for (double v : th.theta) CHECK(std::abs(v) < 1e-12);
  for (double v : th.grad) CHECK(std::abs(v) < 1e-12);
  const LevelIntegral li = integrate_level(K, th);
  CHECK(li.symmetric(0, 0) == doctest::Approx(0.7).epsilon(1e-14));
}

TEST_CASE("1d harmonic-mean oracle, nodewise") {
  const double sigma = 0.7;
  const int n = 64;
  const auto K = scalar_field_1d(
      n, [&](double y) { return std::exp(-std::cos(2.0 * M_PI * y) / sigma); });
  const CorrectorField th = solve_cell(K);
  CHECK(th.residual <= 1e-10);

  // oracle: c = discrete harmonic mean, theta' = c/K - 1
  double hm = 0.0;
  for (int i = 0; i < n; ++i) hm += 1.0 / K.values[i];
  const double c = 1.0 / (hm / n);
  for (int i = 0; i < n; ++i) {
    const double oracle = c / K.values[i] - 1.0;
    CHECK(th.grad[i] == doctest::Approx(oracle).epsilon(1e-8));
  }

  const LevelIntegral li = integrate_level(K, th);
  CHECK(li.symmetric(0, 0) == doctest::Approx(c).epsilon(1e-9));
  CHECK(li.one_sided(0, 0) == doctest::Approx(c).epsilon(1e-9));
}

TEST_CASE("2d separable coefficient decouples into two 1d solves") {
  const int n = 32;
  auto k1 = [](double y) { return std::exp(-0.8 * std::cos(2.0 * M_PI * y)); };
  auto k2 = [](double y) { return std::exp(0.6 * std::sin(2.0 * M_PI * y)); };

  CoefficientField K;
  K.grid = TorusGrid(2, n);
  K.dim = 2;
  K.values.assign(K.grid.points() * 4, 0.0);
  for (std::size_t idx = 0; idx < K.grid.points(); ++idx) {
    double y[2];
    K.grid.node(idx, y);
    K.values[idx * 4 + 0] = k1(y[0]);
    K.values[idx * 4 + 3] = k2(y[1]);
  }
  const CorrectorField th = solve_cell(K);

  // 1d oracles per axis
  auto oracle = [&](const std::function<double(double)>& k, double y) {
    double hm = 0.0;
    for (int i = 0; i < n; ++i) hm += 1.0 / k(static_cast<double>(i) / n);
    return (1.0 / (hm / n)) / k(y) - 1.0;
  };
  for (std::size_t idx = 0; idx < K.grid.points(); ++idx) {
    double y[2];
    K.grid.node(idx, y);
    CHECK(th.grad[idx * 4 + 0] == doctest::Approx(oracle(k1, y[0])).epsilon(1e-7));
    CHECK(th.grad[idx * 4 + 3] == doctest::Approx(oracle(k2, y[1])).epsilon(1e-7));
    // cross entries vanish for separable diagonal coefficients
    CHECK(std::abs(th.grad[idx * 4 + 1]) < 1e-8);
    CHECK(std::abs(th.grad[idx * 4 + 2]) < 1e-8);
  }
}

TEST_CASE("mean and energy identities hold after the solve") {
  const int n = 48;
  CoefficientField K;
  K.grid = TorusGrid(2, n);
  K.dim = 2;
  K.values.assign(K.grid.points() * 4, 0.0);
  for (std::size_t idx = 0; idx < K.grid.points(); ++idx) {
    double y[2];
    K.grid.node(idx, y);
    const double w =
        std::exp(-0.7 * std::cos(2.0 * M_PI * y[0]) * std::cos(2.0 * M_PI * y[1]));
    // non-diagonal SPD coefficient
    K.values[idx * 4 + 0] = 1.2 * w;
    K.values[idx * 4 + 1] = 0.3 * w;
    K.values[idx * 4 + 2] = 0.3 * w;
    K.values[idx * 4 + 3] = 0.9 * w;
  }
  const CorrectorField th = solve_cell(K);
  const LevelIntegral li = integrate_level(K, th);
  CHECK((li.mean_i_plus_g - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <
        1e-10);
  CHECK((li.symmetric - li.one_sided).cwiseAbs().maxCoeff() <
        1e-8 * li.symmetric.norm());
  CHECK((li.symmetric - li.symmetric.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(li.symmetric);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("error paths: ellipticity and iteration cap") {
  auto K = scalar_field_1d(32, [](double y) { return std::cos(2.0 * M_PI * y); });
  CHECK_THROWS_AS(solve_cell(K), EllipticityError);

  auto K2 = scalar_field_1d(
      64, [](double y) { return std::exp(-2.0 * std::cos(2.0 * M_PI * y)); });
  CellSolveOptions opt;
  opt.max_iterations = 1;
  CHECK_THROWS_AS(solve_cell(K2, opt), ConvergenceError);
  try {
    solve_cell(K2, opt);
  } catch (const ConvergenceError& e) {
    CHECK(e.residual > 0.0);
    CHECK(e.iterations >= 1);
  }
}
