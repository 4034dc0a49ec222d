// Hierarchy recursion: base-case weights, the d = 1 nested harmonic-mean
// formula K_i = (∫ e^{+V/sigma} dy_{i+1}..dy_N)^{-1}, and the ellipticity
// floor 1/Zhat_k. All stored tensors carry the weight e^{-V1/sigma}; the
// e^{-V0/sigma} factor sits in log_scale, so the d = 1 oracles below are
// quadratures of e^{±V1/sigma} only.

#include <doctest.h>

#include <cmath>

#include "nscale/hierarchy.hpp"
#include "nscale/errors.hpp"

using namespace nscale;

namespace {

std::vector<TorusGrid> grids1(int d, int n, int N) {
  return std::vector<TorusGrid>(N, TorusGrid(d, n));
}

}  // namespace

TEST_CASE("level N field is the Boltzmann weight exactly") {
  const auto p = make_potential("cosine2", {{"alpha1", 0.6}, {"alpha2", 0.5}});
  const double sigma = 0.8;
  Eigen::VectorXd x0(1);
  x0[0] = 1.3;
  std::vector<Eigen::VectorXd> prefix{Eigen::VectorXd::Constant(1, 0.37)};
  const auto grids = grids1(1, 32, 2);
  const CoefficientField f = level_field(p, sigma, 2, x0, prefix, grids);
  CHECK(f.log_scale == doctest::Approx(-p.v0(x0.data()) / sigma));
  for (std::size_t i = 0; i < f.grid.points(); ++i) {
    double y[1];
    f.grid.node(i, y);
    const double yy[2] = {0.37, y[0]};
    const double expect = std::exp(-p.v1(x0.data(), yy) / sigma);
    CHECK(f.values[i] == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("no fluctuations: every level tensor is the identity weight") {
  const auto p = make_potential("quad_well", {});
  Eigen::VectorXd x0(1);
  x0[0] = 0.7;
  const auto grids = grids1(1, 16, 1);
  const HierarchySolution sol = solve_hierarchy(p, 1.0, x0, grids);
  CHECK(sol.k_eff(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sol.z1 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(sol.effective_tensor_raw()(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sol.levels.size() == 1);
}

TEST_CASE("d = 1 level tensor equals the inverse of the e^{+V/sigma} quadrature") {
  const auto p = make_potential("prod2", {{"alpha", 1.0}, {"beta", 0.5}});
  const double sigma = 1.0;
  Eigen::VectorXd x0(1);
  x0[0] = 0.4;
  const int n = 64;
  const auto grids = grids1(1, n, 2);

  const CoefficientField k1 = level_field(p, sigma, 1, x0, {}, grids);
  for (std::size_t i = 0; i < k1.grid.points(); ++i) {
    double y1[1];
    k1.grid.node(i, y1);
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      const double y[2] = {y1[0], static_cast<double>(j) / n};
      acc += std::exp(p.v1(x0.data(), y) / sigma);
    }
    const double oracle = 1.0 / (acc / n);
    CHECK(k1.values[i] == doctest::Approx(oracle).epsilon(1e-9));
  }
}

TEST_CASE("full chain: k_eff is the nested harmonic mean in d = 1") {
  const auto p = make_potential("cosine2", {{"alpha1", 0.6}, {"alpha2", 0.5}});
  const double sigma = 0.9;
  Eigen::VectorXd x0(1);
  x0[0] = -0.6;
  const int n = 48;
  const auto grids = grids1(1, n, 2);
  const HierarchySolution sol = solve_hierarchy(p, sigma, x0, grids);

  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double y[2] = {static_cast<double>(i) / n, static_cast<double>(j) / n};
      acc += std::exp(p.v1(x0.data(), y) / sigma);
    }
  const double oracle = 1.0 / (acc / (n * n));
  CHECK(sol.k_eff(0, 0) == doctest::Approx(oracle).epsilon(1e-9));

  CHECK(sol.levels.size() == 2);
  CHECK(sol.levels[0].field.level == 2);
  CHECK(sol.levels[1].field.level == 1);
  CHECK(sol.diag.max_mean_gap < 1e-10);
  CHECK(sol.diag.max_energy_gap < 1e-8);
  CHECK(sol.diag.max_residual <= 1e-10);
  CHECK(sol.diag.cell_solves == static_cast<std::size_t>(n + 1));
}

TEST_CASE("ellipticity floor: equality without fluctuations, margin with them") {
  Eigen::VectorXd x0(1);
  x0[0] = 0.2;

  const auto quad = make_potential("quad_well", {});
  const auto g1 = grids1(1, 16, 1);
  const CoefficientField f0 = level_field(quad, 1.0, 1, x0, {}, g1);
  const double floor0 = std::exp(-log_zhat(quad, 1.0, 1, x0, {}, g1));
  CHECK(f0.min_eigenvalue() == doctest::Approx(floor0).epsilon(1e-12));

  const auto cosine = make_potential("cosine1", {{"alpha", 1.0}});
  const auto g2 = grids1(1, 64, 1);
  const CoefficientField f1 = level_field(cosine, 1.0, 1, x0, {}, g2);
  const double floor1 = std::exp(-log_zhat(cosine, 1.0, 1, x0, {}, g2));
  CHECK(f1.min_eigenvalue() > floor1);
  // K_1 is the constant harmonic mean here; the floor is 1/I0(1)^2 of it
  CHECK(f1.min_eigenvalue() == doctest::Approx(f1.values[0]).epsilon(1e-9));
}

TEST_CASE("hierarchy input validation") {
  const auto p = make_potential("cosine2", {});
  Eigen::VectorXd x0(1);
  x0[0] = 0.0;
  CHECK_THROWS_AS(solve_hierarchy(p, -1.0, x0, grids1(1, 16, 2)), InputError);
  CHECK_THROWS_AS(solve_hierarchy(p, 1.0, x0, grids1(1, 16, 1)), InputError);
  CHECK_THROWS_AS(level_field(p, 1.0, 3, x0, {}, grids1(1, 16, 2)), InputError);
  CHECK_THROWS_AS(level_field(p, 1.0, 2, x0, {}, grids1(1, 16, 2)), InputError);
  Eigen::VectorXd x2(2);
  x2.setZero();
  CHECK_THROWS_AS(solve_hierarchy(p, 1.0, x2, grids1(1, 16, 2)), InputError);
}

TEST_CASE("d = 2, N = 2 chain runs and keeps SPD tensors") {
  const auto p = make_potential("twoscale2d", {});
  Eigen::VectorXd x0(2);
  x0 << 0.3, -0.2;
  const auto grids = grids1(2, 12, 2);
  const HierarchySolution sol = solve_hierarchy(p, 1.0, x0, grids);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sol.k_eff);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  CHECK(sol.diag.min_field_eigenvalue > 0.0);
  CHECK((sol.k_eff - sol.k_eff.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  // M = k_eff / z1 has eigenvalues in (0, 1]
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(sol.effective_tensor_raw());
  CHECK(em.eigenvalues().minCoeff() > 0.0);
  CHECK(em.eigenvalues().maxCoeff() <= 1.0 + 1e-10);
}
