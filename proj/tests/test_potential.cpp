// Potential catalog: evaluation, per-scale gradients, the eps-collapsed view
// and the sampled oscillation.

#include <doctest.h>

#include <cmath>

#include "nscale/errors.hpp"
#include "nscale/potential.hpp"
#include "nscale/rng.hpp"

using namespace nscale;

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

// V1 = cos(2π y1) sin(2π y2) with no registered analytic gradient, so every
// gradient call exercises the finite-difference fallback.
MultiscalePotential mixed_fd_potential(double fd_step) {
  MultiscalePotential::Callables c;
  c.v0 = [](const double* x) { return 0.5 * x[0] * x[0]; };
  c.grad_v0 = [](const double* x, double* g) { g[0] = x[0]; };
  c.v1 = [](const double*, const double* y) {
    return std::cos(kTwoPi * y[0]) * std::sin(kTwoPi * y[1]);
  };
  MultiscalePotential::Meta m;
  m.name = "mixed_fd";
  m.sup_v1 = 1.0;
  m.hessian_v0 = 1.0;
  m.fd_step = fd_step;
  return MultiscalePotential(1, 2, std::move(c), std::move(m));
}

}  // namespace

TEST_CASE("evaluate: quadratic well with no fluctuations") {
  const auto p = make_potential("quad_well", {});
  const double x = 2.0, y = 0.0;
  CHECK(p.evaluate(&x, &y) == doctest::Approx(2.0));
}

TEST_CASE("evaluate: cosine at the origin") {
  const auto p = make_potential("cosine1", {{"alpha", 1.0}});
  const double x = 0.0, y = 0.0;  // V0(0) = 0, so V = alpha cos(0) = 1
  CHECK(p.evaluate(&x, &y) == doctest::Approx(1.0));
}

TEST_CASE("evaluate: zero of the cosine factor") {
  const auto p = mixed_fd_potential(1e-5);
  const double x = 0.0;
  const double y[2] = {0.25, 0.25};
  CHECK(p.evaluate(&x, y) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("grad_scale: analytic slots") {
  const auto quad = make_potential("quad_well", {});
  double g = 0.0;
  const double x = 3.0, y = 0.0;
  quad.grad_scale(0, &x, &y, &g);
  CHECK(g == doctest::Approx(3.0));

  const auto cosine = make_potential("cosine1", {{"alpha", 1.0}});
  const double y4 = 0.25;
  cosine.grad_scale(1, &x, &y4, &g);
  CHECK(g == doctest::Approx(-kTwoPi));  // -2π sin(π/2)

  CHECK_THROWS_AS(cosine.grad_scale(2, &x, &y4, &g), InputError);
}

TEST_CASE("finite-difference gradient converges at order 2") {
  // analytic: d/dy1 = -2π sin(2π y1) sin(2π y2)
  const double x = 0.3;
  const double y[2] = {0.2, 0.15};
  const double exact = -kTwoPi * std::sin(kTwoPi * 0.2) * std::sin(kTwoPi * 0.15);
  double e[2];
  int i = 0;
  for (double h : {1e-3, 1e-4}) {
    const auto p = mixed_fd_potential(h);
    CHECK_FALSE(p.has_analytic_grad(1));
    double g;
    p.grad_scale(1, &x, y, &g);
    e[i++] = std::abs(g - exact);
  }
  CHECK(e[0] < 1e-4);
  CHECK(e[1] < e[0] / 50.0);  // central differences: x100 per decade of h
}

TEST_CASE("V1 periodicity in every slot") {
  SequenceRng rng(7);
  for (const char* name : {"cosine2", "prod2", "coupled_cos", "twoscale2d"}) {
    const auto p = make_potential(name, {});
    const int d = p.dim();
    const int ny = d * p.n_scales();
    for (int trial = 0; trial < 250; ++trial) {
      double x0[2], y[8], ys[8];
      for (int k = 0; k < d; ++k) x0[k] = rng.uniform(-2.0, 2.0);
      for (int k = 0; k < ny; ++k) y[k] = rng.uniform();
      const double base = p.v1(x0, y);
      for (int k = 0; k < ny; ++k) {
        std::copy(y, y + ny, ys);
        ys[k] += 1.0;
        CHECK(std::abs(p.v1(x0, ys) - base) < 1e-12);
      }
    }
  }
}

TEST_CASE("sampled |V1| stays within the declared bound") {
  SequenceRng rng(11);
  for (const char* name : {"cosine3", "prod2", "coupled2d", "mueller2d"}) {
    const auto p = make_potential(name, {});
    const int d = p.dim();
    const int ny = d * p.n_scales();
    for (int trial = 0; trial < 500; ++trial) {
      double x0[2], y[8];
      for (int k = 0; k < d; ++k) x0[k] = rng.uniform(-3.0, 3.0);
      for (int k = 0; k < ny; ++k) y[k] = rng.uniform();
      CHECK(std::abs(p.v1(x0, y)) <= p.sup_v1_bound() + 1e-12);
    }
  }
}

TEST_CASE("sampled Hessian of V0 stays within the declared constant") {
  for (const char* name : {"quad_well", "mueller2d"}) {
    const auto p = make_potential(name, {});
    const int d = p.dim();
    const double h = 1e-4;
    for (double t : {-4.0, -1.3, 0.0, 0.7, 3.2}) {
      double x[2] = {t, 0.5 * t};
      double norm = 0.0;
      for (int a = 0; a < d; ++a) {
        double xp[2] = {x[0], x[1]}, xm[2] = {x[0], x[1]};
        xp[a] += h;
        xm[a] -= h;
        // diagonal second difference as a cheap Hessian probe
        const double v = p.v0(x);
        norm = std::max(norm, std::abs(p.v0(xp) - 2 * v + p.v0(xm)) / (h * h));
      }
      CHECK(norm <= p.hessian_v0_bound() + 1e-4);
    }
  }
}

TEST_CASE("oscillation of catalog forms") {
  Box box;
  box.lo = Eigen::VectorXd::Constant(1, -3.0);
  box.hi = Eigen::VectorXd::Constant(1, 3.0);

  OscSpec spec;
  spec.x_box = box;

  const auto quad = make_potential("quad_well", {});
  OscSpec spec0 = spec;
  spec0.x_samples = 16;
  CHECK(oscillation(quad, spec0) == doctest::Approx(0.0));

  const auto cosine = make_potential("cosine1", {{"alpha", 1.0}});
  CHECK(oscillation(cosine, spec) == doctest::Approx(2.0).epsilon(1e-12));

  // cos + sin over two scales attains ±2 on a grid holding quarter points
  MultiscalePotential::Callables c;
  c.v0 = [](const double*) { return 0.0; };
  c.v1 = [](const double*, const double* y) {
    return std::cos(kTwoPi * y[0]) + std::sin(kTwoPi * y[1]);
  };
  MultiscalePotential cs(1, 2, std::move(c), {});
  CHECK(oscillation(cs, spec) == doctest::Approx(4.0).epsilon(1e-12));

  OscSpec empty = spec;
  empty.y_samples = 0;
  CHECK_THROWS_AS(oscillation(cs, empty), InputError);
}

TEST_CASE("oscillation is monotone under refinement") {
  // an off-grid phase keeps the sampled sup strictly below the true one
  MultiscalePotential::Callables c;
  c.v0 = [](const double*) { return 0.0; };
  c.v1 = [](const double*, const double* y) {
    return std::cos(kTwoPi * y[0] + 0.7);
  };
  MultiscalePotential p(1, 1, std::move(c), {});
  Box box;
  box.lo = Eigen::VectorXd::Constant(1, -1.0);
  box.hi = Eigen::VectorXd::Constant(1, 1.0);
  double prev = 0.0;
  for (int n : {16, 32, 64, 128}) {
    OscSpec spec;
    spec.x_box = box;
    spec.x_samples = 4;
    spec.y_samples = n;
    const double osc = oscillation(p, spec);
    CHECK(osc >= prev - 1e-15);
    CHECK(osc <= 2.0);
    prev = osc;
  }
}

TEST_CASE("epsilon view: no fluctuations reduces to V0") {
  const auto p = make_potential("quad_well", {});
  for (double eps : {0.5, 0.1}) {
    const auto view = epsilon_view(p, eps);
    for (double x : {-1.5, 0.2, 2.0}) {
      double g;
      view.grad(&x, &g);
      CHECK(g == doctest::Approx(x).epsilon(1e-14));
      CHECK(view.evaluate(&x) == doctest::Approx(0.5 * x * x).epsilon(1e-14));
    }
  }
  CHECK_THROWS_AS(epsilon_view(p, 0.0), InputError);
  CHECK_THROWS_AS(epsilon_view(p, -1.0), InputError);
}

TEST_CASE("epsilon view: chain rule for the cosine") {
  const auto p = make_potential("cosine1", {{"alpha", 1.0}});
  const double eps = 0.25;
  const auto view = epsilon_view(p, eps);
  for (double x : {-0.8, 0.11, 1.9}) {
    double g;
    view.grad(&x, &g);
    const double expect = x - (kTwoPi / eps) * std::sin(kTwoPi * x / eps);
    CHECK(g == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("epsilon gradient matches differences of the collapsed potential") {
  const auto p = make_potential("prod2", {});
  const double eps = 0.05;
  const auto view = epsilon_view(p, eps);
  const double h = 1e-7;
  for (double x : {0.4, 1.234}) {
    double g;
    view.grad(&x, &g);
    double xp = x + h, xm = x - h;
    const double fd = (view.evaluate(&xp) - view.evaluate(&xm)) / (2.0 * h);
    CHECK(g == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("catalog rejects unknown names and bad params") {
  CHECK_THROWS_AS(make_potential("no_such_potential", {}), ConfigError);
  CHECK_THROWS_AS(make_potential("coupled_cos", {{"delta", -1.0}}), ConfigError);
  for (const auto& name : potential_catalog()) {
    const auto p = make_potential(name, {});
    CHECK(p.name() == name);
    CHECK(p.declared_osc().has_value());
  }
}
