// Special-function checks against independent quadrature oracles.
//
// The modified Bessel functions obey
//   I_n(s) = ∫_0^1 e^{s cos(2π y)} cos(2π n y) dy,
// which a periodic trapezoid rule evaluates to spectral accuracy; that
// integral is the oracle here, the series/asymptotic implementation the
// subject.

#include <doctest.h>

#include <cmath>
#include <vector>

#include "nscale/errors.hpp"
#include "nscale/special.hpp"

using namespace nscale;

namespace {

double bessel_quadrature(int n, double s, int points = 4096) {
  double acc = 0.0;
  for (int i = 0; i < points; ++i) {
    const double y = static_cast<double>(i) / points;
    acc += std::exp(s * std::cos(2.0 * M_PI * y)) * std::cos(2.0 * M_PI * n * y);
  }
  return acc / points;
}

}  // namespace

TEST_CASE("bessel I0/I1 match the integral representation") {
  for (double s : {0.1, 0.5, 1.0, 3.0, 7.0, 11.0, 12.5, 20.0}) {
    const double i0q = bessel_quadrature(0, s);
    const double i1q = bessel_quadrature(1, s);
    CHECK(bessel_i0(s) == doctest::Approx(i0q).epsilon(1e-12));
    CHECK(bessel_i1(s) == doctest::Approx(i1q).epsilon(1e-12));
  }
}

TEST_CASE("bessel scaled variants agree with the plain ones") {
  for (double s : {0.5, 5.0, 12.0, 40.0}) {
    CHECK(bessel_i0_scaled(s) ==
          doctest::Approx(bessel_i0(s) * std::exp(-s)).epsilon(1e-12));
    CHECK(bessel_i1_scaled(s) ==
          doctest::Approx(bessel_i1(s) * std::exp(-s)).epsilon(1e-12));
  }
  // no overflow far beyond exp range
  CHECK(std::isfinite(bessel_i0_scaled(5000.0)));
  CHECK(bessel_i0_scaled(5000.0) > 0.0);
}

TEST_CASE("bessel parity and base values") {
  CHECK(bessel_i0(0.0) == doctest::Approx(1.0));
  CHECK(bessel_i1(0.0) == doctest::Approx(0.0));
  CHECK(bessel_i1(-2.0) == doctest::Approx(-bessel_i1(2.0)).epsilon(1e-14));
  CHECK(bessel_i0(-2.0) == doctest::Approx(bessel_i0(2.0)).epsilon(1e-14));
}

TEST_CASE("log_sum_exp shifts out the max") {
  std::vector<double> v{-1000.0, -1000.0};
  CHECK(log_sum_exp(v) == doctest::Approx(-1000.0 + std::log(2.0)).epsilon(1e-14));
  std::vector<double> big{700.0, 710.0};
  CHECK(log_sum_exp(big) ==
        doctest::Approx(710.0 + std::log1p(std::exp(-10.0))).epsilon(1e-14));
  CHECK_THROWS_AS(log_sum_exp(std::vector<double>{}), InputError);
}

TEST_CASE("chi-squared tail probabilities at textbook quantiles") {
  // 95% and 99% quantiles of chi2(1) and chi2(31)
  CHECK(chi_squared_pvalue(3.841458821, 1) == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(chi_squared_pvalue(6.634896601, 1) == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(chi_squared_pvalue(52.19139483, 31) == doctest::Approx(0.01).epsilon(1e-5));
  CHECK(chi_squared_pvalue(0.0, 5) == doctest::Approx(1.0));
  CHECK_THROWS_AS(chi_squared_pvalue(1.0, 0), InputError);
}

TEST_CASE("gamma_q is a complement of the series branch") {
  // continuity across the series/continued-fraction switch x = a+1
  for (double a : {0.5, 2.0, 15.5}) {
    const double left = gamma_q(a, a + 0.999999);
    const double right = gamma_q(a, a + 1.000001);
    CHECK(left == doctest::Approx(right).epsilon(1e-6));
  }
}
