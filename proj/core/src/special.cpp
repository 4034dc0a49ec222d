#include "nscale/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nscale/errors.hpp"

namespace nscale {

namespace {

constexpr double kSeriesSwitch = 18.0;

// Sum of the ascending series for I_nu, nu in {0, 1}.
double bessel_series(int nu, double x) {
  const double q = 0.25 * x * x;
  double term = nu == 0 ? 1.0 : 0.5 * x;
  double sum = term;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * (k + nu));
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

// Asymptotic expansion of exp(-x) I_nu(x), truncated at the smallest term.
double bessel_asymptotic_scaled(int nu, double x) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 40; ++k) {
    const double f = (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * x * k);
    term *= -f;
    if (std::abs(term) >= prev) break;  // series started diverging
    sum += term;
    prev = std::abs(term);
  }
  return sum / std::sqrt(2.0 * M_PI * x);
}

}  // namespace

double bessel_i0(double x) {
  x = std::abs(x);
  if (x <= kSeriesSwitch) return bessel_series(0, x);
  return bessel_asymptotic_scaled(0, x) * std::exp(x);
}

double bessel_i1(double x) {
  const double s = x < 0 ? -1.0 : 1.0;
  x = std::abs(x);
  if (x <= kSeriesSwitch) return s * bessel_series(1, x);
  return s * bessel_asymptotic_scaled(1, x) * std::exp(x);
}

double bessel_i0_scaled(double x) {
  x = std::abs(x);
  if (x <= kSeriesSwitch) return bessel_series(0, x) * std::exp(-x);
  return bessel_asymptotic_scaled(0, x);
}

double bessel_i1_scaled(double x) {
  const double s = x < 0 ? -1.0 : 1.0;
  x = std::abs(x);
  if (x <= kSeriesSwitch) return s * bessel_series(1, x) * std::exp(-x);
  return s * bessel_asymptotic_scaled(1, x);
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) throw InputError("log_sum_exp: empty input");
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double log_mean_exp(std::span<const double> v) {
  return log_sum_exp(v) - std::log(static_cast<double>(v.size()));
}

namespace {

double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int k = 1; k < 500; ++k) {
    term *= x / (a + k);
    sum += term;
    if (term < sum * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_cf(double a, double x) {
  // Lentz's continued fraction for Q(a, x).
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw InputError("gamma_q: requires a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi_squared_pvalue(double chi2, int dof) {
  if (dof <= 0) throw InputError("chi_squared_pvalue: dof must be positive");
  if (chi2 <= 0.0) return 1.0;
  return gamma_q(0.5 * dof, 0.5 * chi2);
}

}  // namespace nscale
