#pragma once

#include <span>

namespace nscale {

// Modified Bessel functions of the first kind, orders 0 and 1.
// Power series below |x| = 12, asymptotic expansion above; both accurate to
// ~1e-13 relative in the overlap region.
double bessel_i0(double x);
double bessel_i1(double x);

// exp(-x) * I_nu(x), overflow-safe for large x.
double bessel_i0_scaled(double x);
double bessel_i1_scaled(double x);

// log(sum(exp(v))) with max-shift.
double log_sum_exp(std::span<const double> v);

// log(mean(exp(v))) with max-shift.
double log_mean_exp(std::span<const double> v);

// Regularized upper incomplete gamma Q(a, x) = Gamma(a,x)/Gamma(a).
// Series for x < a+1, continued fraction otherwise.
double gamma_q(double a, double x);

// Upper tail of the chi-squared distribution with dof degrees of freedom.
double chi_squared_pvalue(double chi2, int dof);

}  // namespace nscale
