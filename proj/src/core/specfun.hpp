#pragma once

#include <cmath>
#include <vector>

#include "quadrature.hpp"

// Special-function kernel: log-gamma, modified Bessel K of real order,
// the standard normal CDF and the gamma mixture of the normal CDF used by
// the variance gamma closed-form price. All functions are pure.
namespace vgfx::specfun {

/// ln Gamma(x) for x > 0. Throws DomainError for x <= 0.
double ln_gamma(double x);

/// Modified Bessel function of the second kind K_order(x), x > 0.
/// Throws DomainError for x <= 0 and std::overflow_error when the value is
/// not representable as a double.
double bessel_k(double order, double x);

/// ln K_order(x). Stays finite where bessel_k itself would overflow.
double log_bessel_k(double order, double x);

double norm_cdf(double x);
double norm_pdf(double x);

/// Psi(a, b, g) = int_0^inf N(a/sqrt(u) + b sqrt(u)) u^(g-1) e^(-u) / Gamma(g) du.
/// The result lies in [0, 1]. Throws QuadratureError if `quad` cannot be met.
double psi_mixture(double a, double b, double gamma_shape, const QuadratureSpec& quad = {});

/// Stirling remainder ln Gamma(x) - [(x - 1/2) ln x - x + ln(2 pi)/2], x > 0.
double ln_gamma_stirling_remainder(double x);

/// Log-density of w = ln(u / g) for u ~ Gamma(g, 1):
///   c(g) - g (e^w - 1 - w),  c(g) = g ln g - g - ln Gamma(g).
/// Written around the mode so it stays accurate for very large shapes.
class GammaShapeLogDensity {
 public:
  explicit GammaShapeLogDensity(double gamma_shape);
  double operator()(double w) const { return mode_value_ - shape_ * (std::expm1(w) - w); }
  double slope(double w) const { return -shape_ * std::expm1(w); }
  double shape() const { return shape_; }
  /// Partition points for integrating over [lower, upper]. For shapes below
  /// one the left tail is a long, slowly decaying exponential whose e^w
  /// correction near the mode a coarse rule steps over, so points at
  /// -1, -2, -4, ... are included down to `lower`.
  std::vector<double> breakpoints(double lower) const;

 private:
  double shape_;
  double mode_value_;
};

}  // namespace vgfx::specfun
