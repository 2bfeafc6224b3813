#pragma once

#include <span>

#include "quadrature.hpp"

namespace vgfx {

// Trading-day count used to annualize daily return statistics.
inline constexpr double kTradingDaysPerYear = 252.0;
// Day-count basis for option maturities (ACT/365).
inline constexpr double kCalendarDaysPerYear = 365.0;

/// Variance gamma parameters: Brownian motion with drift `theta` and
/// volatility `sigma` run on a gamma clock of unit mean rate and variance
/// rate `nu`. All rates are per year.
struct VgParams {
  double sigma = 0.0;
  double nu = 0.0;
  double theta = 0.0;

  /// 1 - theta nu - sigma^2 nu / 2, the argument of the martingale log.
  double martingale_log_arg() const { return 1.0 - theta * nu - 0.5 * sigma * sigma * nu; }
  /// Throws DomainError naming the violated invariant.
  void validate() const;
  bool is_valid() const noexcept;
};

struct GkParams {
  double sigma = 0.0;

  void validate() const;
};

/// Spot (domestic per unit of foreign currency) and continuously
/// compounded domestic and foreign rates.
struct MarketEnv {
  double spot = 0.0;
  double r_d = 0.0;
  double r_f = 0.0;

  void validate() const;
};

struct DensityParams {
  VgParams vg;
  double horizon_t = 0.0;  // years
  double drift_m = 0.0;    // per year

  void validate() const;
};

/// Martingale correction per unit time: ln(1 - theta nu - sigma^2 nu / 2) / nu.
double omega(const VgParams& vg);

/// Removes the calendar drift and the martingale correction from a log
/// return z over params.horizon_t: x = z - (m + omega) t.
double center_log_return(double z, const DensityParams& params);

/// Density of the centered log return x under VG(sigma, nu, theta) at
/// horizon t, in Bessel-K form. Infinite at x = 0 when t / nu <= 1/2.
double vg_density(double x_centered, const DensityParams& params);
double vg_log_density(double x_centered, const DensityParams& params);

/// Same density evaluated as the gamma mixture of normals by quadrature.
double mixing_density(double x_centered, const DensityParams& params, const QuadratureSpec& quad = {});

/// Sum of log densities of the centered returns; -inf when any density
/// underflows to zero.
double log_likelihood(std::span<const double> returns, const DensityParams& params);

/// Unit-time moment formulas. `theta_mean_term` is the theta part of the
/// mean c + theta; the linear drift c is not a VG parameter.
struct VgMoments {
  double theta_mean_term = 0.0;
  double variance = 0.0;
  double third_central = 0.0;
  double fourth_central = 0.0;
};

VgMoments moments_from_params(const VgParams& vg);

/// Inverts the variance, third and fourth moment formulas. Throws
/// DomainError when the excess kurtosis is not positive.
VgParams params_from_moments(double variance, double third_central, double fourth_central);

double kurtosis_from_nu(double nu);

}  // namespace vgfx
