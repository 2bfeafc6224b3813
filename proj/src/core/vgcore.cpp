#include "vgcore.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "errors.hpp"
#include "specfun.hpp"

namespace vgfx {
namespace {

// Constants of the Bessel-form density that depend only on the parameters.
class BesselDensity {
 public:
  explicit BesselDensity(const DensityParams& p)
      : sigma2_(p.vg.sigma * p.vg.sigma), theta_(p.vg.theta) {
    const double nu = p.vg.nu;
    const double shape = p.horizon_t / nu;
    order_ = shape - 0.5;
    scale_ = std::sqrt(2.0 * sigma2_ / nu + theta_ * theta_);
    log_norm_ = std::log(2.0) - shape * std::log(nu) - 0.5 * std::log(2.0 * std::numbers::pi) -
                std::log(p.vg.sigma) - specfun::ln_gamma(shape);
    if (order_ > 0.0) {
      peak_log_term_ = -std::log(2.0) + specfun::ln_gamma(order_) +
                       order_ * std::log(2.0 * sigma2_ / (scale_ * scale_));
    }
  }

  double log_density(double x) const {
    const double tilt = theta_ * x / sigma2_;
    const double ax = std::abs(x);
    if (ax == 0.0) {
      if (order_ <= 0.0) return std::numeric_limits<double>::infinity();
      return log_norm_ + peak_log_term_;
    }
    return log_norm_ + tilt + order_ * (std::log(ax) - std::log(scale_)) +
           specfun::log_bessel_k(order_, scale_ * ax / sigma2_);
  }

 private:
  double sigma2_;
  double theta_;
  double order_ = 0.0;
  double scale_ = 0.0;
  double log_norm_ = 0.0;
  double peak_log_term_ = 0.0;
};

}  // namespace

void VgParams::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("VgParams: sigma must be > 0");
  if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("VgParams: nu must be > 0");
  if (!std::isfinite(theta)) throw DomainError("VgParams: theta must be finite");
  if (!(martingale_log_arg() > 0.0))
    throw DomainError("VgParams: 1 - theta*nu - sigma^2*nu/2 must be > 0");
}

bool VgParams::is_valid() const noexcept {
  return sigma > 0.0 && nu > 0.0 && std::isfinite(sigma) && std::isfinite(nu) &&
         std::isfinite(theta) && martingale_log_arg() > 0.0;
}

void GkParams::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("GkParams: sigma must be > 0");
}

void MarketEnv::validate() const {
  if (!(spot > 0.0) || !std::isfinite(spot)) throw DomainError("MarketEnv: spot must be > 0");
  if (!std::isfinite(r_d) || !std::isfinite(r_f))
    throw DomainError("MarketEnv: rates must be finite");
}

void DensityParams::validate() const {
  vg.validate();
  if (!(horizon_t > 0.0)) throw DomainError("DensityParams: horizon_t must be > 0");
  if (!std::isfinite(drift_m)) throw DomainError("DensityParams: drift_m must be finite");
}

double omega(const VgParams& vg) {
  vg.validate();
  return std::log(vg.martingale_log_arg()) / vg.nu;
}

double center_log_return(double z, const DensityParams& params) {
  return z - (params.drift_m + omega(params.vg)) * params.horizon_t;
}

double vg_log_density(double x_centered, const DensityParams& params) {
  params.validate();
  return BesselDensity(params).log_density(x_centered);
}

double vg_density(double x_centered, const DensityParams& params) {
  return std::exp(vg_log_density(x_centered, params));
}

double mixing_density(double x_centered, const DensityParams& params, const QuadratureSpec& quad) {
  params.validate();
  const double sigma2 = params.vg.sigma * params.vg.sigma;
  const double theta = params.vg.theta;
  const double nu = params.vg.nu;
  const double shape = params.horizon_t / nu;
  const double x = x_centered;

  // Integrand over v = ln g has exponent
  //   beta v - lambda e^v - mu e^-v + const, concave in v.
  const double beta = shape - 0.5;
  const double lambda = 1.0 / nu + theta * theta / (2.0 * sigma2);
  const double mu = x * x / (2.0 * sigma2);
  if (mu == 0.0 && beta <= 0.0) return std::numeric_limits<double>::infinity();

  const double log_shape_scale = std::log(shape * nu);
  const specfun::GammaShapeLogDensity gamma_part(shape);
  const double log_normal_scale = std::log(2.0 * std::numbers::pi * sigma2);
  auto h = [&](double v) {
    // ln g is v itself; exp(v) underflows long before the tail bracket ends.
    const double g = std::exp(v);
    return x * theta / sigma2 - 0.5 * (log_normal_scale + v) -
           (mu == 0.0 ? 0.0 : mu / g) - theta * theta / (2.0 * sigma2) * g +
           gamma_part(v - log_shape_scale);
  };
  // mu * exp(-v) would be 0 * inf far in the left tail when x = 0.
  auto dh = [&](double v) { return beta - lambda * std::exp(v) + (mu == 0.0 ? 0.0 : mu * std::exp(-v)); };

  const double y = (beta + std::sqrt(beta * beta + 4.0 * lambda * mu)) / (2.0 * lambda);
  const double mode = std::log(y);
  const double width = 1.0 / std::sqrt(lambda * y + mu / y);
  const double peak = h(mode);

  auto scaled_h = [&](double v) { return h(v) - peak; };
  const auto bracket = concave_tail_bracket(scaled_h, dh, mode, width,
                                            std::min(quad.abs_tol, quad.rel_tol * width) / 10.0);
  const std::array<double, 1> breaks{mode};
  const auto result =
      integrate([&](double v) { return std::exp(scaled_h(v)); }, bracket.lower, bracket.upper, quad,
                breaks);
  return result.value * std::exp(peak);
}

double log_likelihood(std::span<const double> returns, const DensityParams& params) {
  params.validate();
  if (returns.empty()) throw DataError("log_likelihood: empty return series");
  const BesselDensity density(params);
  const double shift = (params.drift_m + omega(params.vg)) * params.horizon_t;
  double total = 0.0;
  for (double z : returns) {
    const double ld = density.log_density(z - shift);
    if (ld == -std::numeric_limits<double>::infinity() || std::isnan(ld))
      return -std::numeric_limits<double>::infinity();
    total += ld;
  }
  return total;
}

VgMoments moments_from_params(const VgParams& vg) {
  vg.validate();
  const double s2 = vg.sigma * vg.sigma;
  return {vg.theta, s2, 3.0 * s2 * vg.theta * vg.nu, 3.0 * s2 * s2 * (1.0 + vg.nu)};
}

VgParams params_from_moments(double variance, double third_central, double fourth_central) {
  if (!(variance > 0.0)) throw DomainError("params_from_moments: variance must be > 0");
  if (!(fourth_central > 3.0 * variance * variance))
    throw DomainError("params_from_moments: excess kurtosis must be > 0");
  VgParams vg;
  vg.sigma = std::sqrt(variance);
  vg.nu = fourth_central / (3.0 * variance * variance) - 1.0;
  vg.theta = third_central / (3.0 * variance * vg.nu);
  vg.validate();
  return vg;
}

double kurtosis_from_nu(double nu) {
  if (!(nu >= 0.0)) throw DomainError("kurtosis_from_nu: nu must be >= 0");
  return 3.0 * (1.0 + nu);
}

}  // namespace vgfx
