#include "pricing.hpp"

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "errors.hpp"
#include "specfun.hpp"

namespace vgfx {
namespace {

// Undiscounted Black call on a forward, with the zero-variance limit.
double black_call_undiscounted(double forward, double strike, double total_vol) {
  if (!(total_vol > 0.0)) return std::max(forward - strike, 0.0);
  const double d1 = (std::log(forward / strike) + 0.5 * total_vol * total_vol) / total_vol;
  return forward * specfun::norm_cdf(d1) - strike * specfun::norm_cdf(d1 - total_vol);
}

void validate_inputs(const MarketEnv& env, const VgParams& vg, const OptionSpec& opt) {
  env.validate();
  vg.validate();
  opt.validate();
}

}  // namespace

void OptionSpec::validate() const {
  if (!(strike > 0.0) || !std::isfinite(strike)) throw DomainError("OptionSpec: strike must be > 0");
  if (!(maturity_t > 0.0) || !std::isfinite(maturity_t))
    throw DomainError("OptionSpec: maturity_t must be > 0");
}

std::string_view to_string(PricerKind kind) {
  switch (kind) {
    case PricerKind::gk:
      return "gk";
    case PricerKind::vg_closed_form:
      return "closed-form";
    case PricerKind::vg_mixing_fallback:
      return "mixing-fallback";
    case PricerKind::monte_carlo:
      return "monte-carlo";
  }
  return "unknown";
}

double price_gk(const MarketEnv& env, const GkParams& gk, const OptionSpec& opt) {
  env.validate();
  gk.validate();
  opt.validate();
  const double t = opt.maturity_t;
  const double forward = env.spot * std::exp((env.r_d - env.r_f) * t);
  return std::exp(-env.r_d * t) * black_call_undiscounted(forward, opt.strike, gk.sigma * std::sqrt(t));
}

VgPricingIntermediates vg_intermediates(const MarketEnv& env, const VgParams& vg, const OptionSpec& opt) {
  validate_inputs(env, vg, opt);
  const double sigma2 = vg.sigma * vg.sigma;
  const double ratio = vg.theta / vg.sigma;
  VgPricingIntermediates out;
  out.s = vg.sigma / std::sqrt(1.0 + ratio * ratio * vg.nu / 2.0);
  // Positive theta must skew the price to the right; this sign is the one
  // that agrees with the mixing and Monte Carlo pricers.
  out.alpha = vg.theta * out.s / sigma2;
  out.c1 = vg.nu * (out.alpha + out.s) * (out.alpha + out.s) / 2.0;
  out.c2 = vg.nu * out.alpha * out.alpha / 2.0;
  if (!(out.c1 < 1.0) || !(out.c2 < 1.0))
    throw DomainError("vg_intermediates: closed form requires c1 < 1 and c2 < 1");
  const double t = opt.maturity_t;
  out.d = (std::log(env.spot / opt.strike) + (env.r_d - env.r_f) * t +
           t / vg.nu * (std::log1p(-out.c1) - std::log1p(-out.c2))) /
          out.s;
  return out;
}

double price_vg_closed(const MarketEnv& env, const VgParams& vg, const OptionSpec& opt,
                       const QuadratureSpec& quad) {
  const auto k = vg_intermediates(env, vg, opt);
  const double t = opt.maturity_t;
  const double shape = t / vg.nu;
  const double spot_leg = specfun::psi_mixture(k.d * std::sqrt((1.0 - k.c1) / vg.nu),
                                               (k.alpha + k.s) * std::sqrt(vg.nu / (1.0 - k.c1)),
                                               shape, quad);
  const double strike_leg = specfun::psi_mixture(k.d * std::sqrt((1.0 - k.c2) / vg.nu),
                                                 k.alpha * std::sqrt(vg.nu / (1.0 - k.c2)), shape, quad);
  return env.spot * std::exp(-env.r_f * t) * spot_leg - opt.strike * std::exp(-env.r_d * t) * strike_leg;
}

double price_vg_mixing(const MarketEnv& env, const VgParams& vg, const OptionSpec& opt,
                       const QuadratureSpec& quad) {
  validate_inputs(env, vg, opt);
  quad.validate();
  const double t = opt.maturity_t;
  const double shape = t / vg.nu;
  const double sigma2 = vg.sigma * vg.sigma;
  const double log_forward0 = std::log(env.spot) + (env.r_d - env.r_f + omega(vg)) * t;
  const double discount = std::exp(-env.r_d * t);
  // Gamma time g = t e^w, w = ln(u / shape) with u ~ Gamma(shape, 1).
  // Conditional forward grows like exp(kappa * shape * e^w).
  const double kappa = (vg.theta + 0.5 * sigma2) * vg.nu;

  const specfun::GammaShapeLogDensity gamma_part(shape);
  auto envelope = [&](double w) {
    return log_forward0 - env.r_d * t + gamma_part(w) +
           kappa * shape * std::exp(w);
  };
  auto envelope_slope = [&](double w) { return shape * (1.0 - (1.0 - kappa) * std::exp(w)); };
  const double mode = -std::log1p(-kappa);
  const auto bracket =
      concave_tail_bracket(envelope, envelope_slope, mode, 1.0 / std::sqrt(shape), quad.abs_tol / 10.0);

  auto integrand = [&](double w) {
    const double weight = std::exp(gamma_part(w));
    if (weight == 0.0) return 0.0;
    const double g = t * std::exp(w);
    const double forward = std::exp(log_forward0 + (vg.theta + 0.5 * sigma2) * g);
    return discount * black_call_undiscounted(forward, opt.strike, vg.sigma * std::sqrt(g)) * weight;
  };
  // For small shapes most of the gamma mass sits far left of w = 0, where
  // the conditional price switches on once the diffusion sigma sqrt(g) or
  // the jump drift (theta + sigma^2 / 2) g reaches the log-moneyness. Those
  // scales are breakpoints so the initial partition cannot step over them.
  std::vector<double> breaks = gamma_part.breakpoints(bracket.lower);
  breaks.push_back(mode);
  const double log_moneyness = std::abs(log_forward0 - std::log(opt.strike));
  if (log_moneyness > 0.0) {
    for (double z : {0.25, 1.0, 4.0}) {
      breaks.push_back(2.0 * std::log(log_moneyness / (z * vg.sigma)) - std::log(t));
      const double jump_rate = std::abs(vg.theta + 0.5 * sigma2);
      if (jump_rate > 0.0) breaks.push_back(std::log(z * log_moneyness / (jump_rate * t)));
    }
  }
  return integrate(integrand, bracket.lower, bracket.upper, quad, breaks).value;
}

McEstimate price_vg_mc(const MarketEnv& env, const VgParams& vg, const OptionSpec& opt,
                       std::uint64_t n_paths, std::uint64_t seed) {
  validate_inputs(env, vg, opt);
  if (n_paths < 1) throw DomainError("price_vg_mc: n_paths must be >= 1");
  const double t = opt.maturity_t;
  const double drift = (env.r_d - env.r_f + omega(vg)) * t;
  const double growth = std::exp((env.r_d - env.r_f) * t);

  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gamma_time(t / vg.nu, vg.nu);
  std::normal_distribution<double> normal(0.0, 1.0);

  double payoff_sum = 0.0;
  double payoff_sq = 0.0;
  double ratio_sum = 0.0;
  double ratio_sq = 0.0;
  for (std::uint64_t i = 0; i < n_paths; ++i) {
    const double g = gamma_time(rng);
    const double z = normal(rng);
    const double terminal = env.spot * std::exp(drift + vg.theta * g + vg.sigma * std::sqrt(g) * z);
    const double payoff = std::max(terminal - opt.strike, 0.0);
    const double ratio = terminal / (env.spot * growth);
    payoff_sum += payoff;
    payoff_sq += payoff * payoff;
    ratio_sum += ratio;
    ratio_sq += ratio * ratio;
  }
  const double n = static_cast<double>(n_paths);
  auto standard_error = [n](double sum, double sq) {
    if (n < 2.0) return 0.0;
    const double mean = sum / n;
    const double var = std::max(sq / n - mean * mean, 0.0) * n / (n - 1.0);
    return std::sqrt(var / n);
  };
  const double discount = std::exp(-env.r_d * t);
  McEstimate out;
  out.price = discount * payoff_sum / n;
  out.standard_error = discount * standard_error(payoff_sum, payoff_sq);
  out.forward_ratio = ratio_sum / n;
  out.forward_ratio_error = standard_error(ratio_sum, ratio_sq);
  return out;
}

PricedValue price_vg(const MarketEnv& env, const VgParams& vg, const OptionSpec& opt,
                     const QuadratureSpec& quad) {
  validate_inputs(env, vg, opt);
  VgPricingIntermediates k;
  bool closed_form_ok = true;
  try {
    k = vg_intermediates(env, vg, opt);
  } catch (const DomainError&) {
    closed_form_ok = false;
  }
  if (closed_form_ok) return {price_vg_closed(env, vg, opt, quad), PricerKind::vg_closed_form};
  return {price_vg_mixing(env, vg, opt, quad), PricerKind::vg_mixing_fallback};
}

}  // namespace vgfx
