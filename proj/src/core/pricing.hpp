#pragma once

#include <cstdint>
#include <string_view>

#include "quadrature.hpp"
#include "vgcore.hpp"

namespace vgfx {

enum class OptionKind { european_call };

struct OptionSpec {
  double strike = 0.0;
  double maturity_t = 0.0;  // years
  OptionKind kind = OptionKind::european_call;

  void validate() const;
};

/// Garman-Kohlhagen call: S e^{-r_f T} N(d1) - K e^{-r_d T} N(d2).
double price_gk(const MarketEnv& env, const GkParams& gk, const OptionSpec& opt);

/// Quantities shared by the two Psi terms of the VG closed form.
struct VgPricingIntermediates {
  double d = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double alpha = 0.0;
  double s = 0.0;
};

/// Throws DomainError when 1 - c1 <= 0 or 1 - c2 <= 0; the closed form is
/// then unavailable and price_vg falls back to the mixing quadrature.
VgPricingIntermediates vg_intermediates(const MarketEnv& env, const VgParams& vg, const OptionSpec& opt);

/// VG call as a difference of two Psi gamma mixtures.
double price_vg_closed(const MarketEnv& env, const VgParams& vg, const OptionSpec& opt,
                       const QuadratureSpec& quad = {});

/// VG call as the gamma-time average of conditional Garman-Kohlhagen
/// prices, integrated by adaptive quadrature.
double price_vg_mixing(const MarketEnv& env, const VgParams& vg, const OptionSpec& opt,
                       const QuadratureSpec& quad = {});

struct McEstimate {
  double price = 0.0;
  double standard_error = 0.0;
  // Sample mean and standard error of S_T e^{-(r_d - r_f) T} / S_0.
  double forward_ratio = 0.0;
  double forward_ratio_error = 0.0;
};

/// Plain Monte Carlo under the risk-neutral VG dynamics; deterministic for
/// a given seed. Each call owns its generator.
McEstimate price_vg_mc(const MarketEnv& env, const VgParams& vg, const OptionSpec& opt,
                       std::uint64_t n_paths, std::uint64_t seed);

enum class PricerKind { gk, vg_closed_form, vg_mixing_fallback, monte_carlo };

std::string_view to_string(PricerKind kind);

struct PricedValue {
  double price = 0.0;
  PricerKind pricer = PricerKind::vg_closed_form;
};

/// Public VG pricing entry: closed form, or the mixing quadrature when the
/// closed form's parameter conditions fail.
PricedValue price_vg(const MarketEnv& env, const VgParams& vg, const OptionSpec& opt,
                     const QuadratureSpec& quad = {});

}  // namespace vgfx
