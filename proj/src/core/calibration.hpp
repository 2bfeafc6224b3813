#pragma once

#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "marketdata.hpp"
#include "pricing.hpp"
#include "quadrature.hpp"
#include "vgcore.hpp"

namespace vgfx {

/// Nelder-Mead coefficients and stopping rules.
struct SimplexConfig {
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  double x_tol = 1e-8;
  double f_tol = 1e-14;
  int max_iters = 2000;
  // Number of times the simplex is rebuilt around the best point after a run ends.
  int restarts = 1;

  void validate() const;
};

/// Per-coordinate box. Empty vectors mean unbounded.
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  void validate(std::size_t dimension) const;
  std::vector<double> project(std::span<const double> x) const;
};

struct SimplexResult {
  std::vector<double> x;
  double loss = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

/// Minimizes `objective` from `initial`. Trial points outside `bounds` are
/// evaluated at their projection plus 1e6 times the projection distance.
/// Hitting max_iters yields converged = false rather than an exception. A
/// non-finite objective at the initial point throws DomainError.
SimplexResult nelder_mead(const Objective& objective, std::span<const double> initial, const Box& bounds,
                          const SimplexConfig& config = {});

enum class ModelKind { gk, vg, symmetric_vg };

/// "gk", "vg" or "svg".
std::string_view to_string(ModelKind model);
/// Accepts the to_string spellings; throws UsageError otherwise.
ModelKind parse_model_kind(std::string_view name);

struct CalibrationResult {
  ModelKind model = ModelKind::vg;
  double sigma = 0.0;
  double nu = 0.0;     // 0 for gk
  double theta = 0.0;  // 0 for gk and svg
  double loss = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  // Closed form was unavailable for some evaluation and the mixing
  // quadrature priced instead.
  bool fallback_used = false;
  // Moment inversion failed and the initial guess used nu = 0.1.
  bool moment_fallback = false;
  // Parameters copied from the previous week instead of fitted.
  bool carried_forward = false;

  VgParams vg() const { return {sigma, nu, theta}; }
  GkParams gk() const { return {sigma}; }
};

inline constexpr std::size_t kMinHistoricalReturns = 30;

/// Historical fit on daily log returns. gk: annualized sample standard
/// deviation. vg/svg: maximum likelihood started from the moment inversion,
/// with the drift set to the annualized sample mean. Loss is the negative
/// log-likelihood (the Gaussian one for gk).
CalibrationResult fit_historical(std::span<const double> daily_returns, ModelKind model,
                                 const SimplexConfig& config = {}, const QuadratureSpec& quad = {});

/// Parameter box used by every fit.
Box parameter_box(ModelKind model);

/// Model price of one quote; VG variants go through price_vg.
PricedValue model_price(ModelKind model, const VgParams& params, const OptionQuote& quote,
                        const QuadratureSpec& quad = {});

/// Log-price mean absolute error sum_i |ln C_model,i - ln C_market,i|.
/// Quotes are summed in a canonical order so the value does not depend on
/// the order of `chain`.
double log_price_loss(ModelKind model, const VgParams& params, std::span<const OptionQuote> chain,
                      const QuadratureSpec& quad = {}, bool* fallback_used = nullptr);

/// Risk-neutral fit of one week's chain, started from `initial` (projected
/// into the parameter box).
CalibrationResult fit_weekly_risk_neutral(std::span<const OptionQuote> chain, ModelKind model,
                                          const VgParams& initial, const SimplexConfig& config = {},
                                          const QuadratureSpec& quad = {});

}  // namespace vgfx
