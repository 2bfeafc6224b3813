#include "calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "errors.hpp"

namespace vgfx {
namespace {

constexpr double kBoxPenalty = 1e6;
constexpr double kMinLogArg = 1e-6;
// Objective value for parameters violating the joint martingale constraint.
constexpr double kInfeasible = 1e12;
constexpr double kFallbackNu = 0.1;

struct Vertex {
  std::vector<double> x;
  double f;
};

class Simplex {
 public:
  Simplex(const Objective& objective, const Box& bounds) : objective_(objective), bounds_(bounds) {}

  double evaluate(std::span<const double> x) {
    ++evaluations_;
    const auto projected = bounds_.project(x);
    double distance = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) distance += (x[i] - projected[i]) * (x[i] - projected[i]);
    const double value = objective_(projected);
    if (std::isnan(value)) return std::numeric_limits<double>::infinity();
    return value + kBoxPenalty * std::sqrt(distance);
  }

  // One run from a fresh simplex around `start` with 10% edges.
  Vertex run(const Vertex& start, const SimplexConfig& cfg, int& iterations, bool& converged) {
    const std::size_t n = start.x.size();
    std::vector<Vertex> v;
    v.reserve(n + 1);
    v.push_back(start);
    for (std::size_t i = 0; i < n; ++i) {
      auto x = start.x;
      x[i] += x[i] == 0.0 ? 0.00025 : 0.1 * std::abs(x[i]);
      const double f = evaluate(x);
      v.push_back({std::move(x), f});
    }

    auto by_value = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };
    converged = false;
    std::vector<double> centroid(n);
    auto along = [&](double coef, const std::vector<double>& toward) {
      // centroid + coef * (toward - centroid)
      std::vector<double> x(n);
      for (std::size_t j = 0; j < n; ++j) x[j] = centroid[j] + coef * (toward[j] - centroid[j]);
      return x;
    };

    for (int iter = 0;; ++iter) {
      std::stable_sort(v.begin(), v.end(), by_value);
      double diameter = 0.0;
      for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 0; j < n; ++j) diameter = std::max(diameter, std::abs(v[i].x[j] - v[0].x[j]));
      const double spread = v[n].f - v[0].f;
      if (diameter < cfg.x_tol || spread < cfg.f_tol) {
        converged = true;
        break;
      }
      if (iter >= cfg.max_iters) break;
      ++iterations;

      std::fill(centroid.begin(), centroid.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) centroid[j] += v[i].x[j] / static_cast<double>(n);

      auto& worst = v[n];
      auto reflected = along(-cfg.reflection, worst.x);
      const double f_reflected = evaluate(reflected);
      if (f_reflected < v[0].f) {
        auto expanded = along(cfg.expansion, reflected);
        const double f_expanded = evaluate(expanded);
        if (f_expanded < f_reflected)
          worst = {std::move(expanded), f_expanded};
        else
          worst = {std::move(reflected), f_reflected};
        continue;
      }
      if (f_reflected < v[n - 1].f) {
        worst = {std::move(reflected), f_reflected};
        continue;
      }
      if (f_reflected < worst.f) {
        auto outside = along(cfg.contraction, reflected);
        const double f_outside = evaluate(outside);
        if (f_outside <= f_reflected) {
          worst = {std::move(outside), f_outside};
          continue;
        }
      } else {
        auto inside = along(cfg.contraction, worst.x);
        const double f_inside = evaluate(inside);
        if (f_inside < worst.f) {
          worst = {std::move(inside), f_inside};
          continue;
        }
      }
      for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 0; j < n; ++j) v[i].x[j] = v[0].x[j] + cfg.shrink * (v[i].x[j] - v[0].x[j]);
        v[i].f = evaluate(v[i].x);
      }
    }
    return v.front();
  }

  int evaluations() const { return evaluations_; }

 private:
  const Objective& objective_;
  const Box& bounds_;
  int evaluations_ = 0;
};

std::vector<double> model_vector(ModelKind model, const VgParams& p) {
  switch (model) {
    case ModelKind::gk:
      return {p.sigma};
    case ModelKind::symmetric_vg:
      return {p.sigma, p.nu};
    case ModelKind::vg:
      return {p.sigma, p.nu, p.theta};
  }
  return {};
}

VgParams model_params(ModelKind model, std::span<const double> x) {
  switch (model) {
    case ModelKind::gk:
      return {x[0], 0.0, 0.0};
    case ModelKind::symmetric_vg:
      return {x[0], x[1], 0.0};
    case ModelKind::vg:
      return {x[0], x[1], x[2]};
  }
  return {};
}

bool jointly_feasible(ModelKind model, const VgParams& p) {
  return model == ModelKind::gk || p.martingale_log_arg() > kMinLogArg;
}

// Moves a starting point into the box and, for VG, shrinks nu until the
// martingale constraint holds.
VgParams feasible_start(ModelKind model, const VgParams& guess) {
  const Box box = parameter_box(model);
  auto x = box.project(model_vector(model, guess));
  VgParams p = model_params(model, x);
  while (!jointly_feasible(model, p) && p.nu > box.lower[1]) p.nu = std::max(box.lower[1], 0.5 * p.nu);
  if (!jointly_feasible(model, p)) throw DomainError("no feasible starting point for the calibration");
  return p;
}

CalibrationResult to_result(ModelKind model, const SimplexResult& fit) {
  CalibrationResult out;
  out.model = model;
  const VgParams p = model_params(model, fit.x);
  out.sigma = p.sigma;
  out.nu = p.nu;
  out.theta = p.theta;
  out.loss = fit.loss;
  out.iterations = fit.iterations;
  out.evaluations = fit.evaluations;
  out.converged = fit.converged && std::isfinite(fit.loss);
  return out;
}

}  // namespace

void SimplexConfig::validate() const {
  if (!(reflection > 0.0)) throw DomainError("SimplexConfig: reflection must be > 0");
  if (!(expansion > 1.0)) throw DomainError("SimplexConfig: expansion must be > 1");
  if (!(contraction > 0.0 && contraction < 1.0)) throw DomainError("SimplexConfig: contraction must be in (0, 1)");
  if (!(shrink > 0.0 && shrink < 1.0)) throw DomainError("SimplexConfig: shrink must be in (0, 1)");
  if (!(x_tol >= 0.0) || !(f_tol >= 0.0)) throw DomainError("SimplexConfig: tolerances must be >= 0");
  if (max_iters < 1) throw DomainError("SimplexConfig: max_iters must be >= 1");
  if (restarts < 0) throw DomainError("SimplexConfig: restarts must be >= 0");
}

void Box::validate(std::size_t dimension) const {
  if (!lower.empty() && lower.size() != dimension) throw DomainError("Box: lower bound has wrong dimension");
  if (!upper.empty() && upper.size() != dimension) throw DomainError("Box: upper bound has wrong dimension");
  if (!lower.empty() && !upper.empty())
    for (std::size_t i = 0; i < dimension; ++i)
      if (!(lower[i] <= upper[i])) throw DomainError("Box: lower bound exceeds upper bound");
}

std::vector<double> Box::project(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!lower.empty()) out[i] = std::max(out[i], lower[i]);
    if (!upper.empty()) out[i] = std::min(out[i], upper[i]);
  }
  return out;
}

SimplexResult nelder_mead(const Objective& objective, std::span<const double> initial, const Box& bounds,
                          const SimplexConfig& config) {
  config.validate();
  if (initial.empty()) throw DomainError("nelder_mead: empty parameter vector");
  bounds.validate(initial.size());
  const auto inside = bounds.project(initial);
  if (!std::equal(inside.begin(), inside.end(), initial.begin()))
    throw DomainError("nelder_mead: initial point outside the bounds");
  const double f0 = objective(initial);
  if (!std::isfinite(f0)) throw DomainError("nelder_mead: objective is not finite at the initial point");

  Simplex simplex(objective, bounds);
  SimplexResult out;
  Vertex best{std::vector<double>(initial.begin(), initial.end()), f0};
  for (int run = 0; run <= config.restarts; ++run) {
    bool converged = false;
    auto candidate = simplex.run(best, config, out.iterations, converged);
    if (candidate.f <= best.f) best = std::move(candidate);
    out.converged = converged;
  }

  // The best vertex may sit marginally outside the box with a tiny penalty;
  // report its projection, whose raw objective is no larger.
  out.x = bounds.project(best.x);
  out.loss = out.x == best.x ? best.f : std::min(best.f, objective(out.x));
  out.evaluations = simplex.evaluations() + 1;
  return out;
}

std::string_view to_string(ModelKind model) {
  switch (model) {
    case ModelKind::gk:
      return "gk";
    case ModelKind::vg:
      return "vg";
    case ModelKind::symmetric_vg:
      return "svg";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "gk") return ModelKind::gk;
  if (name == "vg") return ModelKind::vg;
  if (name == "svg") return ModelKind::symmetric_vg;
  throw UsageError("unknown model '" + std::string(name) + "' (expected gk, vg or svg)");
}

Box parameter_box(ModelKind model) {
  switch (model) {
    case ModelKind::gk:
      return {{1e-4}, {2.0}};
    case ModelKind::symmetric_vg:
      return {{1e-4, 1e-4}, {2.0, 2.0}};
    case ModelKind::vg:
      return {{1e-4, 1e-4, -0.5}, {2.0, 2.0, 0.5}};
  }
  return {};
}

CalibrationResult fit_historical(std::span<const double> daily_returns, ModelKind model,
                                 const SimplexConfig& config, const QuadratureSpec& quad) {
  config.validate();
  quad.validate();
  const std::size_t n = daily_returns.size();
  if (n < kMinHistoricalReturns)
    throw DataError("fit_historical: need at least " + std::to_string(kMinHistoricalReturns) +
                    " returns, got " + std::to_string(n));
  for (double z : daily_returns)
    if (!std::isfinite(z)) throw DataError("fit_historical: non-finite return");

  const double count = static_cast<double>(n);
  const double mean = std::accumulate(daily_returns.begin(), daily_returns.end(), 0.0) / count;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  for (double z : daily_returns) {
    const double d = z - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  // Rounding in the mean leaves a residue of order 1e-36 for a constant
  // series; detect it exactly instead.
  const auto [lowest, highest] = std::minmax_element(daily_returns.begin(), daily_returns.end());
  if (*lowest == *highest) m2 = m3 = m4 = 0.0;
  const double sample_variance = m2 / (count - 1.0);
  m3 /= count;
  m4 /= count;

  CalibrationResult out;
  out.model = model;
  if (model == ModelKind::gk) {
    out.sigma = std::sqrt(sample_variance * kTradingDaysPerYear);
    out.converged = true;
    if (sample_variance > 0.0) {
      // Gaussian negative log-likelihood at the fitted moments.
      out.loss = 0.5 * count * std::log(2.0 * std::numbers::pi * sample_variance) + 0.5 * m2 / sample_variance;
    }
    return out;
  }
  if (!(sample_variance > 0.0)) throw DataError("fit_historical: constant return series, VG fit is degenerate");

  const double third = model == ModelKind::symmetric_vg ? 0.0 : m3;
  VgParams start;
  try {
    const VgParams daily = params_from_moments(m2 / count, third, m4);
    start = {daily.sigma * std::sqrt(kTradingDaysPerYear), daily.nu / kTradingDaysPerYear,
             daily.theta * kTradingDaysPerYear};
  } catch (const DomainError&) {
    out.moment_fallback = true;
    start = {std::sqrt(sample_variance * kTradingDaysPerYear), kFallbackNu, 0.0};
  }
  if (model == ModelKind::symmetric_vg) start.theta = 0.0;
  start = feasible_start(model, start);

  constexpr double kStep = 1.0 / kTradingDaysPerYear;
  const double drift = mean / kStep;
  auto objective = [&](std::span<const double> x) {
    const VgParams p = model_params(model, x);
    if (!jointly_feasible(model, p)) return kInfeasible;
    const double ll = log_likelihood(daily_returns, DensityParams{p, kStep, drift});
    return std::isfinite(ll) ? -ll : kInfeasible;
  };
  const auto fit = nelder_mead(objective, model_vector(model, start), parameter_box(model), config);
  const bool moment_fallback = out.moment_fallback;
  out = to_result(model, fit);
  out.moment_fallback = moment_fallback;
  return out;
}

PricedValue model_price(ModelKind model, const VgParams& params, const OptionQuote& quote,
                        const QuadratureSpec& quad) {
  if (model == ModelKind::gk) return {price_gk(quote.env(), GkParams{params.sigma}, quote.option()), PricerKind::gk};
  VgParams p = params;
  if (model == ModelKind::symmetric_vg) p.theta = 0.0;
  return price_vg(quote.env(), p, quote.option(), quad);
}

namespace {

double sorted_log_price_loss(ModelKind model, const VgParams& params, std::span<const OptionQuote> sorted,
                             const QuadratureSpec& quad, bool& fallback_used) {
  double loss = 0.0;
  for (const auto& q : sorted) {
    const auto priced = model_price(model, params, q, quad);
    if (priced.pricer == PricerKind::vg_mixing_fallback) fallback_used = true;
    const double price = std::max(priced.price, std::numeric_limits<double>::min());
    loss += std::abs(std::log(price) - std::log(q.market_price));
  }
  return loss;
}

std::vector<OptionQuote> canonical_order(std::span<const OptionQuote> chain) {
  std::vector<OptionQuote> sorted(chain.begin(), chain.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

}  // namespace

double log_price_loss(ModelKind model, const VgParams& params, std::span<const OptionQuote> chain,
                      const QuadratureSpec& quad, bool* fallback_used) {
  bool fallback = false;
  const double loss = sorted_log_price_loss(model, params, canonical_order(chain), quad, fallback);
  if (fallback_used) *fallback_used = fallback;
  return loss;
}

CalibrationResult fit_weekly_risk_neutral(std::span<const OptionQuote> chain, ModelKind model,
                                          const VgParams& initial, const SimplexConfig& config,
                                          const QuadratureSpec& quad) {
  config.validate();
  quad.validate();
  if (chain.empty()) throw DataError("fit_weekly_risk_neutral: empty chain");
  for (const auto& q : chain)
    if (auto why = q.violation()) throw DataError("fit_weekly_risk_neutral: invalid quote: " + *why);

  const auto sorted = canonical_order(chain);
  VgParams start = initial;
  if (model == ModelKind::gk) start = {initial.sigma, 0.0, 0.0};
  if (model == ModelKind::symmetric_vg) start.theta = 0.0;
  start = feasible_start(model, start);

  bool fallback_used = false;
  // Evaluated outside the optimizer so numerical failures at the start surface.
  sorted_log_price_loss(model, start, sorted, quad, fallback_used);
  auto objective = [&](std::span<const double> x) {
    const VgParams p = model_params(model, x);
    if (!jointly_feasible(model, p)) return kInfeasible;
    try {
      return sorted_log_price_loss(model, p, sorted, quad, fallback_used);
    } catch (const QuadratureError&) {
      return kInfeasible;
    }
  };
  const auto fit = nelder_mead(objective, model_vector(model, start), parameter_box(model), config);
  auto out = to_result(model, fit);
  out.fallback_used = fallback_used;
  return out;
}

}  // namespace vgfx
