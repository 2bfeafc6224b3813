#include "vgfx/vgfx.h"

#include <cstring>
#include <new>
#include <string>
#include <vector>

#include "calibration.hpp"
#include "errors.hpp"
#include "marketdata.hpp"
#include "pipeline.hpp"
#include "pricing.hpp"

struct vgfx_context {
  std::string last_error;
};

struct vgfx_returns {
  std::vector<double> values;
};

struct vgfx_quotes {
  std::vector<vgfx::OptionQuote> quotes;
  std::size_t rejects = 0;
};

namespace {

constexpr const char* kVersion = VGFX_VERSION;

// Runs `body`, translating exceptions into status codes and recording the
// message on the context.
template <class F>
vgfx_status guarded(vgfx_context* ctx, F&& body) {
  if (!ctx) return VGFX_ERR_USAGE;
  ctx->last_error.clear();
  auto fail = [ctx](vgfx_status status, const char* what) {
    ctx->last_error = what;
    return status;
  };
  try {
    body();
    return VGFX_OK;
  } catch (const vgfx::UsageError& e) {
    return fail(VGFX_ERR_USAGE, e.what());
  } catch (const vgfx::DomainError& e) {
    return fail(VGFX_ERR_USAGE, e.what());
  } catch (const vgfx::DataError& e) {
    return fail(VGFX_ERR_DATA, e.what());
  } catch (const vgfx::QuadratureError& e) {
    return fail(VGFX_ERR_NUMERIC, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(VGFX_ERR_USAGE, (std::string("invalid configuration: ") + e.what()).c_str());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(VGFX_ERR_DATA, e.what());
  } catch (const std::bad_alloc&) {
    return fail(VGFX_ERR_NUMERIC, "out of memory");
  } catch (const std::exception& e) {
    return fail(VGFX_ERR_NUMERIC, e.what());
  }
}

template <class T>
const T& deref(const T* p, const char* name) {
  if (!p) throw vgfx::UsageError(std::string(name) + " must not be NULL");
  return *p;
}

template <class T>
T& out_ref(T* p, const char* name) {
  if (!p) throw vgfx::UsageError(std::string(name) + " must not be NULL");
  return *p;
}

std::string string_arg(const char* s, const char* name) {
  if (!s) throw vgfx::UsageError(std::string(name) + " must not be NULL");
  return s;
}

vgfx::MarketEnv to_env(const vgfx_market* m) {
  const auto& v = deref(m, "market");
  return {v.spot, v.r_d, v.r_f};
}

vgfx::VgParams to_params(const vgfx_vg_params* p) {
  const auto& v = deref(p, "params");
  return {v.sigma, v.nu, v.theta};
}

vgfx::OptionSpec to_option(const vgfx_option* o) {
  const auto& v = deref(o, "option");
  return {v.strike, v.maturity, vgfx::OptionKind::european_call};
}

vgfx::QuadratureSpec to_quad(const vgfx_quadrature* q) {
  if (!q) return {};
  return {q->rel_tol, q->abs_tol, q->max_subdivisions};
}

vgfx::SimplexConfig to_simplex(const vgfx_simplex* s) {
  if (!s) return {};
  return {s->reflection, s->expansion, s->contraction, s->shrink, s->x_tol, s->f_tol, s->max_iters, s->restarts};
}

vgfx::ModelKind to_model(vgfx_model m) {
  switch (m) {
    case VGFX_MODEL_GK:
      return vgfx::ModelKind::gk;
    case VGFX_MODEL_VG:
      return vgfx::ModelKind::vg;
    case VGFX_MODEL_SVG:
      return vgfx::ModelKind::symmetric_vg;
  }
  throw vgfx::UsageError("unknown model code " + std::to_string(static_cast<int>(m)));
}

vgfx_model from_model(vgfx::ModelKind m) {
  switch (m) {
    case vgfx::ModelKind::gk:
      return VGFX_MODEL_GK;
    case vgfx::ModelKind::vg:
      return VGFX_MODEL_VG;
    case vgfx::ModelKind::symmetric_vg:
      return VGFX_MODEL_SVG;
  }
  return VGFX_MODEL_VG;
}

vgfx_calibration to_c(const vgfx::CalibrationResult& r) {
  return {from_model(r.model), r.sigma,          r.nu,          r.theta,
          r.loss,              r.iterations,     r.evaluations, r.converged,
          r.fallback_used,     r.moment_fallback, r.carried_forward};
}

char* copy_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* vgfx_version(void) { return kVersion; }

const char* vgfx_status_name(vgfx_status status) {
  switch (status) {
    case VGFX_OK:
      return "ok";
    case VGFX_ERR_USAGE:
      return "usage error";
    case VGFX_ERR_DATA:
      return "data error";
    case VGFX_ERR_NUMERIC:
      return "numerical failure";
  }
  return "unknown status";
}

vgfx_status vgfx_context_create(vgfx_context** out) {
  if (!out) return VGFX_ERR_USAGE;
  *out = new (std::nothrow) vgfx_context();
  return *out ? VGFX_OK : VGFX_ERR_NUMERIC;
}

void vgfx_context_destroy(vgfx_context* ctx) { delete ctx; }

const char* vgfx_last_error(const vgfx_context* ctx) { return ctx ? ctx->last_error.c_str() : "no context"; }

void vgfx_quadrature_default(vgfx_quadrature* out) {
  if (!out) return;
  const vgfx::QuadratureSpec d;
  *out = {d.rel_tol, d.abs_tol, d.max_subdivisions};
}

void vgfx_simplex_default(vgfx_simplex* out) {
  if (!out) return;
  const vgfx::SimplexConfig d;
  *out = {d.reflection, d.expansion, d.contraction, d.shrink, d.x_tol, d.f_tol, d.max_iters, d.restarts};
}

vgfx_status vgfx_price_gk(vgfx_context* ctx, const vgfx_market* market, double sigma, const vgfx_option* option,
                          double* price) {
  return guarded(ctx, [&] {
    out_ref(price, "price") = vgfx::price_gk(to_env(market), vgfx::GkParams{sigma}, to_option(option));
  });
}

vgfx_status vgfx_price_vg(vgfx_context* ctx, const vgfx_market* market, const vgfx_vg_params* params,
                          const vgfx_option* option, const vgfx_quadrature* quad, double* price,
                          vgfx_pricer* pricer) {
  return guarded(ctx, [&] {
    auto& target = out_ref(price, "price");
    const auto priced = vgfx::price_vg(to_env(market), to_params(params), to_option(option), to_quad(quad));
    target = priced.price;
    if (pricer)
      *pricer = priced.pricer == vgfx::PricerKind::vg_closed_form ? VGFX_PRICER_CLOSED_FORM
                                                                   : VGFX_PRICER_MIXING_FALLBACK;
  });
}

vgfx_status vgfx_price_vg_closed(vgfx_context* ctx, const vgfx_market* market, const vgfx_vg_params* params,
                                 const vgfx_option* option, const vgfx_quadrature* quad, double* price) {
  return guarded(ctx, [&] {
    out_ref(price, "price") = vgfx::price_vg_closed(to_env(market), to_params(params), to_option(option),
                                                    to_quad(quad));
  });
}

vgfx_status vgfx_price_vg_mixing(vgfx_context* ctx, const vgfx_market* market, const vgfx_vg_params* params,
                                 const vgfx_option* option, const vgfx_quadrature* quad, double* price) {
  return guarded(ctx, [&] {
    out_ref(price, "price") = vgfx::price_vg_mixing(to_env(market), to_params(params), to_option(option),
                                                    to_quad(quad));
  });
}

vgfx_status vgfx_price_vg_mc(vgfx_context* ctx, const vgfx_market* market, const vgfx_vg_params* params,
                             const vgfx_option* option, uint64_t paths, uint64_t seed, vgfx_mc_result* out) {
  return guarded(ctx, [&] {
    auto& target = out_ref(out, "out");
    const auto mc = vgfx::price_vg_mc(to_env(market), to_params(params), to_option(option), paths, seed);
    target = {mc.price, mc.standard_error, mc.forward_ratio, mc.forward_ratio_error};
  });
}

vgfx_status vgfx_returns_load(vgfx_context* ctx, const char* path, vgfx_returns** out) {
  return guarded(ctx, [&] {
    auto& target = out_ref(out, "out");
    auto series = vgfx::load_returns(string_arg(path, "path"));
    target = new vgfx_returns{std::move(series.log_returns)};
  });
}

vgfx_status vgfx_returns_from_array(vgfx_context* ctx, const double* values, size_t n, vgfx_returns** out) {
  return guarded(ctx, [&] {
    auto& target = out_ref(out, "out");
    if (n > 0 && !values) throw vgfx::UsageError("values must not be NULL");
    target = new vgfx_returns{std::vector<double>(values, values + n)};
  });
}

size_t vgfx_returns_size(const vgfx_returns* returns) { return returns ? returns->values.size() : 0; }

void vgfx_returns_destroy(vgfx_returns* returns) { delete returns; }

vgfx_status vgfx_fit_historical(vgfx_context* ctx, const vgfx_returns* returns, vgfx_model model,
                                const vgfx_simplex* simplex, vgfx_calibration* out) {
  return guarded(ctx, [&] {
    auto& target = out_ref(out, "out");
    target = to_c(vgfx::fit_historical(deref(returns, "returns").values, to_model(model), to_simplex(simplex)));
  });
}

vgfx_status vgfx_quotes_load(vgfx_context* ctx, const char* path, const double* r_d, const double* r_f,
                             vgfx_quotes** out) {
  return guarded(ctx, [&] {
    auto& target = out_ref(out, "out");
    vgfx::QuoteSchema schema;
    if (r_d) schema.constant_r_d = *r_d;
    if (r_f) schema.constant_r_f = *r_f;
    auto load = vgfx::load_quotes(string_arg(path, "path"), schema);
    target = new vgfx_quotes{std::move(load.quotes), load.rejects.size()};
  });
}

size_t vgfx_quotes_size(const vgfx_quotes* quotes) { return quotes ? quotes->quotes.size() : 0; }

size_t vgfx_quotes_reject_count(const vgfx_quotes* quotes) { return quotes ? quotes->rejects : 0; }

vgfx_status vgfx_quotes_filter(vgfx_context* ctx, const vgfx_quotes* quotes, int64_t min_volume,
                               vgfx_quotes** out) {
  return guarded(ctx, [&] {
    auto& target = out_ref(out, "out");
    const auto& in = deref(quotes, "quotes");
    target = new vgfx_quotes{vgfx::liquidity_filter(in.quotes, min_volume), 0};
  });
}

void vgfx_quotes_destroy(vgfx_quotes* quotes) { delete quotes; }

vgfx_status vgfx_fit_weekly(vgfx_context* ctx, const vgfx_quotes* chain, vgfx_model model,
                            const vgfx_vg_params* initial, const vgfx_simplex* simplex, const vgfx_quadrature* quad,
                            vgfx_calibration* out) {
  return guarded(ctx, [&] {
    auto& target = out_ref(out, "out");
    target = to_c(vgfx::fit_weekly_risk_neutral(deref(chain, "chain").quotes, to_model(model), to_params(initial),
                                                to_simplex(simplex), to_quad(quad)));
  });
}

vgfx_status vgfx_run(vgfx_context* ctx, const char* command, const char* config_json, char** summary_json) {
  return guarded(ctx, [&] {
    auto& target = out_ref(summary_json, "summary_json");
    const std::string name = string_arg(command, "command");
    const std::string text = config_json ? config_json : "";
    const auto doc = text.empty() ? nlohmann::json::object() : nlohmann::json::parse(text);
    const auto cfg = vgfx::RunConfig::from_json(doc);
    std::vector<std::string> warnings;
    auto summary = vgfx::run_command(name, cfg, [&warnings](std::string_view w) { warnings.emplace_back(w); });
    summary["warnings"] = warnings;
    target = copy_string(summary.dump(2));
  });
}

vgfx_status vgfx_default_config(vgfx_context* ctx, char** config_json) {
  return guarded(ctx, [&] {
    auto& target = out_ref(config_json, "config_json");
    auto doc = vgfx::RunConfig{}.to_json();
    doc["workers"] = 1;
    target = copy_string(doc.dump(2));
  });
}

void vgfx_string_free(char* s) { std::free(s); }

}  // extern "C"
