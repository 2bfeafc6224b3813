// Command-line front end. Every operation goes through the C interface;
// flags are turned into a JSON configuration patch layered over --config.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "vgfx/vgfx.h"

namespace {

using nlohmann::json;

struct ContextDeleter {
  void operator()(vgfx_context* ctx) const { vgfx_context_destroy(ctx); }
};
using Context = std::unique_ptr<vgfx_context, ContextDeleter>;

int report_failure(const vgfx_context* ctx, vgfx_status status) {
  std::cerr << "error (" << vgfx_status_name(status) << "): " << vgfx_last_error(ctx) << "\n";
  return static_cast<int>(status);
}

std::optional<json> read_json_file(const std::string& path, std::string& error) {
  std::ifstream in(path);
  if (!in) {
    error = "cannot open '" + path + "'";
    return std::nullopt;
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    error = "'" + path + "' is not valid JSON: " + e.what();
    return std::nullopt;
  }
}

// Flags shared by the pipeline subcommands. Unset flags leave the config alone.
struct PipelineFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> model;
  std::optional<std::string> quotes;
  std::optional<std::string> returns;
  std::optional<std::string> out_dir;
  std::optional<std::string> out_file;
  std::optional<double> r_d;
  std::optional<double> r_f;
  std::optional<std::int64_t> min_volume;
  std::optional<int> workers;
  std::optional<int> restarts;
  std::optional<int> max_iters;
  std::optional<double> sigma;
  std::optional<double> nu;
  std::optional<double> theta;
  std::optional<std::size_t> n;
  std::optional<double> drift;
  std::optional<int> weeks;
  std::optional<int> quotes_per_week;
  std::optional<double> noise;
  std::optional<double> drift_amplitude;
  std::optional<int> illiquid_per_week;
  std::optional<std::string> params_path;
};

template <class T>
void set_if(json& doc, const char* key, const std::optional<T>& v) {
  if (v) doc[key] = *v;
}

json params_patch(const PipelineFlags& f) {
  json p = json::object();
  set_if(p, "sigma", f.sigma);
  set_if(p, "nu", f.nu);
  set_if(p, "theta", f.theta);
  return p;
}

// Builds the flag patch for `command`; returns false with `error` set when a
// flag's companion file cannot be read.
bool build_patch(const std::string& command, const PipelineFlags& f, json& patch, std::string& error) {
  patch = json::object();
  set_if(patch, "seed", f.seed);
  set_if(patch, "quotes", f.quotes);
  set_if(patch, "returns", f.returns);
  set_if(patch, "out_dir", f.out_dir);
  set_if(patch, "out_file", f.out_file);
  set_if(patch, "r_d", f.r_d);
  set_if(patch, "r_f", f.r_f);
  set_if(patch, "min_volume", f.min_volume);
  set_if(patch, "workers", f.workers);
  if (f.restarts) patch["simplex"]["restarts"] = *f.restarts;
  if (f.max_iters) patch["simplex"]["max_iters"] = *f.max_iters;
  if (command == "simulate") {
    json sim = json::object();
    set_if(sim, "model", f.model);
    set_if(sim, "n", f.n);
    set_if(sim, "drift", f.drift);
    if (auto p = params_patch(f); !p.empty()) sim["params"] = p;
    if (!sim.empty()) patch["simulate"] = sim;
    return true;
  }
  set_if(patch, "model", f.model);
  if (command == "fit-weekly" || command == "evaluate") {
    if (auto p = params_patch(f); !p.empty()) patch["initial"] = p;
  }
  if (command == "generate") {
    json gen = json::object();
    set_if(gen, "weeks", f.weeks);
    set_if(gen, "quotes_per_week", f.quotes_per_week);
    set_if(gen, "noise", f.noise);
    set_if(gen, "drift_amplitude", f.drift_amplitude);
    set_if(gen, "illiquid_per_week", f.illiquid_per_week);
    if (auto p = params_patch(f); !p.empty()) gen["truth"] = p;
    if (f.params_path) {
      auto doc = read_json_file(*f.params_path, error);
      if (!doc) return false;
      if (doc->is_array())
        gen["truth_path"] = *doc;
      else
        gen["truth"] = *doc;
    }
    if (!gen.empty()) patch["generator"] = gen;
  }
  return true;
}

json merge(json base, const json& patch) {
  for (const auto& [key, value] : patch.items()) {
    if (value.is_object() && base.contains(key) && base[key].is_object())
      base[key] = merge(base[key], value);
    else
      base[key] = value;
  }
  return base;
}

int run_pipeline(const std::string& command, const PipelineFlags& flags) {
  Context ctx;
  {
    vgfx_context* raw = nullptr;
    if (vgfx_context_create(&raw) != VGFX_OK) return static_cast<int>(VGFX_ERR_NUMERIC);
    ctx.reset(raw);
  }
  json config = json::object();
  std::string error;
  if (!flags.config.empty()) {
    auto doc = read_json_file(flags.config, error);
    if (!doc) {
      std::cerr << "error (usage error): --config " << error << "\n";
      return static_cast<int>(VGFX_ERR_USAGE);
    }
    config = *doc;
  }
  json patch;
  if (!build_patch(command, flags, patch, error)) {
    std::cerr << "error (usage error): " << error << "\n";
    return static_cast<int>(VGFX_ERR_USAGE);
  }
  if (!config.is_object()) {
    std::cerr << "error (usage error): --config must hold a JSON object\n";
    return static_cast<int>(VGFX_ERR_USAGE);
  }
  config = merge(config, patch);

  char* summary = nullptr;
  const auto status = vgfx_run(ctx.get(), command.c_str(), config.dump().c_str(), &summary);
  if (status != VGFX_OK) return report_failure(ctx.get(), status);
  const auto doc = json::parse(summary);
  vgfx_string_free(summary);
  for (const auto& w : doc.at("warnings")) std::cerr << "warning: " << w.get<std::string>() << "\n";

  if (command == "fit-historical") {
    std::printf("model=%s sigma=%.8g nu=%.8g theta=%.8g loss=%.8g converged=%s iterations=%d\n",
                doc.at("model").get<std::string>().c_str(), doc.at("sigma").get<double>(),
                doc.at("nu").get<double>(), doc.at("theta").get<double>(), doc.at("loss").get<double>(),
                doc.at("converged").get<bool>() ? "true" : "false", doc.at("iterations").get<int>());
    return 0;
  }
  json printed = doc;
  printed.erase("warnings");
  std::cout << printed.dump(2) << "\n";
  return 0;
}

struct PriceFlags {
  std::string model = "vg";
  double spot = 0.0;
  double strike = 0.0;
  double days = 0.0;
  double r_d = 0.0;
  double r_f = 0.0;
  double sigma = 0.0;
  double nu = 0.0;
  double theta = 0.0;
  std::uint64_t mc_paths = 0;
  std::uint64_t seed = 42;
};

int run_price(const PriceFlags& f) {
  Context ctx;
  {
    vgfx_context* raw = nullptr;
    if (vgfx_context_create(&raw) != VGFX_OK) return static_cast<int>(VGFX_ERR_NUMERIC);
    ctx.reset(raw);
  }
  const vgfx_market market{f.spot, f.r_d, f.r_f};
  // Calendar days on an ACT/365 basis.
  const vgfx_option option{f.strike, f.days / 365.0};
  double price = 0.0;
  const char* pricer_name = "gk";
  vgfx_vg_params params{f.sigma, f.nu, f.model == "svg" ? 0.0 : f.theta};
  if (f.model == "gk") {
    const auto status = vgfx_price_gk(ctx.get(), &market, f.sigma, &option, &price);
    if (status != VGFX_OK) return report_failure(ctx.get(), status);
  } else {
    vgfx_pricer pricer = VGFX_PRICER_CLOSED_FORM;
    const auto status = vgfx_price_vg(ctx.get(), &market, &params, &option, nullptr, &price, &pricer);
    if (status != VGFX_OK) return report_failure(ctx.get(), status);
    pricer_name = pricer == VGFX_PRICER_CLOSED_FORM ? "closed-form" : "mixing-fallback";
  }
  std::printf("%#.8g %s\n", price, pricer_name);
  if (f.mc_paths > 0) {
    if (f.model == "gk") {
      std::cerr << "error (usage error): --mc-paths requires a VG model\n";
      return static_cast<int>(VGFX_ERR_USAGE);
    }
    vgfx_mc_result mc{};
    // Monte Carlo draws from the run seed at a fixed offset.
    const auto status = vgfx_price_vg_mc(ctx.get(), &market, &params, &option, f.mc_paths, f.seed + 2, &mc);
    if (status != VGFX_OK) return report_failure(ctx.get(), status);
    std::printf("%#.8g monte-carlo +/- %#.3g\n", mc.price, mc.standard_error);
  }
  return 0;
}

void add_pipeline_common(CLI::App* cmd, PipelineFlags& f) {
  cmd->add_option("--config", f.config, "JSON configuration file; flags override it")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Seed for every random stream (default 42)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Currency option pricing and calibration with the variance gamma model"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(vgfx_version()));

  PriceFlags price;
  auto* price_cmd = app.add_subcommand("price", "Price one European call");
  price_cmd->add_option("--model", price.model, "gk, vg or svg")->check(CLI::IsMember({"gk", "vg", "svg"}));
  price_cmd->add_option("--spot", price.spot, "Spot rate")->required();
  price_cmd->add_option("--strike", price.strike, "Strike")->required();
  price_cmd->add_option("--t,--expiry-days", price.days, "Calendar days to expiry")->required();
  price_cmd->add_option("--rd", price.r_d, "Domestic rate (continuous)");
  price_cmd->add_option("--rf", price.r_f, "Foreign rate (continuous)");
  price_cmd->add_option("--sigma", price.sigma, "Volatility")->required();
  price_cmd->add_option("--nu", price.nu, "Gamma variance rate (vg, svg)");
  price_cmd->add_option("--theta", price.theta, "Drift of the subordinated motion (vg)");
  price_cmd->add_option("--mc-paths", price.mc_paths, "Also print a Monte Carlo estimate with this many paths");
  price_cmd->add_option("--seed", price.seed, "Seed for the Monte Carlo estimate");

  PipelineFlags flags;
  auto* simulate = app.add_subcommand("simulate", "Simulate daily log returns to a CSV");
  add_pipeline_common(simulate, flags);
  simulate->add_option("--model", flags.model, "vg, svg or gk (Gaussian)");
  simulate->add_option("--n", flags.n, "Number of returns");
  simulate->add_option("--sigma", flags.sigma, "Volatility of the simulated process");
  simulate->add_option("--nu", flags.nu, "Gamma variance rate");
  simulate->add_option("--theta", flags.theta, "Drift of the subordinated motion");
  simulate->add_option("--drift", flags.drift, "Calendar drift per year");
  simulate->add_option("--out", flags.out_file, "Output CSV");

  auto* fit_hist = app.add_subcommand("fit-historical", "Fit a model to daily log returns");
  add_pipeline_common(fit_hist, flags);
  fit_hist->add_option("--returns", flags.returns, "Returns CSV (date,log_return)");
  fit_hist->add_option("--model", flags.model, "gk, vg or svg");
  fit_hist->add_option("--out", flags.out_file, "Write the fit as JSON");
  fit_hist->add_option("--restarts", flags.restarts, "Simplex restarts after convergence");
  fit_hist->add_option("--max-iters", flags.max_iters, "Simplex iteration cap per run");

  auto* fit_weekly = app.add_subcommand("fit-weekly", "Fit one model to every week of an option chain");
  auto* evaluate = app.add_subcommand("evaluate", "Weekly fits of all models plus walk-forward evaluation");
  for (auto* cmd : {fit_weekly, evaluate}) {
    add_pipeline_common(cmd, flags);
    cmd->add_option("--quotes", flags.quotes, "Quote CSV");
    cmd->add_option("--returns", flags.returns, "Returns CSV for the initial guesses");
    cmd->add_option("--out-dir", flags.out_dir, "Output directory");
    cmd->add_option("--rd", flags.r_d, "Constant domestic rate replacing the r_d column");
    cmd->add_option("--rf", flags.r_f, "Constant foreign rate replacing the r_f column");
    cmd->add_option("--min-volume", flags.min_volume, "Keep quotes with volume above this (default 100)");
    cmd->add_option("--workers", flags.workers, "Threads for the weekly fits");
    cmd->add_option("--restarts", flags.restarts, "Simplex restarts after convergence");
    cmd->add_option("--max-iters", flags.max_iters, "Simplex iteration cap per run");
    cmd->add_option("--sigma", flags.sigma, "Initial sigma when no returns file is given");
    cmd->add_option("--nu", flags.nu, "Initial nu when no returns file is given");
    cmd->add_option("--theta", flags.theta, "Initial theta when no returns file is given");
  }
  fit_weekly->add_option("--model", flags.model, "gk, vg or svg");

  auto* generate = app.add_subcommand("generate", "Write a synthetic option chain CSV");
  add_pipeline_common(generate, flags);
  generate->add_option("--weeks", flags.weeks, "Number of weekly groups");
  generate->add_option("--quotes-per-week", flags.quotes_per_week, "Liquid quotes per week");
  generate->add_option("--illiquid-per-week", flags.illiquid_per_week, "Extra rows at or below the volume filter");
  generate->add_option("--sigma", flags.sigma, "Truth sigma");
  generate->add_option("--nu", flags.nu, "Truth nu");
  generate->add_option("--theta", flags.theta, "Truth theta");
  generate->add_option("--params", flags.params_path, "JSON truth: one parameter object or a per-week array")
      ->check(CLI::ExistingFile);
  generate->add_option("--noise", flags.noise, "Multiplicative lognormal price noise");
  generate->add_option("--drift-amplitude", flags.drift_amplitude, "Relative drift of the truth across weeks");
  generate->add_option("--min-volume", flags.min_volume, "Liquidity threshold used for the volume layout");
  generate->add_option("--out", flags.out_file, "Output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(VGFX_ERR_USAGE);
  }

  if (price_cmd->parsed()) return run_price(price);
  for (auto* cmd : {simulate, fit_hist, fit_weekly, evaluate, generate})
    if (cmd->parsed()) return run_pipeline(cmd->get_name(), flags);
  return static_cast<int>(VGFX_ERR_USAGE);
}
