#include "pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <set>
#include <thread>

#include "errors.hpp"

namespace vgfx {
namespace {

using nlohmann::json;

constexpr std::array<ModelKind, 3> kAllModels{ModelKind::gk, ModelKind::vg, ModelKind::symmetric_vg};
constexpr std::array<GroupBy, 4> kGroupings{GroupBy::overall, GroupBy::regime, GroupBy::maturity,
                                            GroupBy::moneyness};

void emit(const LogSink& log, const std::string& message) {
  if (log) log(message);
}

// Reads an object field by field, rejecting keys nobody asked for.
class StrictObject {
 public:
  StrictObject(const json& doc, std::string where) : doc_(doc), where_(std::move(where)) {
    if (!doc_.is_object()) throw UsageError("config: '" + where_ + "' must be an object");
  }

  // Call after the last read.
  void finish() const {
    for (const auto& [key, value] : doc_.items())
      if (!seen_.count(key)) throw UsageError("config: unknown key '" + qualified(key) + "'");
  }

  template <class T>
  void read(const std::string& key, T& target) {
    seen_.insert(key);
    const auto it = doc_.find(key);
    if (it == doc_.end() || it->is_null()) return;
    try {
      target = it->get<T>();
    } catch (const json::exception&) {
      throw UsageError("config: '" + qualified(key) + "' has the wrong type");
    }
  }

  void read_optional(const std::string& key, std::optional<double>& target) {
    seen_.insert(key);
    const auto it = doc_.find(key);
    if (it == doc_.end() || it->is_null()) {
      target.reset();
      return;
    }
    if (!it->is_number()) throw UsageError("config: '" + qualified(key) + "' must be a number");
    target = it->get<double>();
  }

  void read_path(const std::string& key, std::filesystem::path& target) {
    std::string s = target.string();
    read(key, s);
    target = s;
  }

  void read_date(const std::string& key, Date& target) {
    std::string s = target.iso();
    read(key, s);
    try {
      target = Date::parse(s);
    } catch (const DataError& e) {
      throw UsageError("config: '" + qualified(key) + "': " + e.what());
    }
  }

  void read_model(const std::string& key, ModelKind& target) {
    std::string s(to_string(target));
    read(key, s);
    target = parse_model_kind(s);
  }

  // Nested object, or nullptr when absent.
  const json* child(const std::string& key) {
    seen_.insert(key);
    const auto it = doc_.find(key);
    return it == doc_.end() || it->is_null() ? nullptr : &*it;
  }

  std::string qualified(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

 private:
  const json& doc_;
  std::string where_;
  std::set<std::string> seen_;
};

void read_params(const json& doc, const std::string& where, VgParams& p) {
  StrictObject o(doc, where);
  o.read("sigma", p.sigma);
  o.read("nu", p.nu);
  o.read("theta", p.theta);
  o.finish();
}

json params_json(const VgParams& p) { return {{"sigma", p.sigma}, {"nu", p.nu}, {"theta", p.theta}}; }

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << content;
  if (!out.flush()) throw DataError("write failed for '" + path.string() + "'");
}

void write_json(const std::filesystem::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

void require_file(const std::filesystem::path& path, const std::string& what) {
  if (path.empty()) throw UsageError("a " + what + " file is required");
  if (!std::filesystem::is_regular_file(path)) throw DataError(what + " file '" + path.string() + "' does not exist");
}

void require_output(const std::filesystem::path& path, const std::string& command) {
  if (path.empty()) throw UsageError(command + ": an output file is required");
}

std::size_t parameter_count(ModelKind m) {
  switch (m) {
    case ModelKind::gk:
      return 1;
    case ModelKind::symmetric_vg:
      return 2;
    case ModelKind::vg:
      return 3;
  }
  return 3;
}

struct PreparedQuotes {
  QuoteLoad load;
  std::size_t illiquid = 0;
  WeeklyQuotes weeks;
};

PreparedQuotes prepare_quotes(const RunConfig& cfg) {
  require_file(cfg.quotes, "quotes");
  QuoteSchema schema;
  schema.constant_r_d = cfg.r_d;
  schema.constant_r_f = cfg.r_f;
  PreparedQuotes out;
  out.load = load_quotes(cfg.quotes, schema);
  const auto liquid = liquidity_filter(out.load.quotes, cfg.min_volume);
  out.illiquid = out.load.quotes.size() - liquid.size();
  out.weeks = group_by_week(liquid);
  return out;
}

void write_rejects_file(const RunConfig& cfg, const QuoteLoad& load) {
  std::filesystem::create_directories(cfg.out_dir);
  write_rejects(cfg.out_dir / "rejects.csv", load.rejects);
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

void write_records(const std::filesystem::path& path, std::span<const EvalRecord> records) {
  std::string out =
      "model,week,trade_date,expiry_date,strike,spot,market_price,model_price,abs_rel_error,moneyness,maturity,"
      "regime\n";
  for (const auto& r : records) {
    out += std::string(to_string(r.model)) + ',' + r.week.str() + ',' + r.quote.trade_date.iso() + ',' +
           r.quote.expiry_date.iso() + ',' + format_double(r.quote.strike) + ',' + format_double(r.quote.spot) + ',' +
           format_double(r.quote.market_price) + ',' + format_double(r.model_price) + ',' +
           format_double(r.abs_rel_error) + ',' + std::string(to_string(r.bucket.moneyness)) + ',' +
           std::string(to_string(r.bucket.maturity)) + ',' + std::string(to_string(r.bucket.regime)) + '\n';
  }
  write_text(path, out);
}

void write_week_params(const std::filesystem::path& dir, const WeeklyQuotes& weeks,
                       const std::map<ModelKind, WeeklyFits>& fits) {
  for (const auto& [week, chain] : weeks) {
    json doc{{"week", week.str()}, {"quotes", chain.size()}, {"fits", json::object()}};
    for (const auto& [model, by_week] : fits) {
      const auto it = by_week.find(week);
      doc["fits"][std::string(to_string(model))] = it == by_week.end() ? json() : to_json(it->second);
    }
    write_json(dir / ("week-" + week.str() + ".json"), doc);
  }
}

void write_report_pair(const std::filesystem::path& dir, const std::string& name, const EvalReport& report) {
  std::filesystem::create_directories(dir);
  emit_report(report, ReportFormat::csv, dir / (name + ".csv"));
  emit_report(report, ReportFormat::json, dir / (name + ".json"));
}

// Initial weekly guesses per model: historical fits when a returns file is
// configured, otherwise cfg.initial.
std::map<ModelKind, VgParams> weekly_initials(const RunConfig& cfg, std::vector<CalibrationResult>& historical) {
  std::map<ModelKind, VgParams> out;
  if (cfg.returns.empty()) {
    for (ModelKind m : kAllModels) out[m] = cfg.initial;
    return out;
  }
  require_file(cfg.returns, "returns");
  const auto series = load_returns(cfg.returns);
  for (ModelKind m : kAllModels) {
    historical.push_back(fit_historical(series.log_returns, m, cfg.simplex, cfg.quad));
    out[m] = historical.back().vg();
  }
  return out;
}

}  // namespace

json merge_config(json base, const json& patch) {
  if (!patch.is_object() || !base.is_object()) return patch;
  for (const auto& [key, value] : patch.items()) {
    if (value.is_object() && base.contains(key) && base[key].is_object())
      base[key] = merge_config(base[key], value);
    else
      base[key] = value;
  }
  return base;
}

RunConfig RunConfig::from_json(const json& doc) {
  RunConfig cfg;
  StrictObject o(doc, "");
  o.read_model("model", cfg.model);
  o.read_path("quotes", cfg.quotes);
  o.read_path("returns", cfg.returns);
  o.read_path("out_dir", cfg.out_dir);
  o.read_path("out_file", cfg.out_file);
  o.read_optional("r_d", cfg.r_d);
  o.read_optional("r_f", cfg.r_f);
  o.read("min_volume", cfg.min_volume);
  o.read("seed", cfg.seed);
  o.read("workers", cfg.workers);
  if (const json* r = o.child("regimes")) {
    StrictObject ro(*r, "regimes");
    ro.read_date("start", cfg.regimes.start);
    ro.read_date("split", cfg.regimes.split);
    ro.read_date("end", cfg.regimes.end);
    ro.finish();
  }
  if (const json* s = o.child("simplex")) {
    StrictObject so(*s, "simplex");
    so.read("reflection", cfg.simplex.reflection);
    so.read("expansion", cfg.simplex.expansion);
    so.read("contraction", cfg.simplex.contraction);
    so.read("shrink", cfg.simplex.shrink);
    so.read("x_tol", cfg.simplex.x_tol);
    so.read("f_tol", cfg.simplex.f_tol);
    so.read("max_iters", cfg.simplex.max_iters);
    so.read("restarts", cfg.simplex.restarts);
    so.finish();
  }
  if (const json* q = o.child("quadrature")) {
    StrictObject qo(*q, "quadrature");
    qo.read("rel_tol", cfg.quad.rel_tol);
    qo.read("abs_tol", cfg.quad.abs_tol);
    qo.read("max_subdivisions", cfg.quad.max_subdivisions);
    qo.finish();
  }
  if (const json* i = o.child("initial")) read_params(*i, "initial", cfg.initial);
  if (const json* g = o.child("generator")) {
    StrictObject go(*g, "generator");
    auto& gen = cfg.generator;
    go.read("weeks", gen.weeks);
    go.read("quotes_per_week", gen.quotes_per_week);
    go.read_date("start", gen.start);
    go.read("spot0", gen.spot0);
    go.read("spot_vol", gen.spot_vol);
    go.read("r_d", gen.r_d);
    go.read("r_f", gen.r_f);
    if (const json* t = go.child("truth")) read_params(*t, "generator.truth", gen.truth);
    if (const json* path = go.child("truth_path")) {
      if (!path->is_array()) throw UsageError("config: 'generator.truth_path' must be an array");
      gen.truth_path.clear();
      for (const auto& p : *path) {
        VgParams params;
        read_params(p, "generator.truth_path[]", params);
        gen.truth_path.push_back(params);
      }
    }
    go.read("drift_amplitude", gen.drift_amplitude);
    go.read("noise", gen.noise);
    go.read("illiquid_per_week", gen.illiquid_per_week);
    go.read("min_price", gen.min_price);
    go.finish();
  }
  if (const json* s = o.child("simulate")) {
    StrictObject so(*s, "simulate");
    so.read("n", cfg.simulate.n);
    so.read_model("model", cfg.simulate.model);
    if (const json* p = so.child("params")) read_params(*p, "simulate.params", cfg.simulate.params);
    so.read("drift", cfg.simulate.drift);
    so.finish();
  }
  o.finish();
  return cfg;
}

json RunConfig::to_json() const {
  auto optional_number = [](const std::optional<double>& v) { return v ? json(*v) : json(); };
  json truth_path = json::array();
  for (const auto& p : generator.truth_path) truth_path.push_back(params_json(p));
  return {
      {"model", std::string(vgfx::to_string(model))},
      {"quotes", quotes.string()},
      {"returns", returns.string()},
      {"out_dir", out_dir.string()},
      {"out_file", out_file.string()},
      {"r_d", optional_number(r_d)},
      {"r_f", optional_number(r_f)},
      {"min_volume", min_volume},
      {"seed", seed},
      {"regimes", {{"start", regimes.start.iso()}, {"split", regimes.split.iso()}, {"end", regimes.end.iso()}}},
      {"simplex",
       {{"reflection", simplex.reflection},
        {"expansion", simplex.expansion},
        {"contraction", simplex.contraction},
        {"shrink", simplex.shrink},
        {"x_tol", simplex.x_tol},
        {"f_tol", simplex.f_tol},
        {"max_iters", simplex.max_iters},
        {"restarts", simplex.restarts}}},
      {"quadrature",
       {{"rel_tol", quad.rel_tol}, {"abs_tol", quad.abs_tol}, {"max_subdivisions", quad.max_subdivisions}}},
      {"initial", params_json(initial)},
      {"generator",
       {{"weeks", generator.weeks},
        {"quotes_per_week", generator.quotes_per_week},
        {"start", generator.start.iso()},
        {"spot0", generator.spot0},
        {"spot_vol", generator.spot_vol},
        {"r_d", generator.r_d},
        {"r_f", generator.r_f},
        {"truth", params_json(generator.truth)},
        {"truth_path", truth_path},
        {"drift_amplitude", generator.drift_amplitude},
        {"noise", generator.noise},
        {"illiquid_per_week", generator.illiquid_per_week},
        {"min_price", generator.min_price}}},
      {"simulate",
       {{"n", simulate.n},
        {"model", std::string(vgfx::to_string(simulate.model))},
        {"params", params_json(simulate.params)},
        {"drift", simulate.drift}}},
  };
}

void RunConfig::validate() const {
  simplex.validate();
  quad.validate();
  regimes.validate();
  initial.validate();
  if (workers < 1) throw UsageError("config: workers must be >= 1");
  if (min_volume < 0) throw UsageError("config: min_volume must be >= 0");
  if ((r_d && !std::isfinite(*r_d)) || (r_f && !std::isfinite(*r_f)))
    throw UsageError("config: rates must be finite");
}

json to_json(const CalibrationResult& fit) {
  return {{"model", std::string(to_string(fit.model))},
          {"sigma", fit.sigma},
          {"nu", fit.nu},
          {"theta", fit.theta},
          {"loss", fit.loss},
          {"iterations", fit.iterations},
          {"evaluations", fit.evaluations},
          {"converged", fit.converged},
          {"fallback_used", fit.fallback_used},
          {"moment_fallback", fit.moment_fallback},
          {"carried_forward", fit.carried_forward}};
}

CalibrationResult calibration_from_json(const json& doc) {
  CalibrationResult fit;
  StrictObject o(doc, "fit");
  o.read_model("model", fit.model);
  o.read("sigma", fit.sigma);
  o.read("nu", fit.nu);
  o.read("theta", fit.theta);
  o.read("loss", fit.loss);
  o.read("iterations", fit.iterations);
  o.read("evaluations", fit.evaluations);
  o.read("converged", fit.converged);
  o.read("fallback_used", fit.fallback_used);
  o.read("moment_fallback", fit.moment_fallback);
  o.read("carried_forward", fit.carried_forward);
  o.finish();
  return fit;
}

WeeklyFits fit_all_weeks(const WeeklyQuotes& weeks, ModelKind model, const VgParams& initial, const RunConfig& cfg,
                         const LogSink& log) {
  std::vector<std::pair<IsoWeek, const std::vector<OptionQuote>*>> jobs;
  for (const auto& [week, chain] : weeks) jobs.emplace_back(week, &chain);
  std::vector<std::optional<CalibrationResult>> results(jobs.size());
  std::vector<std::string> failures(jobs.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto& chain = *jobs[i].second;
      if (chain.size() < parameter_count(model)) {
        failures[i] = std::to_string(chain.size()) + " quotes for " + std::to_string(parameter_count(model)) +
                      " parameters";
        continue;
      }
      try {
        results[i] = fit_weekly_risk_neutral(chain, model, initial, cfg.simplex, cfg.quad);
      } catch (const DomainError& e) {
        failures[i] = e.what();
      } catch (const QuadratureError& e) {
        failures[i] = e.what();
      }
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), jobs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  WeeklyFits out;
  const CalibrationResult* previous = nullptr;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& week = jobs[i].first;
    if (results[i]) {
      previous = &(out[week] = *results[i]);
      continue;
    }
    const std::string label = std::string(to_string(model)) + " week " + week.str();
    if (!previous) {
      emit(log, label + ": not fitted (" + failures[i] + "), nothing to carry forward");
      continue;
    }
    emit(log, label + ": not fitted (" + failures[i] + "), carrying previous parameters forward");
    CalibrationResult carried = *previous;
    carried.carried_forward = true;
    previous = &(out[week] = carried);
  }
  return out;
}

json run_simulate(const RunConfig& cfg, const LogSink&) {
  cfg.validate();
  require_output(cfg.out_file, "simulate");
  const auto& sim = cfg.simulate;
  if (sim.n < 1) throw UsageError("simulate: n must be >= 1");
  const std::uint64_t seed = cfg.seed + kSimulateSeedOffset;
  const auto series = sim.model == ModelKind::gk
                          ? simulate_gaussian_returns(sim.params.sigma, sim.drift, sim.n, seed)
                          : simulate_returns(sim.model == ModelKind::symmetric_vg
                                                 ? VgParams{sim.params.sigma, sim.params.nu, 0.0}
                                                 : sim.params,
                                             sim.drift, sim.n, seed);
  if (cfg.out_file.has_parent_path()) std::filesystem::create_directories(cfg.out_file.parent_path());
  write_returns(cfg.out_file, series);
  return {{"command", "simulate"}, {"n", series.log_returns.size()}, {"out_file", cfg.out_file.string()}};
}

json run_fit_historical(const RunConfig& cfg, const LogSink& log) {
  cfg.validate();
  require_file(cfg.returns, "returns");
  const auto series = load_returns(cfg.returns);
  const auto fit = fit_historical(series.log_returns, cfg.model, cfg.simplex, cfg.quad);
  if (fit.moment_fallback) emit(log, "moment inversion failed (excess kurtosis <= 0); started from nu = 0.1");
  if (!fit.converged) emit(log, "historical fit did not converge");
  json doc = to_json(fit);
  doc["n_returns"] = series.log_returns.size();
  if (!cfg.out_file.empty()) write_json(cfg.out_file, doc);
  return doc;
}

json run_fit_weekly(const RunConfig& cfg, const LogSink& log) {
  cfg.validate();
  const auto prepared = prepare_quotes(cfg);
  write_rejects_file(cfg, prepared.load);
  std::vector<CalibrationResult> historical;
  const auto initials = weekly_initials(cfg, historical);
  std::map<ModelKind, WeeklyFits> fits;
  fits[cfg.model] = fit_all_weeks(prepared.weeks, cfg.model, initials.at(cfg.model), cfg, log);
  write_week_params(cfg.out_dir / "params", prepared.weeks, fits);
  write_report_pair(cfg.out_dir / "reports", "weekly_parameters", weekly_parameter_report(fits));
  std::size_t carried = 0;
  for (const auto& [week, fit] : fits[cfg.model]) carried += fit.carried_forward;
  return {{"command", "fit-weekly"},
          {"model", std::string(to_string(cfg.model))},
          {"weeks", prepared.weeks.size()},
          {"fitted_weeks", fits[cfg.model].size()},
          {"carried_forward", carried},
          {"rejects", prepared.load.rejects.size()}};
}

json run_evaluate(const RunConfig& cfg, const LogSink& log) {
  cfg.validate();
  const auto prepared = prepare_quotes(cfg);
  write_rejects_file(cfg, prepared.load);
  std::vector<CalibrationResult> historical;
  const auto initials = weekly_initials(cfg, historical);

  std::map<ModelKind, WeeklyFits> fits;
  std::vector<EvalRecord> records;
  std::vector<SkipRecord> skipped;
  json summary{{"command", "evaluate"}, {"overall_mape", json::object()}, {"records", json::object()},
               {"skipped", json::object()}};
  for (ModelKind m : kAllModels) {
    fits[m] = fit_all_weeks(prepared.weeks, m, initials.at(m), cfg, log);
    auto wf = walk_forward(fits[m], prepared.weeks, m, cfg.regimes, cfg.quad);
    const std::string name(to_string(m));
    summary["overall_mape"][name] = wf.records.empty() ? json() : json(mape(wf.records));
    summary["records"][name] = wf.records.size();
    summary["skipped"][name] = wf.skipped.size();
    records.insert(records.end(), wf.records.begin(), wf.records.end());
    skipped.insert(skipped.end(), wf.skipped.begin(), wf.skipped.end());
  }

  write_week_params(cfg.out_dir / "params", prepared.weeks, fits);
  const auto reports_dir = cfg.out_dir / "reports";
  for (GroupBy g : kGroupings)
    write_report_pair(reports_dir, std::string(to_string(g)), report(records, skipped, g));
  write_report_pair(reports_dir, "weekly_parameters", weekly_parameter_report(fits));
  if (!historical.empty())
    write_report_pair(reports_dir, "historical_parameters", historical_parameter_report(historical));
  write_records(reports_dir / "records.csv", records);

  std::size_t liquid = 0;
  for (const auto& [week, chain] : prepared.weeks) liquid += chain.size();
  summary["quotes_loaded"] = prepared.load.quotes.size();
  summary["rejects"] = prepared.load.rejects.size();
  summary["illiquid_excluded"] = prepared.illiquid;
  summary["quotes_used"] = liquid;
  summary["weeks"] = prepared.weeks.size();
  write_json(cfg.out_dir / "run-manifest.json", {{"config", cfg.to_json()}, {"summary", summary}});
  return summary;
}

json run_generate(const RunConfig& cfg, const LogSink&) {
  cfg.validate();
  require_output(cfg.out_file, "generate");
  SyntheticChainConfig gen = cfg.generator;
  gen.seed = cfg.seed + kGeneratorSeedOffset;
  gen.min_volume = cfg.min_volume;
  gen.quad = cfg.quad;
  const auto quotes = generate_synthetic_chain(gen);
  if (cfg.out_file.has_parent_path()) std::filesystem::create_directories(cfg.out_file.parent_path());
  write_quotes(cfg.out_file, quotes);
  const auto liquid = liquidity_filter(quotes, cfg.min_volume);
  return {{"command", "generate"},
          {"rows", quotes.size()},
          {"liquid_rows", liquid.size()},
          {"weeks", group_by_week(liquid).size()},
          {"out_file", cfg.out_file.string()}};
}

json run_command(std::string_view command, const RunConfig& cfg, const LogSink& log) {
  if (command == "simulate") return run_simulate(cfg, log);
  if (command == "fit-historical") return run_fit_historical(cfg, log);
  if (command == "fit-weekly") return run_fit_weekly(cfg, log);
  if (command == "evaluate") return run_evaluate(cfg, log);
  if (command == "generate") return run_generate(cfg, log);
  throw UsageError("unknown command '" + std::string(command) + "'");
}

}  // namespace vgfx
