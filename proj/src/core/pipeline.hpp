#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "calibration.hpp"
#include "evaluation.hpp"
#include "marketdata.hpp"

namespace vgfx {

// Fixed offsets from the run seed for each random consumer.
inline constexpr std::uint64_t kGeneratorSeedOffset = 0;
inline constexpr std::uint64_t kSimulateSeedOffset = 1;
inline constexpr std::uint64_t kMonteCarloSeedOffset = 2;

struct SimulateConfig {
  std::size_t n = 5000;
  ModelKind model = ModelKind::vg;
  VgParams params{0.1044, 0.211, -0.00118};
  double drift = 0.0;  // calendar drift per year
};

/// Everything a pipeline command needs. Serializes to and from JSON; unknown
/// keys are rejected.
struct RunConfig {
  ModelKind model = ModelKind::vg;
  std::filesystem::path quotes;
  std::filesystem::path returns;
  std::filesystem::path out_dir = "out";
  std::filesystem::path out_file;
  std::optional<double> r_d;
  std::optional<double> r_f;
  RegimeBoundaries regimes;
  SimplexConfig simplex;
  QuadratureSpec quad;
  std::int64_t min_volume = kDefaultMinVolume;
  std::uint64_t seed = 42;
  int workers = 1;
  // Start of every weekly fit when no returns file is given.
  VgParams initial{0.1044, 0.211, -0.00118};
  SyntheticChainConfig generator;
  SimulateConfig simulate;

  static RunConfig from_json(const nlohmann::json& doc);
  /// Resolved configuration. `workers` is left out: it cannot change results.
  nlohmann::json to_json() const;
  void validate() const;
};

/// Applies `patch` on top of `base` key by key (objects merge recursively).
nlohmann::json merge_config(nlohmann::json base, const nlohmann::json& patch);

nlohmann::json to_json(const CalibrationResult& fit);
CalibrationResult calibration_from_json(const nlohmann::json& doc);

using LogSink = std::function<void(std::string_view)>;

/// Weekly fits for one model. Weeks with fewer quotes than the model has
/// parameters, or whose fit throws, carry the previous week's parameters
/// forward. Results do not depend on `workers`.
WeeklyFits fit_all_weeks(const WeeklyQuotes& weeks, ModelKind model, const VgParams& initial,
                         const RunConfig& cfg, const LogSink& log = {});

/// Pipeline commands. Each returns a JSON summary; files go under
/// cfg.out_dir or cfg.out_file as documented in the README.
nlohmann::json run_simulate(const RunConfig& cfg, const LogSink& log = {});
nlohmann::json run_fit_historical(const RunConfig& cfg, const LogSink& log = {});
nlohmann::json run_fit_weekly(const RunConfig& cfg, const LogSink& log = {});
nlohmann::json run_evaluate(const RunConfig& cfg, const LogSink& log = {});
nlohmann::json run_generate(const RunConfig& cfg, const LogSink& log = {});

/// Dispatches on "simulate", "fit-historical", "fit-weekly", "evaluate" or
/// "generate".
nlohmann::json run_command(std::string_view command, const RunConfig& cfg, const LogSink& log = {});

}  // namespace vgfx
