#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "calibration.hpp"
#include "marketdata.hpp"

namespace vgfx {

struct EvalRecord {
  OptionQuote quote;
  double model_price = 0.0;
  double abs_rel_error = 0.0;
  BucketLabel bucket;
  IsoWeek week;
  ModelKind model = ModelKind::vg;
};

struct SkipRecord {
  OptionQuote quote;
  BucketLabel bucket;
  IsoWeek week;
  ModelKind model = ModelKind::vg;
  std::string reason;
};

/// |C_market - C_model| / C_market.
double abs_rel_error(double market_price, double model_price);

/// Mean absolute relative error. Throws DataError on empty input.
double mape(std::span<const EvalRecord> records);

struct WalkForwardResult {
  std::vector<EvalRecord> records;
  std::vector<SkipRecord> skipped;
};

using WeeklyFits = std::map<IsoWeek, CalibrationResult>;

/// Prices each week's quotes with the parameters fitted on the preceding
/// week that has data. The first week yields no records. Quotes whose
/// pricing fails, or whose preceding week has no converged or carried
/// fit, are listed in `skipped`.
WalkForwardResult walk_forward(const WeeklyFits& fits, const WeeklyQuotes& quotes, ModelKind model,
                               const RegimeBoundaries& regimes = {}, const QuadratureSpec& quad = {});

enum class GroupBy { overall, regime, maturity, moneyness };

std::string_view to_string(GroupBy g);
GroupBy parse_group_by(std::string_view name);

/// Statistics of one (model, group) cell. Empty cells carry no values.
struct ReportCell {
  std::string model;
  std::string group_dimension;
  std::string group_value;
  std::size_t n = 0;
  std::optional<double> mean;
  std::optional<double> sd;  // sample standard deviation; 0 when n = 1
  std::optional<double> max;
  std::optional<double> min;
  std::size_t n_skipped = 0;

  friend bool operator==(const ReportCell&, const ReportCell&) = default;
};

struct EvalReport {
  std::vector<ReportCell> cells;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct CellStats {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double max = 0.0;
  double min = 0.0;
};

/// Mean, sample standard deviation, max and min. Values are sorted first so
/// the result is order independent, and the mean is accumulated relative to
/// the minimum so identical inputs return that value exactly.
CellStats cell_stats(std::span<const double> values);

/// One cell per model (gk, vg, svg order) and group value (enum order) for
/// every model appearing in `records` or `skipped`.
EvalReport report(std::span<const EvalRecord> records, std::span<const SkipRecord> skipped, GroupBy group_by);

/// Statistics of fitted parameters across weeks: one cell per model and
/// parameter. Carried-forward weeks count in n_skipped, not in the values.
EvalReport weekly_parameter_report(const std::map<ModelKind, WeeklyFits>& fits);

/// Historical fits: one cell per model and parameter with n = 1.
EvalReport historical_parameter_report(std::span<const CalibrationResult> fits);

enum class ReportFormat { csv, json };

/// Numbers are rendered with 6 significant digits; JSON keys are sorted.
std::string render_report(const EvalReport& report, ReportFormat format);
void emit_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path);

EvalReport parse_report(std::string_view text, ReportFormat format);

}  // namespace vgfx
