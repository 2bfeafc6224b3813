#include "evaluation.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"

namespace vgfx {
namespace {

constexpr std::array<ModelKind, 3> kModelOrder{ModelKind::gk, ModelKind::vg, ModelKind::symmetric_vg};
constexpr std::array<const char*, 9> kColumns{"model", "group_dimension", "group_value", "n", "mean",
                                              "sd", "max", "min", "n_skipped"};

std::string six_digits(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

double rounded(double x) { return std::stod(six_digits(x)); }

std::vector<ModelKind> models_present(std::span<const EvalRecord> records, std::span<const SkipRecord> skipped) {
  std::vector<ModelKind> out;
  for (ModelKind m : kModelOrder) {
    const bool in_records = std::any_of(records.begin(), records.end(), [m](const auto& r) { return r.model == m; });
    const bool in_skipped = std::any_of(skipped.begin(), skipped.end(), [m](const auto& r) { return r.model == m; });
    if (in_records || in_skipped) out.push_back(m);
  }
  return out;
}

// Group values of a dimension in enum order, with a label extractor.
struct Grouping {
  std::vector<std::string> values;
  std::function<std::string(const BucketLabel&)> label;
};

Grouping grouping(GroupBy g) {
  switch (g) {
    case GroupBy::overall:
      return {{"all"}, [](const BucketLabel&) { return std::string("all"); }};
    case GroupBy::regime:
      return {{"low_vol", "high_vol"}, [](const BucketLabel& b) { return std::string(to_string(b.regime)); }};
    case GroupBy::maturity:
      return {{"short", "medium", "long"},
              [](const BucketLabel& b) { return std::string(to_string(b.maturity)); }};
    case GroupBy::moneyness:
      return {{"itm", "atm", "otm"}, [](const BucketLabel& b) { return std::string(to_string(b.moneyness)); }};
  }
  return {};
}

ReportCell make_cell(std::string model, std::string dimension, std::string value, std::span<const double> values,
                     std::size_t n_skipped) {
  ReportCell cell{std::move(model), std::move(dimension), std::move(value), values.size(), {}, {}, {}, {},
                  n_skipped};
  if (!values.empty()) {
    const auto s = cell_stats(values);
    cell.mean = s.mean;
    cell.sd = s.sd;
    cell.max = s.max;
    cell.min = s.min;
  }
  return cell;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  for (;;) {
    const auto comma = line.find(',', begin);
    out.push_back(line.substr(begin, comma == std::string_view::npos ? std::string_view::npos : comma - begin));
    if (comma == std::string_view::npos) break;
    begin = comma + 1;
  }
  return out;
}

std::optional<double> parse_optional_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError("report: invalid number '" + std::string(s) + "'");
  return v;
}

std::size_t parse_count(std::string_view s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw DataError("report: invalid count '" + std::string(s) + "'");
  return v;
}

}  // namespace

double abs_rel_error(double market_price, double model_price) {
  if (!(market_price > 0.0)) throw DomainError("abs_rel_error: market price must be > 0");
  return std::abs(market_price - model_price) / market_price;
}

CellStats cell_stats(std::span<const double> values) {
  if (values.empty()) throw DataError("cell_stats: no values");
  // Sorted so the result does not depend on input order.
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  CellStats s;
  s.n = v.size();
  s.min = v.front();
  s.max = v.back();
  const double n = static_cast<double>(s.n);
  double shifted = 0.0;
  for (double x : v) shifted += x - s.min;
  s.mean = std::clamp(s.min + shifted / n, s.min, s.max);
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

double mape(std::span<const EvalRecord> records) {
  if (records.empty()) throw DataError("mape: no records");
  std::vector<double> errors;
  errors.reserve(records.size());
  for (const auto& r : records) errors.push_back(r.abs_rel_error);
  return cell_stats(errors).mean;
}

WalkForwardResult walk_forward(const WeeklyFits& fits, const WeeklyQuotes& quotes, ModelKind model,
                               const RegimeBoundaries& regimes, const QuadratureSpec& quad) {
  WalkForwardResult out;
  const IsoWeek* previous = nullptr;
  for (const auto& [week, chain] : quotes) {
    if (previous) {
      const auto fit = fits.find(*previous);
      std::string unusable;
      if (fit == fits.end())
        unusable = "no fit for week " + previous->str();
      else if (!fit->second.converged && !fit->second.carried_forward)
        unusable = "fit for week " + previous->str() + " did not converge";
      for (const auto& q : chain) {
        const auto bucket = classify(q, regimes);
        if (!unusable.empty()) {
          out.skipped.push_back({q, bucket, week, model, unusable});
          continue;
        }
        try {
          const double price = model_price(model, fit->second.vg(), q, quad).price;
          if (!(price > 0.0) || !std::isfinite(price)) {
            out.skipped.push_back({q, bucket, week, model, "non-positive model price"});
            continue;
          }
          out.records.push_back({q, price, abs_rel_error(q.market_price, price), bucket, week, model});
        } catch (const DomainError& e) {
          out.skipped.push_back({q, bucket, week, model, e.what()});
        } catch (const QuadratureError& e) {
          out.skipped.push_back({q, bucket, week, model, e.what()});
        }
      }
    }
    previous = &week;
  }
  return out;
}

std::string_view to_string(GroupBy g) {
  switch (g) {
    case GroupBy::overall:
      return "overall";
    case GroupBy::regime:
      return "regime";
    case GroupBy::maturity:
      return "maturity";
    case GroupBy::moneyness:
      return "moneyness";
  }
  return "unknown";
}

GroupBy parse_group_by(std::string_view name) {
  for (GroupBy g : {GroupBy::overall, GroupBy::regime, GroupBy::maturity, GroupBy::moneyness})
    if (to_string(g) == name) return g;
  throw UsageError("unknown grouping '" + std::string(name) + "'");
}

EvalReport report(std::span<const EvalRecord> records, std::span<const SkipRecord> skipped, GroupBy group_by) {
  const auto g = grouping(group_by);
  const std::string dimension(to_string(group_by));
  EvalReport out;
  for (ModelKind m : models_present(records, skipped)) {
    for (const auto& value : g.values) {
      std::vector<double> errors;
      for (const auto& r : records)
        if (r.model == m && g.label(r.bucket) == value) errors.push_back(r.abs_rel_error);
      const auto n_skipped = static_cast<std::size_t>(std::count_if(
          skipped.begin(), skipped.end(), [&](const auto& s) { return s.model == m && g.label(s.bucket) == value; }));
      out.cells.push_back(make_cell(std::string(to_string(m)), dimension, value, errors, n_skipped));
    }
  }
  return out;
}

namespace {

std::vector<std::pair<std::string, double CalibrationResult::*>> model_parameters(ModelKind m) {
  switch (m) {
    case ModelKind::gk:
      return {{"sigma", &CalibrationResult::sigma}};
    case ModelKind::symmetric_vg:
      return {{"sigma", &CalibrationResult::sigma}, {"nu", &CalibrationResult::nu}};
    case ModelKind::vg:
      return {{"sigma", &CalibrationResult::sigma},
              {"nu", &CalibrationResult::nu},
              {"theta", &CalibrationResult::theta}};
  }
  return {};
}

}  // namespace

EvalReport weekly_parameter_report(const std::map<ModelKind, WeeklyFits>& fits) {
  EvalReport out;
  for (ModelKind m : kModelOrder) {
    const auto it = fits.find(m);
    if (it == fits.end()) continue;
    for (const auto& [name, member] : model_parameters(m)) {
      std::vector<double> values;
      std::size_t carried = 0;
      for (const auto& [week, fit] : it->second) {
        if (fit.carried_forward)
          ++carried;
        else
          values.push_back(fit.*member);
      }
      out.cells.push_back(make_cell(std::string(to_string(m)), "parameter", name, values, carried));
    }
  }
  return out;
}

EvalReport historical_parameter_report(std::span<const CalibrationResult> fits) {
  EvalReport out;
  for (ModelKind m : kModelOrder) {
    for (const auto& fit : fits) {
      if (fit.model != m) continue;
      for (const auto& [name, member] : model_parameters(m)) {
        const std::array<double, 1> value{fit.*member};
        out.cells.push_back(make_cell(std::string(to_string(m)), "parameter", name, value, 0));
      }
    }
  }
  return out;
}

std::string render_report(const EvalReport& report, ReportFormat format) {
  if (format == ReportFormat::csv) {
    std::string out;
    for (std::size_t i = 0; i < kColumns.size(); ++i) out += std::string(i ? "," : "") + kColumns[i];
    out += '\n';
    auto opt = [](const std::optional<double>& v) { return v ? six_digits(*v) : std::string(); };
    for (const auto& c : report.cells) {
      out += c.model + ',' + c.group_dimension + ',' + c.group_value + ',' + std::to_string(c.n) + ',' +
             opt(c.mean) + ',' + opt(c.sd) + ',' + opt(c.max) + ',' + opt(c.min) + ',' +
             std::to_string(c.n_skipped) + '\n';
    }
    return out;
  }
  nlohmann::json cells = nlohmann::json::array();
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(rounded(*v)) : nlohmann::json(); };
  for (const auto& c : report.cells) {
    cells.push_back({{"model", c.model},
                     {"group_dimension", c.group_dimension},
                     {"group_value", c.group_value},
                     {"n", c.n},
                     {"mean", opt(c.mean)},
                     {"sd", opt(c.sd)},
                     {"max", opt(c.max)},
                     {"min", opt(c.min)},
                     {"n_skipped", c.n_skipped}});
  }
  return cells.dump(2) + '\n';
}

void emit_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write report '" + path.string() + "'");
  out << render_report(report, format);
  if (!out.flush()) throw DataError("write failed for report '" + path.string() + "'");
}

EvalReport parse_report(std::string_view text, ReportFormat format) {
  EvalReport out;
  if (format == ReportFormat::csv) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw DataError("report: missing header");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = split_csv_line(line);
      if (f.size() != kColumns.size()) throw DataError("report: wrong field count in '" + line + "'");
      out.cells.push_back({std::string(f[0]), std::string(f[1]), std::string(f[2]), parse_count(f[3]),
                           parse_optional_number(f[4]), parse_optional_number(f[5]), parse_optional_number(f[6]),
                           parse_optional_number(f[7]), parse_count(f[8])});
    }
    return out;
  }
  auto opt = [](const nlohmann::json& v) -> std::optional<double> {
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
  };
  try {
    for (const auto& c : nlohmann::json::parse(text)) {
      out.cells.push_back({c.at("model").get<std::string>(), c.at("group_dimension").get<std::string>(),
                           c.at("group_value").get<std::string>(), c.at("n").get<std::size_t>(),
                           opt(c.at("mean")), opt(c.at("sd")), opt(c.at("max")), opt(c.at("min")),
                           c.at("n_skipped").get<std::size_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("report: ") + e.what());
  }
  return out;
}

}  // namespace vgfx
