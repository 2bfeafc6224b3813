#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pricing.hpp"
#include "quadrature.hpp"
#include "vgcore.hpp"

namespace vgfx {

/// Calendar date, stored as days since the Unix epoch.
class Date {
 public:
  Date() = default;
  explicit Date(std::chrono::sys_days days) : days_(days) {}
  Date(int year, unsigned month, unsigned day);

  /// Parses YYYY-MM-DD. Throws DataError on malformed or impossible dates.
  static Date parse(std::string_view iso);

  std::string iso() const;
  std::chrono::sys_days sys_days() const { return days_; }
  int year() const;
  /// ISO weekday, Monday = 1 ... Sunday = 7.
  unsigned iso_weekday() const;
  Date plus_days(int n) const { return Date(days_ + std::chrono::days(n)); }
  friend int days_between(const Date& from, const Date& to) {
    return static_cast<int>((to.days_ - from.days_).count());
  }
  friend auto operator<=>(const Date&, const Date&) = default;

 private:
  std::chrono::sys_days days_{};
};

struct IsoWeek {
  int year = 0;
  int week = 0;

  static IsoWeek of(const Date& d);
  std::string str() const;  // e.g. 2011-W05
  friend auto operator<=>(const IsoWeek&, const IsoWeek&) = default;
};

struct OptionQuote {
  Date trade_date;
  Date expiry_date;
  double strike = 0.0;
  double market_price = 0.0;
  std::int64_t volume = 0;
  double spot = 0.0;
  double r_d = 0.0;
  double r_f = 0.0;

  int maturity_days() const { return days_between(trade_date, expiry_date); }
  double maturity_years() const { return maturity_days() / kCalendarDaysPerYear; }
  MarketEnv env() const { return {spot, r_d, r_f}; }
  OptionSpec option() const { return {strike, maturity_years(), OptionKind::european_call}; }
  /// Empty when all invariants hold, otherwise the first violated one.
  std::optional<std::string> violation() const;

  friend auto operator<=>(const OptionQuote&, const OptionQuote&) = default;
};

/// Column names of the quote CSV. Rates may be supplied as constants
/// instead of columns.
struct QuoteSchema {
  std::string trade_date = "trade_date";
  std::string expiry_date = "expiry_date";
  std::string strike = "strike";
  std::string price = "price";
  std::string volume = "volume";
  std::string spot = "spot";
  std::string r_d = "r_d";
  std::string r_f = "r_f";
  std::optional<double> constant_r_d;
  std::optional<double> constant_r_f;
};

struct RejectRecord {
  std::size_t line_number = 0;
  std::string reason;
};

struct QuoteLoad {
  std::vector<OptionQuote> quotes;
  std::vector<RejectRecord> rejects;
};

/// Reads a quote CSV. Malformed rows become line-numbered rejects; a
/// missing file, an empty file or a missing column throws DataError.
QuoteLoad load_quotes(const std::filesystem::path& path, const QuoteSchema& schema = {});
QuoteLoad parse_quotes(std::string_view text, const QuoteSchema& schema = {});
void write_quotes(const std::filesystem::path& path, std::span<const OptionQuote> quotes);
std::string format_quotes(std::span<const OptionQuote> quotes);

void write_rejects(const std::filesystem::path& path, std::span<const RejectRecord> rejects);

struct ReturnSeries {
  std::vector<Date> dates;
  std::vector<double> log_returns;
};

/// Reads a `date,log_return` CSV. Any malformed row throws DataError naming
/// its line.
ReturnSeries load_returns(const std::filesystem::path& path);
ReturnSeries parse_returns(std::string_view text);
void write_returns(const std::filesystem::path& path, const ReturnSeries& series);

inline constexpr std::int64_t kDefaultMinVolume = 100;

/// Keeps quotes whose volume strictly exceeds min_volume.
std::vector<OptionQuote> liquidity_filter(std::span<const OptionQuote> quotes,
                                          std::int64_t min_volume = kDefaultMinVolume);

enum class Moneyness { itm, atm, otm };
enum class MaturityBucket { short_term, medium_term, long_term };
enum class Regime { low_vol, high_vol };

std::string_view to_string(Moneyness m);
std::string_view to_string(MaturityBucket m);
std::string_view to_string(Regime r);

/// ATM for 0.95 < S/K < 1.05, ITM for S/K >= 1.05, OTM for S/K <= 0.95.
Moneyness classify_moneyness(double spot, double strike);
/// Calendar days: short < 30, medium 30..60, long > 60.
MaturityBucket classify_maturity(const Date& trade, const Date& expiry);

struct RegimeBoundaries {
  Date start{2010, 11, 1};
  Date split{2011, 7, 28};
  Date end{2012, 9, 28};

  void validate() const;
};

/// low_vol before `split`, high_vol from `split` on. Dates outside
/// [start, end] throw DomainError.
Regime classify_regime(const Date& trade, const RegimeBoundaries& bounds = {});

struct BucketLabel {
  Moneyness moneyness = Moneyness::atm;
  MaturityBucket maturity = MaturityBucket::short_term;
  Regime regime = Regime::low_vol;

  friend auto operator<=>(const BucketLabel&, const BucketLabel&) = default;
};

BucketLabel classify(const OptionQuote& q, const RegimeBoundaries& bounds = {});

using WeeklyQuotes = std::map<IsoWeek, std::vector<OptionQuote>>;

/// Groups by ISO week of the trade date; input order is kept inside a week.
WeeklyQuotes group_by_week(std::span<const OptionQuote> quotes);

/// Synthetic USD-INR style option chain priced by the VG closed form.
struct SyntheticChainConfig {
  int weeks = 92;
  int quotes_per_week = 80;
  Date start{2010, 11, 1};
  double spot0 = 45.0;
  double spot_vol = 0.06;
  double r_d = 0.08;
  double r_f = 0.005;
  VgParams truth{0.116, 0.099, 0.0026};
  // Relative amplitude of a slow sinusoidal drift applied to the truth.
  double drift_amplitude = 0.0;
  // Explicit per-week truth; overrides `truth` and `drift_amplitude`.
  std::vector<VgParams> truth_path;
  double noise = 0.0;
  std::uint64_t seed = 42;
  std::int64_t min_volume = kDefaultMinVolume;
  // Extra rows per week at or below the liquidity threshold.
  int illiquid_per_week = 10;
  double min_price = 0.0025;
  QuadratureSpec quad{};

  void validate() const;
};

/// Per-week generating parameters.
std::vector<VgParams> synthetic_truth(const SyntheticChainConfig& cfg);

/// Deterministic in cfg.seed. After liquidity_filter every week holds
/// exactly quotes_per_week quotes.
std::vector<OptionQuote> generate_synthetic_chain(const SyntheticChainConfig& cfg);

/// Daily log returns simulated from VG increments with horizon 1/252 and
/// calendar drift `drift_m`, dated on consecutive weekdays from `start`.
ReturnSeries simulate_returns(const VgParams& vg, double drift_m, std::size_t n, std::uint64_t seed,
                              Date start = Date{2010, 11, 1});
/// Gaussian daily log returns with annual volatility sigma.
ReturnSeries simulate_gaussian_returns(double sigma, double drift_m, std::size_t n, std::uint64_t seed,
                                       Date start = Date{2010, 11, 1});

}  // namespace vgfx
