#include "marketdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <unordered_map>

#include "errors.hpp"

namespace vgfx {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  for (;;) {
    const auto comma = line.find(',', begin);
    out.push_back(trim(line.substr(begin, comma == std::string_view::npos ? std::string_view::npos : comma - begin)));
    if (comma == std::string_view::npos) break;
    begin = comma + 1;
  }
  return out;
}

// Non-blank lines with their 1-based physical line numbers.
std::vector<std::pair<std::size_t, std::string_view>> numbered_lines(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> out;
  std::size_t number = 0;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    const auto end = text.find('\n', begin);
    const auto line = text.substr(begin, end == std::string_view::npos ? std::string_view::npos : end - begin);
    ++number;
    if (!trim(line).empty()) out.emplace_back(number, line);
    if (end == std::string_view::npos) break;
    begin = end + 1;
  }
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  double value = 0.0;
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t value = 0;
  if (s.empty()) return std::nullopt;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << content;
  if (!out.flush()) throw DataError("write failed for '" + path.string() + "'");
}

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

class ColumnIndex {
 public:
  ColumnIndex(std::span<const std::string_view> header) {
    for (std::size_t i = 0; i < header.size(); ++i) index_.emplace(std::string(header[i]), i);
  }
  std::optional<std::size_t> find(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t require(const std::string& name) const {
    if (auto i = find(name)) return *i;
    throw DataError("missing required column '" + name + "'");
  }

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace

Date::Date(int year, unsigned month, unsigned day) {
  const std::chrono::year_month_day ymd{std::chrono::year(year), std::chrono::month(month), std::chrono::day(day)};
  if (!ymd.ok())
    throw DataError("invalid calendar date " + std::to_string(year) + "-" + std::to_string(month) + "-" +
                    std::to_string(day));
  days_ = std::chrono::sys_days(ymd);
}

Date Date::parse(std::string_view iso) {
  iso = trim(iso);
  auto bad = [&] { return DataError("invalid date '" + std::string(iso) + "' (expected YYYY-MM-DD)"); };
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') throw bad();
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (iso[i] < '0' || iso[i] > '9') throw bad();
  const int y = std::stoi(std::string(iso.substr(0, 4)));
  const unsigned m = static_cast<unsigned>(std::stoi(std::string(iso.substr(5, 2))));
  const unsigned d = static_cast<unsigned>(std::stoi(std::string(iso.substr(8, 2))));
  const std::chrono::year_month_day ymd{std::chrono::year(y), std::chrono::month(m), std::chrono::day(d)};
  if (!ymd.ok()) throw bad();
  return Date(std::chrono::sys_days(ymd));
}

std::string Date::iso() const {
  const std::chrono::year_month_day ymd(days_);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int Date::year() const { return static_cast<int>(std::chrono::year_month_day(days_).year()); }

unsigned Date::iso_weekday() const { return std::chrono::weekday(days_).iso_encoding(); }

IsoWeek IsoWeek::of(const Date& d) {
  // The ISO week belongs to the year containing its Thursday.
  const Date thursday = d.plus_days(4 - static_cast<int>(d.iso_weekday()));
  const int year = thursday.year();
  const int day_of_year = days_between(Date(year, 1, 1), thursday);
  return {year, day_of_year / 7 + 1};
}

std::string IsoWeek::str() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-W%02d", year, week);
  return buf;
}

std::optional<std::string> OptionQuote::violation() const {
  if (!(expiry_date > trade_date)) return "expiry_date must be after trade_date";
  if (!(market_price > 0.0) || !std::isfinite(market_price)) return "price must be > 0";
  if (!(strike > 0.0) || !std::isfinite(strike)) return "strike must be > 0";
  if (volume < 0) return "volume must be >= 0";
  if (!(spot > 0.0) || !std::isfinite(spot)) return "spot must be > 0";
  if (!std::isfinite(r_d) || !std::isfinite(r_f)) return "rates must be finite";
  return std::nullopt;
}

QuoteLoad parse_quotes(std::string_view text, const QuoteSchema& schema) {
  const auto lines = numbered_lines(text);
  if (lines.empty()) throw DataError("quote file is empty (a header row is required)");
  const auto header = split_fields(lines.front().second);
  const ColumnIndex columns(header);
  const std::size_t c_trade = columns.require(schema.trade_date);
  const std::size_t c_expiry = columns.require(schema.expiry_date);
  const std::size_t c_strike = columns.require(schema.strike);
  const std::size_t c_price = columns.require(schema.price);
  const std::size_t c_volume = columns.require(schema.volume);
  const std::size_t c_spot = columns.require(schema.spot);
  // Rate columns are ignored when constants are supplied.
  constexpr std::size_t kUnused = static_cast<std::size_t>(-1);
  const std::size_t c_rd = schema.constant_r_d ? kUnused : columns.require(schema.r_d);
  const std::size_t c_rf = schema.constant_r_f ? kUnused : columns.require(schema.r_f);

  QuoteLoad out;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const auto [number, line] = lines[row];
    const auto fields = split_fields(line);
    auto reject = [&](std::string reason) { out.rejects.push_back({number, std::move(reason)}); };
    if (fields.size() != header.size()) {
      reject("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
      continue;
    }
    OptionQuote q;
    std::optional<std::string> error;
    auto number_field = [&](std::size_t col, const std::string& name, double& target) {
      if (error) return;
      if (auto v = parse_double(fields[col]))
        target = *v;
      else
        error = "invalid " + name + " '" + std::string(fields[col]) + "'";
    };
    auto date_field = [&](std::size_t col, const std::string& name, Date& target) {
      if (error) return;
      try {
        target = Date::parse(fields[col]);
      } catch (const DataError&) {
        error = "invalid " + name + " '" + std::string(fields[col]) + "'";
      }
    };
    date_field(c_trade, schema.trade_date, q.trade_date);
    date_field(c_expiry, schema.expiry_date, q.expiry_date);
    number_field(c_strike, schema.strike, q.strike);
    number_field(c_price, schema.price, q.market_price);
    if (!error) {
      if (auto v = parse_int(fields[c_volume]))
        q.volume = *v;
      else
        error = "invalid " + schema.volume + " '" + std::string(fields[c_volume]) + "'";
    }
    number_field(c_spot, schema.spot, q.spot);
    if (c_rd == kUnused)
      q.r_d = *schema.constant_r_d;
    else
      number_field(c_rd, schema.r_d, q.r_d);
    if (c_rf == kUnused)
      q.r_f = *schema.constant_r_f;
    else
      number_field(c_rf, schema.r_f, q.r_f);
    if (!error) error = q.violation();
    if (error) {
      reject(*error);
      continue;
    }
    out.quotes.push_back(q);
  }
  return out;
}

QuoteLoad load_quotes(const std::filesystem::path& path, const QuoteSchema& schema) {
  try {
    return parse_quotes(read_file(path), schema);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string format_quotes(std::span<const OptionQuote> quotes) {
  std::string out = "trade_date,expiry_date,strike,price,volume,spot,r_d,r_f\n";
  for (const auto& q : quotes) {
    out += q.trade_date.iso() + ',' + q.expiry_date.iso() + ',' + format_number(q.strike) + ',' +
           format_number(q.market_price) + ',' + std::to_string(q.volume) + ',' + format_number(q.spot) + ',' +
           format_number(q.r_d) + ',' + format_number(q.r_f) + '\n';
  }
  return out;
}

void write_quotes(const std::filesystem::path& path, std::span<const OptionQuote> quotes) {
  write_file(path, format_quotes(quotes));
}

void write_rejects(const std::filesystem::path& path, std::span<const RejectRecord> rejects) {
  std::string out = "line_number,reason\n";
  for (const auto& r : rejects) out += std::to_string(r.line_number) + ',' + csv_quote(r.reason) + '\n';
  write_file(path, out);
}

ReturnSeries parse_returns(std::string_view text) {
  const auto lines = numbered_lines(text);
  if (lines.empty()) throw DataError("returns file is empty (a header row is required)");
  const auto header = split_fields(lines.front().second);
  const ColumnIndex columns(header);
  const std::size_t c_date = columns.require("date");
  const std::size_t c_value = columns.require("log_return");
  ReturnSeries out;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const auto [number, line] = lines[row];
    const auto fields = split_fields(line);
    const std::string where = "line " + std::to_string(number) + ": ";
    if (fields.size() != header.size())
      throw DataError(where + "expected " + std::to_string(header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    Date date;
    try {
      date = Date::parse(fields[c_date]);
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
    const auto value = parse_double(fields[c_value]);
    if (!value) throw DataError(where + "invalid log_return '" + std::string(fields[c_value]) + "'");
    out.dates.push_back(date);
    out.log_returns.push_back(*value);
  }
  return out;
}

ReturnSeries load_returns(const std::filesystem::path& path) {
  try {
    return parse_returns(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_returns(const std::filesystem::path& path, const ReturnSeries& series) {
  if (series.dates.size() != series.log_returns.size())
    throw DataError("write_returns: dates and values differ in length");
  std::string out = "date,log_return\n";
  for (std::size_t i = 0; i < series.dates.size(); ++i)
    out += series.dates[i].iso() + ',' + format_number(series.log_returns[i]) + '\n';
  write_file(path, out);
}

std::vector<OptionQuote> liquidity_filter(std::span<const OptionQuote> quotes, std::int64_t min_volume) {
  std::vector<OptionQuote> out;
  std::copy_if(quotes.begin(), quotes.end(), std::back_inserter(out),
               [min_volume](const OptionQuote& q) { return q.volume > min_volume; });
  return out;
}

std::string_view to_string(Moneyness m) {
  switch (m) {
    case Moneyness::itm:
      return "itm";
    case Moneyness::atm:
      return "atm";
    case Moneyness::otm:
      return "otm";
  }
  return "unknown";
}

std::string_view to_string(MaturityBucket m) {
  switch (m) {
    case MaturityBucket::short_term:
      return "short";
    case MaturityBucket::medium_term:
      return "medium";
    case MaturityBucket::long_term:
      return "long";
  }
  return "unknown";
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::low_vol:
      return "low_vol";
    case Regime::high_vol:
      return "high_vol";
  }
  return "unknown";
}

Moneyness classify_moneyness(double spot, double strike) {
  if (!(spot > 0.0) || !(strike > 0.0)) throw DomainError("classify_moneyness: spot and strike must be > 0");
  const double ratio = spot / strike;
  if (ratio >= 1.05) return Moneyness::itm;
  if (ratio <= 0.95) return Moneyness::otm;
  return Moneyness::atm;
}

MaturityBucket classify_maturity(const Date& trade, const Date& expiry) {
  const int days = days_between(trade, expiry);
  if (days <= 0) throw DomainError("classify_maturity: expiry must be after the trade date");
  if (days < 30) return MaturityBucket::short_term;
  if (days <= 60) return MaturityBucket::medium_term;
  return MaturityBucket::long_term;
}

void RegimeBoundaries::validate() const {
  if (!(start <= split && split <= end))
    throw DomainError("RegimeBoundaries: require start <= split <= end");
}

Regime classify_regime(const Date& trade, const RegimeBoundaries& bounds) {
  bounds.validate();
  if (trade < bounds.start || trade > bounds.end)
    throw DomainError("classify_regime: " + trade.iso() + " is outside the regime span " + bounds.start.iso() +
                      " .. " + bounds.end.iso());
  return trade < bounds.split ? Regime::low_vol : Regime::high_vol;
}

BucketLabel classify(const OptionQuote& q, const RegimeBoundaries& bounds) {
  return {classify_moneyness(q.spot, q.strike), classify_maturity(q.trade_date, q.expiry_date),
          classify_regime(q.trade_date, bounds)};
}

WeeklyQuotes group_by_week(std::span<const OptionQuote> quotes) {
  WeeklyQuotes out;
  for (const auto& q : quotes) out[IsoWeek::of(q.trade_date)].push_back(q);
  return out;
}

void SyntheticChainConfig::validate() const {
  if (weeks < 1) throw DomainError("synthetic chain: weeks must be >= 1");
  if (quotes_per_week < 1) throw DomainError("synthetic chain: quotes_per_week must be >= 1");
  if (start.iso_weekday() != 1) throw DomainError("synthetic chain: start must be a Monday");
  if (!(spot0 > 0.0)) throw DomainError("synthetic chain: spot0 must be > 0");
  if (!(spot_vol >= 0.0)) throw DomainError("synthetic chain: spot_vol must be >= 0");
  if (!std::isfinite(r_d) || !std::isfinite(r_f)) throw DomainError("synthetic chain: rates must be finite");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw DomainError("synthetic chain: noise must be >= 0");
  if (!(drift_amplitude >= 0.0 && drift_amplitude < 1.0))
    throw DomainError("synthetic chain: drift_amplitude must be in [0, 1)");
  if (min_volume < 0) throw DomainError("synthetic chain: min_volume must be >= 0");
  if (illiquid_per_week < 0) throw DomainError("synthetic chain: illiquid_per_week must be >= 0");
  if (!(min_price > 0.0)) throw DomainError("synthetic chain: min_price must be > 0");
  if (!truth_path.empty() && truth_path.size() != static_cast<std::size_t>(weeks))
    throw DomainError("synthetic chain: truth_path must hold one parameter set per week");
  for (const auto& p : synthetic_truth(*this)) p.validate();
  quad.validate();
}

std::vector<VgParams> synthetic_truth(const SyntheticChainConfig& cfg) {
  if (!cfg.truth_path.empty()) return cfg.truth_path;
  std::vector<VgParams> out;
  out.reserve(static_cast<std::size_t>(std::max(cfg.weeks, 0)));
  for (int w = 0; w < cfg.weeks; ++w) {
    // One full cycle over the whole span.
    const double phase = 2.0 * std::numbers::pi * w / cfg.weeks;
    const double a = cfg.drift_amplitude;
    out.push_back({cfg.truth.sigma * (1.0 + a * std::sin(phase)), cfg.truth.nu * (1.0 + a * std::cos(phase)),
                   cfg.truth.theta * (1.0 + a * std::sin(phase))});
  }
  return out;
}

std::vector<OptionQuote> generate_synthetic_chain(const SyntheticChainConfig& cfg) {
  cfg.validate();
  const auto truth = synthetic_truth(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform_int = [&rng](std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  };

  const int trading_days = 5 * cfg.weeks;
  std::vector<double> spots(static_cast<std::size_t>(trading_days));
  double spot = cfg.spot0;
  const double step = 1.0 / kTradingDaysPerYear;
  for (auto& s : spots) {
    s = spot;
    spot *= std::exp(cfg.spot_vol * std::sqrt(step) * normal(rng) - 0.5 * cfg.spot_vol * cfg.spot_vol * step);
  }

  constexpr double kStrikeTick = 0.25;
  constexpr int kMaxRedraws = 50;
  auto make_quote = [&](int week, int slot, std::int64_t volume) {
    OptionQuote q;
    const int day = slot % 5;
    q.trade_date = cfg.start.plus_days(7 * week + day);
    q.spot = spots[static_cast<std::size_t>(5 * week + day)];
    q.r_d = cfg.r_d;
    q.r_f = cfg.r_f;
    q.volume = volume;
    // Maturity buckets and moneyness bands in a fixed rotation.
    int days = 0;
    switch (slot % 3) {
      case 0:
        days = static_cast<int>(uniform_int(7, 29));
        break;
      case 1:
        days = static_cast<int>(uniform_int(30, 60));
        break;
      default:
        days = static_cast<int>(uniform_int(61, 120));
        break;
    }
    q.expiry_date = q.trade_date.plus_days(days);
    const int band = (slot / 3) % 5;
    double lo = 0.95;
    double hi = 1.05;
    if (band == 0) lo = 1.05, hi = 1.10;
    if (band == 4) lo = 0.93, hi = 0.95;
    double price = 0.0;
    for (int attempt = 0; attempt <= kMaxRedraws; ++attempt) {
      const double ratio = attempt == kMaxRedraws ? 1.0 : lo + (hi - lo) * unit(rng);
      q.strike = std::max(kStrikeTick, std::round(q.spot / ratio / kStrikeTick) * kStrikeTick);
      price = price_vg(q.env(), truth[static_cast<std::size_t>(week)], q.option(), cfg.quad).price;
      if (price >= cfg.min_price) break;
      // Deep out-of-the-money draws fall back towards the money.
      lo = std::max(lo, 0.97);
      hi = std::max(hi, 1.03);
    }
    const double shock = cfg.noise > 0.0 ? std::exp(cfg.noise * normal(rng)) : 1.0;
    q.market_price = price * shock;
    return q;
  };

  std::vector<OptionQuote> out;
  out.reserve(static_cast<std::size_t>(cfg.weeks) *
              static_cast<std::size_t>(cfg.quotes_per_week + cfg.illiquid_per_week));
  for (int w = 0; w < cfg.weeks; ++w) {
    for (int i = 0; i < cfg.quotes_per_week; ++i)
      out.push_back(make_quote(w, i, uniform_int(cfg.min_volume + 1, cfg.min_volume + 5000)));
    for (int i = 0; i < cfg.illiquid_per_week; ++i) {
      // The first illiquid row sits exactly on the threshold.
      const std::int64_t volume = i == 0 ? cfg.min_volume : uniform_int(0, cfg.min_volume);
      out.push_back(make_quote(w, i, volume));
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const OptionQuote& a, const OptionQuote& b) { return a.trade_date < b.trade_date; });
  return out;
}

namespace {

std::vector<Date> weekday_dates(std::size_t n, Date start) {
  std::vector<Date> out;
  out.reserve(n);
  Date d = start;
  while (out.size() < n) {
    if (d.iso_weekday() <= 5) out.push_back(d);
    d = d.plus_days(1);
  }
  return out;
}

}  // namespace

ReturnSeries simulate_returns(const VgParams& vg, double drift_m, std::size_t n, std::uint64_t seed, Date start) {
  vg.validate();
  if (!std::isfinite(drift_m)) throw DomainError("simulate_returns: drift must be finite");
  constexpr double t = 1.0 / kTradingDaysPerYear;
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gamma_time(t / vg.nu, vg.nu);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double shift = (drift_m + omega(vg)) * t;
  ReturnSeries out;
  out.dates = weekday_dates(n, start);
  out.log_returns.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = gamma_time(rng);
    out.log_returns.push_back(shift + vg.theta * g + vg.sigma * std::sqrt(g) * normal(rng));
  }
  return out;
}

ReturnSeries simulate_gaussian_returns(double sigma, double drift_m, std::size_t n, std::uint64_t seed,
                                       Date start) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("simulate_gaussian_returns: sigma must be > 0");
  if (!std::isfinite(drift_m)) throw DomainError("simulate_gaussian_returns: drift must be finite");
  constexpr double t = 1.0 / kTradingDaysPerYear;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ReturnSeries out;
  out.dates = weekday_dates(n, start);
  out.log_returns.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.log_returns.push_back((drift_m - 0.5 * sigma * sigma) * t + sigma * std::sqrt(t) * normal(rng));
  return out;
}

}  // namespace vgfx
