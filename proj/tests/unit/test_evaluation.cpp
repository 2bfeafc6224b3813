#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <vector>

#include "errors.hpp"
#include "evaluation.hpp"

using vgfx::EvalRecord;
using vgfx::EvalReport;
using vgfx::GroupBy;
using vgfx::ModelKind;
using vgfx::ReportFormat;
using vgfx::VgParams;

namespace {

EvalRecord record(double market, double model, ModelKind kind = ModelKind::vg) {
  EvalRecord r;
  r.quote.market_price = market;
  r.model_price = model;
  r.abs_rel_error = vgfx::abs_rel_error(market, model);
  r.model = kind;
  return r;
}

// Records with varied buckets and errors across two models.
std::vector<EvalRecord> mixed_records(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> err(0.0, 0.3);
  std::vector<EvalRecord> out;
  for (int i = 0; i < 60; ++i) {
    EvalRecord r = record(1.0, 1.0 + err(rng), i % 2 ? ModelKind::vg : ModelKind::gk);
    r.bucket.moneyness = static_cast<vgfx::Moneyness>(i % 3);
    r.bucket.maturity = static_cast<vgfx::MaturityBucket>((i / 3) % 3);
    // Leave one regime cell of the gk model empty.
    r.bucket.regime = r.model == ModelKind::gk ? vgfx::Regime::low_vol : static_cast<vgfx::Regime>(i % 4 < 2);
    out.push_back(r);
  }
  return out;
}

std::vector<vgfx::OptionQuote> chain_for(const std::vector<VgParams>& path, int per_week, std::uint64_t seed) {
  vgfx::SyntheticChainConfig cfg;
  cfg.weeks = static_cast<int>(path.size());
  cfg.quotes_per_week = per_week;
  cfg.truth_path = path;
  cfg.seed = seed;
  return vgfx::liquidity_filter(vgfx::generate_synthetic_chain(cfg));
}

const vgfx::ReportCell& cell(const EvalReport& r, const std::string& model, const std::string& value) {
  const auto it = std::find_if(r.cells.begin(), r.cells.end(),
                               [&](const auto& c) { return c.model == model && c.group_value == value; });
  if (it == r.cells.end()) throw std::runtime_error("missing cell " + model + "/" + value);
  return *it;
}

}  // namespace

TEST(Mape, Examples) {
  const std::vector<EvalRecord> same{record(10.0, 10.0), record(3.0, 3.0)};
  EXPECT_EQ(vgfx::mape(same), 0.0);
  const std::vector<EvalRecord> doubled{record(10.0, 20.0), record(0.37, 0.74), record(5.5, 11.0)};
  EXPECT_EQ(vgfx::mape(doubled), 1.0);
  const std::vector<EvalRecord> forced{record(10.0, 9.0), record(20.0, 22.0)};
  EXPECT_NEAR(vgfx::mape(forced), 0.1, 1e-15);
}

TEST(Mape, EmptyInputThrows) { EXPECT_THROW(vgfx::mape(std::vector<EvalRecord>{}), vgfx::DataError); }

TEST(Mape, RejectsNonPositiveMarketPrice) {
  EXPECT_THROW(vgfx::abs_rel_error(0.0, 1.0), vgfx::DomainError);
  EXPECT_THROW(vgfx::abs_rel_error(-1.0, 1.0), vgfx::DomainError);
}

TEST(Mape, OrderInvariant) {
  auto records = mixed_records(3);
  const double before = vgfx::mape(records);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(records.begin(), records.end(), rng);
    EXPECT_EQ(vgfx::mape(records), before);
  }
}

TEST(CellStats, IdenticalValues) {
  const std::vector<double> v(7, 0.0123);
  const auto s = vgfx::cell_stats(v);
  EXPECT_EQ(s.n, 7u);
  EXPECT_EQ(s.mean, 0.0123);
  EXPECT_EQ(s.max, 0.0123);
  EXPECT_EQ(s.min, 0.0123);
  EXPECT_EQ(s.sd, 0.0);
}

TEST(CellStats, SampleStandardDeviation) {
  const std::vector<double> v{2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0};
  const auto s = vgfx::cell_stats(v);
  EXPECT_DOUBLE_EQ(s.mean, 5.0);
  EXPECT_DOUBLE_EQ(s.sd, std::sqrt(32.0 / 7.0));
  EXPECT_EQ(s.min, 2.0);
  EXPECT_EQ(s.max, 9.0);
  EXPECT_EQ(vgfx::cell_stats(std::vector<double>{0.5}).sd, 0.0);
  EXPECT_THROW(vgfx::cell_stats(std::vector<double>{}), vgfx::DataError);
}

TEST(Report, OverallEqualsMape) {
  const auto records = mixed_records(5);
  const auto r = vgfx::report(records, {}, GroupBy::overall);
  ASSERT_EQ(r.cells.size(), 2u);
  for (ModelKind m : {ModelKind::gk, ModelKind::vg}) {
    std::vector<EvalRecord> mine;
    std::copy_if(records.begin(), records.end(), std::back_inserter(mine), [m](const auto& x) { return x.model == m; });
    const auto& c = cell(r, std::string(vgfx::to_string(m)), "all");
    EXPECT_EQ(c.n, mine.size());
    EXPECT_EQ(*c.mean, vgfx::mape(mine));
  }
}

TEST(Report, IdenticalErrorsCell) {
  std::vector<EvalRecord> records(4, record(2.0, 2.5));
  const auto r = vgfx::report(records, {}, GroupBy::overall);
  ASSERT_EQ(r.cells.size(), 1u);
  const auto& c = r.cells[0];
  EXPECT_EQ(*c.mean, 0.25);
  EXPECT_EQ(*c.max, 0.25);
  EXPECT_EQ(*c.min, 0.25);
  EXPECT_EQ(*c.sd, 0.0);
}

TEST(Report, CellOrderAndPartitionTotals) {
  const auto records = mixed_records(6);
  std::vector<vgfx::SkipRecord> skipped(3);
  for (auto& s : skipped) s.model = ModelKind::symmetric_vg;
  skipped[0].bucket.maturity = vgfx::MaturityBucket::long_term;
  for (GroupBy g : {GroupBy::regime, GroupBy::maturity, GroupBy::moneyness}) {
    const auto r = vgfx::report(records, skipped, g);
    // Models in gk, vg, svg order; every group value present even when empty.
    const std::size_t per_model = g == GroupBy::regime ? 2 : 3;
    ASSERT_EQ(r.cells.size(), 3 * per_model);
    EXPECT_EQ(r.cells.front().model, "gk");
    EXPECT_EQ(r.cells.back().model, "svg");
    std::size_t total = 0;
    std::size_t skips = 0;
    for (const auto& c : r.cells) {
      total += c.n;
      skips += c.n_skipped;
      EXPECT_EQ(c.mean.has_value(), c.n > 0);
      EXPECT_EQ(c.group_dimension, vgfx::to_string(g));
    }
    EXPECT_EQ(total, records.size());
    EXPECT_EQ(skips, skipped.size());
  }
  const auto by_regime = vgfx::report(records, skipped, GroupBy::regime);
  EXPECT_EQ(cell(by_regime, "gk", "high_vol").n, 0u);
  EXPECT_FALSE(cell(by_regime, "gk", "high_vol").mean);
}

TEST(Report, GroupByNames) {
  for (GroupBy g : {GroupBy::overall, GroupBy::regime, GroupBy::maturity, GroupBy::moneyness})
    EXPECT_EQ(vgfx::parse_group_by(vgfx::to_string(g)), g);
  EXPECT_THROW(vgfx::parse_group_by("week"), vgfx::UsageError);
}

TEST(Render, CsvHeaderAndSixDigits) {
  EvalReport r;
  r.cells.push_back({"vg", "overall", "all", 3, 0.0123456789, 0.001, 0.5, 1.0 / 3.0, 2});
  EXPECT_EQ(vgfx::render_report(r, ReportFormat::csv),
            "model,group_dimension,group_value,n,mean,sd,max,min,n_skipped\n"
            "vg,overall,all,3,0.0123457,0.001,0.5,0.333333,2\n");
}

TEST(Render, EmptyReportHasHeadersOnly) {
  const EvalReport empty;
  EXPECT_EQ(vgfx::render_report(empty, ReportFormat::csv),
            "model,group_dimension,group_value,n,mean,sd,max,min,n_skipped\n");
  EXPECT_EQ(vgfx::render_report(empty, ReportFormat::json), "[]\n");
  EXPECT_TRUE(vgfx::parse_report(vgfx::render_report(empty, ReportFormat::csv), ReportFormat::csv).cells.empty());
  EXPECT_TRUE(vgfx::parse_report(vgfx::render_report(empty, ReportFormat::json), ReportFormat::json).cells.empty());
}

TEST(Render, RoundTripAndFormatsAgree) {
  const auto records = mixed_records(8);
  std::vector<vgfx::SkipRecord> skipped(1);
  skipped[0].model = ModelKind::symmetric_vg;
  const auto original = vgfx::report(records, skipped, GroupBy::maturity);
  const auto csv_text = vgfx::render_report(original, ReportFormat::csv);
  const auto json_text = vgfx::render_report(original, ReportFormat::json);
  const auto from_csv = vgfx::parse_report(csv_text, ReportFormat::csv);
  const auto from_json = vgfx::parse_report(json_text, ReportFormat::json);
  EXPECT_EQ(from_csv, from_json);
  ASSERT_EQ(from_csv.cells.size(), original.cells.size());
  for (std::size_t i = 0; i < original.cells.size(); ++i) {
    const auto& a = original.cells[i];
    const auto& b = from_csv.cells[i];
    EXPECT_EQ(a.model, b.model);
    EXPECT_EQ(a.group_value, b.group_value);
    EXPECT_EQ(a.n, b.n);
    EXPECT_EQ(a.n_skipped, b.n_skipped);
    EXPECT_EQ(a.mean.has_value(), b.mean.has_value());
    if (a.mean) {
      EXPECT_NEAR(*b.mean, *a.mean, 5e-6 * *a.mean);
      EXPECT_NEAR(*b.sd, *a.sd, 5e-6 * *a.sd);
    }
  }
  // Rendering what was parsed reproduces the bytes.
  EXPECT_EQ(vgfx::render_report(from_csv, ReportFormat::csv), csv_text);
  EXPECT_EQ(vgfx::render_report(from_json, ReportFormat::json), json_text);
}

TEST(Render, JsonKeysSorted) {
  EvalReport r;
  r.cells.push_back({"gk", "regime", "low_vol", 0, {}, {}, {}, {}, 4});
  const auto text = vgfx::render_report(r, ReportFormat::json);
  std::vector<std::size_t> at;
  for (const char* key : {"group_dimension", "group_value", "max", "mean", "min", "model", "n", "n_skipped", "sd"})
    at.push_back(text.find(std::string("\"") + key + "\""));
  EXPECT_TRUE(std::is_sorted(at.begin(), at.end()));
  EXPECT_EQ(std::count(at.begin(), at.end(), std::string::npos), 0);
  EXPECT_NE(text.find("\"mean\": null"), std::string::npos);
}

TEST(Render, EmitWritesRenderedText) {
  const auto path = std::filesystem::temp_directory_path() / "vgfx_test_evaluation_report.csv";
  const auto r = vgfx::report(mixed_records(9), {}, GroupBy::moneyness);
  vgfx::emit_report(r, ReportFormat::csv, path);
  std::ifstream in(path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(text, vgfx::render_report(r, ReportFormat::csv));
  std::filesystem::remove(path);
  EXPECT_THROW(vgfx::emit_report(r, ReportFormat::csv, "/nonexistent-dir/report.csv"), vgfx::DataError);
}

TEST(Render, ParseRejectsGarbage) {
  EXPECT_THROW(vgfx::parse_report("", ReportFormat::csv), vgfx::DataError);
  EXPECT_THROW(vgfx::parse_report("h\nvg,overall,all\n", ReportFormat::csv), vgfx::DataError);
  EXPECT_THROW(vgfx::parse_report("h\nvg,overall,all,x,1,1,1,1,0\n", ReportFormat::csv), vgfx::DataError);
  EXPECT_THROW(vgfx::parse_report("[{\"model\": 1}]", ReportFormat::json), vgfx::DataError);
}

TEST(WalkForward, SingleWeekGivesNothing) {
  const VgParams truth{0.116, 0.099, 0.0026};
  const auto weeks = vgfx::group_by_week(chain_for({truth}, 10, 1));
  vgfx::WeeklyFits fits;
  fits[weeks.begin()->first] = {ModelKind::vg, truth.sigma, truth.nu, truth.theta, 0.0, 0, 0, true};
  const auto out = vgfx::walk_forward(fits, weeks, ModelKind::vg);
  EXPECT_TRUE(out.records.empty());
  EXPECT_TRUE(out.skipped.empty());
}

TEST(WalkForward, SecondWeekGeneratedFromFirstWeekFit) {
  const VgParams truth{0.116, 0.099, 0.0026};
  const auto first = vgfx::liquidity_filter(chain_for({truth}, 40, 2));
  const auto fit = vgfx::fit_weekly_risk_neutral(first, ModelKind::vg, {0.1, 0.2, 0.0});
  // Week two priced from the fitted parameters, week one from the truth.
  const auto both = vgfx::group_by_week(chain_for({truth, fit.vg()}, 40, 2));
  ASSERT_EQ(both.size(), 2u);
  vgfx::WeeklyFits fits{{both.begin()->first, fit}};
  const auto out = vgfx::walk_forward(fits, both, ModelKind::vg);
  EXPECT_TRUE(out.skipped.empty());
  ASSERT_EQ(out.records.size(), 40u);
  for (const auto& r : out.records) {
    EXPECT_LE(r.abs_rel_error, 1e-6);
    EXPECT_EQ(r.week, std::next(both.begin())->first);
  }
}

TEST(WalkForward, ConstantTruthNoiselessMapeIsTiny) {
  const VgParams truth{0.116, 0.099, 0.0026};
  const auto weeks = vgfx::group_by_week(chain_for({truth, truth, truth}, 40, 3));
  vgfx::WeeklyFits fits;
  VgParams start{0.1, 0.2, 0.0};
  for (const auto& [week, quotes] : weeks) {
    fits[week] = vgfx::fit_weekly_risk_neutral(quotes, ModelKind::vg, start);
    start = fits[week].vg();
  }
  const auto out = vgfx::walk_forward(fits, weeks, ModelKind::vg);
  ASSERT_EQ(out.records.size(), 80u);
  EXPECT_LE(vgfx::mape(out.records), 1e-4);
}

TEST(WalkForward, FallbackFlaggedFitStillPrices) {
  const VgParams truth{0.116, 0.099, 0.0026};
  const auto weeks = vgfx::group_by_week(chain_for({truth, truth}, 12, 4));
  vgfx::CalibrationResult fit{ModelKind::vg, truth.sigma, truth.nu, truth.theta, 0.0, 10, 20, true, true};
  const auto out = vgfx::walk_forward({{weeks.begin()->first, fit}}, weeks, ModelKind::vg);
  EXPECT_EQ(out.records.size(), 12u);
  EXPECT_TRUE(out.skipped.empty());
}

TEST(WalkForward, UnusableFitsAreSkippedWithReason) {
  const VgParams truth{0.116, 0.099, 0.0026};
  const auto weeks = vgfx::group_by_week(chain_for({truth, truth, truth}, 6, 5));
  auto it = weeks.begin();
  vgfx::CalibrationResult diverged{ModelKind::vg, truth.sigma, truth.nu, truth.theta};
  diverged.converged = false;
  // Week one failed to converge; week two has no fit at all.
  const auto out = vgfx::walk_forward({{it->first, diverged}}, weeks, ModelKind::vg);
  EXPECT_TRUE(out.records.empty());
  ASSERT_EQ(out.skipped.size(), 12u);
  EXPECT_NE(out.skipped.front().reason.find("did not converge"), std::string::npos);
  EXPECT_NE(out.skipped.back().reason.find("no fit"), std::string::npos);

  auto carried = diverged;
  carried.carried_forward = true;
  EXPECT_EQ(vgfx::walk_forward({{it->first, carried}}, weeks, ModelKind::vg).records.size(), 6u);
}

TEST(WalkForward, GkRecordsCarryTheirModel) {
  const VgParams truth{0.116, 0.099, 0.0026};
  const auto weeks = vgfx::group_by_week(chain_for({truth, truth}, 9, 6));
  vgfx::CalibrationResult fit{ModelKind::gk, 0.12};
  fit.converged = true;
  const auto out = vgfx::walk_forward({{weeks.begin()->first, fit}}, weeks, ModelKind::gk);
  ASSERT_EQ(out.records.size(), 9u);
  for (const auto& r : out.records) {
    EXPECT_EQ(r.model, ModelKind::gk);
    EXPECT_GT(r.model_price, 0.0);
  }
}

TEST(ParameterReports, WeeklyStatisticsSkipCarriedWeeks) {
  vgfx::WeeklyFits vg;
  vg[{2011, 1}] = {ModelKind::vg, 0.1, 0.2, 0.01, 0.0, 0, 0, true};
  vg[{2011, 2}] = {ModelKind::vg, 0.3, 0.4, 0.03, 0.0, 0, 0, true};
  auto carried = vg[{2011, 2}];
  carried.carried_forward = true;
  vg[{2011, 3}] = carried;
  const auto r = vgfx::weekly_parameter_report({{ModelKind::vg, vg}});
  ASSERT_EQ(r.cells.size(), 3u);
  EXPECT_EQ(r.cells[0].group_value, "sigma");
  EXPECT_EQ(r.cells[0].n, 2u);
  EXPECT_EQ(r.cells[0].n_skipped, 1u);
  EXPECT_DOUBLE_EQ(*r.cells[0].mean, 0.2);
  EXPECT_EQ(r.cells[2].group_value, "theta");
  EXPECT_DOUBLE_EQ(*r.cells[2].max, 0.03);

  const std::vector<vgfx::CalibrationResult> hist{{ModelKind::symmetric_vg, 0.1, 0.2}, {ModelKind::gk, 0.11}};
  const auto h = vgfx::historical_parameter_report(hist);
  ASSERT_EQ(h.cells.size(), 3u);
  EXPECT_EQ(h.cells[0].model, "gk");
  EXPECT_EQ(h.cells[1].model, "svg");
  EXPECT_EQ(h.cells[2].group_value, "nu");
  EXPECT_EQ(*h.cells[2].sd, 0.0);
}
