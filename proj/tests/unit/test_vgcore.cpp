#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "errors.hpp"
#include "marketdata.hpp"
#include "quadrature.hpp"
#include "vgcore.hpp"

using vgfx::DensityParams;
using vgfx::VgParams;

namespace {

// From tests/oracles/compute_oracles.py.
constexpr double kOmegaHv = -0.0042716044385581982085;
constexpr double kMixingDensityHv = 16.287496000490968012;

const VgParams kHv{0.1044, 0.211, -0.00118};
constexpr double kDay = 1.0 / 252.0;

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double density_integral(const DensityParams& p, double power = 0.0, double center = 0.0) {
  const double sd = std::sqrt((p.vg.sigma * p.vg.sigma + p.vg.theta * p.vg.theta * p.vg.nu) * p.horizon_t);
  const double pts[] = {-sd, 0.0, sd};
  vgfx::QuadratureSpec q;
  q.max_subdivisions = 2000;
  const auto r = vgfx::integrate(
      [&](double x) { return std::pow(x - center, power) * vgfx::vg_density(x, p); }, -60 * sd, 60 * sd, q, pts);
  return r.value;
}

}  // namespace

TEST(VgParams, Invariants) {
  EXPECT_NO_THROW(kHv.validate());
  EXPECT_THROW((VgParams{0.0, 0.2, 0.0}).validate(), vgfx::DomainError);
  EXPECT_THROW((VgParams{0.1, -0.2, 0.0}).validate(), vgfx::DomainError);
  EXPECT_THROW((VgParams{0.1, 0.2, NAN}).validate(), vgfx::DomainError);
  // theta nu close to one leaves no room in the martingale log.
  const VgParams bad{0.1, 2.0, 0.5};
  EXPECT_LE(bad.martingale_log_arg(), 0.0);
  EXPECT_FALSE(bad.is_valid());
  EXPECT_THROW(bad.validate(), vgfx::DomainError);
  EXPECT_THROW(vgfx::omega(bad), vgfx::DomainError);
}

TEST(Omega, DegenerateProcessIsZero) { EXPECT_LT(std::abs(vgfx::omega({1e-9, 0.2, 0.0})), 1e-12); }

TEST(Omega, DirectArithmeticOracle) { EXPECT_LT(rel(vgfx::omega(kHv), kOmegaHv), 1e-13); }

TEST(Omega, MonteCarloMartingale) {
  // exp(omega t) E[exp X(t)] = 1 with X sampled straight from its definition.
  const double t = 0.25;
  std::mt19937_64 rng(2024);
  std::gamma_distribution<double> clock(t / kHv.nu, kHv.nu);
  std::normal_distribution<double> z;
  const int n = 1'000'000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = clock(rng);
    const double v = std::exp(vgfx::omega(kHv) * t + kHv.theta * g + kHv.sigma * std::sqrt(g) * z(rng));
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / (n - 1));
  EXPECT_LT(std::abs(mean - 1.0), 3.0 * se);
}

TEST(CenterLogReturn, RemovesDriftAndCorrection) {
  const DensityParams p{kHv, kDay, 0.05};
  EXPECT_DOUBLE_EQ(vgfx::center_log_return(0.01, p), 0.01 - (0.05 + kOmegaHv) * kDay);
}

TEST(VgDensity, MatchesMixingOracleAtHvPoint) {
  const DensityParams p{kHv, kDay, 0.0};
  EXPECT_LT(rel(vgfx::vg_density(0.001, p), kMixingDensityHv), 1e-10);
  EXPECT_LT(rel(vgfx::mixing_density(0.001, p), kMixingDensityHv), 1e-9);
}

TEST(MixingDensity, ExponentialClockAtOrigin) {
  // Shape 1, theta 0: int (2 pi s^2 g)^-1/2 e^{-g/nu} / nu dg = 1 / (s sqrt(2 nu)).
  const DensityParams p{{0.2, 0.5, 0.0}, 0.5, 0.0};
  EXPECT_LT(rel(vgfx::mixing_density(0.0, p), 5.0), 1e-10);
  EXPECT_LT(rel(vgfx::vg_density(0.0, p), 5.0), 1e-12);
}

TEST(VgDensity, SymmetricWhenThetaZero) {
  const DensityParams p{{0.15, 0.3, 0.0}, 0.1, 0.0};
  for (double x = 0.001; x < 0.3; x *= 1.3) {
    EXPECT_DOUBLE_EQ(vgfx::vg_density(x, p), vgfx::vg_density(-x, p));
    EXPECT_LT(rel(vgfx::mixing_density(x, p), vgfx::mixing_density(-x, p)), 1e-12);
  }
}

TEST(VgDensity, SingularAtOriginForShortHorizons) {
  const DensityParams p{kHv, kDay, 0.0};
  EXPECT_EQ(vgfx::vg_density(0.0, p), std::numeric_limits<double>::infinity());
  EXPECT_EQ(vgfx::mixing_density(0.0, p), std::numeric_limits<double>::infinity());
  EXPECT_TRUE(std::isfinite(vgfx::vg_density(1e-12, p)));
}

TEST(VgDensity, AgreesWithMixingOnGrid) {
  for (const VgParams& vg : {kHv, VgParams{0.116, 0.099, 0.0026}, VgParams{0.3, 0.8, -0.2}}) {
    for (double t : {kDay, 0.05, 1.0}) {
      const DensityParams p{vg, t, 0.0};
      const double sd = std::sqrt((vg.sigma * vg.sigma + vg.theta * vg.theta * vg.nu) * t);
      for (int i = 0; i <= 100; ++i) {
        const double x = -6 * sd + 12 * sd * i / 100.0;
        if (x == 0.0 && t / vg.nu <= 0.5) continue;
        EXPECT_LT(rel(vgfx::vg_density(x, p), vgfx::mixing_density(x, p)), 1e-8) << x << " t " << t;
      }
    }
  }
}

TEST(VgDensity, IntegratesToOne) {
  for (double t : {0.05, 0.5, 1.0}) EXPECT_NEAR(density_integral({kHv, t, 0.0}), 1.0, 1e-6) << t;
  EXPECT_NEAR(density_integral({{0.3, 0.8, -0.2}, 1.0, 0.0}), 1.0, 1e-6);
}

TEST(VgDensity, UnitTimeMomentsMatchMomentFormulas) {
  const DensityParams p{kHv, 1.0, 0.0};
  const auto m = vgfx::moments_from_params(kHv);
  const double mean = density_integral(p, 1.0);
  EXPECT_NEAR(mean, kHv.theta, 1e-7);
  EXPECT_LT(rel(density_integral(p, 2.0, mean), m.variance), 0.01);
  EXPECT_LT(rel(density_integral(p, 3.0, mean), m.third_central), 0.01);
  EXPECT_LT(rel(density_integral(p, 4.0, mean), m.fourth_central), 0.01);
}

TEST(MixingDensity, DecreasesAwayFromTheMode) {
  const DensityParams p{{0.2, 0.4, 0.0}, 0.5, 0.0};
  double prev = vgfx::mixing_density(0.0, p);
  for (double x = 0.01; x < 1.0; x += 0.01) {
    const double d = vgfx::mixing_density(x, p);
    EXPECT_LT(d, prev) << x;
    prev = d;
  }
}

TEST(LogLikelihood, SingleReturnAtTheModeIsLogPeak) {
  const DensityParams p{{0.2, 0.4, 0.0}, 0.5, 0.03};
  const double z = (p.drift_m + vgfx::omega(p.vg)) * p.horizon_t;
  const double ret[] = {z};
  EXPECT_NEAR(vgfx::log_likelihood(ret, p), std::log(vgfx::vg_density(0.0, p)), 1e-14);
}

TEST(LogLikelihood, IsAdditiveOverSamples) {
  const auto series = vgfx::simulate_returns(kHv, 0.0, 200, 9);
  std::vector<double> doubled = series.log_returns;
  doubled.insert(doubled.end(), series.log_returns.begin(), series.log_returns.end());
  // A drift other than the simulating one keeps returns off the density's pole.
  const DensityParams p{kHv, kDay, 0.01};
  const double once = vgfx::log_likelihood(series.log_returns, p);
  ASSERT_TRUE(std::isfinite(once));
  EXPECT_NEAR(vgfx::log_likelihood(doubled, p), 2.0 * once, 1e-9 * std::abs(once));
}

// At shape t / nu = 0.019 roughly a fifth of daily draws have a gamma clock
// below 1e-40, so the return equals the drift shift to the last bit and the
// density there is infinite.
TEST(LogLikelihood, ShortHorizonSamplesHitThePole) {
  const auto series = vgfx::simulate_returns(kHv, 0.0, 10000, 11);
  const double shift = vgfx::omega(kHv) * kDay;
  const auto at_pole = std::count(series.log_returns.begin(), series.log_returns.end(), shift);
  EXPECT_GT(at_pole, 1500);
  EXPECT_EQ(vgfx::log_likelihood(series.log_returns, {kHv, kDay, 0.0}), INFINITY);
}

TEST(LogLikelihood, EmptySeriesThrows) {
  EXPECT_THROW(vgfx::log_likelihood(std::span<const double>{}, {kHv, kDay, 0.0}), vgfx::DataError);
}

// Profile over sigma at the true nu and theta, with the drift estimated from
// the sample as the historical fit does.
TEST(LogLikelihood, SigmaProfilePeaksNearTruth) {
  const auto series = vgfx::simulate_returns(kHv, 0.0, 10000, 11);
  double mean = 0.0;
  for (double z : series.log_returns) mean += z;
  const double drift = mean / series.log_returns.size() / kDay;
  double best = -INFINITY, best_sigma = 0.0;
  for (double s : {0.04, 0.06, 0.08, 0.1044, 0.13, 0.16, 0.2}) {
    const VgParams vg{s, kHv.nu, kHv.theta};
    const double ll = vgfx::log_likelihood(series.log_returns, {vg, kDay, drift - vgfx::omega(vg)});
    if (ll > best) best = ll, best_sigma = s;
  }
  EXPECT_GE(best_sigma, 0.08);
  EXPECT_LE(best_sigma, 0.13);
}

// With shape t / nu above one half the density is bounded and the grid
// maximum lands on the generating parameters.
TEST(LogLikelihood, GridMaximumAtTruthForBoundedDensity) {
  const VgParams truth{0.1044, 0.002, -0.00118};
  const auto series = vgfx::simulate_returns(truth, 0.0, 10000, 12);
  double best = -INFINITY;
  VgParams arg;
  for (double s : {0.09, 0.1044, 0.12})
    for (double n : {0.001, 0.002, 0.004})
      for (double th : {-0.3, -0.00118, 0.3}) {
        const double ll = vgfx::log_likelihood(series.log_returns, {{s, n, th}, kDay, 0.0});
        if (ll > best) best = ll, arg = {s, n, th};
      }
  EXPECT_EQ(arg.sigma, truth.sigma);
  EXPECT_EQ(arg.nu, truth.nu);
  EXPECT_EQ(arg.theta, truth.theta);
}

TEST(Moments, Examples) {
  EXPECT_EQ(vgfx::moments_from_params({0.1, 0.2, 0.0}).third_central, 0.0);
  const auto m = vgfx::moments_from_params(kHv);
  EXPECT_DOUBLE_EQ(m.fourth_central, 3.0 * std::pow(0.1044, 4) * 1.211);
  EXPECT_DOUBLE_EQ(m.variance, 0.1044 * 0.1044);
  EXPECT_DOUBLE_EQ(m.third_central, 3.0 * 0.1044 * 0.1044 * -0.00118 * 0.211);
  EXPECT_EQ(m.theta_mean_term, -0.00118);
}

TEST(Moments, InversionExamples) {
  const auto m = vgfx::moments_from_params({0.1, 0.2, 0.0});
  const auto p = vgfx::params_from_moments(m.variance, m.third_central, m.fourth_central);
  EXPECT_DOUBLE_EQ(p.sigma, 0.1);
  EXPECT_NEAR(p.nu, 0.2, 1e-15);
  EXPECT_EQ(p.theta, 0.0);

  const auto h = vgfx::moments_from_params(kHv);
  const auto q = vgfx::params_from_moments(h.variance, h.third_central, h.fourth_central);
  EXPECT_LT(rel(q.sigma, kHv.sigma), 1e-12);
  EXPECT_LT(rel(q.nu, kHv.nu), 1e-12);
  EXPECT_LT(rel(q.theta, kHv.theta), 1e-12);

  EXPECT_THROW(vgfx::params_from_moments(0.01, 0.0, 3.0 * 0.01 * 0.01), vgfx::DomainError);
  EXPECT_THROW(vgfx::params_from_moments(0.0, 0.0, 1.0), vgfx::DomainError);
}

TEST(Moments, RoundTripOnRandomParameters) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> s(0.01, 0.8), n(0.01, 1.5), th(-0.4, 0.4);
  int checked = 0;
  while (checked < 100) {
    const VgParams vg{s(rng), n(rng), th(rng)};
    if (!vg.is_valid()) continue;
    const auto m = vgfx::moments_from_params(vg);
    const auto back = vgfx::params_from_moments(m.variance, m.third_central, m.fourth_central);
    EXPECT_LT(rel(back.sigma, vg.sigma), 1e-12);
    EXPECT_LT(rel(back.nu, vg.nu), 1e-12);
    EXPECT_LT(std::abs(back.theta - vg.theta), 1e-12 * std::max(1.0, std::abs(vg.theta)));
    ++checked;
  }
}

TEST(Kurtosis, FromNu) {
  EXPECT_NEAR(vgfx::kurtosis_from_nu(0.211), 3.633, 5e-4);
  EXPECT_NEAR(vgfx::kurtosis_from_nu(0.083), 3.249, 5e-4);
  EXPECT_EQ(vgfx::kurtosis_from_nu(0.0), 3.0);
  EXPECT_THROW(vgfx::kurtosis_from_nu(-0.1), vgfx::DomainError);
}
