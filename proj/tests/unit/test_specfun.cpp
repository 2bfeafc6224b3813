#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "errors.hpp"
#include "specfun.hpp"

namespace sf = vgfx::specfun;

namespace {

// Reference values from tests/oracles/compute_oracles.py (mpmath, defining integrals).
constexpr double kLnGamma7p3 = 7.1478925230222490328;
constexpr double kBesselK0p8At1p3 = 0.33575174397162167105;
constexpr double kNormCdf1 = 0.84134474606854294859;
constexpr double kPsiExample = 0.41316537015896006906;
constexpr double kPsiSmallShape = 0.0096565391497019065748;

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(LnGamma, Examples) {
  EXPECT_EQ(sf::ln_gamma(1.0), 0.0);
  EXPECT_NEAR(sf::ln_gamma(0.5), 0.5 * std::log(std::numbers::pi), 1e-14);
  EXPECT_LT(rel(sf::ln_gamma(7.3), kLnGamma7p3), 1e-14);
}

TEST(LnGamma, AgreesWithStdAcrossRange) {
  for (double x = 1e-3; x <= 1e3; x *= 1.07) {
    const double ref = std::lgamma(x);
    // Near the zeros of ln Gamma relative error is meaningless; use absolute.
    EXPECT_LE(std::abs(sf::ln_gamma(x) - ref), 1e-12 * std::max(1.0, std::abs(ref))) << x;
  }
}

TEST(LnGamma, RejectsNonPositive) {
  EXPECT_THROW(sf::ln_gamma(0.0), vgfx::DomainError);
  EXPECT_THROW(sf::ln_gamma(-2.5), vgfx::DomainError);
}

TEST(BesselK, HalfOrderClosedForm) {
  const double expected = std::sqrt(std::numbers::pi / 4.0) * std::exp(-2.0);
  EXPECT_LT(rel(sf::bessel_k(0.5, 2.0), expected), 1e-13);
  EXPECT_EQ(sf::bessel_k(-0.5, 2.0), sf::bessel_k(0.5, 2.0));
}

TEST(BesselK, IntegralRepresentationOracle) {
  EXPECT_LT(rel(sf::bessel_k(0.8, 1.3), kBesselK0p8At1p3), 1e-12);
}

TEST(BesselK, MatchesStdOnGrid) {
  for (double order = 0.0; order <= 30.0; order += 0.7) {
    for (double x = 1e-6; x <= 50.0; x *= 1.9) {
      const double ref = std::cyl_bessel_k(order, x);
      if (!std::isfinite(ref) || ref == 0.0) continue;
      EXPECT_LT(rel(sf::bessel_k(order, x), ref), 1e-9) << "order " << order << " x " << x;
    }
  }
}

TEST(BesselK, SymmetricInOrder) {
  for (double order : {0.1, 0.75, 2.3, 11.0})
    for (double x : {0.01, 0.9, 7.0}) EXPECT_EQ(sf::bessel_k(order, x), sf::bessel_k(-order, x));
}

TEST(BesselK, Recurrence) {
  for (double nu = 0.5; nu <= 5.0; nu += 0.5) {
    for (double x = 0.1; x <= 10.0; x *= 1.5) {
      const double lhs = sf::bessel_k(nu + 1, x);
      const double rhs = sf::bessel_k(nu - 1, x) + 2 * nu / x * sf::bessel_k(nu, x);
      EXPECT_LT(rel(lhs, rhs), 1e-8) << nu << " " << x;
    }
  }
}

TEST(BesselK, LogFormStaysFinitePastOverflow) {
  EXPECT_THROW(sf::bessel_k(30.0, 1e-20), std::overflow_error);
  const double lk = sf::log_bessel_k(30.0, 1e-20);
  // Leading term Gamma(nu) / 2 (x/2)^-nu.
  const double lead = std::lgamma(30.0) - std::log(2.0) - 30.0 * std::log(0.5e-20);
  EXPECT_NEAR(lk, lead, 1e-9 * std::abs(lead));
  EXPECT_NEAR(sf::log_bessel_k(0.8, 1.3), std::log(kBesselK0p8At1p3), 1e-13);
}

TEST(BesselK, RejectsNonPositiveArgument) {
  EXPECT_THROW(sf::bessel_k(1.0, 0.0), vgfx::DomainError);
  EXPECT_THROW(sf::log_bessel_k(1.0, -1.0), vgfx::DomainError);
}

TEST(NormCdf, Examples) {
  EXPECT_EQ(sf::norm_cdf(0.0), 0.5);
  EXPECT_EQ(sf::norm_cdf(40.0), 1.0);
  EXPECT_EQ(sf::norm_cdf(INFINITY), 1.0);
  EXPECT_EQ(sf::norm_cdf(-INFINITY), 0.0);
  EXPECT_NEAR(sf::norm_cdf(1.0), kNormCdf1, 1e-15);
}

TEST(NormCdf, SymmetryAndMonotonicity) {
  double prev = 0.0;
  for (double x = -12.0; x <= 12.0; x += 0.01) {
    EXPECT_NEAR(sf::norm_cdf(x) + sf::norm_cdf(-x), 1.0, 1e-14);
    EXPECT_GE(sf::norm_cdf(x), prev);
    prev = sf::norm_cdf(x);
  }
}

TEST(NormCdf, MatchesErfc) {
  for (double x = -30.0; x <= 10.0; x += 0.37)
    EXPECT_NEAR(sf::norm_cdf(x), 0.5 * std::erfc(-x / std::numbers::sqrt2), 1e-15);
}

TEST(NormPdf, Peak) { EXPECT_NEAR(sf::norm_pdf(0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-16); }

TEST(PsiMixture, Examples) {
  EXPECT_NEAR(sf::psi_mixture(0.0, 0.0, 3.7), 0.5, 1e-12);
  EXPECT_NEAR(sf::psi_mixture(1e6, 0.0, 1.0), 1.0, 1e-9);
  EXPECT_LT(rel(sf::psi_mixture(0.3, -0.2, 4.0), kPsiExample), 1e-10);
}

// Small shapes put the CDF's switch-on far into the gamma tail.
TEST(PsiMixture, SmallShapeBruteForceOracle) {
  EXPECT_LT(rel(sf::psi_mixture(-0.4, 0.0, 0.02), kPsiSmallShape), 1e-9);
  EXPECT_NEAR(sf::psi_mixture(0.4, 0.0, 0.02), 1.0 - kPsiSmallShape, 1e-12);
}

TEST(PsiMixture, TinyShapesStayNormalized) {
  for (double g : {1e-4, 0.0013698630136986301, 0.01}) {
    EXPECT_NEAR(sf::psi_mixture(0.0, 0.0, g), 0.5, 1e-12) << g;
    EXPECT_NEAR(sf::psi_mixture(0.62, -1.47, g) + sf::psi_mixture(-0.62, 1.47, g), 1.0, 1e-12) << g;
  }
}

TEST(PsiMixture, ComplementSymmetry) {
  for (double g : {1e-4, 0.005, 0.02, 0.3, 1.0, 4.0, 60.0})
    for (double a : {-2.0, -0.1, 0.0, 0.4, 3.0})
      for (double b : {-1.0, 0.0, 0.25, 2.0})
        EXPECT_NEAR(sf::psi_mixture(a, b, g) + sf::psi_mixture(-a, -b, g), 1.0, 1e-8) << a << " " << b << " " << g;
}

TEST(PsiMixture, MonotoneInEachArgument) {
  for (double g : {0.1, 2.0}) {
    double prev = -1.0;
    for (double a = -3.0; a <= 3.0; a += 0.25) {
      const double v = sf::psi_mixture(a, 0.3, g);
      EXPECT_GE(v, prev - 1e-12);
      prev = v;
    }
    prev = -1.0;
    for (double b = -3.0; b <= 3.0; b += 0.25) {
      const double v = sf::psi_mixture(0.2, b, g);
      EXPECT_GE(v, prev - 1e-12);
      prev = v;
    }
  }
}

TEST(PsiMixture, StaysInUnitIntervalForRandomArguments) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ab(-20.0, 20.0);
  std::uniform_real_distribution<double> lg(std::log(1e-3), std::log(200.0));
  for (int i = 0; i < 10000; ++i) {
    const double a = ab(rng), b = ab(rng), g = std::exp(lg(rng));
    const double v = sf::psi_mixture(a, b, g);
    ASSERT_GE(v, 0.0) << a << " " << b << " " << g;
    ASSERT_LE(v, 1.0) << a << " " << b << " " << g;
  }
}

TEST(PsiMixture, RejectsBadShapeAndReportsQuadratureFailure) {
  EXPECT_THROW(sf::psi_mixture(0.0, 0.0, 0.0), vgfx::DomainError);
  vgfx::QuadratureSpec tight;
  tight.rel_tol = 1e-16;
  tight.abs_tol = 1e-300;
  tight.max_subdivisions = 1;
  EXPECT_THROW(sf::psi_mixture(0.3, -0.2, 4.0, tight), vgfx::QuadratureError);
}

TEST(GammaShapeLogDensity, IntegratesToOneOverItsTailBracket) {
  for (double g : {0.05, 1.0, 30.0, 5000.0}) {
    const sf::GammaShapeLogDensity h(g);
    const auto slope = [&](double w) { return h.slope(w); };
    const auto b = vgfx::concave_tail_bracket(h, slope, 0.0, 1.0 / std::sqrt(g), 1e-14);
    const double mode[] = {0.0};
    const auto r = vgfx::integrate([&](double w) { return std::exp(h(w)); }, b.lower, b.upper, {}, mode);
    EXPECT_NEAR(r.value, 1.0, 1e-9) << g;
  }
}
