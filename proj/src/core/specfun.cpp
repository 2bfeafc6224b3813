#include "specfun.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace vgfx::specfun {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Taylor coefficients of ln Gamma(1 + e): -euler_gamma, then (-1)^k zeta(k) / k.
constexpr std::array<double, 30> kLnGammaOnePlus = {
    -0.577215664901532860607, 0.822467033424113218236,  -0.400685634386531428467,
    0.270580808427784547879,  -0.207385551028673985266, 0.169557176997408189952,
    -0.14404989676884611812,  0.125509669524743042422,  -0.111334265869564690491,
    0.100099457512781808534,  -0.0909540171458290422326, 0.0833538405461090040249,
    -0.0769325164113521914728, 0.0714329462953613360592, -0.0666687058824204680329,
    0.062500955141213040742,  -0.058823978658684582339, 0.0555557676274036111022,
    -0.0526316793796166607336, 0.0500000476981016936398, -0.0476190703301422279908,
    0.0454545562932046694424, -0.0434782660530402593614, 0.0416666691503412104691,
    -0.0400000011921401405861, 0.0384615390346751857063, -0.0370370373129893255495,
    0.0357142858473333580282, -0.0344827586849193008108, 0.0333333333643775810807};

// Taylor coefficients of 1 / Gamma(1 + x).
constexpr std::array<double, 29> kRecipGammaOnePlus = {
    1.0,
    0.57721566490153286061,
    -0.65587807152025388108,
    -0.042002635034095235529,
    0.1665386113822914895,
    -0.042197734555544336748,
    -0.0096219715278769735621,
    0.0072189432466630995424,
    -0.0011651675918590651121,
    -0.00021524167411495097282,
    0.00012805028238811618615,
    -0.000020134854780788238656,
    -1.2504934821426706573e-6,
    1.1330272319816958824e-6,
    -2.0563384169776071035e-7,
    6.1160951044814158179e-9,
    5.0020076444692229301e-9,
    -1.1812745704870201446e-9,
    1.0434267116911005105e-10,
    7.782263439905071254e-12,
    -3.6968056186422057082e-12,
    5.100370287454475979e-13,
    -2.0583260535665067832e-14,
    -5.3481225394230179824e-15,
    1.2267786282382607902e-15,
    -1.1812593016974587695e-16,
    1.1866922547516003326e-18,
    1.4123806553180317816e-18,
    -2.2987456844353702066e-19};

double ln_gamma_one_plus(double e) {
  double sum = 0.0;
  for (std::size_t k = kLnGammaOnePlus.size(); k-- > 0;) sum = (sum + kLnGammaOnePlus[k]) * e;
  return sum;
}

double stirling_series(double x) {
  const double r = 1.0 / x;
  const double r2 = r * r;
  return r * (1.0 / 12.0 +
              r2 * (-1.0 / 360.0 +
                    r2 * (1.0 / 1260.0 +
                          r2 * (-1.0 / 1680.0 +
                                r2 * (1.0 / 1188.0 +
                                      r2 * (-691.0 / 360360.0 +
                                            r2 * (1.0 / 156.0 + r2 * (-3617.0 / 122400.0))))))));
}

constexpr double kStirlingShift = 10.0;

// Gamma-function pieces needed by Temme's series for K_mu, |mu| <= 1/2.
struct TemmeGammas {
  double gam1;   // (1/G(1-mu) - 1/G(1+mu)) / (2 mu)
  double gam2;   // (1/G(1-mu) + 1/G(1+mu)) / 2
  double gampl;  // 1/G(1+mu)
  double gammi;  // 1/G(1-mu)
};

TemmeGammas temme_gammas(double mu) {
  double even = 0.0;
  double odd = 0.0;  // sum of a_j mu^(j-1) over odd j
  const double mu2 = mu * mu;
  for (std::size_t j = kRecipGammaOnePlus.size(); j-- > 0;) {
    if (j % 2 == 0)
      even = even * mu2 + kRecipGammaOnePlus[j];
    else
      odd = odd * mu2 + kRecipGammaOnePlus[j];
  }
  return {-odd, even, even + mu * odd, even - mu * odd};
}

// K_mu and K_{mu+1} for |mu| <= 1/2, as scaled values plus a log scale.
struct BesselPair {
  double k_mu;
  double k_mu1;
  double log_scale;
};

BesselPair bessel_k_fractional(double mu, double x) {
  const double mu2 = mu * mu;
  const double xi = 1.0 / x;
  const double xi2 = 2.0 * xi;
  if (x < 2.0) {
    const double x2 = 0.5 * x;
    const double pimu = std::numbers::pi * mu;
    const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(x2);
    double e = mu * d;
    const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
    const auto g = temme_gammas(mu);
    double ff = fact * (g.gam1 * std::cosh(e) + g.gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / g.gampl;
    double q = 0.5 / (e * g.gammi);
    double c = 1.0;
    d = x2 * x2;
    double sum1 = p;
    for (int i = 1; i < 10000; ++i) {
      ff = (i * ff + p + q) / (i * static_cast<double>(i) - mu2);
      c *= d / i;
      p /= (i - mu);
      q /= (i + mu);
      const double del = c * ff;
      sum += del;
      sum1 += c * (p - i * ff);
      if (std::abs(del) < std::abs(sum) * kEps) break;
    }
    return {sum, sum1 * xi2, 0.0};
  }
  // Steed's continued fraction, scaled by e^x sqrt(2x/pi).
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  const double a1 = 0.25 - mu2;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 1; i < 10000; ++i) {
    a -= 2 * i;
    c = -a * c / (i + 1.0);
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < kEps) break;
  }
  h = a1 * h;
  const double k_mu = 1.0 / s;
  return {k_mu, k_mu * (mu + x + 0.5 - h) * xi, -x + 0.5 * std::log(std::numbers::pi / (2.0 * x))};
}

}  // namespace

double ln_gamma(double x) {
  if (!(x > 0.0)) throw DomainError("ln_gamma: argument must be > 0");
  if (std::isinf(x)) return x;
  if (std::abs(x - 1.0) <= 0.25) return ln_gamma_one_plus(x - 1.0);
  if (std::abs(x - 2.0) <= 0.25) return std::log1p(x - 2.0) + ln_gamma_one_plus(x - 2.0);
  if (x >= kStirlingShift) {
    return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + stirling_series(x);
  }
  double product = 1.0;
  double shifted = x;
  while (shifted < kStirlingShift) {
    product *= shifted;
    shifted += 1.0;
  }
  return ln_gamma(shifted) - std::log(product);
}

double ln_gamma_stirling_remainder(double x) {
  if (!(x > 0.0)) throw DomainError("ln_gamma_stirling_remainder: argument must be > 0");
  if (x >= kStirlingShift) return stirling_series(x);
  return ln_gamma(x) - ((x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi));
}

GammaShapeLogDensity::GammaShapeLogDensity(double gamma_shape)
    : shape_(gamma_shape),
      // g ln g - g - ln G(g) = ln(g / 2 pi) / 2 - stirling remainder.
      mode_value_(0.5 * std::log(gamma_shape / (2.0 * std::numbers::pi)) -
                  ln_gamma_stirling_remainder(gamma_shape)) {}

std::vector<double> GammaShapeLogDensity::breakpoints(double lower) const {
  std::vector<double> out{0.0};
  if (shape_ < 1.0)
    for (double w = -1.0; w > lower; w *= 2.0) out.push_back(w);
  return out;
}

double log_bessel_k(double order, double x) {
  if (!(x > 0.0)) throw DomainError("bessel_k: argument must be > 0");
  if (std::isnan(order)) throw DomainError("bessel_k: order is NaN");
  const double nu = std::abs(order);
  const int steps = static_cast<int>(nu + 0.5);
  const double mu = nu - steps;
  auto pair = bessel_k_fractional(mu, x);
  double k_lo = pair.k_mu;
  double k_hi = pair.k_mu1;
  double log_scale = pair.log_scale;
  const double xi2 = 2.0 / x;
  constexpr double kRescale = 1e250;
  for (int i = 1; i <= steps; ++i) {
    const double next = (mu + i) * xi2 * k_hi + k_lo;
    k_lo = k_hi;
    k_hi = next;
    if (k_hi > kRescale) {
      k_lo /= kRescale;
      k_hi /= kRescale;
      log_scale += std::log(kRescale);
    }
  }
  return std::log(k_lo) + log_scale;
}

double bessel_k(double order, double x) {
  const double log_value = log_bessel_k(order, x);
  if (log_value > std::log(std::numeric_limits<double>::max()))
    throw std::overflow_error("bessel_k: K_" + std::to_string(order) + "(" + std::to_string(x) +
                              ") exceeds the double range");
  return std::exp(log_value);
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double psi_mixture(double a, double b, double gamma_shape, const QuadratureSpec& quad) {
  if (!(gamma_shape > 0.0)) throw DomainError("psi_mixture: gamma shape must be > 0");
  quad.validate();
  const double g = gamma_shape;
  // Integrate over w = ln(u / g); the gamma factor peaks at w = 0 with width 1/sqrt(g).
  const GammaShapeLogDensity log_weight(g);
  auto log_weight_slope = [&log_weight](double w) { return log_weight.slope(w); };
  const auto bracket =
      concave_tail_bracket(log_weight, log_weight_slope, 0.0, 1.0 / std::sqrt(g), quad.abs_tol / 10.0);

  const double root_g = std::sqrt(g);
  auto integrand = [&](double w) {
    const double weight = std::exp(log_weight(w));
    if (weight == 0.0) return 0.0;
    const double root_u = root_g * std::exp(0.5 * w);
    const double arg = (a == 0.0 ? 0.0 : a / root_u) + b * root_u;
    return norm_cdf(arg) * weight;
  };

  // The normal CDF switches on where |a| / sqrt(u) or |b| sqrt(u) is of
  // order one. For small shapes that happens far out in a tail the initial
  // partition would sample too coarsely, so those scales become breakpoints.
  std::vector<double> breaks = log_weight.breakpoints(bracket.lower);
  if (a * b < 0.0) breaks.push_back(std::log(-a / (b * g)));
  for (double z : {0.5, 2.0, 8.0}) {
    if (a != 0.0) breaks.push_back(std::log(a * a / (z * z * g)));
    if (b != 0.0) breaks.push_back(std::log(z * z / (b * b * g)));
  }
  const auto result = integrate(integrand, bracket.lower, bracket.upper, quad, breaks);
  // Probability; quadrature round-off may overshoot by a few ulps.
  return std::clamp(result.value, 0.0, 1.0);
}

}  // namespace vgfx::specfun
