#include "fpquant/ggd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fpquant {

void GgdParams::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("GgdParams: alpha must be positive");
  if (!(lambda > 0.0)) throw std::invalid_argument("GgdParams: lambda must be positive");
  if (!(mu > 0.0)) throw std::invalid_argument("GgdParams: mu must be positive");
  if (!(beta > -1.0)) throw std::invalid_argument("GgdParams: beta must exceed -1");
}

namespace {

// ln of the constant Phi = 2^(1 - (1+beta)/alpha) * alpha^2 *
// lambda^((1+beta)/alpha) / (3 * mu) appearing in the support-length and
// correction formulas. For the moment-fitted alpha = 1 sub-family this is
// independent of lambda (the scale cancels against mu).
double log_phi(const GgdParams& p) {
  const double r = (1.0 + p.beta) / p.alpha;
  return (1.0 - r) * std::log(2.0) + 2.0 * std::log(p.alpha) +
         r * std::log(p.lambda) - std::log(3.0) - std::log(p.mu);
}

}  // namespace

GgdParams estimate_from_moments(double mean, double variance) {
  if (!(mean > 0.0) || !(variance > 0.0)) {
    throw std::domain_error("estimate_from_moments: mean and variance must be positive");
  }
  const double kappa = mean * mean / variance;
  if (kappa > 170.0) {
    throw std::domain_error(
        "estimate_from_moments: degenerate statistics, shape " + std::to_string(kappa) +
        " exceeds 170 and Gamma(shape) overflows");
  }
  GgdParams p;
  p.alpha = 1.0;
  p.beta = kappa - 1.0;
  p.lambda = mean / variance;
  // mu = lambda^kappa / (2 * Gamma(kappa)), computed in log space.
  p.mu = std::exp(kappa * std::log(p.lambda) - std::log(2.0) - std::lgamma(kappa));
  p.validate();
  return p;
}

double epsilon_correction(std::int64_t n, const GgdParams& p) {
  p.validate();
  if (n < 4) {
    throw std::invalid_argument("epsilon_correction: n must be at least 4, got " +
                                std::to_string(n));
  }
  const double ln_n = std::log(static_cast<double>(n));
  const double decay = 2.0 - (1.0 + p.beta) / p.alpha;

  const double f1 = 1.0 + 2.0 * p.alpha * ln_n / static_cast<double>(n);
  if (!(f1 > 0.0)) {
    throw std::domain_error("epsilon_correction: factor 1 + 2*alpha*ln(n)/n is non-positive");
  }
  const double f2 = 1.0 + (3.0 - 3.0 * p.alpha + 2.0 * p.beta) / (2.0 * p.alpha * ln_n);
  if (!(f2 > 0.0)) {
    throw std::domain_error(
        "epsilon_correction: factor 1 + (3 - 3*alpha + 2*beta)/(2*alpha*ln(n)) is "
        "non-positive; n is too small for this density");
  }
  const double f3 = 1.0 + (decay * std::log(ln_n) + log_phi(p)) / (2.0 * ln_n);
  if (!(f3 > 0.0)) {
    throw std::domain_error(
        "epsilon_correction: log-log factor is non-positive; n is too small for this "
        "density");
  }
  return (std::log(f1) + std::log(f2) + decay * std::log(f3)) / p.lambda;
}

double support_length(std::int64_t n, const GgdParams& p) {
  const double eps = epsilon_correction(n, p);  // validates p and n
  const double ln_n = std::log(static_cast<double>(n));
  const double decay = 2.0 - (1.0 + p.beta) / p.alpha;
  const double bracket =
      (2.0 * ln_n - decay * std::log(ln_n) - log_phi(p)) / p.lambda + eps;
  if (!(bracket > 0.0)) {
    throw std::domain_error("support_length: bracket is non-positive for n = " +
                            std::to_string(n));
  }
  return std::pow(bracket, 1.0 / p.alpha);
}

double predicted_distortion(std::int64_t n, double support, const GgdParams& p) {
  p.validate();
  if (n < 2) {
    throw std::invalid_argument("predicted_distortion: n must be at least 2");
  }
  if (!(support > 0.0)) {
    throw std::invalid_argument("predicted_distortion: support must be positive");
  }
  const double step = 2.0 * support / static_cast<double>(n);
  const double granular = step * step / 12.0;
  const double al = p.alpha * p.lambda;
  const double overload = 4.0 * p.mu / (al * al * al) *
                          std::exp(-p.lambda * std::pow(support, p.alpha)) *
                          std::pow(support, p.beta + 3.0 - 3.0 * p.alpha);
  return granular + overload;
}

QuantizerDesign design_single_sided(std::int64_t levels, const GgdParams& p) {
  if (levels < 2) {
    throw std::invalid_argument("design_single_sided: levels must be at least 2");
  }
  const std::int64_t n = 2 * levels;
  QuantizerDesign d;
  d.levels_n = n;
  d.support_length = support_length(n, p);
  d.step_size = 2.0 * d.support_length / static_cast<double>(n);
  d.predicted_distortion = predicted_distortion(n, d.support_length, p);
  return d;
}

double single_sided_mse(std::span<const double> samples, std::int64_t levels,
                        double step) {
  if (levels < 1) {
    throw std::invalid_argument("single_sided_mse: levels must be at least 1");
  }
  if (!(step > 0.0)) {
    throw std::invalid_argument("single_sided_mse: step must be positive");
  }
  if (samples.empty()) {
    throw std::invalid_argument("single_sided_mse: empty sample");
  }
  const double top = static_cast<double>(levels - 1);
  double sse = 0.0;
  for (double x : samples) {
    double cell = std::floor(x / step);
    if (cell < 0.0) cell = 0.0;
    if (cell > top) cell = top;
    const double e = x - (cell + 0.5) * step;
    sse += e * e;
  }
  return sse / static_cast<double>(samples.size());
}

BruteForceDesign brute_force_design(std::int64_t levels,
                                    std::span<const double> samples) {
  if (levels < 2) {
    throw std::invalid_argument("brute_force_design: levels must be at least 2");
  }
  if (samples.size() < 10000) {
    throw std::invalid_argument(
        "brute_force_design: needs at least 10^4 samples, got " +
        std::to_string(samples.size()));
  }
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= static_cast<double>(samples.size());
  double var = 0.0;
  double mean_abs = 0.0;
  for (double x : samples) {
    var += (x - mean) * (x - mean);
    mean_abs += std::fabs(x);
  }
  var /= static_cast<double>(samples.size());
  mean_abs /= static_cast<double>(samples.size());

  double scale = std::sqrt(var);
  if (scale <= 0.0) scale = mean_abs;  // constant samples: fall back to magnitude
  if (scale <= 0.0) {
    throw std::domain_error("brute_force_design: all samples are zero");
  }
  const double guess = 2.0 * scale / static_cast<double>(levels);

  BruteForceDesign best;
  bool have = false;
  for (int i = 0; i <= 256; ++i) {
    const double step = guess * std::exp2((i - 128) / 32.0);
    const double mse = single_sided_mse(samples, levels, step);
    if (!have || mse < best.mse) {
      best.step = step;
      best.mse = mse;
      have = true;
    }
  }
  return best;
}

}  // namespace fpquant
