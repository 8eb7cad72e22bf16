#pragma once

#include <cstdint>
#include <span>

namespace fpquant {

// Parameters of the symmetric density mu * |x|^beta * exp(-lambda * |x|^alpha).
// The alpha = 1 sub-family is the two-sided mirror of a gamma density with
// shape kappa = (beta + 1) / alpha and scale 1 / lambda.
struct GgdParams {
  double alpha = 1.0;
  double beta = 0.0;
  double lambda = 1.0;
  double mu = 0.5;

  double kappa() const { return (beta + 1.0) / alpha; }

  // Throws std::invalid_argument unless alpha > 0, lambda > 0, mu > 0 and
  // beta > -1 (integrability at the origin).
  void validate() const;
};

// Symmetric uniform quantizer: levels_n cells of width step_size covering
// [-support_length, support_length], midpoint reconstruction, saturating.
struct QuantizerDesign {
  std::int64_t levels_n = 0;
  double support_length = 0.0;
  double step_size = 0.0;
  double predicted_distortion = 0.0;
};

// Fits the alpha = 1 sub-family to a positive sample's mean and variance:
// kappa = mean^2/variance, beta = kappa - 1, lambda = mean/variance, and mu
// normalizes the two-sided density. Throws std::domain_error when the
// moments are non-positive or kappa > 170 (Gamma(kappa) overflows).
GgdParams estimate_from_moments(double mean, double variance);

// Vanishing correction term in the support-length formula. Throws
// std::invalid_argument for n < 4 and std::domain_error when one of the
// three log factors is non-positive (n too small for this density).
double epsilon_correction(std::int64_t n, const GgdParams& p);

// Asymptotically optimal half-support of the n-level symmetric uniform
// quantizer. Throws std::domain_error when the bracket is non-positive.
double support_length(std::int64_t n, const GgdParams& p);

// Predicted mean squared error of the n-level symmetric uniform quantizer
// with half-support `support`: granular term (2L/n)^2 / 12 plus the overload
// tail. Preconditions: n >= 2, support > 0.
double predicted_distortion(std::int64_t n, double support, const GgdParams& p);

// Design for a one-sided (non-negative) source with `levels` cells: the
// symmetric 2*levels design restricted to [0, L] has the same step and the
// same per-sample distortion, so this returns the symmetric design at
// n = 2*levels with step_size = support_length / levels.
QuantizerDesign design_single_sided(std::int64_t levels, const GgdParams& p);

struct BruteForceDesign {
  double step = 0.0;
  double mse = 0.0;
};

// Empirical mean squared error of the one-sided uniform quantizer with
// `levels` cells [k*step, (k+1)*step), midpoint reconstruction, top cell
// saturating. Preconditions: levels >= 1, step > 0, samples non-empty.
double single_sided_mse(std::span<const double> samples, std::int64_t levels,
                        double step);

// Ground-truth step search: logarithmic sweep (257 points spanning x2^-4 to
// x2^+4 around 2*std/levels) minimizing single_sided_mse. Deterministic for
// a fixed sample sequence. Throws std::invalid_argument when fewer than
// 10^4 samples are supplied and std::domain_error when all samples are zero.
BruteForceDesign brute_force_design(std::int64_t levels,
                                    std::span<const double> samples);

}  // namespace fpquant
