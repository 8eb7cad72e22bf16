#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "fpquant/ggd.hpp"

using namespace fpquant;

namespace {

const GgdParams kLaplace{1.0, 0.0, 1.0, 0.5};

// Simpson's rule on [0, hi] with an even number of panels.
template <typename F>
double simpson(F f, double hi, int panels) {
  const double h = hi / panels;
  double acc = f(0.0) + f(hi);
  for (int i = 1; i < panels; ++i) acc += f(i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace

TEST_SUITE("ggd") {

TEST_CASE("moment fit recovers the gamma sub-family exactly") {
  // mean 1, variance 0.5 -> shape 2, rate 2. The normalizer of the
  // symmetric density is rate^shape / (2 * Gamma(shape)) = 4 / 2 = 2.
  const GgdParams p = estimate_from_moments(1.0, 0.5);
  CHECK(p.alpha == 1.0);
  CHECK(p.beta == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(p.lambda == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(p.mu == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(p.kappa() == doctest::Approx(2.0).epsilon(1e-14));

  // Unit-exponential moments give the Laplace-like member.
  const GgdParams lap = estimate_from_moments(1.0, 1.0);
  CHECK(lap.beta == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(lap.lambda == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(lap.mu == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("fitted density integrates to one with matching moments") {
  // Independent check of the normalizer: integrate the one-sided density
  // 2 * mu * x^beta * exp(-lambda x) numerically and compare its mass and
  // first two moments against the fitted statistics.
  const double mean = 0.8;
  const double var = 0.2;  // shape 3.2
  const GgdParams p = estimate_from_moments(mean, var);
  auto density = [&](double x) {
    return x == 0.0 && p.beta < 0.0 ? 0.0
                                    : 2.0 * p.mu * std::pow(x, p.beta) *
                                          std::exp(-p.lambda * x);
  };
  const double hi = 40.0 / p.lambda;
  const double mass = simpson(density, hi, 400000);
  const double m1 = simpson([&](double x) { return x * density(x); }, hi, 400000);
  const double m2 = simpson([&](double x) { return x * x * density(x); }, hi, 400000);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(m1 == doctest::Approx(mean).epsilon(1e-8));
  CHECK(m2 == doctest::Approx(var + mean * mean).epsilon(1e-8));
}

TEST_CASE("moment fit rejects degenerate statistics") {
  CHECK_THROWS_AS(estimate_from_moments(0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(estimate_from_moments(1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(estimate_from_moments(-2.0, 1.0), std::domain_error);
  // Shape above 170 would overflow Gamma(shape).
  CHECK_THROWS_WITH_AS(estimate_from_moments(1.0, 1.0 / 171.0),
                       doctest::Contains("exceeds 170"), std::domain_error);
  CHECK_NOTHROW(estimate_from_moments(1.0, 1.0 / 169.0));
}

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(kLaplace.validate());
  CHECK_THROWS_AS((GgdParams{0.0, 0.0, 1.0, 0.5}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((GgdParams{1.0, -1.0, 1.0, 0.5}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((GgdParams{1.0, 0.0, 0.0, 0.5}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((GgdParams{1.0, 0.0, 1.0, 0.0}.validate()), std::invalid_argument);
  CHECK_NOTHROW((GgdParams{2.0, -0.5, 3.0, 1.0}.validate()));
}

TEST_CASE("correction term: pinned values and decay") {
  // Values pinned from an independent high-precision evaluation of the
  // three-factor product for the unit two-sided exponential.
  CHECK(epsilon_correction(8, kLaplace) ==
        doctest::Approx(0.4942257688394318).epsilon(1e-13));
  CHECK(epsilon_correction(std::int64_t{1} << 20, kLaplace) ==
        doctest::Approx(0.07717726103150122).epsilon(1e-13));

  // The correction vanishes as the level count grows.
  const double e16 = epsilon_correction(16, kLaplace);
  const double e1k = epsilon_correction(1024, kLaplace);
  const double e1m = epsilon_correction(std::int64_t{1} << 20, kLaplace);
  CHECK(e16 > e1k);
  CHECK(e1k > e1m);
  CHECK(e1m > 0.0);
}

TEST_CASE("correction term: small-n gate and factor breakdowns") {
  CHECK_THROWS_AS(epsilon_correction(3, kLaplace), std::invalid_argument);
  CHECK_NOTHROW(epsilon_correction(4, kLaplace));

  // Steep exponent at tiny n drives the middle factor negative.
  const GgdParams steep{20.0, 0.0, 1.0, 0.5};
  CHECK_THROWS_WITH_AS(epsilon_correction(4, steep),
                       doctest::Contains("3 - 3*alpha + 2*beta"),
                       std::domain_error);

  // An enormous normalizer drives the log-log factor negative.
  const GgdParams spiky{1.0, 0.0, 1.0, 1e10};
  CHECK_THROWS_WITH_AS(epsilon_correction(4, spiky),
                       doctest::Contains("log-log factor"), std::domain_error);
}

TEST_CASE("support length: pinned values and growth") {
  CHECK(support_length(16, kLaplace) ==
        doctest::Approx(5.333490370834346).epsilon(1e-13));
  CHECK(support_length(256, kLaplace) ==
        doctest::Approx(9.936745660614363).epsilon(1e-13));
  // More levels -> wider support, slower than linearly.
  CHECK(support_length(256, kLaplace) > support_length(64, kLaplace));
  CHECK(support_length(1024, kLaplace) < 2.0 * support_length(64, kLaplace));

  // A nearly-massless density (tiny normalizer) breaks the bracket.
  const GgdParams hollow{1.0, 0.0, 1.0, 1e-30};
  CHECK_THROWS_WITH_AS(support_length(4, hollow),
                       doctest::Contains("bracket is non-positive"),
                       std::domain_error);
}

TEST_CASE("predicted distortion: pinned value, guards, and structure") {
  const double L32 = support_length(32, kLaplace);
  CHECK(predicted_distortion(32, L32, kLaplace) ==
        doctest::Approx(0.016659973754346788).epsilon(1e-13));

  CHECK_THROWS_AS(predicted_distortion(1, 1.0, kLaplace), std::invalid_argument);
  CHECK_THROWS_AS(predicted_distortion(8, 0.0, kLaplace), std::invalid_argument);
  CHECK_THROWS_AS(predicted_distortion(8, -1.0, kLaplace), std::invalid_argument);

  // With a huge support the overload tail is dead and only the granular
  // term (2L/n)^2 / 12 remains.
  const double granular = predicted_distortion(1000, 100.0, kLaplace);
  CHECK(granular == doctest::Approx(0.04 / 12.0).epsilon(1e-10));

  // At the optimal support, more levels mean less distortion.
  const double d8 = predicted_distortion(8, support_length(8, kLaplace), kLaplace);
  const double d64 = predicted_distortion(64, support_length(64, kLaplace), kLaplace);
  CHECK(d8 > d64);
}

TEST_CASE("one-sided design doubles the level count") {
  const QuantizerDesign d = design_single_sided(8, kLaplace);
  CHECK(d.levels_n == 16);
  CHECK(d.support_length == doctest::Approx(support_length(16, kLaplace)).epsilon(1e-15));
  CHECK(d.step_size == doctest::Approx(d.support_length / 8.0).epsilon(1e-15));
  CHECK(d.predicted_distortion ==
        doctest::Approx(predicted_distortion(16, d.support_length, kLaplace))
            .epsilon(1e-15));
  CHECK_THROWS_AS(design_single_sided(1, kLaplace), std::invalid_argument);
}

TEST_CASE("one-sided empirical MSE: hand-computed cells and clamping") {
  // Two cells of width 0.5: reconstructions 0.25 and 0.75.
  const std::vector<double> xs{0.1, 0.5, 0.9};
  const double mse = single_sided_mse(xs, 2, 0.5);
  CHECK(mse == doctest::Approx(0.1075 / 3.0).epsilon(1e-14));

  // Values beyond the top cell reconstruct at its midpoint.
  const std::vector<double> big{1.7};
  CHECK(single_sided_mse(big, 2, 0.5) ==
        doctest::Approx((1.7 - 0.75) * (1.7 - 0.75)).epsilon(1e-14));

  CHECK_THROWS_AS(single_sided_mse(std::vector<double>{}, 2, 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(single_sided_mse(xs, 0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(single_sided_mse(xs, 2, 0.0), std::invalid_argument);
}

TEST_CASE("brute force search: input guards") {
  std::vector<double> few(9999, 1.0);
  CHECK_THROWS_AS(brute_force_design(4, few), std::invalid_argument);
  std::vector<double> zeros(10000, 0.0);
  CHECK_THROWS_AS(brute_force_design(4, zeros), std::domain_error);
  CHECK_THROWS_AS(brute_force_design(1, few), std::invalid_argument);
}

TEST_CASE("brute force search matches an independent sweep of its grid") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> xs(20000);
  for (double& x : xs) x = u(rng) * u(rng) * 3.0;

  const BruteForceDesign got = brute_force_design(16, xs);

  // Recompute the documented candidate grid from scratch.
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  const double guess = 2.0 * std::sqrt(var) / 16.0;

  double best_step = 0.0;
  double best_mse = 0.0;
  bool have = false;
  for (int i = 0; i <= 256; ++i) {
    const double step = guess * std::exp2((i - 128) / 32.0);
    const double mse = single_sided_mse(xs, 16, step);
    if (!have || mse < best_mse) {
      best_step = step;
      best_mse = mse;
      have = true;
    }
  }
  CHECK(got.step == best_step);
  CHECK(got.mse == best_mse);
  CHECK(got.mse == single_sided_mse(xs, 16, got.step));
}

TEST_CASE("brute force search: constant samples fall back to the magnitude scale") {
  std::vector<double> flat(10000, 3.0);
  const BruteForceDesign got = brute_force_design(4, flat);
  // The sweep is centered on 2 * mean|x| / levels = 1.5 and must find a cell
  // whose midpoint sits close to 3.
  CHECK(got.mse < 0.01);
  CHECK(got.step > 0.0);
}

}  // TEST_SUITE
