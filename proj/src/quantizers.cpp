#include "fpquant/quantizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fpquant {

void StatsAccumulator::add(double x) {
  ++total;
  if (x == 0.0) {
    ++zeros;
  } else {
    if (x < 0.0) ++negatives;
    sum += x;
    sumsq += x * x;
  }
  const double a = std::fabs(x);
  if (a > max_abs) max_abs = a;
  if (x > max_val) max_val = x;
  if (x < min_val) min_val = x;
}

SampleStats StatsAccumulator::finalize() const {
  if (total == 0) {
    throw std::invalid_argument("sample statistics: no samples");
  }
  SampleStats s;
  s.count_total = total;
  s.count_zero = zeros;
  s.count_negative = negatives;
  s.rho = static_cast<double>(negatives) / static_cast<double>(total);
  s.max_abs = max_abs;
  s.max_val = max_val;
  s.min_val = min_val;
  const std::int64_t nz = total - zeros;
  if (nz > 0) {
    const double mean = sum / static_cast<double>(nz);
    const double var = sumsq / static_cast<double>(nz) - mean * mean;
    s.mean_excl_zero = mean;
    s.var_excl_zero = std::max(var, 0.0);
  }
  return s;
}

SampleStats collect_stats(std::span<const double> samples) {
  if (samples.empty()) {
    throw std::invalid_argument("collect_stats: empty sample");
  }
  StatsAccumulator acc;
  for (double x : samples) acc.add(x);
  if (acc.total == acc.zeros) {
    throw std::domain_error("collect_stats: all samples are zero");
  }
  return acc.finalize();
}

namespace {

int ceil_log2(double x) { return static_cast<int>(std::ceil(std::log2(x))); }
int floor_log2(double x) { return static_cast<int>(std::floor(std::log2(x))); }

// Mean squared error of the fixed-point quantizer over the samples.
double empirical_mse(std::span<const double> samples, const FixedPointFormat& fmt) {
  double sse = 0.0;
  for (double x : samples) {
    const double e = x - quantize(x, fmt);
    sse += e * e;
  }
  return sse / static_cast<double>(samples.size());
}

// Zero-excluded mean/variance of a side's magnitudes; throws when the side
// cannot support a fit.
GgdParams fit_side(std::span<const double> magnitudes, const char* side) {
  double sum = 0.0;
  double sumsq = 0.0;
  std::int64_t n = 0;
  for (double m : magnitudes) {
    sum += m;
    sumsq += m * m;
    ++n;
  }
  if (n < 2) {
    throw std::domain_error(std::string(side) +
                            "-side samples have fewer than two values, cannot fit");
  }
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(sumsq / static_cast<double>(n) - mean * mean, 0.0);
  if (!(var > 0.0)) {
    throw std::domain_error(std::string(side) +
                            "-side samples have fewer than two distinct values, cannot fit");
  }
  return estimate_from_moments(mean, var);
}

}  // namespace

std::vector<int> weight_fl_candidates(std::span<const double> weights,
                                      const FlSearchConfig& cfg) {
  FixedPointFormat probe{cfg.bit_width, 0, true};
  probe.validate();
  if (cfg.k_w < 1) {
    throw std::invalid_argument("weight_fl_candidates: k_w must be at least 1");
  }
  if (weights.empty()) {
    throw std::invalid_argument("weight_fl_candidates: empty tensor");
  }
  double max_abs = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w)) {
      throw std::invalid_argument("weight_fl_candidates: non-finite weight");
    }
    max_abs = std::max(max_abs, std::fabs(w));
  }
  if (max_abs == 0.0) {
    throw std::domain_error("weight_fl_candidates: all weights are zero");
  }
  const int m = cfg.bit_width - 1 - ceil_log2(max_abs);
  std::vector<int> out;
  out.reserve(cfg.k_w);
  for (int i = 0; i < cfg.k_w; ++i) out.push_back(m + i);
  return out;
}

LayerQuantResult quantize_weights_layer(std::span<const double> weights,
                                        const FlSearchConfig& cfg) {
  const std::vector<int> candidates = weight_fl_candidates(weights, cfg);
  LayerQuantResult r;
  bool have = false;
  for (int fl : candidates) {
    const FixedPointFormat fmt{cfg.bit_width, fl, true};
    double sse = 0.0;
    for (double w : weights) {
      const double e = w - quantize(w, fmt);
      sse += e * e;
    }
    r.candidates_evaluated.emplace_back(fl, sse);
    if (!have || sse < r.distortion) {
      r.fractional_length = fl;
      r.distortion = sse;
      have = true;
    }
  }
  return r;
}

LayerQuantResult quantize_fm_single_sided(std::span<const double> samples,
                                          const SampleStats& stats,
                                          const FlSearchConfig& cfg) {
  FixedPointFormat probe{cfg.bit_width, 0, false};
  probe.validate();
  if (cfg.mode == FlSearchMode::kDefault && samples.empty()) {
    throw std::invalid_argument(
        "quantize_fm_single_sided: default mode needs samples to score");
  }
  for (double x : samples) {
    if (x < 0.0) {
      throw std::invalid_argument(
          "quantize_fm_single_sided: negative sample in one-sided data");
    }
  }
  const GgdParams fit =
      estimate_from_moments(stats.mean_excl_zero, stats.var_excl_zero);
  const std::int64_t levels = std::int64_t{1} << cfg.bit_width;
  const QuantizerDesign design = design_single_sided(levels, fit);

  std::vector<int> candidates{-ceil_log2(design.step_size),
                              -floor_log2(design.step_size)};
  if (candidates[0] == candidates[1]) candidates.pop_back();

  LayerQuantResult r;
  bool have = false;
  for (int fl : candidates) {
    double score;
    if (cfg.mode == FlSearchMode::kDefault) {
      score = empirical_mse(samples, FixedPointFormat{cfg.bit_width, fl, false});
    } else {
      const double support = std::ldexp(1.0, cfg.bit_width - fl);  // levels * step
      score = predicted_distortion(2 * levels, support, fit);
    }
    r.candidates_evaluated.emplace_back(fl, score);
    if (!have || score < r.distortion) {
      r.fractional_length = fl;
      r.distortion = score;
      have = true;
    }
  }
  return r;
}

LayerQuantResult quantize_fm_double_sided(std::span<const double> samples,
                                          const SampleStats& stats,
                                          const FlSearchConfig& cfg) {
  FixedPointFormat probe{cfg.bit_width, 0, true};
  probe.validate();
  if (samples.empty()) {
    throw std::invalid_argument("quantize_fm_double_sided: empty sample");
  }
  std::vector<double> neg_mag;
  std::vector<double> pos;
  for (double x : samples) {
    if (x < 0.0) {
      neg_mag.push_back(-x);
    } else if (x > 0.0) {
      pos.push_back(x);
    }
  }
  if (neg_mag.empty() || pos.empty()) {
    throw std::invalid_argument(
        "quantize_fm_double_sided: needs at least one negative and one positive "
        "sample");
  }
  const GgdParams fit_neg = fit_side(neg_mag, "negative");
  const GgdParams fit_pos = fit_side(pos, "positive");

  const std::int64_t side_levels = std::int64_t{1} << (cfg.bit_width - 1);
  const QuantizerDesign dn = design_single_sided(side_levels, fit_neg);
  const QuantizerDesign dp = design_single_sided(side_levels, fit_pos);

  const int fls[] = {-ceil_log2(dn.step_size), -floor_log2(dn.step_size),
                     -ceil_log2(dp.step_size), -floor_log2(dp.step_size)};
  const int lo = *std::min_element(std::begin(fls), std::end(fls));
  const int hi = *std::max_element(std::begin(fls), std::end(fls));

  LayerQuantResult r;
  bool have = false;
  for (int fl = lo; fl <= hi; ++fl) {
    double score;
    if (cfg.mode == FlSearchMode::kDefault) {
      score = empirical_mse(samples, FixedPointFormat{cfg.bit_width, fl, true});
    } else {
      // Half-support of the signed format, 2^(bit_width - 1) cells per side.
      const double support = std::ldexp(1.0, cfg.bit_width - 1 - fl);
      const std::int64_t n = std::int64_t{1} << cfg.bit_width;
      score = stats.rho * predicted_distortion(n, support, fit_neg) +
              (1.0 - stats.rho) * predicted_distortion(n, support, fit_pos);
    }
    r.candidates_evaluated.emplace_back(fl, score);
    if (!have || score < r.distortion) {
      r.fractional_length = fl;
      r.distortion = score;
      have = true;
    }
  }
  return r;
}

int ristretto_fl(double max_abs, int bit_width, TensorKind kind) {
  FixedPointFormat probe{bit_width, 0, true};
  probe.validate();
  if (!(max_abs > 0.0)) {
    throw std::domain_error("ristretto_fl: max_abs must be positive");
  }
  const int c = ceil_log2(max_abs);
  return kind == TensorKind::kWeight ? bit_width - 1 - c : bit_width - c;
}

}  // namespace fpquant
