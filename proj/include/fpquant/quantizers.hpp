#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "fpquant/fixedpoint.hpp"
#include "fpquant/ggd.hpp"

namespace fpquant {

// Moments of the nonzero samples plus sign/extremum bookkeeping. Zeros are
// excluded from mean/variance (ReLU outputs are mostly zero and would swamp
// the fit) but still counted in count_total and the extrema.
struct SampleStats {
  double mean_excl_zero = 0.0;
  double var_excl_zero = 0.0;
  std::int64_t count_total = 0;
  std::int64_t count_zero = 0;
  std::int64_t count_negative = 0;
  double rho = 0.0;  // count_negative / count_total
  double max_abs = 0.0;
  double max_val = 0.0;
  double min_val = 0.0;
};

// Streaming accumulator behind collect_stats, shared with the calibration
// capture so that stats gathered input-by-input match a single pass over the
// concatenated stream bit for bit.
struct StatsAccumulator {
  double sum = 0.0;
  double sumsq = 0.0;
  std::int64_t total = 0;
  std::int64_t zeros = 0;
  std::int64_t negatives = 0;
  double max_abs = 0.0;
  double max_val = -std::numeric_limits<double>::infinity();
  double min_val = std::numeric_limits<double>::infinity();

  void add(double x);
  SampleStats finalize() const;  // throws std::invalid_argument when empty
};

// Single pass over the samples. Throws std::invalid_argument when empty and
// std::domain_error when every sample is zero (no moments to report).
SampleStats collect_stats(std::span<const double> samples);

enum class FlSearchMode {
  kDefault,  // score candidates by empirical distortion on the samples
  kFast,     // score candidates by the closed-form predicted distortion
};

struct FlSearchConfig {
  int bit_width = 8;
  int k_w = 2;  // weight-search window size
  FlSearchMode mode = FlSearchMode::kDefault;
};

struct LayerQuantResult {
  int fractional_length = 0;
  double distortion = 0.0;  // score of the chosen candidate
  std::vector<std::pair<int, double>> candidates_evaluated;  // (FL, score)
};

// Candidate fractional lengths for a weight tensor: {m, ..., m + k_w - 1}
// with m = bit_width - 1 - ceil(log2 max|W|). Throws std::invalid_argument
// on an empty tensor or k_w < 1, std::domain_error when all weights are zero.
std::vector<int> weight_fl_candidates(std::span<const double> weights,
                                      const FlSearchConfig& cfg);

// Picks the candidate FL minimizing empirical squared error under the signed
// fixed-point format; ties resolve to the smaller FL.
LayerQuantResult quantize_weights_layer(std::span<const double> weights,
                                        const FlSearchConfig& cfg);

// One-sided feature-map search: fits the density to the zero-excluded
// moments, derives the optimal step for 2^bit_width cells, and tries the two
// power-of-two steps bracketing it. Default mode scores candidates with the
// unsigned fixed-point quantizer on the samples; fast mode scores with the
// closed-form distortion at the candidate's own step and runs stats-only
// (samples may be empty). All samples must be non-negative.
LayerQuantResult quantize_fm_single_sided(std::span<const double> samples,
                                          const SampleStats& stats,
                                          const FlSearchConfig& cfg);

// Two-sided feature-map search: the negative magnitudes and the non-negative
// samples are fitted separately (each side designed for 2^(bit_width - 1)
// cells), the bracketing powers of two from both sides form the candidate
// range, and scoring uses the signed fixed-point quantizer (default) or the
// sign-probability mix of the two closed-form distortions (fast). Needs at
// least one negative and one positive sample.
LayerQuantResult quantize_fm_double_sided(std::span<const double> samples,
                                          const SampleStats& stats,
                                          const FlSearchConfig& cfg);

enum class TensorKind { kWeight, kFeatureMap };

// Range-driven baseline: weights get bit_width - 1 - ceil(log2 max_abs)
// (sign bit reserved), feature maps get bit_width - ceil(log2 max_abs)
// (unsigned). Throws std::domain_error unless max_abs > 0.
int ristretto_fl(double max_abs, int bit_width, TensorKind kind);

}  // namespace fpquant
