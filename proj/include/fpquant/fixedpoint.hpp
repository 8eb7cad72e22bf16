#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fpquant {

// Two's-complement style fixed-point grid: representable values are
// k * 2^-fractional_length for integer codes k in [min_code, max_code].
// fractional_length may be negative (coarse grids) or exceed bit_width
// (sub-unit ranges); both are legal.
struct FixedPointFormat {
  int bit_width = 8;
  int fractional_length = 0;
  bool is_signed = true;

  double step() const;  // 2^-fractional_length
  std::int64_t min_code() const;
  std::int64_t max_code() const;
  double min_value() const;
  double max_value() const;

  // Throws std::invalid_argument unless 2 <= bit_width <= 32.
  void validate() const;

  bool operator==(const FixedPointFormat&) const = default;
};

// Running totals for quantization error and signal power over a stream.
struct QuantizationError {
  double sum_squared_error = 0.0;
  double sum_signal_power = 0.0;
  std::int64_t sample_count = 0;

  void add(double original, double quantized);
  void merge(const QuantizationError& other);
};

// Nearest representable value with ties rounded away from zero; inputs
// outside the representable range saturate to the nearest endpoint.
// Throws std::invalid_argument on non-finite input.
double quantize(double x, const FixedPointFormat& fmt);

// Elementwise quantize. Error and signal totals accumulate into err so
// callers can chain several tensors into one measurement.
// Throws std::invalid_argument on an empty input.
std::vector<double> quantize_tensor(std::span<const double> xs,
                                    const FixedPointFormat& fmt,
                                    QuantizationError& err);

// 10*log10(sum_signal_power / sum_squared_error). Returns +infinity when
// the error is exactly zero. Throws std::domain_error when no samples were
// recorded or the signal power is zero (the ratio is meaningless).
double sqnr_db(const QuantizationError& err);

}  // namespace fpquant
