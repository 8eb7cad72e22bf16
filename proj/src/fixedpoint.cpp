#include "fpquant/fixedpoint.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fpquant {

void FixedPointFormat::validate() const {
  if (bit_width < 2 || bit_width > 32) {
    throw std::invalid_argument("fixed-point bit_width must be in [2, 32], got " +
                                std::to_string(bit_width));
  }
}

double FixedPointFormat::step() const { return std::ldexp(1.0, -fractional_length); }

std::int64_t FixedPointFormat::min_code() const {
  return is_signed ? -(std::int64_t{1} << (bit_width - 1)) : 0;
}

std::int64_t FixedPointFormat::max_code() const {
  return is_signed ? (std::int64_t{1} << (bit_width - 1)) - 1
                   : (std::int64_t{1} << bit_width) - 1;
}

double FixedPointFormat::min_value() const {
  return static_cast<double>(min_code()) * step();
}

double FixedPointFormat::max_value() const {
  return static_cast<double>(max_code()) * step();
}

void QuantizationError::add(double original, double quantized) {
  const double e = original - quantized;
  sum_squared_error += e * e;
  sum_signal_power += original * original;
  ++sample_count;
}

void QuantizationError::merge(const QuantizationError& other) {
  sum_squared_error += other.sum_squared_error;
  sum_signal_power += other.sum_signal_power;
  sample_count += other.sample_count;
}

double quantize(double x, const FixedPointFormat& fmt) {
  fmt.validate();
  if (!std::isfinite(x)) {
    throw std::invalid_argument("quantize: sample is not finite");
  }
  // Scale by 2^fractional_length, round half away from zero, then clamp the
  // code while still in the real domain so arbitrarily large inputs saturate
  // instead of overflowing the code range.
  double code = std::round(std::ldexp(x, fmt.fractional_length));
  const double lo = static_cast<double>(fmt.min_code());
  const double hi = static_cast<double>(fmt.max_code());
  if (code < lo) code = lo;
  if (code > hi) code = hi;
  return std::ldexp(code, -fmt.fractional_length);
}

std::vector<double> quantize_tensor(std::span<const double> xs,
                                    const FixedPointFormat& fmt,
                                    QuantizationError& err) {
  fmt.validate();
  if (xs.empty()) {
    throw std::invalid_argument("quantize_tensor: empty input");
  }
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) {
    const double q = quantize(x, fmt);
    err.add(x, q);
    out.push_back(q);
  }
  return out;
}

double sqnr_db(const QuantizationError& err) {
  if (err.sample_count <= 0) {
    throw std::domain_error("sqnr_db: no samples recorded");
  }
  if (err.sum_signal_power <= 0.0) {
    throw std::domain_error("sqnr_db: signal power is zero");
  }
  if (err.sum_squared_error <= 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return 10.0 * std::log10(err.sum_signal_power / err.sum_squared_error);
}

}  // namespace fpquant
