#pragma once

#include <cstdint>
#include <random>

namespace fpquant {

// Seeded random source with hand-rolled normal and gamma transforms.
// std::normal_distribution and std::gamma_distribution are not bit-stable
// across standard libraries, so fixtures and tests draw through this class
// to keep every generated tensor reproducible from its seed alone.
class DeterministicRng {
 public:
  explicit DeterministicRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1), 53-bit resolution.
  double uniform();

  // Standard normal via Box-Muller; caches the second variate.
  double normal();

  // Gamma(shape, 1) via Marsaglia-Tsang squeeze, boosted for shape < 1.
  // Throws std::invalid_argument unless shape > 0.
  double gamma(double shape);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fpquant
