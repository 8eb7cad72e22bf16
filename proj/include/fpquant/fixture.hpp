#pragma once

#include <cstdint>
#include <vector>

#include "fpquant/netsim.hpp"

namespace fpquant {

// Seeded desk-scale reference network: three conv groups (ReLU + pooling)
// and a 10-class fully connected head with softmax. Same seed, same bytes.
NetworkModel make_reference_model(std::uint64_t seed);

// Synthetic non-negative inputs for the reference model: per-channel scale
// jitter times gamma-distributed pixels, giving gamma-like activation
// histograms after ReLU.
std::vector<Tensor> make_reference_inputs(std::uint64_t seed, int count,
                                          const std::vector<std::int64_t>& shape);

}  // namespace fpquant
