#include "fpquant/fixture.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fpquant/rng.hpp"

namespace fpquant {

namespace {

// Generated values are snapped to float32 so the in-memory fixture is
// bit-identical to its blob-file round trip.
double snap_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

Tensor random_tensor(DeterministicRng& rng, std::vector<std::int64_t> shape,
                     double sigma, double mean = 0.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.data) v = snap_f32(mean + sigma * rng.normal());
  return t;
}

LayerSpec conv_layer(DeterministicRng& rng, const std::string& name, int ic, int oc,
                     int kernel, int padding, double gain) {
  LayerSpec l;
  l.name = name;
  l.kind = LayerKind::kConv;
  l.in_channels = ic;
  l.out_channels = oc;
  l.kernel = kernel;
  l.stride = 1;
  l.padding = padding;
  const double fan_in = static_cast<double>(ic) * kernel * kernel;
  const double sigma = gain / std::sqrt(fan_in);
  l.weights = random_tensor(rng, {oc, ic, kernel, kernel}, sigma);
  l.bias = random_tensor(rng, {oc}, 0.03, 0.02);
  return l;
}

LayerSpec fc_layer(DeterministicRng& rng, const std::string& name, int in_features,
                   int out_features, double gain) {
  LayerSpec l;
  l.name = name;
  l.kind = LayerKind::kFc;
  l.in_features = in_features;
  l.out_features = out_features;
  const double sigma = gain / std::sqrt(static_cast<double>(in_features));
  l.weights = random_tensor(rng, {out_features, in_features}, sigma);
  l.bias = random_tensor(rng, {out_features}, 0.05, 0.0);
  return l;
}

LayerSpec plain_layer(const std::string& name, LayerKind kind, int kernel = 0,
                      int stride = 1) {
  LayerSpec l;
  l.name = name;
  l.kind = kind;
  l.kernel = kernel;
  l.stride = stride;
  return l;
}

}  // namespace

NetworkModel make_reference_model(std::uint64_t seed) {
  DeterministicRng rng(seed * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL);
  NetworkModel m;
  m.name = "refnet-seed" + std::to_string(seed);
  m.input_shape = {3, 8, 8};
  // Per-layer gain jitter keeps the layer scales unequal so every layer gets
  // its own fractional length.
  const double g1 = 1.0 + 0.6 * rng.uniform();
  const double g2 = 1.0 + 0.6 * rng.uniform();
  const double g3 = 1.0 + 0.6 * rng.uniform();
  const double g4 = 1.2 + 0.8 * rng.uniform();
  m.layers.push_back(conv_layer(rng, "conv1", 3, 8, 3, 1, g1));
  m.layers.push_back(plain_layer("relu1", LayerKind::kRelu));
  m.layers.push_back(plain_layer("pool1", LayerKind::kMaxPool, 2, 2));
  m.layers.push_back(conv_layer(rng, "conv2", 8, 12, 3, 1, g2));
  m.layers.push_back(plain_layer("relu2", LayerKind::kRelu));
  m.layers.push_back(plain_layer("pool2", LayerKind::kAvgPool, 2, 2));
  m.layers.push_back(conv_layer(rng, "conv3", 12, 16, 3, 1, g3));
  m.layers.push_back(plain_layer("relu3", LayerKind::kRelu));
  m.layers.push_back(fc_layer(rng, "fc1", 16 * 2 * 2, 10, g4));
  m.layers.push_back(plain_layer("prob", LayerKind::kSoftmax));
  m.validate();
  return m;
}

std::vector<Tensor> make_reference_inputs(std::uint64_t seed, int count,
                                          const std::vector<std::int64_t>& shape) {
  if (count < 1) {
    throw std::invalid_argument("make_reference_inputs: count must be positive");
  }
  if (shape.size() != 3) {
    throw std::invalid_argument("make_reference_inputs: shape must be (C, H, W)");
  }
  DeterministicRng rng(seed * 0x2545F4914F6CDD1DULL + 0x9E3779B97F4A7C15ULL);
  std::vector<Tensor> inputs;
  inputs.reserve(static_cast<std::size_t>(count));
  for (int n = 0; n < count; ++n) {
    Tensor t = Tensor::zeros(shape);
    std::size_t idx = 0;
    for (std::int64_t c = 0; c < shape[0]; ++c) {
      // Channel- and image-level scale jitter makes the aggregate pixel
      // distribution a gamma mixture rather than one clean gamma.
      const double scale = 0.35 + 0.5 * rng.uniform();
      for (std::int64_t p = 0; p < shape[1] * shape[2]; ++p) {
        t.data[idx++] = snap_f32(scale * rng.gamma(2.0));
      }
    }
    inputs.push_back(std::move(t));
  }
  return inputs;
}

}  // namespace fpquant
