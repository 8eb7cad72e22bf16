#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fpquant/fixedpoint.hpp"
#include "fpquant/quantizers.hpp"

namespace fpquant {

// Dense row-major tensor. The shape convention is channel-major (C, H, W)
// for images and (N) / (OUT, IN) / (OC, IC, K, K) for vectors and parameters;
// batches are represented as sequences of tensors, not a leading axis.
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<double> data;

  std::int64_t size() const;
  static Tensor zeros(std::vector<std::int64_t> shape);

  // Throws std::invalid_argument when product(shape) != data.size() or a
  // value is non-finite.
  void validate() const;
};

enum class LayerKind { kConv, kFc, kRelu, kMaxPool, kAvgPool, kSoftmax };

const char* layer_kind_name(LayerKind kind);
LayerKind layer_kind_from_name(const std::string& name);

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::kRelu;
  // conv: in_channels/out_channels/kernel/stride/padding.
  // pool: kernel/stride. fc: in_features/out_features.
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 0;
  int stride = 1;
  int padding = 0;
  int in_features = 0;
  int out_features = 0;
  Tensor weights;  // conv (OC, IC, K, K); fc (OUT, IN); else empty
  Tensor bias;     // conv (OC); fc (OUT); else empty

  bool is_parameterized() const { return kind == LayerKind::kConv || kind == LayerKind::kFc; }
};

struct NetworkModel {
  std::string name;
  std::vector<std::int64_t> input_shape;  // (C, H, W)
  std::vector<LayerSpec> layers;

  // Chain-checks every layer's shapes against its predecessor, cross-checks
  // parameter tensor shapes against the declared hyperparameters, and
  // requires unique layer names. Throws std::invalid_argument naming the
  // offending layer.
  void validate() const;

  // Output shape of each layer, in order (validates as a side effect).
  std::vector<std::vector<std::int64_t>> layer_output_shapes() const;

  // The parameterized layer whose feature-map format governs layer i's
  // output. conv/fc govern their own output; relu/pool inherit from the
  // nearest parameterized layer upstream; softmax outputs are never
  // quantized (nullopt, and softmax also resets the inheritance).
  std::optional<std::size_t> fm_owner(std::size_t i) const;

  // Last layer of parameterized layer i's group: the point where calibration
  // samples for its feature-map format are taken (after the trailing
  // ReLU/pool run). Throws std::invalid_argument if i is not parameterized.
  std::size_t design_site(std::size_t i) const;

  std::optional<std::size_t> layer_index(const std::string& layer_name) const;
};

// Per-layer fixed-point assignment. fm_enabled=false leaves that group's
// activations (and the network input, for the first layer) in floating
// point — the weight-only schemes.
struct LayerQuantSpec {
  int weight_bw = 8;
  int weight_fl = 0;
  int bias_bw = 8;
  int bias_fl = 0;
  bool fm_enabled = false;
  int fm_bw = 8;
  int fm_fl = 0;
  bool fm_signed = false;

  bool operator==(const LayerQuantSpec&) const = default;
};

struct QuantConfig {
  std::string scheme;  // WQ, WQ+, WQ_FQ, WQ_FQ+, WQ+_FQ+, ristretto
  std::vector<std::pair<std::string, LayerQuantSpec>> layers;  // by layer name

  const LayerQuantSpec* find(const std::string& layer_name) const;
  LayerQuantSpec* find(const std::string& layer_name);

  // Every parameterized model layer must have an entry with valid bit-widths.
  // Throws std::invalid_argument otherwise.
  void validate_for(const NetworkModel& model) const;

  bool operator==(const QuantConfig&) const = default;
};

// Floating forward pass: every layer's output (post-activation), in order.
std::vector<Tensor> forward_float(const NetworkModel& model, const Tensor& input);

// Weights and biases quantized once, ready to run many inputs.
struct FixedForwardPlan {
  const NetworkModel* model = nullptr;
  std::vector<Tensor> qweights;  // per layer; empty when not parameterized
  std::vector<Tensor> qbias;
  // Per layer: the format applied to its output, or nullopt (float).
  std::vector<std::optional<FixedPointFormat>> output_format;
  std::optional<FixedPointFormat> input_format;
};

FixedForwardPlan prepare_fixed(const NetworkModel& model, const QuantConfig& q);

// Fixed-point forward pass: parameters and activations on their grids,
// double-precision accumulation inside each layer, quantization applied only
// at tensor boundaries.
std::vector<Tensor> forward_fixed(const FixedForwardPlan& plan, const Tensor& input);
std::vector<Tensor> forward_fixed(const NetworkModel& model, const Tensor& input,
                                  const QuantConfig& q);

struct LayerCalibration {
  std::string layer;
  bool degenerate = false;  // all captured samples were exactly zero
  SampleStats stats;
};

// Runs forward_float over every input and accumulates each layer's
// activations into one stream per layer. A layer whose samples are all zero
// throws std::domain_error naming it, unless lenient is set, in which case
// the entry is flagged degenerate with zeroed moments.
std::vector<LayerCalibration> capture_calibration(const NetworkModel& model,
                                                  std::span<const Tensor> inputs,
                                                  bool lenient = false);

// Index of the largest element; ties go to the lowest index.
std::size_t argmax(std::span<const double> xs);

// Fraction of inputs on which the fixed-point network's final argmax matches
// the floating network's. Throws std::invalid_argument on empty inputs or a
// final output smaller than two entries.
double top1_agreement(const NetworkModel& model, const QuantConfig& q,
                      std::span<const Tensor> inputs);

}  // namespace fpquant
