#include "fpquant/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

namespace fpquant {

namespace {

std::string shape_string(std::span<const std::int64_t> shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  s += ")";
  return s;
}

[[noreturn]] void layer_error(const LayerSpec& l, const std::string& what) {
  throw std::invalid_argument("layer '" + l.name + "': " + what);
}

}  // namespace

std::int64_t Tensor::size() const {
  std::int64_t n = 1;
  for (std::int64_t d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

Tensor Tensor::zeros(std::vector<std::int64_t> shape) {
  Tensor t;
  t.shape = std::move(shape);
  t.data.assign(static_cast<std::size_t>(t.size()), 0.0);
  return t;
}

void Tensor::validate() const {
  for (std::int64_t d : shape) {
    if (d <= 0) {
      throw std::invalid_argument("tensor: non-positive dimension in " +
                                  shape_string(shape));
    }
  }
  if (size() != static_cast<std::int64_t>(data.size())) {
    throw std::invalid_argument(
        "tensor: shape " + shape_string(shape) + " wants " + std::to_string(size()) +
        " values, data has " + std::to_string(data.size()));
  }
  for (double v : data) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("tensor: non-finite value");
    }
  }
}

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kFc: return "fc";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kMaxPool: return "maxpool";
    case LayerKind::kAvgPool: return "avgpool";
    case LayerKind::kSoftmax: return "softmax";
  }
  throw std::invalid_argument("unknown layer kind");
}

LayerKind layer_kind_from_name(const std::string& name) {
  if (name == "conv") return LayerKind::kConv;
  if (name == "fc") return LayerKind::kFc;
  if (name == "relu") return LayerKind::kRelu;
  if (name == "maxpool") return LayerKind::kMaxPool;
  if (name == "avgpool") return LayerKind::kAvgPool;
  if (name == "softmax") return LayerKind::kSoftmax;
  throw std::invalid_argument("unknown layer kind '" + name + "'");
}

namespace {

std::int64_t flat_size(std::span<const std::int64_t> shape) {
  std::int64_t n = 1;
  for (std::int64_t d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

// Output shape of one layer given its input shape; shape/parameter errors
// name the layer.
std::vector<std::int64_t> infer_output_shape(const LayerSpec& l,
                                             std::span<const std::int64_t> in) {
  switch (l.kind) {
    case LayerKind::kConv: {
      if (in.size() != 3) layer_error(l, "conv input must be (C, H, W), got " + shape_string(in));
      if (l.kernel < 1 || l.stride < 1 || l.padding < 0) {
        layer_error(l, "bad conv hyperparameters");
      }
      if (in[0] != l.in_channels) {
        layer_error(l, "input channel mismatch (expected " + std::to_string(l.in_channels) +
                           ", got " + std::to_string(in[0]) + ")");
      }
      const std::int64_t h = in[1] + 2 * l.padding - l.kernel;
      const std::int64_t w = in[2] + 2 * l.padding - l.kernel;
      if (h < 0 || w < 0) layer_error(l, "kernel larger than padded input");
      return {l.out_channels, h / l.stride + 1, w / l.stride + 1};
    }
    case LayerKind::kFc: {
      if (flat_size(in) != l.in_features) {
        layer_error(l, "weight shape expects " + std::to_string(l.in_features) +
                           " input features, got " + shape_string(in));
      }
      return {l.out_features};
    }
    case LayerKind::kRelu:
    case LayerKind::kSoftmax:
      return std::vector<std::int64_t>(in.begin(), in.end());
    case LayerKind::kMaxPool:
    case LayerKind::kAvgPool: {
      if (in.size() != 3) layer_error(l, "pool input must be (C, H, W), got " + shape_string(in));
      if (l.kernel < 1 || l.stride < 1) layer_error(l, "bad pool hyperparameters");
      if (in[1] < l.kernel || in[2] < l.kernel) layer_error(l, "pool kernel larger than input");
      return {in[0], (in[1] - l.kernel) / l.stride + 1, (in[2] - l.kernel) / l.stride + 1};
    }
  }
  layer_error(l, "unknown kind");
}

void check_parameters(const LayerSpec& l) {
  if (l.kind == LayerKind::kConv) {
    const std::vector<std::int64_t> want{l.out_channels, l.in_channels, l.kernel, l.kernel};
    if (l.weights.shape != want) {
      layer_error(l, "conv weights shaped " + shape_string(l.weights.shape) +
                         ", expected " + shape_string(want));
    }
    if (l.bias.shape != std::vector<std::int64_t>{l.out_channels}) {
      layer_error(l, "conv bias shaped " + shape_string(l.bias.shape) + ", expected (" +
                         std::to_string(l.out_channels) + ")");
    }
  } else if (l.kind == LayerKind::kFc) {
    const std::vector<std::int64_t> want{l.out_features, l.in_features};
    if (l.weights.shape != want) {
      layer_error(l, "fc weights shaped " + shape_string(l.weights.shape) +
                         ", expected " + shape_string(want));
    }
    if (l.bias.shape != std::vector<std::int64_t>{l.out_features}) {
      layer_error(l, "fc bias shaped " + shape_string(l.bias.shape) + ", expected (" +
                         std::to_string(l.out_features) + ")");
    }
  }
  if (l.is_parameterized()) {
    l.weights.validate();
    l.bias.validate();
  }
}

// Runs one layer. w/b supply the (possibly quantized) parameters for
// parameterized layers and are ignored otherwise.
Tensor apply_layer(const LayerSpec& l, const Tensor& in, const Tensor& w,
                   const Tensor& b) {
  const std::vector<std::int64_t> out_shape = infer_output_shape(l, in.shape);
  switch (l.kind) {
    case LayerKind::kConv: {
      const std::int64_t ic = l.in_channels;
      const std::int64_t h = in.shape[1];
      const std::int64_t wd = in.shape[2];
      const std::int64_t oh = out_shape[1];
      const std::int64_t ow = out_shape[2];
      const std::int64_t k = l.kernel;
      Tensor out = Tensor::zeros(out_shape);
      for (std::int64_t oc = 0; oc < l.out_channels; ++oc) {
        for (std::int64_t oy = 0; oy < oh; ++oy) {
          for (std::int64_t ox = 0; ox < ow; ++ox) {
            double acc = b.data[static_cast<std::size_t>(oc)];
            for (std::int64_t c = 0; c < ic; ++c) {
              for (std::int64_t ky = 0; ky < k; ++ky) {
                const std::int64_t iy = oy * l.stride - l.padding + ky;
                if (iy < 0 || iy >= h) continue;
                for (std::int64_t kx = 0; kx < k; ++kx) {
                  const std::int64_t ix = ox * l.stride - l.padding + kx;
                  if (ix < 0 || ix >= wd) continue;
                  acc += w.data[static_cast<std::size_t>(((oc * ic + c) * k + ky) * k + kx)] *
                         in.data[static_cast<std::size_t>((c * h + iy) * wd + ix)];
                }
              }
            }
            out.data[static_cast<std::size_t>((oc * oh + oy) * ow + ox)] = acc;
          }
        }
      }
      return out;
    }
    case LayerKind::kFc: {
      Tensor out = Tensor::zeros(out_shape);
      const std::int64_t nin = l.in_features;
      for (std::int64_t o = 0; o < l.out_features; ++o) {
        double acc = b.data[static_cast<std::size_t>(o)];
        for (std::int64_t i = 0; i < nin; ++i) {
          acc += w.data[static_cast<std::size_t>(o * nin + i)] *
                 in.data[static_cast<std::size_t>(i)];
        }
        out.data[static_cast<std::size_t>(o)] = acc;
      }
      return out;
    }
    case LayerKind::kRelu: {
      Tensor out = in;
      for (double& v : out.data) v = std::max(v, 0.0);
      return out;
    }
    case LayerKind::kMaxPool:
    case LayerKind::kAvgPool: {
      const std::int64_t c = in.shape[0];
      const std::int64_t h = in.shape[1];
      const std::int64_t wd = in.shape[2];
      const std::int64_t oh = out_shape[1];
      const std::int64_t ow = out_shape[2];
      const std::int64_t k = l.kernel;
      const bool is_max = l.kind == LayerKind::kMaxPool;
      Tensor out = Tensor::zeros(out_shape);
      for (std::int64_t ch = 0; ch < c; ++ch) {
        for (std::int64_t oy = 0; oy < oh; ++oy) {
          for (std::int64_t ox = 0; ox < ow; ++ox) {
            double agg = is_max ? -std::numeric_limits<double>::infinity() : 0.0;
            for (std::int64_t ky = 0; ky < k; ++ky) {
              for (std::int64_t kx = 0; kx < k; ++kx) {
                const double v = in.data[static_cast<std::size_t>(
                    (ch * h + oy * l.stride + ky) * wd + ox * l.stride + kx)];
                if (is_max) {
                  agg = std::max(agg, v);
                } else {
                  agg += v;
                }
              }
            }
            if (!is_max) agg /= static_cast<double>(k * k);
            out.data[static_cast<std::size_t>((ch * oh + oy) * ow + ox)] = agg;
          }
        }
      }
      return out;
    }
    case LayerKind::kSoftmax: {
      Tensor out = in;
      const double mx = *std::max_element(out.data.begin(), out.data.end());
      double sum = 0.0;
      for (double& v : out.data) {
        v = std::exp(v - mx);
        sum += v;
      }
      for (double& v : out.data) v /= sum;
      return out;
    }
  }
  layer_error(l, "unknown kind");
}

void quantize_in_place(Tensor& t, const FixedPointFormat& fmt) {
  fmt.validate();
  for (double& v : t.data) v = quantize(v, fmt);
}

}  // namespace

void NetworkModel::validate() const {
  if (layers.empty()) {
    throw std::invalid_argument("model '" + name + "': no layers");
  }
  for (std::int64_t d : input_shape) {
    if (d <= 0) {
      throw std::invalid_argument("model '" + name + "': bad input shape " +
                                  shape_string(input_shape));
    }
  }
  std::set<std::string> names;
  for (const LayerSpec& l : layers) {
    if (l.name.empty()) {
      throw std::invalid_argument("model '" + name + "': unnamed layer");
    }
    if (!names.insert(l.name).second) {
      throw std::invalid_argument("model '" + name + "': duplicate layer name '" +
                                  l.name + "'");
    }
    check_parameters(l);
  }
  std::vector<std::int64_t> shape = input_shape;
  for (const LayerSpec& l : layers) {
    shape = infer_output_shape(l, shape);  // throws naming the layer
  }
}

std::vector<std::vector<std::int64_t>> NetworkModel::layer_output_shapes() const {
  validate();
  std::vector<std::vector<std::int64_t>> out;
  std::vector<std::int64_t> shape = input_shape;
  for (const LayerSpec& l : layers) {
    shape = infer_output_shape(l, shape);
    out.push_back(shape);
  }
  return out;
}

std::optional<std::size_t> NetworkModel::fm_owner(std::size_t i) const {
  if (i >= layers.size()) {
    throw std::invalid_argument("fm_owner: layer index out of range");
  }
  if (layers[i].kind == LayerKind::kSoftmax) return std::nullopt;
  std::optional<std::size_t> owner;
  for (std::size_t j = 0; j <= i; ++j) {
    if (layers[j].is_parameterized()) {
      owner = j;
    } else if (layers[j].kind == LayerKind::kSoftmax) {
      owner = std::nullopt;
    }
  }
  return owner;
}

std::size_t NetworkModel::design_site(std::size_t i) const {
  if (i >= layers.size() || !layers[i].is_parameterized()) {
    throw std::invalid_argument("design_site: not a parameterized layer index");
  }
  std::size_t site = i;
  for (std::size_t j = i + 1; j < layers.size(); ++j) {
    if (fm_owner(j) == std::optional<std::size_t>{i}) site = j;
  }
  return site;
}

std::optional<std::size_t> NetworkModel::layer_index(const std::string& layer_name) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].name == layer_name) return i;
  }
  return std::nullopt;
}

const LayerQuantSpec* QuantConfig::find(const std::string& layer_name) const {
  for (const auto& [n, spec] : layers) {
    if (n == layer_name) return &spec;
  }
  return nullptr;
}

LayerQuantSpec* QuantConfig::find(const std::string& layer_name) {
  for (auto& [n, spec] : layers) {
    if (n == layer_name) return &spec;
  }
  return nullptr;
}

void QuantConfig::validate_for(const NetworkModel& model) const {
  for (const LayerSpec& l : model.layers) {
    if (!l.is_parameterized()) continue;
    const LayerQuantSpec* s = find(l.name);
    if (!s) {
      throw std::invalid_argument("config: no entry for parameterized layer '" +
                                  l.name + "'");
    }
    FixedPointFormat{s->weight_bw, s->weight_fl, true}.validate();
    FixedPointFormat{s->bias_bw, s->bias_fl, true}.validate();
    if (s->fm_enabled) {
      FixedPointFormat{s->fm_bw, s->fm_fl, s->fm_signed}.validate();
    }
  }
}

std::vector<Tensor> forward_float(const NetworkModel& model, const Tensor& input) {
  model.validate();
  input.validate();
  if (input.shape != model.input_shape) {
    throw std::invalid_argument("model '" + model.name + "': input shaped " +
                                shape_string(input.shape) + ", expected " +
                                shape_string(model.input_shape));
  }
  std::vector<Tensor> outputs;
  outputs.reserve(model.layers.size());
  const Tensor* x = &input;
  for (const LayerSpec& l : model.layers) {
    outputs.push_back(apply_layer(l, *x, l.weights, l.bias));
    x = &outputs.back();
  }
  return outputs;
}

FixedForwardPlan prepare_fixed(const NetworkModel& model, const QuantConfig& q) {
  model.validate();
  q.validate_for(model);
  FixedForwardPlan plan;
  plan.model = &model;
  plan.qweights.resize(model.layers.size());
  plan.qbias.resize(model.layers.size());
  plan.output_format.resize(model.layers.size());
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    if (l.is_parameterized()) {
      const LayerQuantSpec* s = q.find(l.name);
      QuantizationError sink;
      plan.qweights[i].shape = l.weights.shape;
      plan.qweights[i].data =
          quantize_tensor(l.weights.data, {s->weight_bw, s->weight_fl, true}, sink);
      plan.qbias[i].shape = l.bias.shape;
      plan.qbias[i].data =
          quantize_tensor(l.bias.data, {s->bias_bw, s->bias_fl, true}, sink);
    }
    const std::optional<std::size_t> owner = model.fm_owner(i);
    if (owner) {
      const LayerQuantSpec* s = q.find(model.layers[*owner].name);
      if (s->fm_enabled) {
        plan.output_format[i] = FixedPointFormat{s->fm_bw, s->fm_fl, s->fm_signed};
      }
    }
  }
  for (const LayerSpec& l : model.layers) {
    if (!l.is_parameterized()) continue;
    const LayerQuantSpec* s = q.find(l.name);
    if (s->fm_enabled) {
      plan.input_format = FixedPointFormat{s->fm_bw, s->fm_fl, s->fm_signed};
    }
    break;
  }
  return plan;
}

std::vector<Tensor> forward_fixed(const FixedForwardPlan& plan, const Tensor& input) {
  const NetworkModel& model = *plan.model;
  input.validate();
  if (input.shape != model.input_shape) {
    throw std::invalid_argument("model '" + model.name + "': input shaped " +
                                shape_string(input.shape) + ", expected " +
                                shape_string(model.input_shape));
  }
  Tensor head = input;
  if (plan.input_format) quantize_in_place(head, *plan.input_format);
  std::vector<Tensor> outputs;
  outputs.reserve(model.layers.size());
  const Tensor* x = &head;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    Tensor y = l.is_parameterized()
                   ? apply_layer(l, *x, plan.qweights[i], plan.qbias[i])
                   : apply_layer(l, *x, l.weights, l.bias);
    if (plan.output_format[i]) quantize_in_place(y, *plan.output_format[i]);
    outputs.push_back(std::move(y));
    x = &outputs.back();
  }
  return outputs;
}

std::vector<Tensor> forward_fixed(const NetworkModel& model, const Tensor& input,
                                  const QuantConfig& q) {
  return forward_fixed(prepare_fixed(model, q), input);
}

std::vector<LayerCalibration> capture_calibration(const NetworkModel& model,
                                                  std::span<const Tensor> inputs,
                                                  bool lenient) {
  model.validate();
  if (inputs.empty()) {
    throw std::invalid_argument("capture_calibration: needs at least one input");
  }
  std::vector<StatsAccumulator> acc(model.layers.size());
  for (const Tensor& input : inputs) {
    const std::vector<Tensor> outs = forward_float(model, input);
    for (std::size_t i = 0; i < outs.size(); ++i) {
      for (double v : outs[i].data) acc[i].add(v);
    }
  }
  std::vector<LayerCalibration> result;
  result.reserve(model.layers.size());
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    LayerCalibration c;
    c.layer = model.layers[i].name;
    if (acc[i].total == acc[i].zeros) {
      if (!lenient) {
        throw std::domain_error("calibration: layer '" + c.layer +
                                "' produced only zeros (degenerate)");
      }
      c.degenerate = true;
      c.stats = acc[i].finalize();  // counts and extrema; moments stay zero
    } else {
      c.stats = acc[i].finalize();
    }
    result.push_back(std::move(c));
  }
  return result;
}

std::size_t argmax(std::span<const double> xs) {
  if (xs.empty()) {
    throw std::invalid_argument("argmax: empty input");
  }
  return static_cast<std::size_t>(
      std::max_element(xs.begin(), xs.end()) - xs.begin());
}

double top1_agreement(const NetworkModel& model, const QuantConfig& q,
                      std::span<const Tensor> inputs) {
  if (inputs.empty()) {
    throw std::invalid_argument("top1_agreement: empty input set");
  }
  const FixedForwardPlan plan = prepare_fixed(model, q);
  std::int64_t agree = 0;
  for (const Tensor& input : inputs) {
    const std::vector<Tensor> ffloat = forward_float(model, input);
    const std::vector<Tensor> ffix = forward_fixed(plan, input);
    const Tensor& a = ffloat.back();
    const Tensor& b = ffix.back();
    if (a.data.size() < 2) {
      throw std::invalid_argument("top1_agreement: final output is not classifier-shaped");
    }
    if (argmax(a.data) == argmax(b.data)) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(inputs.size());
}

}  // namespace fpquant
