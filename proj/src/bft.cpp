#include "fpquant/bft.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fpquant {

namespace {

std::vector<std::size_t> tunable_layers(const NetworkModel& model,
                                        const QuantConfig& q, BftKnob knob) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (!model.layers[i].is_parameterized()) continue;
    const LayerQuantSpec* s = q.find(model.layers[i].name);
    if (knob == BftKnob::kFmFl && !(s && s->fm_enabled)) continue;
    out.push_back(i);
  }
  return out;
}

void append_passes(std::vector<BftOrderEntry>& order,
                   const std::vector<std::size_t>& layers, BftKnob knob) {
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    order.push_back({*it, knob, BftDirection::kBackward});
  }
  for (std::size_t i : layers) {
    order.push_back({i, knob, BftDirection::kForward});
  }
}

// Largest positive value (unsigned formats) or magnitude (signed formats)
// that a knob's format must cover, measured on the floating path over the
// evaluation set. Index: model layer index of the owning entry.
struct ObservedMax {
  std::vector<double> fm_pos;  // max value seen under each owner's format
  std::vector<double> fm_abs;  // max magnitude seen under each owner's format
};

ObservedMax observe_activation_maxima(const NetworkModel& model,
                                      std::span<const Tensor> inputs) {
  ObservedMax obs;
  obs.fm_pos.assign(model.layers.size(), 0.0);
  obs.fm_abs.assign(model.layers.size(), 0.0);
  // The network input is quantized with the first parameterized layer's
  // format, so its values count toward that owner.
  std::size_t first_param = model.layers.size();
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (model.layers[i].is_parameterized()) {
      first_param = i;
      break;
    }
  }
  for (const Tensor& input : inputs) {
    if (first_param < model.layers.size()) {
      for (double v : input.data) {
        obs.fm_pos[first_param] = std::max(obs.fm_pos[first_param], v);
        obs.fm_abs[first_param] = std::max(obs.fm_abs[first_param], std::fabs(v));
      }
    }
    const std::vector<Tensor> outs = forward_float(model, input);
    for (std::size_t i = 0; i < outs.size(); ++i) {
      const auto owner = model.fm_owner(i);
      if (!owner) continue;
      for (double v : outs[i].data) {
        obs.fm_pos[*owner] = std::max(obs.fm_pos[*owner], v);
        obs.fm_abs[*owner] = std::max(obs.fm_abs[*owner], std::fabs(v));
      }
    }
  }
  return obs;
}

}  // namespace

std::vector<BftOrderEntry> default_bft_order(const NetworkModel& model,
                                             const QuantConfig& q,
                                             BftTarget target) {
  model.validate();
  q.validate_for(model);
  std::vector<BftOrderEntry> order;
  if (target == BftTarget::kWeights || target == BftTarget::kBoth) {
    const auto layers = tunable_layers(model, q, BftKnob::kWeightFl);
    if (layers.empty()) {
      throw std::domain_error("bft: no parameterized layers to tune");
    }
    append_passes(order, layers, BftKnob::kWeightFl);
  }
  if (target == BftTarget::kFeatureMaps || target == BftTarget::kBoth) {
    const auto layers = tunable_layers(model, q, BftKnob::kFmFl);
    if (layers.empty()) {
      throw std::domain_error(
          "bft: config has no quantized feature maps to tune");
    }
    append_passes(order, layers, BftKnob::kFmFl);
  }
  return order;
}

std::pair<QuantConfig, BftTrace> run_bft(const NetworkModel& model,
                                         const QuantConfig& q,
                                         std::span<const Tensor> eval_inputs,
                                         const BftConfig& cfg) {
  model.validate();
  q.validate_for(model);
  if (cfg.window < 1) {
    throw std::invalid_argument("bft: window must be at least 1");
  }
  if (eval_inputs.empty()) {
    throw std::invalid_argument("bft: evaluation set is empty");
  }

  std::vector<double> weights = cfg.metric_weights;
  std::vector<BftMetric> metrics = cfg.metrics;
  if (metrics.empty() && weights.empty()) weights = {1.0};
  if (!metrics.empty() && weights.empty()) {
    weights.assign(metrics.size(), 1.0);
  }
  const std::size_t n_metrics = metrics.empty() ? 1 : metrics.size();
  if (weights.size() != n_metrics) {
    throw std::invalid_argument("bft: metric_weights size does not match metrics");
  }
  double weight_sum = 0.0;
  for (double c : weights) {
    if (c < 0.0) throw std::invalid_argument("bft: metric weights must be non-negative");
    weight_sum += c;
  }
  if (weight_sum <= 0.0) {
    throw std::invalid_argument("bft: metric weights are all zero");
  }

  // Default objective: top-1 agreement against the floating pass. The float
  // argmaxes do not depend on the config, so compute them once.
  std::vector<std::size_t> ref_argmax;
  if (metrics.empty()) {
    ref_argmax.reserve(eval_inputs.size());
    for (const Tensor& input : eval_inputs) {
      const std::vector<Tensor> outs = forward_float(model, input);
      if (outs.back().data.size() < 2) {
        throw std::invalid_argument("bft: final output is not classifier-shaped");
      }
      ref_argmax.push_back(argmax(outs.back().data));
    }
  }

  const auto evaluate = [&](const QuantConfig& candidate) -> double {
    if (metrics.empty()) {
      const FixedForwardPlan plan = prepare_fixed(model, candidate);
      std::int64_t agree = 0;
      for (std::size_t k = 0; k < eval_inputs.size(); ++k) {
        const std::vector<Tensor> outs = forward_fixed(plan, eval_inputs[k]);
        if (argmax(outs.back().data) == ref_argmax[k]) ++agree;
      }
      return weights[0] * static_cast<double>(agree) /
             static_cast<double>(eval_inputs.size());
    }
    double p = 0.0;
    for (std::size_t n = 0; n < metrics.size(); ++n) {
      p += weights[n] * metrics[n](model, candidate, eval_inputs);
    }
    return p;
  };

  const std::vector<BftOrderEntry> order =
      cfg.order.empty() ? default_bft_order(model, q, cfg.target) : cfg.order;
  const ObservedMax obs = observe_activation_maxima(model, eval_inputs);

  QuantConfig current = q;
  BftTrace trace;
  trace.p_initial = evaluate(current);
  trace.p_final = trace.p_initial;

  for (const BftOrderEntry& entry : order) {
    if (entry.layer_index >= model.layers.size() ||
        !model.layers[entry.layer_index].is_parameterized()) {
      throw std::invalid_argument("bft: order entry is not a parameterized layer");
    }
    const LayerSpec& layer = model.layers[entry.layer_index];
    LayerQuantSpec* spec = current.find(layer.name);
    if (entry.knob == BftKnob::kFmFl && !spec->fm_enabled) {
      throw std::invalid_argument("bft: layer '" + layer.name +
                                  "' has no quantized feature map to tune");
    }

    BftStep step;
    step.layer_index = entry.layer_index;
    step.layer = layer.name;
    step.knob = entry.knob;
    step.direction = entry.direction;

    int* fl_slot;
    double observed;
    std::int64_t max_code;
    if (entry.knob == BftKnob::kWeightFl) {
      fl_slot = &spec->weight_fl;
      observed = 0.0;
      for (double w : layer.weights.data) observed = std::max(observed, std::fabs(w));
      max_code = FixedPointFormat{spec->weight_bw, 0, true}.max_code();
    } else {
      fl_slot = &spec->fm_fl;
      observed = spec->fm_signed ? obs.fm_abs[entry.layer_index]
                                 : obs.fm_pos[entry.layer_index];
      max_code = FixedPointFormat{spec->fm_bw, 0, spec->fm_signed}.max_code();
    }
    step.incumbent_fl = *fl_slot;

    std::vector<int> candidates;
    for (int fl = step.incumbent_fl - cfg.window; fl <= step.incumbent_fl + cfg.window;
         ++fl) {
      const double reach = static_cast<double>(max_code) * std::ldexp(1.0, -fl);
      if (fl != step.incumbent_fl && observed > 0.0 && reach < observed) {
        step.clamped.push_back(fl);
      } else {
        candidates.push_back(fl);
      }
    }

    bool have = false;
    for (int fl : candidates) {
      QuantConfig attempt = current;
      LayerQuantSpec* aspec = attempt.find(layer.name);
      if (entry.knob == BftKnob::kWeightFl) {
        aspec->weight_fl = fl;
      } else {
        aspec->fm_fl = fl;
      }
      double p;
      try {
        p = evaluate(attempt);
      } catch (const std::exception& e) {
        throw std::runtime_error("bft: evaluation failed at layer '" + layer.name +
                                 "' FL=" + std::to_string(fl) + ": " + e.what());
      }
      step.candidates.push_back({fl, p});
      const auto dist = [&](int f) { return std::abs(f - step.incumbent_fl); };
      const bool better =
          !have || p > step.chosen_p ||
          (p == step.chosen_p && (dist(fl) < dist(step.chosen_fl) ||
                                  (dist(fl) == dist(step.chosen_fl) &&
                                   fl > step.chosen_fl)));
      if (better) {
        step.chosen_fl = fl;
        step.chosen_p = p;
        have = true;
      }
    }

    *fl_slot = step.chosen_fl;
    trace.p_final = step.chosen_p;
    trace.steps.push_back(std::move(step));
  }
  return {std::move(current), std::move(trace)};
}

}  // namespace fpquant
