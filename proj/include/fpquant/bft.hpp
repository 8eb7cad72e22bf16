#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fpquant/netsim.hpp"

namespace fpquant {

enum class BftTarget { kWeights, kFeatureMaps, kBoth };
enum class BftKnob { kWeightFl, kFmFl };
enum class BftDirection { kBackward, kForward };

struct BftOrderEntry {
  std::size_t layer_index = 0;
  BftKnob knob = BftKnob::kFmFl;
  BftDirection direction = BftDirection::kBackward;
};

using BftMetric = std::function<double(
    const NetworkModel&, const QuantConfig&, std::span<const Tensor>)>;

struct BftConfig {
  int window = 1;  // candidates span [incumbent - window, incumbent + window]
  BftTarget target = BftTarget::kFeatureMaps;
  // Empty → default order for the target: each tunable knob visited
  // output-to-input, then input-to-output.
  std::vector<BftOrderEntry> order;
  // Weighted performance objective: P_overall = sum c_n * P_n. Empty metrics
  // → the single default metric, top-1 agreement against the floating pass,
  // with weight 1.
  std::vector<double> metric_weights;
  std::vector<BftMetric> metrics;
};

struct BftCandidate {
  int fl = 0;
  double p_overall = 0.0;
};

struct BftStep {
  std::size_t layer_index = 0;
  std::string layer;
  BftKnob knob = BftKnob::kFmFl;
  BftDirection direction = BftDirection::kBackward;
  int incumbent_fl = 0;
  std::vector<BftCandidate> candidates;
  // Window FLs dropped because their representable range falls below the
  // layer's observed maximum (the incumbent is never dropped).
  std::vector<int> clamped;
  int chosen_fl = 0;
  double chosen_p = 0.0;
};

struct BftTrace {
  double p_initial = 0.0;
  double p_final = 0.0;
  std::vector<BftStep> steps;
};

// Tunable knobs for the target, each twice: backward (output to input), then
// forward. Weight knobs cover every parameterized layer; feature-map knobs
// cover layers with fm_enabled. Target both runs all weight passes first.
// Throws std::domain_error when the target has nothing to tune.
std::vector<BftOrderEntry> default_bft_order(const NetworkModel& model,
                                             const QuantConfig& q,
                                             BftTarget target);

// Coordinate ascent on per-layer fractional lengths: for each order entry,
// scores every candidate FL in the (clamped) window with the full objective
// and commits the argmax before moving on. Ties prefer the candidate closest
// to the incumbent, then the larger FL. The incumbent is always a candidate,
// so the objective never decreases across the run.
std::pair<QuantConfig, BftTrace> run_bft(const NetworkModel& model,
                                         const QuantConfig& q,
                                         std::span<const Tensor> eval_inputs,
                                         const BftConfig& cfg);

}  // namespace fpquant
