#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "fpquant/bft.hpp"
#include "fpquant/netsim.hpp"
#include "test_util.hpp"

using namespace fpquant;
using fpquant::testutil::tiny_config;
using fpquant::testutil::tiny_inputs;
using fpquant::testutil::tiny_net;

namespace {

// Re-derives the winner from a step's candidate list with the documented
// rule: max P, ties to the candidate nearest the incumbent, then larger FL.
void check_choice_rule(const BftStep& step) {
  REQUIRE_FALSE(step.candidates.empty());
  int best_fl = step.candidates[0].fl;
  double best_p = step.candidates[0].p_overall;
  const auto dist = [&](int f) { return std::abs(f - step.incumbent_fl); };
  for (const BftCandidate& c : step.candidates) {
    const bool better = c.p_overall > best_p ||
                        (c.p_overall == best_p &&
                         (dist(c.fl) < dist(best_fl) ||
                          (dist(c.fl) == dist(best_fl) && c.fl > best_fl)));
    if (better) {
      best_fl = c.fl;
      best_p = c.p_overall;
    }
  }
  CHECK(step.chosen_fl == best_fl);
  CHECK(step.chosen_p == best_p);
  bool incumbent_present = false;
  for (const BftCandidate& c : step.candidates) {
    if (c.fl == step.incumbent_fl) incumbent_present = true;
  }
  CHECK(incumbent_present);
}

// 1x1x1 input, one conv fanning out to two channels — a two-class net whose
// activations can be made as large as the input.
NetworkModel gain_net(double w0, double w1) {
  NetworkModel m;
  m.name = "gain";
  m.input_shape = {1, 1, 1};
  LayerSpec conv;
  conv.name = "g1";
  conv.kind = LayerKind::kConv;
  conv.in_channels = 1;
  conv.out_channels = 2;
  conv.kernel = 1;
  conv.weights = Tensor{{2, 1, 1, 1}, {w0, w1}};
  conv.bias = Tensor{{2}, {0.0, 0.0}};
  m.layers.push_back(conv);
  return m;
}

}  // namespace

TEST_SUITE("bft") {

TEST_CASE("default order: each knob backward then forward") {
  const NetworkModel m = tiny_net();

  const auto fm = default_bft_order(m, tiny_config(8, 8, true), BftTarget::kFeatureMaps);
  REQUIRE(fm.size() == 4);
  CHECK(fm[0].layer_index == std::size_t{2});
  CHECK(fm[1].layer_index == std::size_t{0});
  CHECK(fm[2].layer_index == std::size_t{0});
  CHECK(fm[3].layer_index == std::size_t{2});
  for (const auto& e : fm) CHECK(e.knob == BftKnob::kFmFl);
  CHECK(fm[0].direction == BftDirection::kBackward);
  CHECK(fm[1].direction == BftDirection::kBackward);
  CHECK(fm[2].direction == BftDirection::kForward);
  CHECK(fm[3].direction == BftDirection::kForward);

  const auto w = default_bft_order(m, tiny_config(8, 8, false), BftTarget::kWeights);
  REQUIRE(w.size() == 4);
  for (const auto& e : w) CHECK(e.knob == BftKnob::kWeightFl);
  CHECK(w[0].layer_index == std::size_t{2});
  CHECK(w[3].layer_index == std::size_t{2});

  const auto both = default_bft_order(m, tiny_config(8, 8, true), BftTarget::kBoth);
  REQUIRE(both.size() == 8);
  for (int i = 0; i < 4; ++i) CHECK(both[i].knob == BftKnob::kWeightFl);
  for (int i = 4; i < 8; ++i) CHECK(both[i].knob == BftKnob::kFmFl);
}

TEST_CASE("default order: nothing to tune") {
  NetworkModel relu_only;
  relu_only.name = "plain";
  relu_only.input_shape = {1, 2, 2};
  LayerSpec r;
  r.name = "r";
  r.kind = LayerKind::kRelu;
  relu_only.layers.push_back(r);
  QuantConfig empty;
  empty.scheme = "WQ";
  CHECK_THROWS_WITH_AS(default_bft_order(relu_only, empty, BftTarget::kWeights),
                       "bft: no parameterized layers to tune", std::domain_error);

  CHECK_THROWS_WITH_AS(
      default_bft_order(tiny_net(), tiny_config(8, 8, false), BftTarget::kFeatureMaps),
      "bft: config has no quantized feature maps to tune", std::domain_error);
}

TEST_CASE("run guards") {
  const NetworkModel m = tiny_net();
  const QuantConfig q = tiny_config(8, 8, true);
  const auto inputs = tiny_inputs(4);

  BftConfig zero_window;
  zero_window.window = 0;
  CHECK_THROWS_WITH_AS(run_bft(m, q, inputs, zero_window),
                       "bft: window must be at least 1", std::invalid_argument);

  CHECK_THROWS_WITH_AS(run_bft(m, q, std::vector<Tensor>{}, BftConfig{}),
                       "bft: evaluation set is empty", std::invalid_argument);

  BftConfig bad_weights;
  bad_weights.metric_weights = {1.0, 2.0};  // default metric is singular
  CHECK_THROWS_WITH_AS(run_bft(m, q, inputs, bad_weights),
                       doctest::Contains("does not match"), std::invalid_argument);

  BftConfig negative;
  negative.metric_weights = {-1.0};
  CHECK_THROWS_WITH_AS(run_bft(m, q, inputs, negative),
                       doctest::Contains("non-negative"), std::invalid_argument);

  BftConfig zeroed;
  zeroed.metrics = {[](const NetworkModel&, const QuantConfig&,
                       std::span<const Tensor>) { return 1.0; },
                    [](const NetworkModel&, const QuantConfig&,
                       std::span<const Tensor>) { return 0.0; }};
  zeroed.metric_weights = {0.0, 0.0};
  CHECK_THROWS_WITH_AS(run_bft(m, q, inputs, zeroed),
                       "bft: metric weights are all zero", std::invalid_argument);

  BftConfig fm_on_disabled;
  fm_on_disabled.order = {{0, BftKnob::kFmFl, BftDirection::kBackward}};
  CHECK_THROWS_WITH_AS(run_bft(m, tiny_config(8, 8, false), inputs, fm_on_disabled),
                       doctest::Contains("no quantized feature map to tune"),
                       std::invalid_argument);

  BftConfig on_relu;
  on_relu.order = {{1, BftKnob::kWeightFl, BftDirection::kBackward}};
  CHECK_THROWS_WITH_AS(run_bft(m, q, inputs, on_relu),
                       doctest::Contains("not a parameterized layer"),
                       std::invalid_argument);

  // The default objective needs a multi-class final output.
  NetworkModel one_class = gain_net(1.0, 0.0);
  one_class.layers[0].out_channels = 1;
  one_class.layers[0].weights = Tensor{{1, 1, 1, 1}, {1.0}};
  one_class.layers[0].bias = Tensor{{1}, {0.0}};
  QuantConfig oq;
  oq.scheme = "WQ";
  LayerQuantSpec spec;
  spec.weight_fl = 6;
  spec.bias_fl = 6;
  oq.layers.emplace_back("g1", spec);
  CHECK_THROWS_WITH_AS(
      run_bft(one_class, oq, std::vector<Tensor>{Tensor{{1, 1, 1}, {0.5}}}, BftConfig{}),
      doctest::Contains("classifier-shaped"), std::invalid_argument);
}

TEST_CASE("window candidates are clamped to the observed range") {
  // Activations reach 96; an 8-bit unsigned map at FL 2 only reaches 63.75,
  // so that window position must be discarded (and recorded).
  const NetworkModel m = gain_net(8.0, 4.0);
  QuantConfig q;
  q.scheme = "WQ_FQ";
  LayerQuantSpec spec;
  spec.weight_bw = 8;
  spec.weight_fl = 3;
  spec.bias_bw = 8;
  spec.bias_fl = 3;
  spec.fm_enabled = true;
  spec.fm_bw = 8;
  spec.fm_fl = 0;
  spec.fm_signed = false;
  q.layers.emplace_back("g1", spec);

  const std::vector<Tensor> inputs{Tensor{{1, 1, 1}, {12.0}},
                                   Tensor{{1, 1, 1}, {3.0}}};
  BftConfig cfg;
  cfg.window = 2;
  cfg.target = BftTarget::kFeatureMaps;
  const auto [tuned, trace] = run_bft(m, q, inputs, cfg);

  REQUIRE(trace.steps.size() == 2);
  const BftStep& first = trace.steps[0];
  CHECK(first.layer == "g1");
  CHECK(first.incumbent_fl == 0);
  CHECK(first.clamped == std::vector<int>{2});
  REQUIRE(first.candidates.size() == 4);
  CHECK(first.candidates[0].fl == -2);
  CHECK(first.candidates[3].fl == 1);
  // Every surviving width preserves both argmaxes, so the tie rule keeps the
  // incumbent.
  CHECK(first.chosen_fl == 0);
  CHECK(first.chosen_p == 1.0);
  CHECK(tuned.find("g1")->fm_fl == 0);
  for (const BftStep& s : trace.steps) check_choice_rule(s);
}

TEST_CASE("coarse config improves and the objective never decreases") {
  const NetworkModel m = tiny_net();
  QuantConfig q = tiny_config(4, 4, true);
  q.find("c1")->fm_fl = 0;  // deliberately bad starting point
  const auto inputs = tiny_inputs(24);

  BftConfig cfg;
  cfg.window = 2;
  cfg.target = BftTarget::kBoth;
  const auto [tuned, trace] = run_bft(m, q, inputs, cfg);

  REQUIRE(trace.steps.size() == 8);
  double last = trace.p_initial;
  for (const BftStep& s : trace.steps) {
    CHECK(s.chosen_p >= last);
    last = s.chosen_p;
    check_choice_rule(s);
  }
  CHECK(trace.p_final == last);
  CHECK(trace.p_final >= trace.p_initial);

  // The returned config carries each knob's final committed value.
  CHECK(tuned.find("c1")->fm_fl == trace.steps[6].chosen_fl);
  CHECK(tuned.find("f1")->fm_fl == trace.steps[7].chosen_fl);
  CHECK(tuned.find("f1")->weight_fl == trace.steps[3].chosen_fl);

  // Determinism: identical runs produce identical traces and configs.
  const auto [tuned2, trace2] = run_bft(m, q, inputs, cfg);
  CHECK(tuned2 == tuned);
  CHECK(trace2.p_initial == trace.p_initial);
  CHECK(trace2.p_final == trace.p_final);
  REQUIRE(trace2.steps.size() == trace.steps.size());
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    CHECK(trace2.steps[i].chosen_fl == trace.steps[i].chosen_fl);
    CHECK(trace2.steps[i].chosen_p == trace.steps[i].chosen_p);
    CHECK(trace2.steps[i].clamped == trace.steps[i].clamped);
    REQUIRE(trace2.steps[i].candidates.size() == trace.steps[i].candidates.size());
    for (std::size_t c = 0; c < trace.steps[i].candidates.size(); ++c) {
      CHECK(trace2.steps[i].candidates[c].p_overall ==
            trace.steps[i].candidates[c].p_overall);
    }
  }
}

TEST_CASE("weighted custom objective") {
  const NetworkModel m = tiny_net();
  QuantConfig q = tiny_config(8, 8, true);
  q.find("c1")->fm_fl = 2;
  const auto inputs = tiny_inputs(6);

  // Metric 1 peaks when c1's feature-map FL is 3; metric 2 is constant.
  BftConfig cfg;
  cfg.window = 1;
  cfg.order = {{0, BftKnob::kFmFl, BftDirection::kBackward}};
  cfg.metrics = {
      [](const NetworkModel&, const QuantConfig& c, std::span<const Tensor>) {
        return 1.0 / (1.0 + std::abs(c.find("c1")->fm_fl - 3));
      },
      [](const NetworkModel&, const QuantConfig&, std::span<const Tensor>) {
        return 0.5;
      }};
  cfg.metric_weights = {2.0, 4.0};

  const auto [tuned, trace] = run_bft(m, q, inputs, cfg);
  CHECK(trace.p_initial == doctest::Approx(2.0 * 0.5 + 4.0 * 0.5).epsilon(1e-15));
  REQUIRE(trace.steps.size() == 1);
  CHECK(trace.steps[0].chosen_fl == 3);
  CHECK(trace.steps[0].chosen_p == doctest::Approx(2.0 * 1.0 + 4.0 * 0.5).epsilon(1e-15));
  CHECK(tuned.find("c1")->fm_fl == 3);
  // Candidate scores are the weighted sums of the component metrics.
  for (const BftCandidate& c : trace.steps[0].candidates) {
    const double expect = 2.0 * (1.0 / (1.0 + std::abs(c.fl - 3))) + 4.0 * 0.5;
    CHECK(c.p_overall == doctest::Approx(expect).epsilon(1e-15));
  }
}

}  // TEST_SUITE
