#include "fpquant/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "fpquant/bft.hpp"
#include "fpquant/fixture.hpp"
#include "fpquant/io.hpp"
#include "fpquant/netsim.hpp"

namespace fpquant {

const char* const kLevelsConventionNote =
    "one-sided cells = 2^bw (2^(bw-1) per side when signed); closed-form designs "
    "use the doubled symmetric level count";

namespace {

// Mean squared error and SQNR of quantizing the samples with fmt. SQNR is
// absent when the signal power is zero.
struct EmpiricalFit {
  double mean_sse = 0.0;
  std::optional<double> sqnr;
};

EmpiricalFit measure_quantization(std::span<const double> xs,
                                  const FixedPointFormat& fmt) {
  QuantizationError err;
  for (double x : xs) err.add(x, quantize(x, fmt));
  EmpiricalFit out;
  out.mean_sse = err.sum_squared_error / static_cast<double>(err.sample_count);
  if (err.sum_signal_power > 0.0) out.sqnr = sqnr_db(err);
  return out;
}

bool all_zero(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double v) { return v == 0.0; });
}

// Weight-part / feature-map-part scheme tag surgery: "WQ_FQ" etc.
std::string scheme_weight_part(const std::string& scheme) {
  const std::size_t us = scheme.find('_');
  return us == std::string::npos ? scheme : scheme.substr(0, us);
}

std::string upgraded_scheme(const std::string& scheme, bool tune_weights,
                            bool tune_fm) {
  if (scheme == kSchemeRistretto) return scheme;
  std::string w = scheme_weight_part(scheme);
  const std::size_t us = scheme.find('_');
  std::string f = us == std::string::npos ? "" : scheme.substr(us + 1);
  if (tune_weights && w == "WQ") w = "WQ+";
  if (tune_fm && f == "FQ") f = "FQ+";
  return f.empty() ? w : w + "_" + f;
}

struct FmDesign {
  int bw = 0;
  int fl = 0;
  bool is_signed = false;
  std::optional<double> predicted;
  std::optional<double> empirical;
  std::optional<double> sqnr;
};

FmDesign design_fm_for_site(const std::string& site_layer, const LayerCalibration& cal,
                            std::span<const double> samples, bool have_samples,
                            bool ristretto, int bw, FlSearchMode mode, int k_w) {
  if (cal.degenerate) {
    throw std::domain_error("layer '" + site_layer +
                            "' calibrated to all zeros; cannot design a feature-map "
                            "format for it");
  }
  FmDesign out;
  out.bw = bw;
  const bool double_sided = cal.stats.count_negative > 0;
  out.is_signed = double_sided;
  if (ristretto) {
    out.fl = double_sided
                 ? ristretto_fl(cal.stats.max_abs, bw, TensorKind::kWeight)
                 : ristretto_fl(cal.stats.max_val, bw, TensorKind::kFeatureMap);
  } else {
    const FlSearchConfig cfg{bw, k_w, mode};
    LayerQuantResult r;
    if (double_sided) {
      if (!have_samples) {
        throw std::invalid_argument(
            "layer '" + site_layer +
            "' is double-sided; per-side moments need calibration samples (--calib)");
      }
      r = quantize_fm_double_sided(samples, cal.stats, cfg);
    } else {
      if (mode == FlSearchMode::kDefault && !have_samples) {
        throw std::invalid_argument(
            "default mode scores candidates on samples; pass --calib or use "
            "--mode fast");
      }
      r = quantize_fm_single_sided(samples, cal.stats, cfg);
    }
    out.fl = r.fractional_length;
    // Closed-form distortion at the chosen FL for the report. The fast-mode
    // run walks the same candidate set, so look the value up there.
    const FlSearchConfig fast_cfg{bw, k_w, FlSearchMode::kFast};
    const LayerQuantResult fast =
        double_sided ? quantize_fm_double_sided(samples, cal.stats, fast_cfg)
                     : quantize_fm_single_sided(samples, cal.stats, fast_cfg);
    for (const auto& [fl, score] : fast.candidates_evaluated) {
      if (fl == out.fl) {
        out.predicted = score;
        break;
      }
    }
  }
  if (have_samples) {
    const EmpiricalFit fit =
        measure_quantization(samples, FixedPointFormat{bw, out.fl, out.is_signed});
    out.empirical = fit.mean_sse;
    out.sqnr = fit.sqnr;
  }
  return out;
}

std::string dataset_descriptor(const std::string& path, std::size_t count) {
  return std::filesystem::path(path).filename().string() + " (" +
         std::to_string(count) + " inputs)";
}

const LayerCalibration& stats_entry(const StatsFile& stats, const std::string& layer,
                                    const std::string& stats_path) {
  const LayerCalibration* cal = stats.find(layer);
  if (!cal) {
    throw IoError(stats_path + ": no statistics entry for layer '" + layer + "'");
  }
  return *cal;
}

std::string fl_to_string(int fl) { return std::to_string(fl); }

}  // namespace

void cmd_stats(const StatsOptions& opts) {
  const NetworkModel model = load_model(opts.model_path);
  const std::vector<Tensor> calib = load_dataset(opts.calib_path);
  const std::vector<LayerCalibration> layers =
      capture_calibration(model, calib, /*lenient=*/true);
  StatsFile out;
  out.model = model.name;
  out.inputs = static_cast<std::int64_t>(calib.size());
  out.layers = layers;
  save_stats(out, opts.out_path);
  for (const LayerCalibration& c : layers) {
    std::printf("%-10s total=%lld zeros=%lld neg=%lld mean=%.6g var=%.6g max=%.6g%s\n",
                c.layer.c_str(), static_cast<long long>(c.stats.count_total),
                static_cast<long long>(c.stats.count_zero),
                static_cast<long long>(c.stats.count_negative), c.stats.mean_excl_zero,
                c.stats.var_excl_zero, c.stats.max_abs,
                c.degenerate ? "  [degenerate]" : "");
  }
  std::printf("stats written to %s\n", opts.out_path.c_str());
}

void cmd_quantize(const QuantizeOptions& opts) {
  if (opts.scheme != "wq" && opts.scheme != "wq-fq" && opts.scheme != "ristretto") {
    throw std::invalid_argument("unknown scheme '" + opts.scheme + "'");
  }
  const bool ristretto = opts.scheme == "ristretto";
  const bool fm_on = opts.scheme != "wq";
  const NetworkModel model = load_model(opts.model_path);
  const StatsFile stats = load_stats(opts.stats_path);
  const int bias_bw = opts.bw_bias < 0 ? opts.bw_weights : opts.bw_bias;

  std::optional<QuantConfig> base;
  if (!opts.base_config_path.empty()) {
    base = load_quant_config(opts.base_config_path);
  }
  for (const std::string& name : opts.fm_promote) {
    const auto idx = model.layer_index(name);
    if (!idx || !model.layers[*idx].is_parameterized()) {
      throw std::invalid_argument("--fm-promote: unknown parameterized layer '" +
                                  name + "'");
    }
  }

  // Per-design-site calibration samples, gathered in one floating pass.
  const bool have_samples = !opts.calib_path.empty();
  std::map<std::size_t, std::vector<double>> site_samples;
  std::string calib_desc = "none";
  if (have_samples) {
    const std::vector<Tensor> calib = load_dataset(opts.calib_path);
    calib_desc = dataset_descriptor(opts.calib_path, calib.size());
    std::set<std::size_t> sites;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
      if (model.layers[i].is_parameterized()) sites.insert(model.design_site(i));
    }
    for (const Tensor& input : calib) {
      const std::vector<Tensor> outs = forward_float(model, input);
      for (std::size_t site : sites) {
        auto& bucket = site_samples[site];
        bucket.insert(bucket.end(), outs[site].data.begin(), outs[site].data.end());
      }
    }
  }

  QuantConfig config;
  if (opts.scheme == "wq") {
    config.scheme = kSchemeWq;
  } else if (ristretto) {
    config.scheme = kSchemeRistretto;
  } else {
    config.scheme =
        (base ? scheme_weight_part(base->scheme) : std::string(kSchemeWq)) + "_FQ";
  }

  QuantReport report;
  report.model = model.name;
  report.scheme = config.scheme;
  report.evaluation_set = calib_desc;
  report.input_quantized_with_first_layer_fm = fm_on;
  report.levels_convention = kLevelsConventionNote;

  int n_param = 0;
  int promoted_w = 0;
  int promoted_fm = 0;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    if (!l.is_parameterized()) continue;
    ++n_param;
    LayerQuantSpec s;
    LayerReport lr;
    lr.layer = l.name;
    lr.scheme = config.scheme;
    bool wprom = false;
    bool fprom = false;

    const LayerQuantSpec* b = base ? base->find(l.name) : nullptr;
    if (b) {
      s.weight_bw = b->weight_bw;
      s.weight_fl = b->weight_fl;
      s.bias_bw = b->bias_bw;
      s.bias_fl = b->bias_fl;
    } else {
      const auto design_weight = [&](std::span<const double> data, int bw) {
        if (ristretto) {
          double mx = 0.0;
          for (double v : data) mx = std::max(mx, std::fabs(v));
          return ristretto_fl(mx, bw, TensorKind::kWeight);
        }
        return quantize_weights_layer(data, {bw, opts.k_w, FlSearchMode::kDefault})
            .fractional_length;
      };
      s.weight_bw = opts.bw_weights;
      s.weight_fl = design_weight(l.weights.data, s.weight_bw);
      if (opts.sqnr_floor_weights) {
        const EmpiricalFit fit = measure_quantization(
            l.weights.data, FixedPointFormat{s.weight_bw, s.weight_fl, true});
        if (fit.sqnr && *fit.sqnr < *opts.sqnr_floor_weights &&
            opts.fallback_bw_weights != s.weight_bw) {
          s.weight_bw = opts.fallback_bw_weights;
          s.weight_fl = design_weight(l.weights.data, s.weight_bw);
          wprom = true;
        }
      }
      s.bias_bw = bias_bw;
      if (all_zero(l.bias.data)) {
        // A zero bias is exactly representable at any FL; pick the finest
        // in-range one as a convention.
        s.bias_fl = s.bias_bw - 1;
      } else {
        s.bias_fl = design_weight(l.bias.data, s.bias_bw);
      }
    }
    lr.weight_bw = s.weight_bw;
    lr.weight_fl = s.weight_fl;
    lr.weight_sqnr_db =
        measure_quantization(l.weights.data,
                             FixedPointFormat{s.weight_bw, s.weight_fl, true})
            .sqnr.value_or(0.0);
    lr.bias_bw = s.bias_bw;
    lr.bias_fl = s.bias_fl;
    if (!all_zero(l.bias.data)) {
      lr.bias_sqnr_db =
          measure_quantization(l.bias.data,
                               FixedPointFormat{s.bias_bw, s.bias_fl, true})
              .sqnr;
    }

    if (fm_on) {
      const std::size_t site = model.design_site(i);
      const std::string& site_name = model.layers[site].name;
      const LayerCalibration& cal = stats_entry(stats, site_name, opts.stats_path);
      const std::vector<double> no_samples;
      const std::vector<double>& samples =
          have_samples ? site_samples[site] : no_samples;

      const bool forced =
          std::find(opts.fm_promote.begin(), opts.fm_promote.end(), l.name) !=
          opts.fm_promote.end();
      int fm_bw = forced ? opts.fallback_bw_fm : opts.bw_fm;
      FmDesign d = design_fm_for_site(site_name, cal, samples, have_samples,
                                      ristretto, fm_bw, opts.mode, opts.k_w);
      if (opts.sqnr_floor_fm) {
        if (!d.sqnr) {
          throw std::invalid_argument(
              "--sqnr-floor-fm needs empirical SQNR; run default mode with --calib");
        }
        if (*d.sqnr < *opts.sqnr_floor_fm && opts.fallback_bw_fm != fm_bw) {
          fm_bw = opts.fallback_bw_fm;
          d = design_fm_for_site(site_name, cal, samples, have_samples, ristretto,
                                 fm_bw, opts.mode, opts.k_w);
          fprom = true;
        }
      }
      if (forced) fprom = true;
      s.fm_enabled = true;
      s.fm_bw = fm_bw;
      s.fm_fl = d.fl;
      s.fm_signed = d.is_signed;
      FmReport fr;
      fr.bw = fm_bw;
      fr.fl = d.fl;
      fr.is_signed = d.is_signed;
      fr.sqnr_db = d.sqnr;
      fr.predicted_distortion = d.predicted;
      fr.empirical_distortion = d.empirical;
      lr.fm = fr;
    }

    if (wprom || fprom) lr.promoted = true;
    promoted_w += wprom ? 1 : 0;
    promoted_fm += fprom ? 1 : 0;
    config.layers.emplace_back(l.name, s);
    report.layers.push_back(std::move(lr));
  }

  if (opts.sqnr_floor_weights) {
    report.promoted_weight_ratio =
        static_cast<double>(promoted_w) / static_cast<double>(n_param);
  }
  if (opts.sqnr_floor_fm || !opts.fm_promote.empty()) {
    report.promoted_fm_ratio =
        static_cast<double>(promoted_fm) / static_cast<double>(n_param);
  }

  config.validate_for(model);
  save_quant_config(config, opts.out_config_path);
  save_report(report, opts.out_report_path);

  for (const LayerReport& lr : report.layers) {
    std::string fm_desc = "float";
    if (lr.fm) {
      fm_desc = "bw" + std::to_string(lr.fm->bw) + "/fl" + fl_to_string(lr.fm->fl) +
                (lr.fm->is_signed ? " signed" : " unsigned");
    }
    std::printf("%-10s w: bw%d/fl%-3d sqnr=%-8.4g fm: %s\n", lr.layer.c_str(),
                lr.weight_bw, lr.weight_fl, lr.weight_sqnr_db, fm_desc.c_str());
  }
  std::printf("config written to %s, report to %s\n", opts.out_config_path.c_str(),
              opts.out_report_path.c_str());
}

void cmd_bft(const BftOptions& opts) {
  const NetworkModel model = load_model(opts.model_path);
  const QuantConfig config = load_quant_config(opts.config_path);
  const std::vector<Tensor> eval = load_dataset(opts.eval_path);
  BftConfig cfg;
  cfg.window = opts.window;
  if (opts.target == "weights") {
    cfg.target = BftTarget::kWeights;
  } else if (opts.target == "fm") {
    cfg.target = BftTarget::kFeatureMaps;
  } else if (opts.target == "both") {
    cfg.target = BftTarget::kBoth;
  } else {
    throw std::invalid_argument("unknown bft target '" + opts.target + "'");
  }
  auto [tuned, trace] = run_bft(model, config, eval, cfg);
  tuned.scheme = upgraded_scheme(config.scheme,
                                 cfg.target != BftTarget::kFeatureMaps,
                                 cfg.target != BftTarget::kWeights);
  save_quant_config(tuned, opts.out_config_path);
  save_trace(trace, model.name, opts.target, opts.window, opts.out_trace_path);
  int changes = 0;
  for (const BftStep& s : trace.steps) {
    changes += s.chosen_fl != s.incumbent_fl ? 1 : 0;
  }
  std::printf("bft %s: P %.6g -> %.6g over %zu steps (%d FL changes)\n",
              opts.target.c_str(), trace.p_initial, trace.p_final,
              trace.steps.size(), changes);
  std::printf("config written to %s, trace to %s\n", opts.out_config_path.c_str(),
              opts.out_trace_path.c_str());
}

void cmd_evaluate(const EvaluateOptions& opts) {
  const NetworkModel model = load_model(opts.model_path);
  const QuantConfig config = load_quant_config(opts.config_path);
  const std::vector<Tensor> eval = load_dataset(opts.eval_path);
  config.validate_for(model);
  const FixedForwardPlan plan = prepare_fixed(model, config);

  std::map<std::size_t, QuantizationError> site_err;  // param layer -> error
  std::int64_t agree = 0;
  for (const Tensor& input : eval) {
    const std::vector<Tensor> ffloat = forward_float(model, input);
    const std::vector<Tensor> ffix = forward_fixed(plan, input);
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
      if (!model.layers[i].is_parameterized()) continue;
      const std::size_t site = model.design_site(i);
      QuantizationError& err = site_err[i];
      const std::vector<double>& a = ffloat[site].data;
      const std::vector<double>& b = ffix[site].data;
      for (std::size_t k = 0; k < a.size(); ++k) err.add(a[k], b[k]);
    }
    if (ffloat.back().data.size() < 2) {
      throw std::invalid_argument("evaluate: final output is not classifier-shaped");
    }
    if (argmax(ffloat.back().data) == argmax(ffix.back().data)) ++agree;
  }
  const double agreement =
      static_cast<double>(agree) / static_cast<double>(eval.size());

  QuantReport report;
  report.model = model.name;
  report.scheme = config.scheme;
  report.evaluation_set = dataset_descriptor(opts.eval_path, eval.size());
  report.input_quantized_with_first_layer_fm = plan.input_format.has_value();
  report.levels_convention = kLevelsConventionNote;
  report.top1_agreement = agreement;

  std::printf("%-10s %-9s %-12s %-12s %-14s %s\n", "layer", "scheme", "weights",
              "bias", "feature-map", "activation sqnr");
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    if (!l.is_parameterized()) continue;
    const LayerQuantSpec* s = config.find(l.name);
    LayerReport lr;
    lr.layer = l.name;
    lr.scheme = config.scheme;
    lr.weight_bw = s->weight_bw;
    lr.weight_fl = s->weight_fl;
    lr.weight_sqnr_db =
        measure_quantization(l.weights.data,
                             FixedPointFormat{s->weight_bw, s->weight_fl, true})
            .sqnr.value_or(0.0);
    lr.bias_bw = s->bias_bw;
    lr.bias_fl = s->bias_fl;
    if (!all_zero(l.bias.data)) {
      lr.bias_sqnr_db =
          measure_quantization(l.bias.data,
                               FixedPointFormat{s->bias_bw, s->bias_fl, true})
              .sqnr;
    }
    std::string fm_text = "float";
    if (s->fm_enabled) {
      FmReport fr;
      fr.bw = s->fm_bw;
      fr.fl = s->fm_fl;
      fr.is_signed = s->fm_signed;
      const QuantizationError& err = site_err[i];
      fr.empirical_distortion =
          err.sum_squared_error / static_cast<double>(err.sample_count);
      if (err.sum_signal_power > 0.0) fr.sqnr_db = sqnr_db(err);
      lr.fm = fr;
      char buf[64];
      std::snprintf(buf, sizeof(buf), "bw%d/fl%d %s", s->fm_bw, s->fm_fl,
                    s->fm_signed ? "s" : "u");
      fm_text = buf;
    }
    char wbuf[32];
    char bbuf[32];
    std::snprintf(wbuf, sizeof(wbuf), "bw%d/fl%d", s->weight_bw, s->weight_fl);
    std::snprintf(bbuf, sizeof(bbuf), "bw%d/fl%d", s->bias_bw, s->bias_fl);
    std::string sqnr_text = "-";
    if (lr.fm && lr.fm->sqnr_db) {
      char sbuf[32];
      if (std::isinf(*lr.fm->sqnr_db)) {
        std::snprintf(sbuf, sizeof(sbuf), "inf");
      } else {
        std::snprintf(sbuf, sizeof(sbuf), "%.2f dB", *lr.fm->sqnr_db);
      }
      sqnr_text = sbuf;
    }
    std::printf("%-10s %-9s %-12s %-12s %-14s %s\n", lr.layer.c_str(),
                lr.scheme.c_str(), wbuf, bbuf, fm_text.c_str(), sqnr_text.c_str());
    report.layers.push_back(std::move(lr));
  }
  std::printf("top-1 agreement vs floating reference: %.4f\n", agreement);
  save_report(report, opts.out_report_path);
  std::printf("report written to %s\n", opts.out_report_path.c_str());
}

void cmd_gen_fixture(const GenFixtureOptions& opts) {
  const std::filesystem::path dir(opts.out_dir);
  std::filesystem::create_directories(dir);
  const NetworkModel model = make_reference_model(opts.seed);
  save_model(model, dir / "model.json");
  const std::vector<Tensor> calib =
      make_reference_inputs(opts.seed + 1, opts.calib_count, model.input_shape);
  save_dataset(calib, "calib-seed" + std::to_string(opts.seed), dir / "calib.json");
  const std::vector<Tensor> eval =
      make_reference_inputs(opts.seed + 2, opts.eval_count, model.input_shape);
  save_dataset(eval, "eval-seed" + std::to_string(opts.seed), dir / "eval.json");
  std::printf("fixture seed %llu written to %s (model.json, calib.json x%d, "
              "eval.json x%d)\n",
              static_cast<unsigned long long>(opts.seed), dir.string().c_str(),
              opts.calib_count, opts.eval_count);
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"post-training fixed-point quantization toolkit"};
  app.require_subcommand(1);

  StatsOptions stats_opts;
  CLI::App* stats = app.add_subcommand("stats", "collect per-layer calibration statistics");
  stats->add_option("--model", stats_opts.model_path, "model manifest")->required();
  stats->add_option("--calib", stats_opts.calib_path, "calibration dataset manifest")->required();
  stats->add_option("--out", stats_opts.out_path, "output stats file")->required();

  QuantizeOptions quant_opts;
  std::string quant_mode = "default";
  CLI::App* quantize = app.add_subcommand("quantize", "design per-layer fixed-point formats");
  quantize->add_option("--model", quant_opts.model_path, "model manifest")->required();
  quantize->add_option("--stats", quant_opts.stats_path, "calibration stats file")->required();
  quantize->add_option("--calib", quant_opts.calib_path,
                       "calibration dataset (required for default-mode feature maps)");
  quantize->add_option("--scheme", quant_opts.scheme, "wq | wq-fq | ristretto")
      ->check(CLI::IsMember({"wq", "wq-fq", "ristretto"}));
  quantize->add_option("--bw-weights", quant_opts.bw_weights, "weight bit-width")
      ->check(CLI::Range(2, 32));
  quantize->add_option("--bw-fm", quant_opts.bw_fm, "feature-map bit-width")
      ->check(CLI::Range(2, 32));
  quantize->add_option("--bw-bias", quant_opts.bw_bias, "bias bit-width (default: weights)")
      ->check(CLI::Range(2, 32));
  quantize->add_option("--kw", quant_opts.k_w, "weight FL candidate count")
      ->check(CLI::Range(1, 16));
  quantize->add_option("--mode", quant_mode, "candidate scoring: default | fast")
      ->check(CLI::IsMember({"default", "fast"}));
  quantize->add_option("--sqnr-floor-weights", quant_opts.sqnr_floor_weights,
                       "promote weight tensors below this SQNR (dB)");
  quantize->add_option("--sqnr-floor-fm", quant_opts.sqnr_floor_fm,
                       "promote feature maps below this SQNR (dB)");
  quantize->add_option("--fallback-bw-weights", quant_opts.fallback_bw_weights,
                       "bit-width promoted weights get")
      ->check(CLI::Range(2, 32));
  quantize->add_option("--fallback-bw-fm", quant_opts.fallback_bw_fm,
                       "bit-width promoted feature maps get")
      ->check(CLI::Range(2, 32));
  quantize->add_option("--fm-promote", quant_opts.fm_promote,
                       "layers whose feature maps go straight to the fallback width")
      ->delimiter(',');
  quantize->add_option("--base-config", quant_opts.base_config_path,
                       "reuse weight/bias formats from this config");
  quantize->add_option("--out-config", quant_opts.out_config_path, "output config")->required();
  quantize->add_option("--out-report", quant_opts.out_report_path, "output report")->required();

  BftOptions bft_opts;
  CLI::App* bft = app.add_subcommand("bft", "backward-forward tuning of fractional lengths");
  bft->add_option("--model", bft_opts.model_path, "model manifest")->required();
  bft->add_option("--config", bft_opts.config_path, "starting config")->required();
  bft->add_option("--eval", bft_opts.eval_path, "evaluation dataset manifest")->required();
  bft->add_option("--window", bft_opts.window, "candidate window half-width")
      ->check(CLI::Range(1, 64));
  bft->add_option("--target", bft_opts.target, "weights | fm | both")
      ->check(CLI::IsMember({"weights", "fm", "both"}));
  bft->add_option("--out-config", bft_opts.out_config_path, "tuned config")->required();
  bft->add_option("--out-trace", bft_opts.out_trace_path, "tuning trace")->required();

  EvaluateOptions eval_opts;
  CLI::App* evaluate = app.add_subcommand("evaluate", "measure a config against the floating reference");
  evaluate->add_option("--model", eval_opts.model_path, "model manifest")->required();
  evaluate->add_option("--config", eval_opts.config_path, "quantization config")->required();
  evaluate->add_option("--eval", eval_opts.eval_path, "evaluation dataset manifest")->required();
  evaluate->add_option("--out", eval_opts.out_report_path, "output report")->required();

  GenFixtureOptions gen_opts;
  CLI::App* gen = app.add_subcommand("gen-fixture", "emit the seeded reference network and datasets");
  gen->add_option("--out", gen_opts.out_dir, "output directory")->required();
  gen->add_option("--seed", gen_opts.seed, "fixture seed");
  gen->add_option("--calib-count", gen_opts.calib_count, "calibration inputs")
      ->check(CLI::Range(1, 1000000));
  gen->add_option("--eval-count", gen_opts.eval_count, "evaluation inputs")
      ->check(CLI::Range(1, 1000000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (stats->parsed()) {
      cmd_stats(stats_opts);
    } else if (quantize->parsed()) {
      quant_opts.mode =
          quant_mode == "fast" ? FlSearchMode::kFast : FlSearchMode::kDefault;
      cmd_quantize(quant_opts);
    } else if (bft->parsed()) {
      cmd_bft(bft_opts);
    } else if (evaluate->parsed()) {
      cmd_evaluate(eval_opts);
    } else if (gen->parsed()) {
      cmd_gen_fixture(gen_opts);
    }
    return 0;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace fpquant
