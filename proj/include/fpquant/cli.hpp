#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fpquant/quantizers.hpp"

namespace fpquant {

// Scheme tags carried by configs and reports. The + suffix marks a tuned
// fractional-length assignment; the weight part and feature-map part upgrade
// independently.
inline constexpr const char* kSchemeWq = "WQ";
inline constexpr const char* kSchemeWqFq = "WQ_FQ";
inline constexpr const char* kSchemeRistretto = "ristretto";

// Note recorded in every report so the level-count convention is auditable:
// a feature-map of bit-width b uses 2^b one-sided cells, and the closed-form
// design doubles that for its symmetric level count.
extern const char* const kLevelsConventionNote;

struct StatsOptions {
  std::string model_path;
  std::string calib_path;
  std::string out_path;
};

// Calibrates on the input set and writes per-layer statistics. Degenerate
// (all-zero) layers are flagged in the file, not fatal.
void cmd_stats(const StatsOptions& opts);

struct QuantizeOptions {
  std::string model_path;
  std::string stats_path;
  std::string calib_path;  // empty: no calibration samples available
  std::string scheme = "wq";  // wq | wq-fq | ristretto
  int bw_weights = 8;
  int bw_fm = 8;
  int bw_bias = -1;  // -1: follow bw_weights
  int k_w = 2;
  FlSearchMode mode = FlSearchMode::kDefault;
  std::optional<double> sqnr_floor_weights;
  std::optional<double> sqnr_floor_fm;
  int fallback_bw_weights = 8;
  int fallback_bw_fm = 8;
  std::vector<std::string> fm_promote;  // layers forced to the fallback fm width
  std::string base_config_path;  // reuse weight formats from an earlier config
  std::string out_config_path;
  std::string out_report_path;
};

void cmd_quantize(const QuantizeOptions& opts);

struct BftOptions {
  std::string model_path;
  std::string config_path;
  std::string eval_path;
  int window = 1;
  std::string target = "fm";  // weights | fm | both
  std::string out_config_path;
  std::string out_trace_path;
};

void cmd_bft(const BftOptions& opts);

struct EvaluateOptions {
  std::string model_path;
  std::string config_path;
  std::string eval_path;
  std::string out_report_path;
};

void cmd_evaluate(const EvaluateOptions& opts);

struct GenFixtureOptions {
  std::string out_dir;
  std::uint64_t seed = 0;
  int calib_count = 256;
  int eval_count = 1000;
};

void cmd_gen_fixture(const GenFixtureOptions& opts);

// Parses argv, dispatches, and maps failures to exit codes: 0 success,
// 1 quantization-domain error, 2 I/O, parse, or usage error.
int run_cli(int argc, const char* const* argv);

}  // namespace fpquant
