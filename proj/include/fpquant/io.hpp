#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpquant/bft.hpp"
#include "fpquant/netsim.hpp"

namespace fpquant {

// File-level failures: missing files, unparseable or structurally invalid
// documents, blob size mismatches. The CLI maps these to exit code 2.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr const char* kFormatVersion = "1";

// Deterministic JSON rendering: 2-space indent, insertion-ordered keys,
// doubles at 9 significant digits, -0 normalized to 0, non-finite values as
// the quoted sentinels "inf" / "-inf" / "nan". Emit → parse → emit is
// byte-stable.
std::string emit_json(const nlohmann::ordered_json& doc);

// Reads and parses a JSON document; parse failures raise IoError with
// path:line:column context.
nlohmann::ordered_json load_json_file(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);

// Raw little-endian float32 blobs, row-major.
void write_f32_blob(const std::filesystem::path& path, std::span<const double> values);
std::vector<double> read_f32_blob(const std::filesystem::path& path,
                                  std::int64_t expected_count);

// Value readers tolerant of the emitter's conventions (integers where a
// whole double was written, quoted "inf" sentinels).
double json_double(const nlohmann::ordered_json& j, const std::string& context);

// Model manifest + one blob per parameter tensor (written next to the
// manifest under tensors/). Blob references are relative to the manifest.
void save_model(const NetworkModel& model, const std::filesystem::path& manifest_path);
NetworkModel load_model(const std::filesystem::path& manifest_path);

// Input datasets: a shape/count manifest plus one concatenated blob.
void save_dataset(std::span<const Tensor> inputs, const std::string& name,
                  const std::filesystem::path& manifest_path);
std::vector<Tensor> load_dataset(const std::filesystem::path& manifest_path);

struct StatsFile {
  std::string model;
  std::int64_t inputs = 0;
  std::vector<LayerCalibration> layers;

  const LayerCalibration* find(const std::string& layer) const;
};

void save_stats(const StatsFile& stats, const std::filesystem::path& path);
StatsFile load_stats(const std::filesystem::path& path);

void save_quant_config(const QuantConfig& config, const std::filesystem::path& path);
QuantConfig load_quant_config(const std::filesystem::path& path);

struct FmReport {
  int bw = 0;
  int fl = 0;
  bool is_signed = false;
  std::optional<double> sqnr_db;
  std::optional<double> predicted_distortion;
  std::optional<double> empirical_distortion;

  bool operator==(const FmReport&) const = default;
};

struct LayerReport {
  std::string layer;
  std::string scheme;
  int weight_bw = 0;
  int weight_fl = 0;
  double weight_sqnr_db = 0.0;
  int bias_bw = 0;
  int bias_fl = 0;
  std::optional<double> bias_sqnr_db;
  std::optional<FmReport> fm;
  std::optional<bool> promoted;

  bool operator==(const LayerReport&) const = default;
};

struct QuantReport {
  std::string model;
  std::string scheme;
  std::string evaluation_set;
  bool input_quantized_with_first_layer_fm = false;
  std::string levels_convention;
  std::optional<double> top1_agreement;
  std::optional<double> promoted_weight_ratio;
  std::optional<double> promoted_fm_ratio;
  std::vector<LayerReport> layers;

  bool operator==(const QuantReport&) const = default;
};

void save_report(const QuantReport& report, const std::filesystem::path& path);
QuantReport load_report(const std::filesystem::path& path);

void save_trace(const BftTrace& trace, const std::string& model_name,
                const std::string& target, int window,
                const std::filesystem::path& path);

}  // namespace fpquant
