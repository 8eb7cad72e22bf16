#include "fpquant/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace fpquant {

static_assert(std::endian::native == std::endian::little,
              "blob I/O assumes a little-endian host");

namespace {

using ordered_json = nlohmann::ordered_json;

std::string format_double(double v) {
  if (std::isnan(v)) return "\"nan\"";
  if (std::isinf(v)) return v > 0.0 ? "\"inf\"" : "\"-inf\"";
  if (v == 0.0) v = 0.0;  // collapse -0 to 0
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string quote(const std::string& s) { return nlohmann::json(s).dump(); }

void emit_value(const ordered_json& j, std::string& out, int level) {
  switch (j.type()) {
    case ordered_json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out.append(static_cast<std::size_t>(level + 1) * 2, ' ');
        out += quote(key);
        out += ": ";
        emit_value(value, out, level + 1);
      }
      out += "\n";
      out.append(static_cast<std::size_t>(level) * 2, ' ');
      out += "}";
      return;
    }
    case ordered_json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& value : j) {
        if (!first) out += ",\n";
        first = false;
        out.append(static_cast<std::size_t>(level + 1) * 2, ' ');
        emit_value(value, out, level + 1);
      }
      out += "\n";
      out.append(static_cast<std::size_t>(level) * 2, ' ');
      out += "]";
      return;
    }
    case ordered_json::value_t::string:
      out += quote(j.get<std::string>());
      return;
    case ordered_json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      return;
    case ordered_json::value_t::number_integer:
      out += std::to_string(j.get<std::int64_t>());
      return;
    case ordered_json::value_t::number_unsigned:
      out += std::to_string(j.get<std::uint64_t>());
      return;
    case ordered_json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += "null";
      return;
  }
}

[[noreturn]] void missing_field(const std::string& context, const std::string& key) {
  throw IoError(context + ": missing field '" + key + "'");
}

const ordered_json& require(const ordered_json& j, const std::string& key,
                            const std::string& context) {
  const auto it = j.find(key);
  if (it == j.end()) missing_field(context, key);
  return *it;
}

std::string require_string(const ordered_json& j, const std::string& key,
                           const std::string& context) {
  const ordered_json& v = require(j, key, context);
  if (!v.is_string()) {
    throw IoError(context + ": field '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

std::int64_t require_int(const ordered_json& j, const std::string& key,
                         const std::string& context) {
  const ordered_json& v = require(j, key, context);
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    throw IoError(context + ": field '" + key + "' must be an integer");
  }
  return v.get<std::int64_t>();
}

bool require_bool(const ordered_json& j, const std::string& key,
                  const std::string& context) {
  const ordered_json& v = require(j, key, context);
  if (!v.is_boolean()) {
    throw IoError(context + ": field '" + key + "' must be a boolean");
  }
  return v.get<bool>();
}

double require_double(const ordered_json& j, const std::string& key,
                      const std::string& context) {
  return json_double(require(j, key, context), context + ": field '" + key + "'");
}

std::vector<std::int64_t> require_shape(const ordered_json& j, const std::string& key,
                                        const std::string& context) {
  const ordered_json& v = require(j, key, context);
  if (!v.is_array()) {
    throw IoError(context + ": field '" + key + "' must be an array");
  }
  std::vector<std::int64_t> shape;
  for (const auto& d : v) {
    if (!d.is_number_integer() && !d.is_number_unsigned()) {
      throw IoError(context + ": field '" + key + "' must hold integers");
    }
    shape.push_back(d.get<std::int64_t>());
  }
  return shape;
}

void check_header(const ordered_json& j, const std::string& kind,
                  const std::string& context) {
  const std::string version = require_string(j, "format_version", context);
  if (version != kFormatVersion) {
    throw IoError(context + ": unsupported format_version '" + version + "'");
  }
  const std::string k = require_string(j, "kind", context);
  if (k != kind) {
    throw IoError(context + ": expected kind '" + kind + "', found '" + k + "'");
  }
}

ordered_json header(const std::string& kind) {
  ordered_json j = ordered_json::object();
  j["format_version"] = kFormatVersion;
  j["kind"] = kind;
  return j;
}

ordered_json shape_json(const std::vector<std::int64_t>& shape) {
  ordered_json a = ordered_json::array();
  for (std::int64_t d : shape) a.push_back(d);
  return a;
}

}  // namespace

std::string emit_json(const ordered_json& doc) {
  std::string out;
  emit_value(doc, out, 0);
  out += "\n";
  return out;
}

nlohmann::ordered_json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(path.string() + ": cannot open");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    std::size_t col = 1;
    const std::size_t stop = std::min(e.byte, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw IoError(path.string() + ":" + std::to_string(line) + ":" +
                  std::to_string(col) + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError(path.string() + ": cannot open for writing");
  }
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) {
    throw IoError(path.string() + ": write failed");
  }
}

void write_f32_blob(const std::filesystem::path& path, std::span<const double> values) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError(path.string() + ": cannot open for writing");
  }
  for (double v : values) {
    const float f = static_cast<float>(v);
    char bytes[4];
    std::memcpy(bytes, &f, 4);
    out.write(bytes, 4);
  }
  if (!out) {
    throw IoError(path.string() + ": write failed");
  }
}

std::vector<double> read_f32_blob(const std::filesystem::path& path,
                                  std::int64_t expected_count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(path.string() + ": tensor blob not found");
  }
  in.seekg(0, std::ios::end);
  const std::int64_t bytes = static_cast<std::int64_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  if (bytes != expected_count * 4) {
    throw IoError(path.string() + ": blob holds " + std::to_string(bytes / 4) +
                  " float32 values, expected " + std::to_string(expected_count));
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(expected_count));
  char buf[4];
  for (std::int64_t i = 0; i < expected_count; ++i) {
    in.read(buf, 4);
    if (!in) {
      throw IoError(path.string() + ": short read");
    }
    float f;
    std::memcpy(&f, buf, 4);
    out.push_back(static_cast<double>(f));
  }
  return out;
}

double json_double(const nlohmann::ordered_json& j, const std::string& context) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw IoError(context + ": expected a number or inf sentinel");
}

void save_model(const NetworkModel& model, const std::filesystem::path& manifest_path) {
  model.validate();
  ordered_json doc = header("model");
  doc["name"] = model.name;
  doc["input_shape"] = shape_json(model.input_shape);
  ordered_json layers = ordered_json::array();
  const std::filesystem::path dir = manifest_path.parent_path();
  for (const LayerSpec& l : model.layers) {
    ordered_json lj = ordered_json::object();
    lj["name"] = l.name;
    lj["kind"] = layer_kind_name(l.kind);
    switch (l.kind) {
      case LayerKind::kConv:
        lj["in_channels"] = l.in_channels;
        lj["out_channels"] = l.out_channels;
        lj["kernel"] = l.kernel;
        lj["stride"] = l.stride;
        lj["padding"] = l.padding;
        break;
      case LayerKind::kFc:
        lj["in_features"] = l.in_features;
        lj["out_features"] = l.out_features;
        break;
      case LayerKind::kMaxPool:
      case LayerKind::kAvgPool:
        lj["kernel"] = l.kernel;
        lj["stride"] = l.stride;
        break;
      default:
        break;
    }
    if (l.is_parameterized()) {
      const std::string wrel = "tensors/" + l.name + "_w.bin";
      const std::string brel = "tensors/" + l.name + "_b.bin";
      lj["weights"] = wrel;
      lj["weights_shape"] = shape_json(l.weights.shape);
      lj["bias"] = brel;
      lj["bias_shape"] = shape_json(l.bias.shape);
      write_f32_blob(dir / wrel, l.weights.data);
      write_f32_blob(dir / brel, l.bias.data);
    }
    layers.push_back(std::move(lj));
  }
  doc["layers"] = std::move(layers);
  write_text_file(manifest_path, emit_json(doc));
}

NetworkModel load_model(const std::filesystem::path& manifest_path) {
  const std::string context = manifest_path.string();
  const ordered_json doc = load_json_file(manifest_path);
  check_header(doc, "model", context);
  NetworkModel model;
  model.name = require_string(doc, "name", context);
  model.input_shape = require_shape(doc, "input_shape", context);
  const ordered_json& layers = require(doc, "layers", context);
  if (!layers.is_array()) {
    throw IoError(context + ": field 'layers' must be an array");
  }
  const std::filesystem::path dir = manifest_path.parent_path();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const ordered_json& lj = layers[i];
    const std::string lctx = context + ": layer " + std::to_string(i);
    LayerSpec l;
    l.name = require_string(lj, "name", lctx);
    l.kind = layer_kind_from_name(require_string(lj, "kind", lctx));
    switch (l.kind) {
      case LayerKind::kConv:
        l.in_channels = static_cast<int>(require_int(lj, "in_channels", lctx));
        l.out_channels = static_cast<int>(require_int(lj, "out_channels", lctx));
        l.kernel = static_cast<int>(require_int(lj, "kernel", lctx));
        l.stride = static_cast<int>(require_int(lj, "stride", lctx));
        l.padding = static_cast<int>(require_int(lj, "padding", lctx));
        break;
      case LayerKind::kFc:
        l.in_features = static_cast<int>(require_int(lj, "in_features", lctx));
        l.out_features = static_cast<int>(require_int(lj, "out_features", lctx));
        break;
      case LayerKind::kMaxPool:
      case LayerKind::kAvgPool:
        l.kernel = static_cast<int>(require_int(lj, "kernel", lctx));
        l.stride = static_cast<int>(require_int(lj, "stride", lctx));
        break;
      default:
        break;
    }
    if (l.is_parameterized()) {
      l.weights.shape = require_shape(lj, "weights_shape", lctx);
      l.weights.data =
          read_f32_blob(dir / require_string(lj, "weights", lctx), l.weights.size());
      l.bias.shape = require_shape(lj, "bias_shape", lctx);
      l.bias.data =
          read_f32_blob(dir / require_string(lj, "bias", lctx), l.bias.size());
    }
    model.layers.push_back(std::move(l));
  }
  try {
    model.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(context + ": invalid model: " + e.what());
  }
  return model;
}

void save_dataset(std::span<const Tensor> inputs, const std::string& name,
                  const std::filesystem::path& manifest_path) {
  if (inputs.empty()) {
    throw IoError(manifest_path.string() + ": refusing to write an empty dataset");
  }
  const std::vector<std::int64_t>& shape = inputs.front().shape;
  std::vector<double> all;
  all.reserve(inputs.size() * inputs.front().data.size());
  for (const Tensor& t : inputs) {
    t.validate();
    if (t.shape != shape) {
      throw IoError(manifest_path.string() + ": dataset tensors must share one shape");
    }
    all.insert(all.end(), t.data.begin(), t.data.end());
  }
  std::filesystem::path blob = manifest_path;
  blob.replace_extension(".bin");
  ordered_json doc = header("dataset");
  doc["name"] = name;
  doc["shape"] = shape_json(shape);
  doc["count"] = static_cast<std::int64_t>(inputs.size());
  doc["blob"] = blob.filename().string();
  write_f32_blob(blob, all);
  write_text_file(manifest_path, emit_json(doc));
}

std::vector<Tensor> load_dataset(const std::filesystem::path& manifest_path) {
  const std::string context = manifest_path.string();
  const ordered_json doc = load_json_file(manifest_path);
  check_header(doc, "dataset", context);
  const std::vector<std::int64_t> shape = require_shape(doc, "shape", context);
  const std::int64_t count = require_int(doc, "count", context);
  if (count < 1) {
    throw IoError(context + ": dataset count must be positive");
  }
  std::int64_t per = 1;
  for (std::int64_t d : shape) {
    if (d <= 0) throw IoError(context + ": bad dataset shape");
    per *= d;
  }
  const std::filesystem::path blob =
      manifest_path.parent_path() / require_string(doc, "blob", context);
  const std::vector<double> all = read_f32_blob(blob, count * per);
  std::vector<Tensor> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t n = 0; n < count; ++n) {
    Tensor t;
    t.shape = shape;
    t.data.assign(all.begin() + n * per, all.begin() + (n + 1) * per);
    out.push_back(std::move(t));
  }
  return out;
}

const LayerCalibration* StatsFile::find(const std::string& layer) const {
  for (const LayerCalibration& c : layers) {
    if (c.layer == layer) return &c;
  }
  return nullptr;
}

void save_stats(const StatsFile& stats, const std::filesystem::path& path) {
  ordered_json doc = header("stats");
  doc["model"] = stats.model;
  doc["inputs"] = stats.inputs;
  ordered_json layers = ordered_json::array();
  for (const LayerCalibration& c : stats.layers) {
    ordered_json lj = ordered_json::object();
    lj["layer"] = c.layer;
    lj["degenerate"] = c.degenerate;
    lj["mean_excl_zero"] = c.stats.mean_excl_zero;
    lj["var_excl_zero"] = c.stats.var_excl_zero;
    lj["count_total"] = c.stats.count_total;
    lj["count_zero"] = c.stats.count_zero;
    lj["count_negative"] = c.stats.count_negative;
    lj["rho"] = c.stats.rho;
    lj["max_abs"] = c.stats.max_abs;
    lj["max_val"] = c.stats.max_val;
    lj["min_val"] = c.stats.min_val;
    layers.push_back(std::move(lj));
  }
  doc["layers"] = std::move(layers);
  write_text_file(path, emit_json(doc));
}

StatsFile load_stats(const std::filesystem::path& path) {
  const std::string context = path.string();
  const ordered_json doc = load_json_file(path);
  check_header(doc, "stats", context);
  StatsFile out;
  out.model = require_string(doc, "model", context);
  out.inputs = require_int(doc, "inputs", context);
  const ordered_json& layers = require(doc, "layers", context);
  for (const ordered_json& lj : layers) {
    const std::string lctx = context + ": layer entry";
    LayerCalibration c;
    c.layer = require_string(lj, "layer", lctx);
    c.degenerate = require_bool(lj, "degenerate", lctx);
    c.stats.mean_excl_zero = require_double(lj, "mean_excl_zero", lctx);
    c.stats.var_excl_zero = require_double(lj, "var_excl_zero", lctx);
    c.stats.count_total = require_int(lj, "count_total", lctx);
    c.stats.count_zero = require_int(lj, "count_zero", lctx);
    c.stats.count_negative = require_int(lj, "count_negative", lctx);
    c.stats.rho = require_double(lj, "rho", lctx);
    c.stats.max_abs = require_double(lj, "max_abs", lctx);
    c.stats.max_val = require_double(lj, "max_val", lctx);
    c.stats.min_val = require_double(lj, "min_val", lctx);
    out.layers.push_back(std::move(c));
  }
  return out;
}

void save_quant_config(const QuantConfig& config, const std::filesystem::path& path) {
  ordered_json doc = header("quant_config");
  doc["scheme"] = config.scheme;
  ordered_json layers = ordered_json::array();
  for (const auto& [name, s] : config.layers) {
    ordered_json lj = ordered_json::object();
    lj["layer"] = name;
    lj["weight_bw"] = s.weight_bw;
    lj["weight_fl"] = s.weight_fl;
    lj["bias_bw"] = s.bias_bw;
    lj["bias_fl"] = s.bias_fl;
    if (s.fm_enabled) {
      ordered_json fm = ordered_json::object();
      fm["bw"] = s.fm_bw;
      fm["fl"] = s.fm_fl;
      fm["signed"] = s.fm_signed;
      lj["fm"] = std::move(fm);
    } else {
      lj["fm"] = nullptr;
    }
    layers.push_back(std::move(lj));
  }
  doc["layers"] = std::move(layers);
  write_text_file(path, emit_json(doc));
}

QuantConfig load_quant_config(const std::filesystem::path& path) {
  const std::string context = path.string();
  const ordered_json doc = load_json_file(path);
  check_header(doc, "quant_config", context);
  QuantConfig out;
  out.scheme = require_string(doc, "scheme", context);
  const ordered_json& layers = require(doc, "layers", context);
  for (const ordered_json& lj : layers) {
    const std::string lctx = context + ": config entry";
    LayerQuantSpec s;
    const std::string name = require_string(lj, "layer", lctx);
    s.weight_bw = static_cast<int>(require_int(lj, "weight_bw", lctx));
    s.weight_fl = static_cast<int>(require_int(lj, "weight_fl", lctx));
    s.bias_bw = static_cast<int>(require_int(lj, "bias_bw", lctx));
    s.bias_fl = static_cast<int>(require_int(lj, "bias_fl", lctx));
    const ordered_json& fm = require(lj, "fm", lctx);
    if (fm.is_null()) {
      s.fm_enabled = false;
    } else {
      s.fm_enabled = true;
      s.fm_bw = static_cast<int>(require_int(fm, "bw", lctx));
      s.fm_fl = static_cast<int>(require_int(fm, "fl", lctx));
      s.fm_signed = require_bool(fm, "signed", lctx);
    }
    out.layers.emplace_back(name, s);
  }
  return out;
}

void save_report(const QuantReport& report, const std::filesystem::path& path) {
  write_text_file(path, emit_json([&] {
    ordered_json doc = header("report");
    doc["model"] = report.model;
    doc["scheme"] = report.scheme;
    doc["evaluation_set"] = report.evaluation_set;
    doc["input_quantized_with_first_layer_fm"] =
        report.input_quantized_with_first_layer_fm;
    doc["levels_convention"] = report.levels_convention;
    if (report.top1_agreement) doc["top1_agreement"] = *report.top1_agreement;
    if (report.promoted_weight_ratio) {
      doc["promoted_weight_ratio"] = *report.promoted_weight_ratio;
    }
    if (report.promoted_fm_ratio) {
      doc["promoted_fm_ratio"] = *report.promoted_fm_ratio;
    }
    ordered_json layers = ordered_json::array();
    for (const LayerReport& l : report.layers) {
      ordered_json lj = ordered_json::object();
      lj["layer"] = l.layer;
      lj["scheme"] = l.scheme;
      lj["weight_bw"] = l.weight_bw;
      lj["weight_fl"] = l.weight_fl;
      lj["weight_sqnr_db"] = l.weight_sqnr_db;
      lj["bias_bw"] = l.bias_bw;
      lj["bias_fl"] = l.bias_fl;
      if (l.bias_sqnr_db) lj["bias_sqnr_db"] = *l.bias_sqnr_db;
      if (l.fm) {
        ordered_json fm = ordered_json::object();
        fm["bw"] = l.fm->bw;
        fm["fl"] = l.fm->fl;
        fm["signed"] = l.fm->is_signed;
        if (l.fm->sqnr_db) fm["sqnr_db"] = *l.fm->sqnr_db;
        if (l.fm->predicted_distortion) {
          fm["predicted_distortion"] = *l.fm->predicted_distortion;
        }
        if (l.fm->empirical_distortion) {
          fm["empirical_distortion"] = *l.fm->empirical_distortion;
        }
        lj["fm"] = std::move(fm);
      } else {
        lj["fm"] = nullptr;
      }
      if (l.promoted) lj["promoted"] = *l.promoted;
      layers.push_back(std::move(lj));
    }
    doc["layers"] = std::move(layers);
    return doc;
  }()));
}

QuantReport load_report(const std::filesystem::path& path) {
  const std::string context = path.string();
  const ordered_json doc = load_json_file(path);
  check_header(doc, "report", context);
  QuantReport out;
  out.model = require_string(doc, "model", context);
  out.scheme = require_string(doc, "scheme", context);
  out.evaluation_set = require_string(doc, "evaluation_set", context);
  out.input_quantized_with_first_layer_fm =
      require_bool(doc, "input_quantized_with_first_layer_fm", context);
  out.levels_convention = require_string(doc, "levels_convention", context);
  if (doc.contains("top1_agreement")) {
    out.top1_agreement = json_double(doc["top1_agreement"], context);
  }
  if (doc.contains("promoted_weight_ratio")) {
    out.promoted_weight_ratio = json_double(doc["promoted_weight_ratio"], context);
  }
  if (doc.contains("promoted_fm_ratio")) {
    out.promoted_fm_ratio = json_double(doc["promoted_fm_ratio"], context);
  }
  const ordered_json& layers = require(doc, "layers", context);
  for (const ordered_json& lj : layers) {
    const std::string lctx = context + ": report entry";
    LayerReport l;
    l.layer = require_string(lj, "layer", lctx);
    l.scheme = require_string(lj, "scheme", lctx);
    l.weight_bw = static_cast<int>(require_int(lj, "weight_bw", lctx));
    l.weight_fl = static_cast<int>(require_int(lj, "weight_fl", lctx));
    l.weight_sqnr_db = require_double(lj, "weight_sqnr_db", lctx);
    l.bias_bw = static_cast<int>(require_int(lj, "bias_bw", lctx));
    l.bias_fl = static_cast<int>(require_int(lj, "bias_fl", lctx));
    if (lj.contains("bias_sqnr_db")) {
      l.bias_sqnr_db = json_double(lj["bias_sqnr_db"], lctx);
    }
    const ordered_json& fm = require(lj, "fm", lctx);
    if (!fm.is_null()) {
      FmReport f;
      f.bw = static_cast<int>(require_int(fm, "bw", lctx));
      f.fl = static_cast<int>(require_int(fm, "fl", lctx));
      f.is_signed = require_bool(fm, "signed", lctx);
      if (fm.contains("sqnr_db")) f.sqnr_db = json_double(fm["sqnr_db"], lctx);
      if (fm.contains("predicted_distortion")) {
        f.predicted_distortion = json_double(fm["predicted_distortion"], lctx);
      }
      if (fm.contains("empirical_distortion")) {
        f.empirical_distortion = json_double(fm["empirical_distortion"], lctx);
      }
      l.fm = std::move(f);
    }
    if (lj.contains("promoted")) {
      l.promoted = require_bool(lj, "promoted", lctx);
    }
    out.layers.push_back(std::move(l));
  }
  return out;
}

void save_trace(const BftTrace& trace, const std::string& model_name,
                const std::string& target, int window,
                const std::filesystem::path& path) {
  ordered_json doc = header("bft_trace");
  doc["model"] = model_name;
  doc["target"] = target;
  doc["window"] = window;
  doc["p_initial"] = trace.p_initial;
  doc["p_final"] = trace.p_final;
  ordered_json steps = ordered_json::array();
  for (const BftStep& s : trace.steps) {
    ordered_json sj = ordered_json::object();
    sj["layer"] = s.layer;
    sj["knob"] = s.knob == BftKnob::kWeightFl ? "weight_fl" : "fm_fl";
    sj["direction"] = s.direction == BftDirection::kBackward ? "backward" : "forward";
    sj["incumbent_fl"] = s.incumbent_fl;
    ordered_json clamped = ordered_json::array();
    for (int fl : s.clamped) clamped.push_back(fl);
    sj["clamped"] = std::move(clamped);
    ordered_json cands = ordered_json::array();
    for (const BftCandidate& c : s.candidates) {
      ordered_json cj = ordered_json::object();
      cj["fl"] = c.fl;
      cj["p_overall"] = c.p_overall;
      cands.push_back(std::move(cj));
    }
    sj["candidates"] = std::move(cands);
    sj["chosen_fl"] = s.chosen_fl;
    sj["chosen_p"] = s.chosen_p;
    steps.push_back(std::move(sj));
  }
  doc["steps"] = std::move(steps);
  write_text_file(path, emit_json(doc));
}

}  // namespace fpquant
