#include "monrex/model_io.hpp"

#include <sodium.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include "monrex/error.hpp"

namespace monrex {

using nlohmann::json;

ValidationError::ValidationError(int layer, std::string field, const std::string& what)
    : Error(layer >= 0 ? fmt::format("layer {}: {}: {}", layer, field, what)
                       : fmt::format("{}: {}", field, what)),
      layer_(layer),
      field_(std::move(field)) {}

namespace {

constexpr std::string_view kModelFormat = "monn/1";
constexpr std::string_view kMondMagic = "MOND1";

template <typename Enum, std::size_t N>
Enum parse_enum(const std::array<std::pair<std::string_view, Enum>, N>& table,
                std::string_view text, int layer, const char* field) {
  for (const auto& [name, value] : table) {
    if (name == text) return value;
  }
  throw ParseError(fmt::format("layer {}: {}: unknown value '{}'", layer, field, text));
}

constexpr std::array<std::pair<std::string_view, LayerKind>, 4> kKinds{{
    {"dense", LayerKind::kDense},
    {"conv2d", LayerKind::kConv2d},
    {"maxpool2x2", LayerKind::kMaxPool2x2},
    {"softmax", LayerKind::kSoftmax},
}};
constexpr std::array<std::pair<std::string_view, Activation>, 4> kActivations{{
    {"relu", Activation::kRelu},
    {"tanh", Activation::kTanh},
    {"linear", Activation::kLinear},
    {"none", Activation::kNone},
}};
constexpr std::array<std::pair<std::string_view, Padding>, 2> kPaddings{{
    {"same", Padding::kSame},
    {"valid", Padding::kValid},
}};

std::size_t product(const std::vector<std::size_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

void check_finite(const std::vector<double>& values, int layer, const char* field) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ValidationError(layer, field, fmt::format("non-finite value at element {}", i));
    }
  }
}

std::uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void append_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

float read_f32_le(const unsigned char* p) {
  return std::bit_cast<float>(read_u32_le(p));
}

void append_f32_le(std::string& out, float v) {
  append_u32_le(out, std::bit_cast<std::uint32_t>(v));
}

json blob_json(const std::vector<std::size_t>& shape, const std::vector<double>& values) {
  return json{{"shape", shape}, {"data", encode_float32_blob(values)}};
}

std::vector<double> blob_values(const json& node, std::vector<std::size_t>& shape,
                                 int layer, const char* field) {
  shape = node.at("shape").get<std::vector<std::size_t>>();
  auto values = decode_float32_blob(node.at("data").get<std::string>());
  if (values.size() != product(shape)) {
    throw ValidationError(layer, field,
                          fmt::format("blob holds {} values but shape {} needs {}",
                                      values.size(), fmt::join(shape, "x"), product(shape)));
  }
  return values;
}

LayerSpec parse_layer(const json& node, int index) {
  LayerSpec layer;
  layer.kind = parse_enum(kKinds, node.at("kind").get<std::string>(), index, "kind");
  layer.activation = parse_enum(kActivations,
                                node.value("activation", std::string("none")), index,
                                "activation");
  if (node.contains("padding")) {
    layer.padding = parse_enum(kPaddings, node.at("padding").get<std::string>(), index,
                               "padding");
  }
  if (node.contains("window")) {
    const auto window = node.at("window").get<std::vector<std::size_t>>();
    if (window.size() != 2) {
      throw ValidationError(index, "window", "expected [kh, kw]");
    }
    layer.window_height = window[0];
    layer.window_width = window[1];
  }
  if (node.contains("weights")) {
    layer.weights = blob_values(node.at("weights"), layer.weight_shape, index, "weights");
  }
  if (node.contains("biases")) {
    std::vector<std::size_t> bias_shape;
    layer.biases = blob_values(node.at("biases"), bias_shape, index, "biases");
    if (bias_shape.size() != 1) {
      throw ValidationError(index, "biases", "bias blob must be one-dimensional");
    }
  }
  layer.output = node.value("output", false);
  return layer;
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  for (const auto& [name, value] : kKinds) {
    if (value == kind) return name;
  }
  return "?";
}

std::string_view to_string(Activation activation) {
  for (const auto& [name, value] : kActivations) {
    if (value == activation) return name;
  }
  return "?";
}

std::string_view to_string(Padding padding) {
  return padding == Padding::kSame ? "same" : "valid";
}

std::size_t Shape::element_count() const { return dims.empty() ? 0 : product(dims); }

std::string to_string(const Shape& shape) { return fmt::format("{}", fmt::join(shape.dims, "x")); }

std::vector<Shape> NetworkModel::output_shapes() const {
  std::vector<Shape> shapes;
  shapes.reserve(layers.size());
  Shape current = input_shape;
  for (const auto& layer : layers) {
    switch (layer.kind) {
      case LayerKind::kDense:
        current = Shape{{layer.weight_shape.at(1)}};
        break;
      case LayerKind::kSoftmax:
        current = Shape{{layer.has_weights() ? layer.weight_shape.at(1)
                                             : current.element_count()}};
        break;
      case LayerKind::kConv2d: {
        const std::size_t kh = layer.weight_shape.at(0);
        const std::size_t kw = layer.weight_shape.at(1);
        const std::size_t c_out = layer.weight_shape.at(3);
        if (layer.padding == Padding::kSame) {
          current = Shape{{current.height(), current.width(), c_out}};
        } else {
          current = Shape{{current.height() - kh + 1, current.width() - kw + 1, c_out}};
        }
        break;
      }
      case LayerKind::kMaxPool2x2:
        current = Shape{{current.height() / 2, current.width() / 2, current.channels()}};
        break;
    }
    shapes.push_back(current);
  }
  return shapes;
}

void validate_model(const NetworkModel& model) {
  const auto& in = model.input_shape.dims;
  if (in.size() != 1 && in.size() != 3) {
    throw ValidationError(-1, "input_shape", "expected [length] or [height, width, channels]");
  }
  for (std::size_t d : in) {
    if (d == 0) throw ValidationError(-1, "input_shape", "zero-sized dimension");
  }
  if (model.layers.empty()) throw ValidationError(-1, "layers", "model has no layers");

  Shape current = model.input_shape;
  std::size_t output_marks = 0;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& layer = model.layers[i];
    const int li = static_cast<int>(i);
    const bool pooling_or_softmax =
        layer.kind == LayerKind::kMaxPool2x2 || layer.kind == LayerKind::kSoftmax;
    if (pooling_or_softmax != (layer.activation == Activation::kNone)) {
      throw ValidationError(li, "activation",
                            fmt::format("activation '{}' not allowed for {} layers",
                                        to_string(layer.activation), to_string(layer.kind)));
    }
    if (layer.output) ++output_marks;
    check_finite(layer.weights, li, "weights");
    check_finite(layer.biases, li, "biases");
    if (layer.weights.size() != product(layer.weight_shape) && layer.has_weights()) {
      throw ValidationError(li, "weights", "weight count does not match weight shape");
    }

    switch (layer.kind) {
      case LayerKind::kDense:
      case LayerKind::kSoftmax: {
        if (!layer.has_weights()) {
          if (layer.kind == LayerKind::kDense) {
            throw ValidationError(li, "weights", "dense layer without weights");
          }
          if (!layer.biases.empty()) {
            throw ValidationError(li, "biases", "weightless softmax cannot have biases");
          }
          current = Shape{{current.element_count()}};
          break;
        }
        if (layer.weight_shape.size() != 2) {
          throw ValidationError(li, "weights", "expected shape (n_in, n_out)");
        }
        if (layer.weight_shape[0] != current.element_count()) {
          throw ValidationError(
              li, "weights",
              fmt::format("shape mismatch: weights expect {} inputs but previous output is {}",
                          layer.weight_shape[0], to_string(current)));
        }
        if (layer.weight_shape[1] == 0) {
          throw ValidationError(li, "weights", "layer has no output units");
        }
        if (layer.biases.size() != layer.weight_shape[1]) {
          throw ValidationError(li, "biases",
                                fmt::format("expected {} biases, got {}", layer.weight_shape[1],
                                            layer.biases.size()));
        }
        current = Shape{{layer.weight_shape[1]}};
        break;
      }
      case LayerKind::kConv2d: {
        if (!current.spatial()) {
          throw ValidationError(li, "input", "conv2d needs a height x width x channels input");
        }
        if (layer.weight_shape.size() != 4) {
          throw ValidationError(li, "weights", "expected kernel shape (kh, kw, c_in, c_out)");
        }
        const std::size_t kh = layer.weight_shape[0];
        const std::size_t kw = layer.weight_shape[1];
        const std::size_t c_in = layer.weight_shape[2];
        const std::size_t c_out = layer.weight_shape[3];
        if (kh == 0 || kw == 0 || c_out == 0) {
          throw ValidationError(li, "weights", "zero-sized kernel dimension");
        }
        if ((layer.window_height != 0 || layer.window_width != 0) &&
            (layer.window_height != kh || layer.window_width != kw)) {
          throw ValidationError(li, "window", "window disagrees with kernel shape");
        }
        if (c_in != current.channels()) {
          throw ValidationError(
              li, "weights",
              fmt::format("shape mismatch: kernel expects {} channels but previous output is {}",
                          c_in, to_string(current)));
        }
        if (layer.biases.size() != c_out) {
          throw ValidationError(li, "biases",
                                fmt::format("expected {} biases, got {}", c_out,
                                            layer.biases.size()));
        }
        if (layer.padding == Padding::kValid) {
          if (kh > current.height() || kw > current.width()) {
            throw ValidationError(li, "window", "valid convolution window larger than input");
          }
          current = Shape{{current.height() - kh + 1, current.width() - kw + 1, c_out}};
        } else {
          current = Shape{{current.height(), current.width(), c_out}};
        }
        break;
      }
      case LayerKind::kMaxPool2x2:
        if (layer.has_weights() || !layer.biases.empty()) {
          throw ValidationError(li, "weights", "maxpool layers carry no parameters");
        }
        if (!current.spatial() || current.height() < 2 || current.width() < 2) {
          throw ValidationError(li, "input", "maxpool2x2 needs a spatial input of at least 2x2");
        }
        current = Shape{{current.height() / 2, current.width() / 2, current.channels()}};
        break;
    }
  }

  const auto& last = model.layers.back();
  if (last.kind != LayerKind::kDense && last.kind != LayerKind::kSoftmax) {
    throw ValidationError(static_cast<int>(model.layers.size() - 1), "kind",
                          "final layer must be dense or softmax");
  }
  if (output_marks != 1 || !last.output) {
    throw ValidationError(-1, "output", "exactly the final layer must be marked as output");
  }
}

NetworkModel parse_model(std::string_view text) {
  NetworkModel model;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("model: {}", e.what()));
  }
  try {
    if (root.value("format", std::string()) != kModelFormat) {
      throw ParseError(fmt::format("model: expected format '{}'", kModelFormat));
    }
    model.name = root.value("name", std::string());
    model.input_shape.dims = root.at("input_shape").get<std::vector<std::size_t>>();
    const auto& layers = root.at("layers");
    if (!layers.is_array()) throw ParseError("model: 'layers' must be an array");
    bool any_output = false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      model.layers.push_back(parse_layer(layers[i], static_cast<int>(i)));
      any_output = any_output || model.layers.back().output;
    }
    if (!any_output && !model.layers.empty()) model.layers.back().output = true;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("model: {}", e.what()));
  }
  validate_model(model);
  return model;
}

NetworkModel load_model(const std::filesystem::path& path) {
  return parse_model(read_file(path));
}

std::string serialize_model(const NetworkModel& model) {
  json layers = json::array();
  for (const auto& layer : model.layers) {
    json node{{"kind", to_string(layer.kind)}, {"activation", to_string(layer.activation)}};
    if (layer.kind == LayerKind::kConv2d) {
      node["padding"] = to_string(layer.padding);
      node["window"] = {layer.weight_shape.at(0), layer.weight_shape.at(1)};
    }
    if (layer.has_weights()) node["weights"] = blob_json(layer.weight_shape, layer.weights);
    if (!layer.biases.empty()) {
      node["biases"] = blob_json({layer.biases.size()}, layer.biases);
    }
    if (layer.output) node["output"] = true;
    layers.push_back(std::move(node));
  }
  json root{{"format", kModelFormat},
            {"name", model.name},
            {"input_shape", model.input_shape.dims},
            {"layers", std::move(layers)}};
  return root.dump(1) + "\n";
}

void save_model(const NetworkModel& model, const std::filesystem::path& path) {
  write_file(path, serialize_model(model));
}

std::string encode_float32_blob(const std::vector<double>& values) {
  std::string bytes;
  bytes.reserve(values.size() * 4);
  for (double v : values) append_f32_le(bytes, static_cast<float>(v));
  const std::size_t max_len =
      sodium_base64_ENCODED_LEN(bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  std::string out(max_len, '\0');
  sodium_bin2base64(out.data(), out.size(),
                    reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(),
                    sodium_base64_VARIANT_ORIGINAL);
  out.resize(std::strlen(out.c_str()));
  return out;
}

std::vector<double> decode_float32_blob(std::string_view base64) {
  std::vector<unsigned char> bytes(base64.size() / 4 * 3 + 3);
  std::size_t length = 0;
  const char* end = nullptr;
  if (sodium_base642bin(bytes.data(), bytes.size(), base64.data(), base64.size(), " \n\r\t",
                        &length, &end, sodium_base64_VARIANT_ORIGINAL) != 0 ||
      end != base64.data() + base64.size()) {
    throw ParseError("blob: invalid base64 payload");
  }
  if (length % 4 != 0) throw ParseError("blob: payload is not a whole number of float32");
  std::vector<double> values(length / 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<double>(read_f32_le(bytes.data() + 4 * i));
  }
  return values;
}

DatasetFormat dataset_format_for(const std::filesystem::path& path) {
  return path.extension() == ".mond" ? DatasetFormat::kMond : DatasetFormat::kCsv;
}

Dataset parse_csv_dataset(std::string_view text, bool has_header) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  bool skipped_header = !has_header;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view() : text.substr(eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }

    std::size_t col = 0;
    while (true) {
      const auto comma = line.find(',');
      std::string_view cell = line.substr(0, comma);
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw ParseError(fmt::format("csv line {}: column {}: cannot parse '{}'", line_no, col,
                                     cell));
      }
      if (!std::isfinite(value)) {
        throw ValidationError(-1, "examples",
                              fmt::format("non-finite value at row {}, column {}", rows, col));
      }
      values.push_back(value);
      ++col;
      if (comma == std::string_view::npos) break;
      line = line.substr(comma + 1);
    }
    if (rows == 0) {
      cols = col;
    } else if (col != cols) {
      throw ParseError(fmt::format("csv line {}: expected {} columns, got {}", line_no, cols,
                                   col));
    }
    ++rows;
  }
  if (rows == 0) throw ValidationError(-1, "examples", "empty dataset");

  Dataset dataset;
  dataset.examples = Matrix(rows, cols);
  dataset.examples.data() = std::move(values);
  return dataset;
}

Dataset parse_mond_dataset(std::string_view bytes) {
  constexpr std::size_t kHeader = kMondMagic.size() + 8;
  if (bytes.size() < kHeader || bytes.substr(0, kMondMagic.size()) != kMondMagic) {
    throw ParseError("mond: missing MOND1 header");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + kMondMagic.size();
  const std::size_t rows = read_u32_le(p);
  const std::size_t cols = read_u32_le(p + 4);
  if (bytes.size() != kHeader + rows * cols * 4) {
    throw ParseError(fmt::format("mond: {}x{} payload needs {} bytes, file has {}", rows, cols,
                                 rows * cols * 4, bytes.size() - kHeader));
  }
  if (rows == 0 || cols == 0) throw ValidationError(-1, "examples", "empty dataset");

  Dataset dataset;
  dataset.examples = Matrix(rows, cols);
  const unsigned char* data = p + 8;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = read_f32_le(data + 4 * (r * cols + c));
      if (!std::isfinite(v)) {
        throw ValidationError(-1, "examples",
                              fmt::format("non-finite value at row {}, column {}", r, c));
      }
      dataset.examples(r, c) = v;
    }
  }
  return dataset;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     bool csv_has_header) {
  const std::string contents = read_file(path);
  return format == DatasetFormat::kMond ? parse_mond_dataset(contents)
                                        : parse_csv_dataset(contents, csv_has_header);
}

std::string serialize_mond_dataset(const Dataset& dataset) {
  std::string out(kMondMagic);
  append_u32_le(out, static_cast<std::uint32_t>(dataset.examples.rows()));
  append_u32_le(out, static_cast<std::uint32_t>(dataset.examples.cols()));
  for (double v : dataset.examples.data()) append_f32_le(out, static_cast<float>(v));
  return out;
}

void save_mond_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  write_file(path, serialize_mond_dataset(dataset));
}

void check_compatible(const NetworkModel& model, const Dataset& dataset) {
  if (dataset.examples.cols() != model.input_shape.element_count()) {
    throw ValidationError(-1, "examples",
                          fmt::format("rows have {} values but model input {} needs {}",
                                      dataset.examples.cols(), to_string(model.input_shape),
                                      model.input_shape.element_count()));
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return std::move(buffer).str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(fmt::format("write to '{}' failed", path.string()));
}

}  // namespace monrex
