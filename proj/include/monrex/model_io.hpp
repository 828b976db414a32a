#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "monrex/matrix.hpp"

namespace monrex {

enum class LayerKind { kDense, kConv2d, kMaxPool2x2, kSoftmax };
enum class Activation { kRelu, kTanh, kLinear, kNone };
enum class Padding { kSame, kValid };

std::string_view to_string(LayerKind kind);
std::string_view to_string(Activation activation);
std::string_view to_string(Padding padding);

// Either a flat vector {length} or an image {height, width, channels}.
struct Shape {
  std::vector<std::size_t> dims;

  bool spatial() const { return dims.size() == 3; }
  std::size_t height() const { return spatial() ? dims[0] : 1; }
  std::size_t width() const { return spatial() ? dims[1] : 1; }
  std::size_t channels() const { return spatial() ? dims[2] : element_count(); }
  std::size_t element_count() const;

  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& shape);

// Weight layout is (n_in, n_out) row-major for dense and softmax layers and
// (kh, kw, c_in, c_out) row-major for conv2d kernels.
struct LayerSpec {
  LayerKind kind = LayerKind::kDense;
  Activation activation = Activation::kLinear;
  Padding padding = Padding::kSame;
  std::size_t window_height = 0;
  std::size_t window_width = 0;
  std::vector<std::size_t> weight_shape;
  std::vector<double> weights;
  std::vector<double> biases;
  bool output = false;

  bool has_weights() const { return !weight_shape.empty(); }
  std::size_t parameter_count() const { return weights.size() + biases.size(); }

  bool operator==(const LayerSpec&) const = default;
};

struct NetworkModel {
  std::string name;
  Shape input_shape;
  std::vector<LayerSpec> layers;

  // Output shape of every layer; only meaningful on a validated model.
  std::vector<Shape> output_shapes() const;

  bool operator==(const NetworkModel&) const = default;
};

// Throws ValidationError naming the offending layer and field.
void validate_model(const NetworkModel& model);

// `.monn` model files: JSON header with float32 little-endian weight blobs
// encoded as base64. Saving narrows weights to float32.
NetworkModel parse_model(std::string_view text);
NetworkModel load_model(const std::filesystem::path& path);
std::string serialize_model(const NetworkModel& model);
void save_model(const NetworkModel& model, const std::filesystem::path& path);

struct Dataset {
  Matrix examples;
  std::optional<std::vector<int>> labels;
};

enum class DatasetFormat { kCsv, kMond };

// Picks the format from the file extension (`.mond` vs anything else).
DatasetFormat dataset_format_for(const std::filesystem::path& path);

Dataset parse_csv_dataset(std::string_view text, bool has_header);
Dataset parse_mond_dataset(std::string_view bytes);
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     bool csv_has_header = false);
std::string serialize_mond_dataset(const Dataset& dataset);
void save_mond_dataset(const Dataset& dataset, const std::filesystem::path& path);

// Row length must match the model input size.
void check_compatible(const NetworkModel& model, const Dataset& dataset);

// Float blob codec shared by the model and report formats.
std::string encode_float32_blob(const std::vector<double>& values);
std::vector<double> decode_float32_blob(std::string_view base64);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace monrex
