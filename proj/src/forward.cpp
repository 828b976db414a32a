#include "monrex/forward.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include <fmt/format.h>

#include "monrex/error.hpp"
#include "monrex/parallel.hpp"

namespace monrex {
namespace {

double activate(Activation activation, double x) {
  switch (activation) {
    case Activation::kRelu:
      return x > 0.0 ? x : 0.0;
    case Activation::kTanh:
      return std::tanh(x);
    case Activation::kLinear:
    case Activation::kNone:
      return x;
  }
  return x;
}

void affine(const LayerSpec& layer, std::span<const double> in, std::span<double> out) {
  const std::size_t n_in = layer.weight_shape[0];
  const std::size_t n_out = layer.weight_shape[1];
  std::copy(layer.biases.begin(), layer.biases.end(), out.begin());
  for (std::size_t i = 0; i < n_in; ++i) {
    const double x = in[i];
    if (x == 0.0) continue;
    const double* w = layer.weights.data() + i * n_out;
    for (std::size_t j = 0; j < n_out; ++j) out[j] += x * w[j];
  }
}

void softmax_in_place(std::span<double> values) {
  const double peak = *std::max_element(values.begin(), values.end());
  double total = 0.0;
  for (double& v : values) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : values) v /= total;
}

std::size_t pad_before(const LayerSpec& layer, std::size_t kernel) {
  return layer.padding == Padding::kSame ? (kernel - 1) / 2 : 0;
}

void conv2d(const LayerSpec& layer, const Shape& in_shape, const Shape& out_shape,
            std::span<const double> in, std::span<double> out) {
  const std::size_t kh = layer.weight_shape[0];
  const std::size_t kw = layer.weight_shape[1];
  const std::size_t c_in = layer.weight_shape[2];
  const std::size_t c_out = layer.weight_shape[3];
  const auto pt = static_cast<std::ptrdiff_t>(pad_before(layer, kh));
  const auto pl = static_cast<std::ptrdiff_t>(pad_before(layer, kw));
  const auto h = static_cast<std::ptrdiff_t>(in_shape.height());
  const auto w = static_cast<std::ptrdiff_t>(in_shape.width());

  for (std::size_t oy = 0; oy < out_shape.height(); ++oy) {
    for (std::size_t ox = 0; ox < out_shape.width(); ++ox) {
      double* cell = out.data() + (oy * out_shape.width() + ox) * c_out;
      std::copy(layer.biases.begin(), layer.biases.end(), cell);
      for (std::size_t ky = 0; ky < kh; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) - pt;
        if (iy < 0 || iy >= h) continue;
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + kx) - pl;
          if (ix < 0 || ix >= w) continue;
          const double* pixel = in.data() + (iy * w + ix) * static_cast<std::ptrdiff_t>(c_in);
          const double* kernel = layer.weights.data() + (ky * kw + kx) * c_in * c_out;
          for (std::size_t ci = 0; ci < c_in; ++ci) {
            const double x = pixel[ci];
            for (std::size_t co = 0; co < c_out; ++co) cell[co] += x * kernel[ci * c_out + co];
          }
        }
      }
    }
  }
}

void maxpool2x2(const Shape& in_shape, const Shape& out_shape, std::span<const double> in,
                std::span<double> out) {
  const std::size_t c = in_shape.channels();
  const std::size_t w = in_shape.width();
  for (std::size_t oy = 0; oy < out_shape.height(); ++oy) {
    for (std::size_t ox = 0; ox < out_shape.width(); ++ox) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double best = in[((2 * oy) * w + 2 * ox) * c + ch];
        best = std::max(best, in[((2 * oy) * w + 2 * ox + 1) * c + ch]);
        best = std::max(best, in[((2 * oy + 1) * w + 2 * ox) * c + ch]);
        best = std::max(best, in[((2 * oy + 1) * w + 2 * ox + 1) * c + ch]);
        out[(oy * out_shape.width() + ox) * c + ch] = best;
      }
    }
  }
}

void apply_layer(const LayerSpec& layer, const Shape& in_shape, const Shape& out_shape,
                 std::span<const double> in, std::span<double> out) {
  switch (layer.kind) {
    case LayerKind::kDense:
      affine(layer, in, out);
      break;
    case LayerKind::kSoftmax:
      if (layer.has_weights()) {
        affine(layer, in, out);
      } else {
        std::copy(in.begin(), in.end(), out.begin());
      }
      softmax_in_place(out);
      return;
    case LayerKind::kConv2d:
      conv2d(layer, in_shape, out_shape, in, out);
      break;
    case LayerKind::kMaxPool2x2:
      maxpool2x2(in_shape, out_shape, in, out);
      return;
  }
  for (double& v : out) v = activate(layer.activation, v);
}

}  // namespace

const ActivationTensor& ForwardResult::at(int layer) const {
  if (layer == kInputLayer) return input;
  if (layer < 0 || static_cast<std::size_t>(layer) >= layers.size()) {
    throw ValidationError(layer, "layer", "layer index out of range");
  }
  return layers[static_cast<std::size_t>(layer)];
}

ForwardResult forward_all(const NetworkModel& model, const Dataset& data, std::size_t workers) {
  check_compatible(model, data);
  const std::size_t examples = data.examples.rows();
  const auto shapes = model.output_shapes();

  ForwardResult result;
  result.input = ActivationTensor{kInputLayer, model.input_shape, data.examples};
  result.layers.reserve(model.layers.size());
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    result.layers.push_back(ActivationTensor{static_cast<int>(i), shapes[i],
                                             Matrix(examples, shapes[i].element_count())});
  }

  parallel_for(examples, workers, [&](std::size_t example) {
    std::span<const double> in = data.examples.row(example);
    Shape in_shape = model.input_shape;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
      std::span<double> out = result.layers[i].values.row(example);
      apply_layer(model.layers[i], in_shape, shapes[i], in, out);
      for (double v : out) {
        if (!std::isfinite(v)) {
          throw ValidationError(static_cast<int>(i), "activations",
                                fmt::format("non-finite activation for example {}", example));
        }
      }
      in = out;
      in_shape = shapes[i];
    }
  });

  result.labels = argmax_labels(result.layers.back());
  return result;
}

PredictedLabels argmax_labels(const ActivationTensor& outputs) {
  if (outputs.values.rows() == 0 || outputs.values.cols() == 0) {
    throw ValidationError(outputs.layer_index, "activations", "empty output tensor");
  }
  PredictedLabels result;
  result.num_classes = outputs.values.cols();
  result.labels.resize(outputs.values.rows());
  for (std::size_t r = 0; r < outputs.values.rows(); ++r) {
    const auto row = outputs.values.row(r);
    result.labels[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return result;
}

NeuronInputs neuron_inputs(const NetworkModel& model, const ForwardResult& forward, int layer,
                           std::size_t neuron) {
  if (layer < 0 || static_cast<std::size_t>(layer) >= model.layers.size()) {
    throw ValidationError(layer, "layer", "target layer index out of range");
  }
  const LayerSpec& spec = model.layers[static_cast<std::size_t>(layer)];
  if (!spec.has_weights()) {
    throw ValidationError(layer, "kind",
                          fmt::format("{} layer has no weights to explain",
                                      to_string(spec.kind)));
  }
  const ActivationTensor& target = forward.at(layer);
  if (neuron >= target.values.cols()) {
    throw ValidationError(layer, "neuron",
                          fmt::format("neuron {} out of range (layer has {})", neuron,
                                      target.values.cols()));
  }
  const ActivationTensor& source = forward.at(layer - 1);
  const std::size_t examples = source.values.rows();

  NeuronInputs inputs;
  if (spec.kind != LayerKind::kConv2d) {
    const std::size_t n_in = spec.weight_shape[0];
    const std::size_t n_out = spec.weight_shape[1];
    inputs.values = source.values;
    inputs.weights.resize(n_in);
    inputs.sources.resize(n_in);
    for (std::size_t i = 0; i < n_in; ++i) {
      inputs.weights[i] = spec.weights[i * n_out + neuron];
      inputs.sources[i] = NeuronId{layer - 1, static_cast<std::int64_t>(i)};
    }
    inputs.bias = spec.biases[neuron];
    return inputs;
  }

  const std::size_t kh = spec.weight_shape[0];
  const std::size_t kw = spec.weight_shape[1];
  const std::size_t c_in = spec.weight_shape[2];
  const std::size_t c_out = spec.weight_shape[3];
  const std::size_t channel = neuron % c_out;
  const std::size_t position = neuron / c_out;
  const std::size_t oy = position / target.shape.width();
  const std::size_t ox = position % target.shape.width();
  const auto pt = static_cast<std::ptrdiff_t>(pad_before(spec, kh));
  const auto pl = static_cast<std::ptrdiff_t>(pad_before(spec, kw));
  const auto h = static_cast<std::ptrdiff_t>(source.shape.height());
  const auto w = static_cast<std::ptrdiff_t>(source.shape.width());

  const std::size_t fan_in = kh * kw * c_in;
  inputs.values = Matrix(examples, fan_in);
  inputs.weights.resize(fan_in);
  inputs.sources.resize(fan_in);
  inputs.bias = spec.biases[channel];
  for (std::size_t ky = 0; ky < kh; ++ky) {
    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) - pt;
    for (std::size_t kx = 0; kx < kw; ++kx) {
      const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + kx) - pl;
      const bool inside = iy >= 0 && iy < h && ix >= 0 && ix < w;
      for (std::size_t ci = 0; ci < c_in; ++ci) {
        const std::size_t col = (ky * kw + kx) * c_in + ci;
        inputs.weights[col] = spec.weights[col * c_out + channel];
        if (!inside) {
          inputs.sources[col] = NeuronId{layer - 1, kPaddingNeuron};
          continue;
        }
        const std::size_t src = static_cast<std::size_t>(iy * w + ix) * c_in + ci;
        inputs.sources[col] = NeuronId{layer - 1, static_cast<std::int64_t>(src)};
        for (std::size_t r = 0; r < examples; ++r) inputs.values(r, col) = source.values(r, src);
      }
    }
  }
  return inputs;
}

}  // namespace monrex
