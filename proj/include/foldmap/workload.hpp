#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "foldmap/tensor.hpp"

namespace foldmap {

struct OutputDims {
  int out_height = 0;  // Q, from in_height and kern_height
  int out_width = 0;   // P, from in_width and kern_width

  friend bool operator==(const OutputDims&, const OutputDims&) = default;
};

// One convolution layer. Input is (batch_n, in_channels, in_height, in_width),
// filters are (num_filters, in_channels, kern_height, kern_width).
struct ConvLayerSpec {
  std::string name;
  int batch_n = 1;
  int in_channels = 1;
  int in_height = 1;
  int in_width = 1;
  int num_filters = 1;
  int kern_height = 1;
  int kern_width = 1;
  int stride = 1;
  int pad = 0;

  // Throws ConfigError when a dimension is out of range or the stride does
  // not evenly divide the padded extent difference.
  void validate() const;

  int padded_height() const { return in_height + 2 * pad; }
  int padded_width() const { return in_width + 2 * pad; }

  Tensor4D::Shape input_shape() const { return {batch_n, in_channels, in_height, in_width}; }
  Tensor4D::Shape filter_shape() const { return {num_filters, in_channels, kern_height, kern_width}; }
  Tensor4D::Shape output_shape() const;

  // Multiply-accumulate count of the layer, N*P*Q*N_F*C*R*S.
  std::int64_t mac_count() const;
  std::int64_t weight_count() const;
  std::int64_t input_count() const;

  friend bool operator==(const ConvLayerSpec&, const ConvLayerSpec&) = default;
};

OutputDims derive_output_dims(const ConvLayerSpec& layer);

// Seven nested loops, no reordering. Zero padding is applied on the fly.
Tensor4D reference_convolution(const Tensor4D& input, const Tensor4D& filters, const ConvLayerSpec& layer);

// Same arithmetic as reference_convolution with (image, filter) pairs spread
// over OpenMP threads. Each output element keeps the serial summation order,
// so results are bit-identical to the serial oracle.
Tensor4D reference_convolution_parallel(const Tensor4D& input, const Tensor4D& filters, const ConvLayerSpec& layer);

// 56x56xD inputs with 3x3xDxD filters, D in {64, 128, 256, 512}.
std::vector<ConvLayerSpec> synthetic_suite();

// The thirteen VGG-16 convolution layers, batch 1.
std::vector<ConvLayerSpec> vgg16_suite();

// The 4-channel 5x5 worked example (4 filters of 3x3, pad 1).
std::vector<ConvLayerSpec> example_suite();

// A fixed corpus of small layers used for functional verification.
std::vector<ConvLayerSpec> small_suite();

// "synthetic", "vgg16", "example", "small"; throws ConfigError otherwise.
std::vector<ConvLayerSpec> suite_by_name(const std::string& name);

// Sum of 2*P*Q*N_F*C*R*S over the layers (multiply and add counted apart).
std::int64_t total_ops(std::span<const ConvLayerSpec> layers);

// Plain-text layer files: one layer per line,
//   name, N, C, X, Y, N_F, R, S, stride, pad
// Blank lines and '#' comments are skipped. Errors carry the line number.
std::vector<ConvLayerSpec> parse_layer_file(std::istream& in);
std::vector<ConvLayerSpec> load_layer_file(const std::string& path);
void write_layer_file(std::ostream& out, std::span<const ConvLayerSpec> layers);

// A single line of the layer-file format. The name may be omitted, leaving
// nine numeric fields N, C, X, Y, N_F, R, S, stride, pad.
ConvLayerSpec parse_layer_line(const std::string& line, const std::string& default_name = "custom");

}  // namespace foldmap
