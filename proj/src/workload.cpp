#include "foldmap/workload.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "foldmap/error.hpp"

namespace foldmap {

void ConvLayerSpec::validate() const {
  const std::array<std::pair<const char*, int>, 8> positive{{{"N", batch_n},
                                                             {"C", in_channels},
                                                             {"X", in_height},
                                                             {"Y", in_width},
                                                             {"N_F", num_filters},
                                                             {"R", kern_height},
                                                             {"S", kern_width},
                                                             {"stride", stride}}};
  for (const auto& [label, value] : positive) {
    if (value < 1) {
      throw ConfigError("layer '" + name + "': " + label + " must be >= 1, got " + std::to_string(value));
    }
  }
  if (pad < 0) throw ConfigError("layer '" + name + "': pad must be >= 0, got " + std::to_string(pad));

  const int span_h = padded_height() - kern_height;
  const int span_w = padded_width() - kern_width;
  if (span_h < 0 || span_w < 0) {
    throw ConfigError("layer '" + name + "': kernel larger than padded input");
  }
  if (span_h % stride != 0 || span_w % stride != 0) {
    throw ConfigError("layer '" + name + "': stride " + std::to_string(stride) +
                      " does not evenly divide the padded extent difference (" + std::to_string(span_h) + ", " +
                      std::to_string(span_w) + ")");
  }
}

OutputDims derive_output_dims(const ConvLayerSpec& layer) {
  layer.validate();
  return OutputDims{
      .out_height = (layer.padded_height() - layer.kern_height) / layer.stride + 1,
      .out_width = (layer.padded_width() - layer.kern_width) / layer.stride + 1,
  };
}

Tensor4D::Shape ConvLayerSpec::output_shape() const {
  const OutputDims out = derive_output_dims(*this);
  return {batch_n, num_filters, out.out_height, out.out_width};
}

std::int64_t ConvLayerSpec::mac_count() const {
  const OutputDims out = derive_output_dims(*this);
  return std::int64_t{batch_n} * out.out_height * out.out_width * num_filters * in_channels * kern_height *
         kern_width;
}

std::int64_t ConvLayerSpec::weight_count() const {
  return std::int64_t{num_filters} * in_channels * kern_height * kern_width;
}

std::int64_t ConvLayerSpec::input_count() const {
  return std::int64_t{batch_n} * in_channels * in_height * in_width;
}

namespace {

void check_shapes(const Tensor4D& input, const Tensor4D& filters, const ConvLayerSpec& layer) {
  if (input.shape() != layer.input_shape()) {
    throw ShapeError("input " + shape_string(input.shape()) + " does not match layer '" + layer.name + "' " +
                     shape_string(layer.input_shape()));
  }
  if (filters.shape() != layer.filter_shape()) {
    throw ShapeError("filters " + shape_string(filters.shape()) + " do not match layer '" + layer.name + "' " +
                     shape_string(layer.filter_shape()));
  }
}

// One output element; summation order c, r, s.
float convolve_at(const Tensor4D& input, const Tensor4D& filters, const ConvLayerSpec& layer, int n, int f, int q,
                  int p) {
  float acc = 0.0f;
  for (int c = 0; c < layer.in_channels; ++c) {
    for (int r = 0; r < layer.kern_height; ++r) {
      const int row = q * layer.stride + r - layer.pad;
      for (int s = 0; s < layer.kern_width; ++s) {
        const int col = p * layer.stride + s - layer.pad;
        const bool inside = row >= 0 && row < layer.in_height && col >= 0 && col < layer.in_width;
        const float x = inside ? input.at(n, c, row, col) : 0.0f;
        acc += filters.at(f, c, r, s) * x;
      }
    }
  }
  return acc;
}

}  // namespace

Tensor4D reference_convolution(const Tensor4D& input, const Tensor4D& filters, const ConvLayerSpec& layer) {
  check_shapes(input, filters, layer);
  Tensor4D output(layer.output_shape());
  const int q_count = output.extent(2);
  const int p_count = output.extent(3);
  for (int n = 0; n < layer.batch_n; ++n)
    for (int f = 0; f < layer.num_filters; ++f)
      for (int q = 0; q < q_count; ++q)
        for (int p = 0; p < p_count; ++p) output.at(n, f, q, p) = convolve_at(input, filters, layer, n, f, q, p);
  return output;
}

Tensor4D reference_convolution_parallel(const Tensor4D& input, const Tensor4D& filters, const ConvLayerSpec& layer) {
  check_shapes(input, filters, layer);
  Tensor4D output(layer.output_shape());
  const int q_count = output.extent(2);
  const int p_count = output.extent(3);
  const int batch = layer.batch_n;
  const int nf = layer.num_filters;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < batch; ++n)
    for (int f = 0; f < nf; ++f)
      for (int q = 0; q < q_count; ++q)
        for (int p = 0; p < p_count; ++p) output.at(n, f, q, p) = convolve_at(input, filters, layer, n, f, q, p);
  return output;
}

namespace {

ConvLayerSpec square_layer(std::string name, int size, int channels, int filters, int kernel = 3, int stride = 1,
                           int pad = 1) {
  return ConvLayerSpec{.name = std::move(name),
                       .batch_n = 1,
                       .in_channels = channels,
                       .in_height = size,
                       .in_width = size,
                       .num_filters = filters,
                       .kern_height = kernel,
                       .kern_width = kernel,
                       .stride = stride,
                       .pad = pad};
}

}  // namespace

std::vector<ConvLayerSpec> synthetic_suite() {
  std::vector<ConvLayerSpec> suite;
  for (int depth : {64, 128, 256, 512}) {
    const std::string d = std::to_string(depth);
    suite.push_back(square_layer("3x3x" + d + "x" + d, 56, depth, depth));
  }
  return suite;
}

std::vector<ConvLayerSpec> vgg16_suite() {
  return {
      square_layer("1.1", 224, 3, 64),    square_layer("1.2", 224, 64, 64),   square_layer("2.1", 112, 64, 128),
      square_layer("2.2", 112, 128, 128), square_layer("3.1", 56, 128, 256),  square_layer("3.2", 56, 256, 256),
      square_layer("3.3", 56, 256, 256),  square_layer("4.1", 28, 256, 512),  square_layer("4.2", 28, 512, 512),
      square_layer("4.3", 28, 512, 512),  square_layer("5.1", 14, 512, 512),  square_layer("5.2", 14, 512, 512),
      square_layer("5.3", 14, 512, 512),
  };
}

std::vector<ConvLayerSpec> example_suite() { return {square_layer("example", 5, 4, 4)}; }

std::vector<ConvLayerSpec> small_suite() {
  std::vector<ConvLayerSpec> suite = example_suite();
  suite.push_back(square_layer("s2_5x5", 5, 4, 4, 3, 2, 1));
  suite.push_back(square_layer("k1_identity", 6, 3, 5, 1, 1, 0));
  suite.push_back(square_layer("k5_pad2", 9, 2, 6, 5, 1, 2));
  suite.push_back(square_layer("k3_s3", 12, 5, 7, 3, 3, 0));
  suite.push_back(ConvLayerSpec{.name = "batch2_rect",
                                .batch_n = 2,
                                .in_channels = 3,
                                .in_height = 6,
                                .in_width = 9,
                                .num_filters = 5,
                                .kern_height = 3,
                                .kern_width = 3,
                                .stride = 1,
                                .pad = 1});
  suite.push_back(square_layer("deep8", 8, 8, 8, 3, 1, 1));
  return suite;
}

std::vector<ConvLayerSpec> suite_by_name(const std::string& name) {
  if (name == "synthetic") return synthetic_suite();
  if (name == "vgg16") return vgg16_suite();
  if (name == "example") return example_suite();
  if (name == "small") return small_suite();
  throw ConfigError("unknown suite '" + name + "' (expected synthetic, vgg16, example, or small)");
}

std::int64_t total_ops(std::span<const ConvLayerSpec> layers) {
  std::int64_t ops = 0;
  for (const ConvLayerSpec& layer : layers) {
    const OutputDims out = derive_output_dims(layer);
    ops += 2 * std::int64_t{out.out_width} * out.out_height * layer.num_filters * layer.in_channels *
           layer.kern_height * layer.kern_width;
  }
  return ops;
}

namespace {

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  return std::string(text.substr(first, last - first + 1));
}

int parse_int_field(const std::string& field, const char* label) {
  int value = 0;
  const char* begin = field.data();
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError(std::string("field ") + label + ": expected an integer, got '" + field + "'");
  }
  return value;
}

}  // namespace

ConvLayerSpec parse_layer_line(const std::string& line, const std::string& default_name) {
  std::vector<std::string> fields;
  std::stringstream stream(line);
  std::string field;
  while (std::getline(stream, field, ',')) fields.push_back(trim(field));

  std::size_t first_numeric = 0;
  ConvLayerSpec layer;
  if (fields.size() == 10) {
    layer.name = fields[0];
    first_numeric = 1;
    if (layer.name.empty()) throw ConfigError("empty layer name");
  } else if (fields.size() == 9) {
    layer.name = default_name;
  } else {
    throw ConfigError("expected 'name, N, C, X, Y, N_F, R, S, stride, pad' (10 fields), got " +
                      std::to_string(fields.size()));
  }

  static constexpr std::array<const char*, 9> kLabels{"N", "C", "X", "Y", "N_F", "R", "S", "stride", "pad"};
  std::array<int, 9> v{};
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = parse_int_field(fields[first_numeric + i], kLabels[i]);
  layer.batch_n = v[0];
  layer.in_channels = v[1];
  layer.in_height = v[2];
  layer.in_width = v[3];
  layer.num_filters = v[4];
  layer.kern_height = v[5];
  layer.kern_width = v[6];
  layer.stride = v[7];
  layer.pad = v[8];
  layer.validate();
  return layer;
}

std::vector<ConvLayerSpec> parse_layer_file(std::istream& in) {
  std::vector<ConvLayerSpec> layers;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    try {
      layers.push_back(parse_layer_line(line, "layer" + std::to_string(line_no)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (layers.empty()) throw ConfigError("layer file contains no layers");
  return layers;
}

std::vector<ConvLayerSpec> load_layer_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open layer file '" + path + "'");
  try {
    return parse_layer_file(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_layer_file(std::ostream& out, std::span<const ConvLayerSpec> layers) {
  out << "# name, N, C, X, Y, N_F, R, S, stride, pad\n";
  for (const ConvLayerSpec& l : layers) {
    out << l.name << ", " << l.batch_n << ", " << l.in_channels << ", " << l.in_height << ", " << l.in_width << ", "
        << l.num_filters << ", " << l.kern_height << ", " << l.kern_width << ", " << l.stride << ", " << l.pad << "\n";
  }
}

}  // namespace foldmap
