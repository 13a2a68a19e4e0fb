#include "foldmap/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "foldmap/error.hpp"

namespace foldmap {

namespace {

std::size_t element_count(const Tensor4D::Shape& shape) {
  std::size_t count = 1;
  for (int extent : shape) {
    if (extent < 0) throw ShapeError("negative tensor extent in " + shape_string(shape));
    count *= static_cast<std::size_t>(extent);
  }
  return count;
}

}  // namespace

Tensor4D::Tensor4D(Shape shape, float fill) : shape_(shape), values_(element_count(shape), fill) {}

Tensor4D::Tensor4D(Shape shape, std::vector<float> values) : shape_(shape), values_(std::move(values)) {
  if (values_.size() != element_count(shape_)) {
    throw ShapeError("tensor " + shape_string(shape_) + " needs " + std::to_string(element_count(shape_)) +
                     " values, got " + std::to_string(values_.size()));
  }
}

std::string shape_string(const Tensor4D::Shape& shape) {
  return "(" + std::to_string(shape[0]) + ", " + std::to_string(shape[1]) + ", " + std::to_string(shape[2]) + ", " +
         std::to_string(shape[3]) + ")";
}

DataMode parse_data_mode(const std::string& text) {
  if (text == "int" || text == "integer") return DataMode::kInteger;
  if (text == "fp32" || text == "float") return DataMode::kFloat32;
  throw ConfigError("unknown data mode '" + text + "' (expected int or fp32)");
}

std::string to_string(DataMode mode) { return mode == DataMode::kInteger ? "int" : "fp32"; }

Tensor4D random_tensor(Tensor4D::Shape shape, DataMode mode, std::uint64_t seed) {
  Tensor4D tensor(shape);
  std::mt19937_64 rng(seed);
  if (mode == DataMode::kInteger) {
    std::uniform_int_distribution<int> dist(-8, 8);
    for (float& v : tensor.values()) v = static_cast<float>(dist(rng));
  } else {
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    for (float& v : tensor.values()) v = dist(rng);
  }
  return tensor;
}

double max_abs_deviation(const Tensor4D& actual, const Tensor4D& reference) {
  if (actual.shape() != reference.shape()) {
    throw ShapeError("cannot compare " + shape_string(actual.shape()) + " with " + shape_string(reference.shape()));
  }
  double worst = 0.0;
  auto a = actual.values();
  auto b = reference.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return worst;
}

double max_relative_deviation(const Tensor4D& actual, const Tensor4D& reference) {
  double scale = 0.0;
  for (float v : reference.values()) scale = std::max(scale, std::abs(static_cast<double>(v)));
  const double diff = max_abs_deviation(actual, reference);
  if (diff == 0.0) return 0.0;
  return diff / std::max(scale, 1e-30);
}

}  // namespace foldmap
