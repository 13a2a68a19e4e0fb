#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace foldmap {

// Dense 4-D float tensor in (image, channel, row, column) order.
// Filters use the same layout as (filter, channel, kern_row, kern_col).
class Tensor4D {
 public:
  using Shape = std::array<int, 4>;

  Tensor4D() = default;
  explicit Tensor4D(Shape shape, float fill = 0.0f);
  Tensor4D(Shape shape, std::vector<float> values);

  const Shape& shape() const { return shape_; }
  int extent(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
  std::size_t size() const { return values_.size(); }

  std::size_t offset(int i0, int i1, int i2, int i3) const {
    return ((static_cast<std::size_t>(i0) * static_cast<std::size_t>(shape_[1]) +
             static_cast<std::size_t>(i1)) *
                static_cast<std::size_t>(shape_[2]) +
            static_cast<std::size_t>(i2)) *
               static_cast<std::size_t>(shape_[3]) +
           static_cast<std::size_t>(i3);
  }

  float& at(int i0, int i1, int i2, int i3) { return values_[offset(i0, i1, i2, i3)]; }
  float at(int i0, int i1, int i2, int i3) const { return values_[offset(i0, i1, i2, i3)]; }

  std::span<float> values() { return values_; }
  std::span<const float> values() const { return values_; }

  friend bool operator==(const Tensor4D&, const Tensor4D&) = default;

 private:
  Shape shape_{0, 0, 0, 0};
  std::vector<float> values_;
};

std::string shape_string(const Tensor4D::Shape& shape);

enum class DataMode { kInteger, kFloat32 };

DataMode parse_data_mode(const std::string& text);
std::string to_string(DataMode mode);

// Integer mode draws from [-8, 8] so every FP32 sum in the test range is
// exact; float mode draws uniformly from [-1, 1).
Tensor4D random_tensor(Tensor4D::Shape shape, DataMode mode, std::uint64_t seed);

// max|a-b| / max(max|b|, tiny); b is the reference.
double max_relative_deviation(const Tensor4D& actual, const Tensor4D& reference);
double max_abs_deviation(const Tensor4D& actual, const Tensor4D& reference);

}  // namespace foldmap
