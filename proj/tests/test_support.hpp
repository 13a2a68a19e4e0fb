#pragma once

#include <cstdint>
#include <random>

#include "foldmap/pe_array_config.hpp"
#include "foldmap/tensor.hpp"
#include "foldmap/workload.hpp"

namespace foldmap::testing {

// Deterministic integer pattern ((i * mul + add) % 17) - 8 over the flat index.
inline Tensor4D patterned(Tensor4D::Shape shape, int mul, int add) {
  Tensor4D t(shape);
  auto values = t.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<float>(static_cast<int>((i * static_cast<std::size_t>(mul) + static_cast<std::size_t>(add)) % 17) - 8);
  }
  return t;
}

inline ConvLayerSpec worked_example_layer() {
  return ConvLayerSpec{.name = "worked_example",
                       .batch_n = 1,
                       .in_channels = 4,
                       .in_height = 5,
                       .in_width = 5,
                       .num_filters = 4,
                       .kern_height = 3,
                       .kern_width = 3,
                       .stride = 1,
                       .pad = 1};
}

inline constexpr PEArrayConfig kWorkedExampleArray{4, 24};

struct LayerCase {
  ConvLayerSpec layer;
  PEArrayConfig array;
};

// Draws from N <= 2, C <= 8, X=Y <= 12, N_F <= 8, R=S in {1,3,5},
// stride in {1,2,3}, pad in {0,1,2}; resamples until the layer is valid and
// the array holds at least one channel.
inline LayerCase random_case(std::mt19937_64& rng) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  constexpr int kKernels[] = {1, 3, 5};
  for (;;) {
    ConvLayerSpec l;
    l.name = "rand";
    l.batch_n = pick(1, 2);
    l.in_channels = pick(1, 8);
    l.in_height = l.in_width = pick(1, 12);
    l.num_filters = pick(1, 8);
    l.kern_height = l.kern_width = kKernels[pick(0, 2)];
    l.stride = pick(1, 3);
    l.pad = pick(0, 2);
    const int span = l.in_height + 2 * l.pad - l.kern_height;
    if (span < 0 || span % l.stride != 0) continue;
    const int w_ch = l.kern_width * (l.kern_height + 1);
    PEArrayConfig array{pick(1, 10), pick(w_ch, 3 * w_ch + 5)};
    return {l, array};
  }
}

// Layers whose filter folds all fill R_P rows and floor(C_P/W_ch) channels.
inline LayerCase full_fold_case(std::mt19937_64& rng) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  constexpr int kKernels[] = {1, 3, 5};
  for (;;) {
    ConvLayerSpec l;
    l.name = "full";
    l.batch_n = 1;
    l.kern_height = l.kern_width = kKernels[pick(0, 2)];
    l.stride = pick(1, 3);
    l.pad = pick(0, 2);
    l.in_height = l.in_width = pick(1, 12);
    const int span = l.in_height + 2 * l.pad - l.kern_height;
    if (span < 0 || span % l.stride != 0) continue;
    const int w_ch = l.kern_width * (l.kern_height + 1);
    const int rows = pick(1, 6);
    const int cpf = pick(1, 3);
    l.num_filters = rows * pick(1, 2);
    l.in_channels = cpf * pick(1, 3);
    return {l, {rows, cpf * w_ch + pick(0, w_ch - 1)}};
  }
}

}  // namespace foldmap::testing
