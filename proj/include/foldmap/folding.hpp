#pragma once

#include <optional>
#include <string>
#include <vector>

#include "foldmap/pe_array_config.hpp"
#include "foldmap/tensor.hpp"
#include "foldmap/workload.hpp"

namespace foldmap {

// Half-open index range [begin, end).
struct IndexRange {
  int begin = 0;
  int end = 0;

  int size() const { return end - begin; }
  bool contains(int i) const { return i >= begin && i < end; }

  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct WeightIndex {
  int filter = 0;
  int channel = 0;
  int row = 0;
  int col = 0;

  friend bool operator==(const WeightIndex&, const WeightIndex&) = default;
};

// A cell of the flattened filter matrix: a weight, or a reserved reduction
// column when `weight` is empty.
struct FlatEntry {
  std::optional<WeightIndex> weight;

  bool reserved() const { return !weight.has_value(); }
  friend bool operator==(const FlatEntry&, const FlatEntry&) = default;
};

// Per-channel footprint in PE columns: S groups of R weights plus one reserved
// column per group.
int channel_width(const ConvLayerSpec& layer);

// The filter tensor laid out as N_F rows by C * W_ch columns. Channels run
// left to right; inside a channel the kernel columns appear last-to-first,
// each as R weights top to bottom followed by a reserved column.
class FlatFilterMatrix {
 public:
  FlatFilterMatrix(int rows, int cols, int channel_width);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int channel_width() const { return channel_width_; }

  const FlatEntry& entry(int row, int col) const { return entries_[index(row, col)]; }
  float value(int row, int col) const { return values_[index(row, col)]; }

  void set(int row, int col, FlatEntry entry, float value);

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(col);
  }

  int rows_;
  int cols_;
  int channel_width_;
  std::vector<FlatEntry> entries_;
  std::vector<float> values_;
};

// Column of the flat matrix that holds weight (c, r, s) for any filter row.
int flat_column(const ConvLayerSpec& layer, int channel, int kern_row, int kern_col);

FlatFilterMatrix flatten_filters(const Tensor4D& filters, const ConvLayerSpec& layer);

struct FoldGeometry {
  int fold_rows = 0;
  int fold_cols = 0;
  int channels_per_fold = 0;
};

// Throws UnmappableLayer when C_P < W_ch.
FoldGeometry fold_geometry(const ConvLayerSpec& layer, const PEArrayConfig& array);

struct FilterFold {
  int index = 0;      // row_split * n_ft_col + col_split
  int row_split = 0;  // which group of R_P filters
  int col_split = 0;  // which group of channels; equals the image block id
  IndexRange filters;
  IndexRange channels;
  int height = 0;      // filters in this fold
  int width = 0;       // channels.size() * W_ch
  int flat_col_begin = 0;
  bool is_partial = false;  // fewer filters than R_P or fewer channels than channels_per_fold
};

struct ImageFold {
  int block_id = 0;
  int image = 0;
  int origin = 0;            // output column p this fold introduces
  std::vector<int> columns;  // padded-input columns loaded fresh, last-to-first
  IndexRange depth;
};

struct ImageBlock {
  int id = 0;
  IndexRange channels;
  std::vector<ImageFold> folds;  // image-major, then p ascending
  int block_length = 0;          // P * N
};

struct FoldPlan {
  ConvLayerSpec layer;
  PEArrayConfig array;
  OutputDims out;
  int w_ch = 0;
  int channels_per_fold = 0;
  int fold_rows = 0;
  int fold_cols = 0;
  int n_ft_row = 0;
  int n_ft_col = 0;
  int total_folds = 0;
  std::vector<FilterFold> filter_folds;
  std::vector<ImageBlock> image_blocks;

  const FilterFold& fold_at(int row_split, int col_split) const {
    return filter_folds[static_cast<std::size_t>(row_split * n_ft_col + col_split)];
  }

  // Each (block, row split) pairing is one fold interaction; their number
  // equals total_folds.
  int block_instances() const { return static_cast<int>(image_blocks.size()) * n_ft_row; }

  // Folds that leave part of the array unused; Table-style "Partial" when any.
  bool any_fold_underfills() const;
  std::string fold_type() const { return any_fold_underfills() ? "Partial" : "Full"; }
};

// Filter side: geometry, split counts (ceilings) and the fold list.
FoldPlan enumerate_filter_folds(const ConvLayerSpec& layer, const PEArrayConfig& array);

// Image side: one block per column split, each with P * N folds. With
// with_folds=false the blocks keep only their channel range and length.
std::vector<ImageBlock> enumerate_image_blocks(const FoldPlan& plan, bool with_folds = true);

// Folds of one block: window {p*stride .. p*stride+S-1}, reversed, minus the
// columns already loaded for the same image.
std::vector<ImageFold> enumerate_image_folds(int block_id, IndexRange channels, const ConvLayerSpec& layer);

// Both sides. Analytical runs on large layers pass with_image_folds=false.
FoldPlan make_fold_plan(const ConvLayerSpec& layer, const PEArrayConfig& array, bool with_image_folds = true);

}  // namespace foldmap
