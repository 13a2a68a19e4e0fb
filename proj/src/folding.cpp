#include "foldmap/folding.hpp"

#include <algorithm>
#include <charconv>
#include <unordered_set>

#include "foldmap/error.hpp"

namespace foldmap {

PEArrayConfig parse_array_dims(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) throw ConfigError("array dims '" + text + "' must look like RxC");
  auto parse = [&](std::string_view part) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc{} || ptr != part.data() + part.size() || value < 1) {
      throw ConfigError("array dims '" + text + "' must be two positive integers RxC");
    }
    return value;
  };
  const std::string_view view(text);
  return PEArrayConfig{.rows = parse(view.substr(0, x)), .cols = parse(view.substr(x + 1))};
}

int channel_width(const ConvLayerSpec& layer) { return layer.kern_width * (layer.kern_height + 1); }

FlatFilterMatrix::FlatFilterMatrix(int rows, int cols, int channel_width)
    : rows_(rows),
      cols_(cols),
      channel_width_(channel_width),
      entries_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)),
      values_(entries_.size(), 0.0f) {}

void FlatFilterMatrix::set(int row, int col, FlatEntry entry, float value) {
  entries_[index(row, col)] = entry;
  values_[index(row, col)] = value;
}

int flat_column(const ConvLayerSpec& layer, int channel, int kern_row, int kern_col) {
  const int group = layer.kern_width - 1 - kern_col;
  return channel * channel_width(layer) + group * (layer.kern_height + 1) + kern_row;
}

FlatFilterMatrix flatten_filters(const Tensor4D& filters, const ConvLayerSpec& layer) {
  if (filters.shape() != layer.filter_shape()) {
    throw ShapeError("filters " + shape_string(filters.shape()) + " do not match layer '" + layer.name + "' " +
                     shape_string(layer.filter_shape()));
  }
  const int w_ch = channel_width(layer);
  FlatFilterMatrix flat(layer.num_filters, layer.in_channels * w_ch, w_ch);
  // Reserved cells are the default-constructed entries; only weights are set.
  for (int f = 0; f < layer.num_filters; ++f)
    for (int c = 0; c < layer.in_channels; ++c)
      for (int s = layer.kern_width - 1; s >= 0; --s)
        for (int r = 0; r < layer.kern_height; ++r)
          flat.set(f, flat_column(layer, c, r, s), FlatEntry{WeightIndex{f, c, r, s}}, filters.at(f, c, r, s));
  return flat;
}

FoldGeometry fold_geometry(const ConvLayerSpec& layer, const PEArrayConfig& array) {
  if (array.rows < 1 || array.cols < 1) throw ConfigError("PE array dims must be positive, got " + array.label());
  const int w_ch = channel_width(layer);
  if (array.cols < w_ch) throw UnmappableLayer(layer.name, w_ch, array.cols);
  const int per_fold = array.cols / w_ch;
  return FoldGeometry{
      .fold_rows = std::min(array.rows, layer.num_filters),
      .fold_cols = per_fold * w_ch,
      .channels_per_fold = per_fold,
  };
}

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

}  // namespace

bool FoldPlan::any_fold_underfills() const {
  return std::any_of(filter_folds.begin(), filter_folds.end(),
                     [&](const FilterFold& f) { return f.height * f.width < array.cell_count(); });
}

FoldPlan enumerate_filter_folds(const ConvLayerSpec& layer, const PEArrayConfig& array) {
  FoldPlan plan;
  plan.layer = layer;
  plan.array = array;
  plan.out = derive_output_dims(layer);
  const FoldGeometry geom = fold_geometry(layer, array);
  plan.w_ch = channel_width(layer);
  plan.channels_per_fold = geom.channels_per_fold;
  plan.fold_rows = geom.fold_rows;
  plan.fold_cols = geom.fold_cols;
  plan.n_ft_row = ceil_div(layer.num_filters, array.rows);
  plan.n_ft_col = ceil_div(layer.in_channels, geom.channels_per_fold);
  plan.total_folds = plan.n_ft_row * plan.n_ft_col;

  plan.filter_folds.reserve(static_cast<std::size_t>(plan.total_folds));
  for (int row = 0; row < plan.n_ft_row; ++row) {
    const IndexRange filters{row * array.rows, std::min((row + 1) * array.rows, layer.num_filters)};
    for (int col = 0; col < plan.n_ft_col; ++col) {
      const IndexRange channels{col * geom.channels_per_fold,
                                std::min((col + 1) * geom.channels_per_fold, layer.in_channels)};
      FilterFold fold;
      fold.index = row * plan.n_ft_col + col;
      fold.row_split = row;
      fold.col_split = col;
      fold.filters = filters;
      fold.channels = channels;
      fold.height = filters.size();
      fold.width = channels.size() * plan.w_ch;
      fold.flat_col_begin = channels.begin * plan.w_ch;
      fold.is_partial = fold.height < array.rows || channels.size() < geom.channels_per_fold;
      plan.filter_folds.push_back(fold);
    }
  }
  return plan;
}

std::vector<ImageFold> enumerate_image_folds(int block_id, IndexRange channels, const ConvLayerSpec& layer) {
  const OutputDims out = derive_output_dims(layer);
  std::vector<ImageFold> folds;
  folds.reserve(static_cast<std::size_t>(out.out_width) * static_cast<std::size_t>(layer.batch_n));
  for (int n = 0; n < layer.batch_n; ++n) {
    // Columns loaded so far for this image; a new image starts from scratch.
    std::unordered_set<int> seen;
    for (int p = 0; p < out.out_width; ++p) {
      ImageFold fold{.block_id = block_id, .image = n, .origin = p, .columns = {}, .depth = channels};
      const int first = p * layer.stride;
      for (int col = first + layer.kern_width - 1; col >= first; --col) {
        if (seen.insert(col).second) fold.columns.push_back(col);
      }
      folds.push_back(std::move(fold));
    }
  }
  return folds;
}

std::vector<ImageBlock> enumerate_image_blocks(const FoldPlan& plan, bool with_folds) {
  std::vector<ImageBlock> blocks;
  blocks.reserve(static_cast<std::size_t>(plan.n_ft_col));
  // The first row split carries every channel range once.
  for (int col = 0; col < plan.n_ft_col; ++col) {
    const FilterFold& fold = plan.fold_at(0, col);
    ImageBlock block;
    block.id = col;
    block.channels = fold.channels;
    block.block_length = plan.out.out_width * plan.layer.batch_n;
    if (with_folds) block.folds = enumerate_image_folds(block.id, block.channels, plan.layer);
    blocks.push_back(std::move(block));
  }
  return blocks;
}

FoldPlan make_fold_plan(const ConvLayerSpec& layer, const PEArrayConfig& array, bool with_image_folds) {
  FoldPlan plan = enumerate_filter_folds(layer, array);
  plan.image_blocks = enumerate_image_blocks(plan, with_image_folds);
  return plan;
}

}  // namespace foldmap
