#include "foldmap/fabric.hpp"

#include <algorithm>
#include <exception>
#include <string>

#include "foldmap/error.hpp"

namespace foldmap {

EventCounters& EventCounters::operator+=(const EventCounters& other) {
  weight_loads += other.weight_loads;
  multicasts += other.multicasts;
  forwards += other.forwards;
  macs += other.macs;
  stage1_reductions += other.stage1_reductions;
  stage2_reductions += other.stage2_reductions;
  stage3_reductions += other.stage3_reductions;
  shifts += other.shifts;
  for (const auto& [active, steps] : other.active_pe_per_cycle) active_pe_per_cycle[active] += steps;
  return *this;
}

EventCounters operator+(EventCounters lhs, const EventCounters& rhs) {
  lhs += rhs;
  return lhs;
}

int EventCounters::peak_active_pes() const {
  return active_pe_per_cycle.empty() ? 0 : active_pe_per_cycle.rbegin()->first;
}

PEGrid::PEGrid(PEArrayConfig config, FilterFold fold, int kern_height, int kern_width)
    : config_(config),
      fold_(std::move(fold)),
      kern_height_(kern_height),
      kern_width_(kern_width),
      cells_(static_cast<std::size_t>(config.cell_count())) {}

int PEGrid::active_cells() const {
  return static_cast<int>(
      std::count_if(cells_.begin(), cells_.end(), [](const PEState& s) { return s.kind != PEState::Kind::kIdle; }));
}

PartialSumStore::PartialSumStore(const FoldPlan& plan)
    : blocks_(static_cast<int>(plan.image_blocks.size())),
      images_(plan.layer.batch_n),
      filters_(plan.layer.num_filters),
      q_count_(plan.out.out_height),
      p_count_(plan.out.out_width) {
  const std::size_t slots = static_cast<std::size_t>(blocks_) * static_cast<std::size_t>(images_) *
                            static_cast<std::size_t>(filters_) * static_cast<std::size_t>(q_count_) *
                            static_cast<std::size_t>(p_count_);
  values_.assign(slots, 0.0f);
  written_.assign(slots, 0);
}

std::size_t PartialSumStore::index(int block, int image, int filter, int q, int p) const {
  return (((static_cast<std::size_t>(block) * static_cast<std::size_t>(images_) + static_cast<std::size_t>(image)) *
               static_cast<std::size_t>(filters_) +
           static_cast<std::size_t>(filter)) *
              static_cast<std::size_t>(q_count_) +
          static_cast<std::size_t>(q)) *
             static_cast<std::size_t>(p_count_) +
         static_cast<std::size_t>(p);
}

void PartialSumStore::write(int block, int image, int filter, int q, int p, float value) {
  const std::size_t i = index(block, image, filter, q, p);
  values_[i] = value;
  written_[i] = 1;
}

std::optional<float> PartialSumStore::read(int block, int image, int filter, int q, int p) const {
  const std::size_t i = index(block, image, filter, q, p);
  if (!written_[i]) return std::nullopt;
  return values_[i];
}

std::size_t PartialSumStore::entries_for(int block, IndexRange filters) const {
  std::size_t count = 0;
  for (int n = 0; n < images_; ++n)
    for (int f = filters.begin; f < filters.end; ++f)
      for (int q = 0; q < q_count_; ++q)
        for (int p = 0; p < p_count_; ++p) count += written_[index(block, n, f, q, p)];
  return count;
}

std::size_t PartialSumStore::size() const {
  return static_cast<std::size_t>(std::count(written_.begin(), written_.end(), std::uint8_t{1}));
}

PEGrid program_filter_fold(const PEArrayConfig& array, const FilterFold& fold, const FlatFilterMatrix& weights,
                           int kern_height, int kern_width, EventCounters& counters) {
  if (fold.height > array.rows || fold.width > array.cols) {
    throw MappingError("filter fold " + std::to_string(fold.index) + " (" + std::to_string(fold.height) + "x" +
                       std::to_string(fold.width) + ") exceeds the " + array.label() + " PE array");
  }
  PEGrid grid(array, fold, kern_height, kern_width);
  const int group_width = kern_height + 1;
  std::uint64_t loads = 0;
  for (int row = 0; row < fold.height; ++row) {
    for (int col = 0; col < fold.width; ++col) {
      const int flat_row = fold.filters.begin + row;
      const int flat_col = fold.flat_col_begin + col;
      PEState& cell = grid.cell(row, col);
      cell.group = col / group_width;
      if (weights.entry(flat_row, flat_col).reserved()) {
        cell.kind = PEState::Kind::kReserved;
      } else {
        cell.kind = PEState::Kind::kWeight;
        cell.weight = weights.value(flat_row, flat_col);
        ++loads;
      }
    }
  }
  counters.weight_loads += loads;
  return grid;
}

namespace {

// Padded-input column for every channel of a block, stored slot-major.
std::vector<float> load_column(const Tensor4D& input, const ConvLayerSpec& layer, IndexRange channels, int image,
                               int padded_col) {
  const int height = layer.padded_height();
  std::vector<float> column(static_cast<std::size_t>(channels.size()) * static_cast<std::size_t>(height), 0.0f);
  const int col = padded_col - layer.pad;
  if (col < 0 || col >= layer.in_width) return column;
  for (int slot = 0; slot < channels.size(); ++slot) {
    for (int row = layer.pad; row < layer.pad + layer.in_height; ++row) {
      column[static_cast<std::size_t>(slot * height + row)] = input.at(image, channels.begin + slot, row - layer.pad, col);
    }
  }
  return column;
}

}  // namespace

void interact_block(PEGrid& grid, const ImageBlock& block, const Tensor4D& input, const ConvLayerSpec& layer,
                    PartialSumStore& store, EventCounters& counters) {
  const FilterFold& fold = grid.fold();
  if (fold.channels != block.channels) {
    throw MappingError("channel-range mismatch: filter fold covers [" + std::to_string(fold.channels.begin) + ", " +
                       std::to_string(fold.channels.end) + "), image block " + std::to_string(block.id) + " covers [" +
                       std::to_string(block.channels.begin) + ", " + std::to_string(block.channels.end) + ")");
  }
  if (input.shape() != layer.input_shape()) {
    throw ShapeError("input " + shape_string(input.shape()) + " does not match layer '" + layer.name + "' " +
                     shape_string(layer.input_shape()));
  }
  const OutputDims out = derive_output_dims(layer);
  if (static_cast<int>(block.folds.size()) != block.block_length) {
    throw MappingError("image block " + std::to_string(block.id) + " has " + std::to_string(block.folds.size()) +
                       " folds, expected " + std::to_string(block.block_length));
  }

  const int kh = layer.kern_height;
  const int kw = layer.kern_width;
  const int group_width = kh + 1;
  const int w_ch = kw * group_width;
  const int height = layer.padded_height();
  const int rows = fold.height;
  const int slots = fold.channels.size();
  const int active = rows * slots * w_ch;
  const auto per_group_delivery = static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(kh);

  std::map<int, std::vector<float>> resident;  // padded column -> data
  int current_image = -1;
  std::vector<bool> fresh(static_cast<std::size_t>(kw));
  std::vector<const float*> group_data(static_cast<std::size_t>(kw));

  for (const ImageFold& image_fold : block.folds) {
    if (image_fold.image != current_image) {
      resident.clear();
      current_image = image_fold.image;
    }
    for (int col : image_fold.columns) {
      resident[col] = load_column(input, layer, block.channels, image_fold.image, col);
    }

    // Group g receives window column S-1-g (reversed), fresh or forwarded.
    const int first = image_fold.origin * layer.stride;
    for (int g = 0; g < kw; ++g) {
      const int col = first + kw - 1 - g;
      auto it = resident.find(col);
      if (it == resident.end()) {
        throw IncompleteSimulation("image fold p=" + std::to_string(image_fold.origin) + " of block " +
                                   std::to_string(block.id) + " needs padded column " + std::to_string(col) +
                                   " that was never loaded");
      }
      group_data[static_cast<std::size_t>(g)] = it->second.data();
      fresh[static_cast<std::size_t>(g)] =
          std::find(image_fold.columns.begin(), image_fold.columns.end(), col) != image_fold.columns.end();
    }

    for (int q = 0; q < out.out_height; ++q) {
      ++counters.shifts;
      ++counters.active_pe_per_cycle[active];
      for (int g = 0; g < kw; ++g) {
        const std::uint64_t delivered = per_group_delivery * static_cast<std::uint64_t>(slots);
        (fresh[static_cast<std::size_t>(g)] ? counters.multicasts : counters.forwards) += delivered;
      }

      const int top = q * layer.stride;
      for (int row = 0; row < rows; ++row) {
        float total = 0.0f;
        for (int slot = 0; slot < slots; ++slot) {
          float depth_sum = 0.0f;
          for (int g = 0; g < kw; ++g) {
            const float* column = group_data[static_cast<std::size_t>(g)] + static_cast<std::size_t>(slot * height);
            const int base = slot * w_ch + g * group_width;
            float group_sum = 0.0f;
            for (int r = 0; r < kh; ++r) {
              PEState& pe = grid.cell(row, base + r);
              pe.product = pe.weight * column[top + r];
              group_sum += pe.product;
            }
            grid.cell(row, base + kh).product = group_sum;
            depth_sum += group_sum;
          }
          total += depth_sum;
        }
        store.write(block.id, image_fold.image, fold.filters.begin + row, q, image_fold.origin, total);
      }
      counters.macs += static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(slots) *
                       static_cast<std::uint64_t>(kh) * static_cast<std::uint64_t>(kw);
      counters.stage1_reductions +=
          static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(slots) * static_cast<std::uint64_t>(kw);
      counters.stage2_reductions +=
          static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(slots) * static_cast<std::uint64_t>(kw - 1);
      counters.stage3_reductions += static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(slots - 1);
    }

    // The next fold's window starts at (p + 1) * stride; older columns retire.
    resident.erase(resident.begin(), resident.lower_bound(first + layer.stride));
  }
}

Tensor4D accumulate_partials(const PartialSumStore& store, const FoldPlan& plan) {
  const ConvLayerSpec& layer = plan.layer;
  Tensor4D output(layer.output_shape());
  for (int n = 0; n < layer.batch_n; ++n)
    for (int f = 0; f < layer.num_filters; ++f)
      for (int q = 0; q < plan.out.out_height; ++q)
        for (int p = 0; p < plan.out.out_width; ++p) {
          float sum = 0.0f;
          for (int b = 0; b < store.blocks(); ++b) {
            const std::optional<float> part = store.read(b, n, f, q, p);
            if (!part) {
              throw IncompleteSimulation("missing partial sum for block " + std::to_string(b) + ", image " +
                                         std::to_string(n) + ", filter " + std::to_string(f) + ", output (q=" +
                                         std::to_string(q) + ", p=" + std::to_string(p) + ")");
            }
            sum += *part;
          }
          output.at(n, f, q, p) = sum;
        }
  return output;
}

SimulationResult simulate_layer(const ConvLayerSpec& layer, const PEArrayConfig& array, const Tensor4D& input,
                                const Tensor4D& filters, ExecPolicy policy) {
  const FoldPlan plan = make_fold_plan(layer, array);
  if (input.shape() != layer.input_shape()) {
    throw ShapeError("input " + shape_string(input.shape()) + " does not match layer '" + layer.name + "' " +
                     shape_string(layer.input_shape()));
  }
  const FlatFilterMatrix flat = flatten_filters(filters, layer);
  PartialSumStore store(plan);

  std::vector<EventCounters> per_row(static_cast<std::size_t>(plan.n_ft_row));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(plan.n_ft_row));
  auto run_row_split = [&](int row) {
    try {
      EventCounters& counters = per_row[static_cast<std::size_t>(row)];
      for (int col = 0; col < plan.n_ft_col; ++col) {
        PEGrid grid = program_filter_fold(array, plan.fold_at(row, col), flat, layer.kern_height, layer.kern_width,
                                          counters);
        interact_block(grid, plan.image_blocks[static_cast<std::size_t>(col)], input, layer, store, counters);
      }
    } catch (...) {
      failures[static_cast<std::size_t>(row)] = std::current_exception();
    }
  };

  const int row_splits = plan.n_ft_row;
  if (policy == ExecPolicy::kParallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (int row = 0; row < row_splits; ++row) run_row_split(row);
  } else {
    for (int row = 0; row < row_splits; ++row) run_row_split(row);
  }
  for (const std::exception_ptr& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }

  SimulationResult result;
  for (const EventCounters& c : per_row) result.counters += c;
  result.output = accumulate_partials(store, plan);
  result.block_instances = plan.block_instances();
  return result;
}

namespace {

// splitmix64 step, to derive independent filter/input seeds.
std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Verdict verify_against_oracle(const ConvLayerSpec& layer, const PEArrayConfig& array, std::uint64_t seed,
                              DataMode mode, ExecPolicy policy) {
  fold_geometry(layer, array);
  const Tensor4D input = random_tensor(layer.input_shape(), mode, mix_seed(seed));
  const Tensor4D filters = random_tensor(layer.filter_shape(), mode, mix_seed(seed ^ 0x5bd1e995ULL));
  SimulationResult sim = simulate_layer(layer, array, input, filters, policy);
  const Tensor4D expected = reference_convolution(input, filters, layer);

  Verdict verdict;
  verdict.mode = mode;
  verdict.counters = std::move(sim.counters);
  verdict.block_instances = sim.block_instances;
  if (mode == DataMode::kInteger) {
    verdict.max_deviation = max_abs_deviation(sim.output, expected);
    verdict.match = verdict.max_deviation == 0.0;
  } else {
    verdict.max_deviation = max_relative_deviation(sim.output, expected);
    verdict.match = verdict.max_deviation <= kFp32RelativeTolerance;
  }
  return verdict;
}

}  // namespace foldmap
