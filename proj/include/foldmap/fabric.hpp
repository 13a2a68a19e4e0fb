#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "foldmap/folding.hpp"
#include "foldmap/pe_array_config.hpp"
#include "foldmap/tensor.hpp"
#include "foldmap/workload.hpp"

namespace foldmap {

struct PEState {
  enum class Kind : std::uint8_t { kIdle, kWeight, kReserved };

  Kind kind = Kind::kIdle;
  float weight = 0.0f;   // resident weight; 0 for reserved and idle cells
  float product = 0.0f;  // latest product (weights) or stage-1 sum (reserved)
  int group = -1;        // PE group (S+1 columns) within the fold, -1 when idle
};

// Event tallies of the fold-interaction pipeline. All counts are independent
// of the tensor values.
struct EventCounters {
  std::uint64_t weight_loads = 0;
  std::uint64_t multicasts = 0;  // element deliveries of freshly loaded columns, per receiving PE row
  std::uint64_t forwards = 0;    // deliveries of columns reused from the previous fold
  std::uint64_t macs = 0;
  std::uint64_t stage1_reductions = 0;  // one per PE group merging R products into its reserved cell
  std::uint64_t stage2_reductions = 0;  // S-1 per (filter, channel) merging group sums
  std::uint64_t stage3_reductions = 0;  // channels-1 per filter merging depth slices
  std::uint64_t shifts = 0;             // window positions, Q per image fold
  std::map<int, std::uint64_t> active_pe_per_cycle;  // active PEs -> shift steps at that level

  EventCounters& operator+=(const EventCounters& other);
  int peak_active_pes() const;
  std::uint64_t reductions() const { return stage1_reductions + stage2_reductions + stage3_reductions; }

  friend bool operator==(const EventCounters&, const EventCounters&) = default;
};

EventCounters operator+(EventCounters lhs, const EventCounters& rhs);

// PE array with one filter fold programmed at the origin.
class PEGrid {
 public:
  PEGrid(PEArrayConfig config, FilterFold fold, int kern_height, int kern_width);

  const PEArrayConfig& config() const { return config_; }
  const FilterFold& fold() const { return fold_; }

  PEState& cell(int row, int col) { return cells_[index(row, col)]; }
  const PEState& cell(int row, int col) const { return cells_[index(row, col)]; }

  // Weight and reserved cells.
  int active_cells() const;
  int idle_cells() const { return config_.cell_count() - active_cells(); }

  int kern_height() const { return kern_height_; }
  int kern_width() const { return kern_width_; }

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(config_.cols) + static_cast<std::size_t>(col);
  }

  PEArrayConfig config_;
  FilterFold fold_;
  int kern_height_;
  int kern_width_;
  std::vector<PEState> cells_;
};

// Partial-sum folds keyed by (block, image, filter, q, p). Dense per block so
// concurrent fold interactions write disjoint slots.
class PartialSumStore {
 public:
  explicit PartialSumStore(const FoldPlan& plan);

  void write(int block, int image, int filter, int q, int p, float value);
  std::optional<float> read(int block, int image, int filter, int q, int p) const;

  // Entries written for one block over a filter range (all images).
  std::size_t entries_for(int block, IndexRange filters) const;
  std::size_t size() const;

  int blocks() const { return blocks_; }

 private:
  std::size_t index(int block, int image, int filter, int q, int p) const;

  int blocks_;
  int images_;
  int filters_;
  int q_count_;
  int p_count_;
  std::vector<float> values_;
  std::vector<std::uint8_t> written_;
};

// Places the fold at (0, 0); the rest of the array stays idle. Adds the fold's
// weight cells to weight_loads. Throws MappingError if the fold is too large.
PEGrid program_filter_fold(const PEArrayConfig& array, const FilterFold& fold, const FlatFilterMatrix& weights,
                           int kern_height, int kern_width, EventCounters& counters);

// Streams every image fold of the block through the programmed grid: loads
// fresh columns, forwards overlapping ones, and for each of the Q window
// positions multiplies, reduces in three stages, and writes one partial sum
// per resident filter.
void interact_block(PEGrid& grid, const ImageBlock& block, const Tensor4D& input, const ConvLayerSpec& layer,
                    PartialSumStore& store, EventCounters& counters);

// Sums partial-sum folds in ascending block order. Throws IncompleteSimulation
// naming the first missing entry.
Tensor4D accumulate_partials(const PartialSumStore& store, const FoldPlan& plan);

enum class ExecPolicy { kSerial, kParallel };

struct SimulationResult {
  Tensor4D output;
  EventCounters counters;
  int block_instances = 0;
};

// Programs each filter fold once and runs it against its image block. The
// parallel policy spreads row splits over OpenMP threads; outputs and
// counters are identical to the serial run.
SimulationResult simulate_layer(const ConvLayerSpec& layer, const PEArrayConfig& array, const Tensor4D& input,
                                const Tensor4D& filters, ExecPolicy policy = ExecPolicy::kSerial);

struct Verdict {
  bool match = false;
  DataMode mode = DataMode::kInteger;
  double max_deviation = 0.0;  // absolute in integer mode, relative in fp32 mode
  EventCounters counters;
  int block_instances = 0;
};

inline constexpr double kFp32RelativeTolerance = 1e-5;

// Random seeded tensors through simulate_layer and reference_convolution.
// Mapping errors propagate; a mismatch is reported in the verdict.
Verdict verify_against_oracle(const ConvLayerSpec& layer, const PEArrayConfig& array, std::uint64_t seed,
                              DataMode mode = DataMode::kInteger, ExecPolicy policy = ExecPolicy::kSerial);

}  // namespace foldmap
