#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "foldmap/fabric.hpp"
#include "foldmap/folding.hpp"
#include "foldmap/pe_array_config.hpp"
#include "foldmap/workload.hpp"

namespace foldmap {

// System and model parameters. Bandwidths are bytes per second.
struct SystemConfig {
  PEArrayConfig array{64, 64};
  double clock_ghz = 1.0;
  std::optional<double> tiles;  // 256-PE tiles; defaults to rows*cols/256
  double pcie_bw = 126e9;
  double mem_bw = 4.5e9;
  int batches = 1;
  int bytes_per_element = 4;
  double shift_stage_factor = 4.0;
  double add_ccs = 1.0;
  std::optional<double> k_log_base;  // defaults to S+1 of the layer
  double wl_inject_rate = 16.0;      // weights per cycle
  double mt_inject_rate = 1.0;       // messages per cycle

  // Externally supplied communication cycles; each overrides its computed term.
  std::optional<double> supplied_t_pcie;
  std::optional<double> supplied_t_wl;
  std::optional<double> supplied_t_mt;

  double effective_tiles() const { return tiles.value_or(array.cell_count() / 256.0); }

  // Throws ConfigError on non-positive values.
  void validate() const;
};

// key=value lines; '#' starts a comment. Keys: rows, cols, array (RxC),
// clock_ghz, tiles, pcie_bw_gbps, mem_bw_gbps (GB/s), batches,
// bytes_per_element, shift_stage_factor, add_ccs, k_log_base, wl_inject_rate,
// mt_inject_rate, t_pcie, t_wl, t_mt. Unknown keys and bad values throw
// ConfigError carrying the line number.
void apply_config_text(std::istream& in, SystemConfig& cfg);
void apply_config_file(const std::string& path, SystemConfig& cfg);

struct ReuseMetrics {
  double temporal_weight_reuse = 0;  // P*Q*R_P*floor(C_P/W_ch)*R*S
  double spatial_input_reuse = 0;    // Q*R_P*floor(C_P/W_ch)*R*S
  double spatial_parallelism = 0;    // R_P*floor(C_P/W_ch)*W_ch
  double spatial_reduction = 0;      // P*Q*R_P*floor(C_P/W_ch)*S
};

ReuseMetrics reuse_metrics(const ConvLayerSpec& layer, const PEArrayConfig& array);

// Mean over all filter folds of the occupied fraction of the array, in
// percent. Reserved cells count as occupied.
double utilization_avg(const FoldPlan& plan);

struct ExecCycles {
  int n_ft_col = 0;
  int n_ft_row = 0;
  int shifts = 0;  // Q
  int n_dt = 0;    // P * N
  double k = 0;    // routing term through reserved columns
  int add_ops = 0;
  double t_ops = 0;
};

// [N_FT(C) + f*Shifts*N_DT*N_FT(C) + K + AddOps*AddCCs] * N_FT(R)
ExecCycles exec_cycles(const ConvLayerSpec& layer, const PEArrayConfig& array, const SystemConfig& cfg);

struct Gflops {
  double value = 0;
  std::string note;  // set when the input is not square
};

// 2*(I + 2*pad/stride)^2 * N_F*C*R*S / t_ops * clock_ghz
Gflops gflops(const ConvLayerSpec& layer, const PEArrayConfig& array, const SystemConfig& cfg);
Gflops gflops_from_cycles(const ConvLayerSpec& layer, double t_ops, double clock_ghz);

enum class Provenance { kComputed, kSupplied };
std::string to_string(Provenance p);

struct CycleTerm {
  double cycles = 0;
  Provenance provenance = Provenance::kComputed;
};

// What the computed communication sub-model saw.
struct CommInputs {
  std::int64_t transfer_bytes = 0;
  std::int64_t weight_elements = 0;
  std::uint64_t messages = 0;  // multicasts + forwards + reductions
};

struct CommCycles {
  CycleTerm t_pcie;
  CycleTerm t_wl;
  CycleTerm t_mt;
  CommInputs inputs;
  double computed_t_pcie = 0;
  double computed_t_wl = 0;
  double computed_t_mt = 0;
};

// Computed: t_pcie = ceil(bytes / pcie_bw * clock), bytes being every weight
// plus the first layer's input; t_wl = ceil(weights / wl_inject_rate);
// t_mt = ceil(messages / mt_inject_rate). Supplied values override.
CommCycles comm_cycles(std::span<const ConvLayerSpec> layers, const SystemConfig& cfg);

struct CyclesBreakdown {
  CycleTerm t_ops;
  CycleTerm t_pcie;
  CycleTerm t_wl;
  CycleTerm t_mt;
  double t_total = 0;  // sum of the four terms
};

CyclesBreakdown make_breakdown(double t_ops, const CommCycles& comm);

struct Kips {
  std::int64_t total_ops = 0;
  double ops_inf = 0;
  double ops_sec = 0;
  double kips = 0;
};

// Throws ConfigError when t_total is zero.
Kips kips(std::span<const ConvLayerSpec> layers, const SystemConfig& cfg, const CyclesBreakdown& cycles,
          double util_avg);
Kips kips_from_ops(std::int64_t total_ops, int images, const SystemConfig& cfg, double t_total, double util_avg);

// Closed-form event totals of simulate_layer for the plan; equals the fabric
// counters for every mappable layer.
EventCounters predict_counters(const FoldPlan& plan);

struct LayerPerf {
  std::string name;
  int n_ft_row = 0;
  int n_ft_col = 0;
  int total_folds = 0;
  std::string fold_type;
  int block_length = 0;
  int shifts = 0;
  double util_pct = 0;
  ExecCycles cycles;
  Gflops gflops;
  ReuseMetrics reuse;
  std::int64_t ops = 0;
};

struct PerfReport {
  PEArrayConfig array;
  SystemConfig cfg;
  std::vector<LayerPerf> layers;
  std::int64_t total_ops = 0;
  double util_avg = 0;  // mean of the per-layer utilizations
  CommCycles comm;
  CyclesBreakdown cycles;
  Kips throughput;
};

LayerPerf model_layer(const ConvLayerSpec& layer, const SystemConfig& cfg);
PerfReport model_suite(std::span<const ConvLayerSpec> layers, const SystemConfig& cfg);
PerfReport model_vgg16(const SystemConfig& cfg);

}  // namespace foldmap
