#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "foldmap/pe_array_config.hpp"
#include "foldmap/perfmodel.hpp"
#include "foldmap/tensor.hpp"
#include "foldmap/workload.hpp"

namespace foldmap {

// Exit status contract of the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitMismatch = 1;
inline constexpr int kExitConfig = 2;

enum class OutputFormat { kDefault, kTable, kCsv, kJson };

struct RunConfig {
  std::string subcommand;
  std::optional<std::string> suite;
  std::optional<std::string> layer_file;
  std::optional<std::string> layer_inline;
  std::vector<PEArrayConfig> arrays;
  SystemConfig system;
  std::uint64_t seed = 1;
  DataMode mode = DataMode::kInteger;
  std::optional<std::string> out_dir;
  OutputFormat format = OutputFormat::kDefault;
  bool schedule = false;
  bool full = false;
};

// Layers selected by exactly one of suite / layer_file / layer_inline.
std::vector<ConvLayerSpec> resolve_layers(const RunConfig& cfg);

// One row of the fold-count summary table.
struct BenchRecord {
  std::string workload;
  PEArrayConfig array;
  int fold_count = 0;
  std::string fold_type;
  int block_length = 0;
  int shifts = 0;
  double util_pct = 0;
  double t_ops = 0;
  double gflops = 0;
};

std::vector<BenchRecord> bench_records(const std::vector<ConvLayerSpec>& layers,
                                       const std::vector<PEArrayConfig>& arrays, const SystemConfig& base);

int cmd_map(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_model(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// Full command line (args[0] is the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Files cmd_bench writes, in write order.
const std::vector<std::string>& bench_file_names();

// MACs above which `simulate` asks for --full.
inline constexpr std::int64_t kSimulateMacLimit = 50'000'000;

}  // namespace foldmap
