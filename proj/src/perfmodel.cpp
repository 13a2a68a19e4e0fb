#include "foldmap/perfmodel.hpp"

#include <cmath>
#include <fstream>
#include <istream>

#include "foldmap/error.hpp"

namespace foldmap {

void SystemConfig::validate() const {
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string(key) + " must be positive, got " + std::to_string(v));
    }
  };
  if (array.rows < 1 || array.cols < 1) throw ConfigError("array dims must be positive, got " + array.label());
  positive(clock_ghz, "clock_ghz");
  if (tiles) positive(*tiles, "tiles");
  positive(pcie_bw, "pcie_bw_gbps");
  positive(mem_bw, "mem_bw_gbps");
  positive(batches, "batches");
  positive(bytes_per_element, "bytes_per_element");
  positive(shift_stage_factor, "shift_stage_factor");
  positive(add_ccs, "add_ccs");
  if (k_log_base && !(*k_log_base > 1.0)) throw ConfigError("k_log_base must be > 1");
  positive(wl_inject_rate, "wl_inject_rate");
  positive(mt_inject_rate, "mt_inject_rate");
  for (const auto& [v, key] : {std::pair{supplied_t_pcie, "t_pcie"}, std::pair{supplied_t_wl, "t_wl"},
                               std::pair{supplied_t_mt, "t_mt"}}) {
    if (v && (*v < 0.0 || !std::isfinite(*v))) throw ConfigError(std::string(key) + " must be >= 0");
  }
}

namespace {

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  return text.substr(first, last - first + 1);
}

double parse_number(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) throw ConfigError("key '" + key + "': expected a number, got '" + value + "'");
  return out;
}

int parse_count(const std::string& key, const std::string& value) {
  const double v = parse_number(key, value);
  if (v != std::floor(v)) throw ConfigError("key '" + key + "': expected an integer, got '" + value + "'");
  return static_cast<int>(v);
}

void apply_key(SystemConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "rows") {
    cfg.array.rows = parse_count(key, value);
  } else if (key == "cols") {
    cfg.array.cols = parse_count(key, value);
  } else if (key == "array") {
    cfg.array = parse_array_dims(value);
  } else if (key == "clock_ghz") {
    cfg.clock_ghz = parse_number(key, value);
  } else if (key == "tiles") {
    cfg.tiles = parse_number(key, value);
  } else if (key == "pcie_bw_gbps") {
    cfg.pcie_bw = parse_number(key, value) * 1e9;
  } else if (key == "mem_bw_gbps") {
    cfg.mem_bw = parse_number(key, value) * 1e9;
  } else if (key == "batches") {
    cfg.batches = parse_count(key, value);
  } else if (key == "bytes_per_element") {
    cfg.bytes_per_element = parse_count(key, value);
  } else if (key == "shift_stage_factor") {
    cfg.shift_stage_factor = parse_number(key, value);
  } else if (key == "add_ccs") {
    cfg.add_ccs = parse_number(key, value);
  } else if (key == "k_log_base") {
    cfg.k_log_base = parse_number(key, value);
  } else if (key == "wl_inject_rate") {
    cfg.wl_inject_rate = parse_number(key, value);
  } else if (key == "mt_inject_rate") {
    cfg.mt_inject_rate = parse_number(key, value);
  } else if (key == "t_pcie") {
    cfg.supplied_t_pcie = parse_number(key, value);
  } else if (key == "t_wl") {
    cfg.supplied_t_wl = parse_number(key, value);
  } else if (key == "t_mt") {
    cfg.supplied_t_mt = parse_number(key, value);
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

}  // namespace

void apply_config_text(std::istream& in, SystemConfig& cfg) {
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    try {
      if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + line + "'");
      apply_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  cfg.validate();
}

void apply_config_file(const std::string& path, SystemConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    apply_config_text(in, cfg);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

ReuseMetrics reuse_metrics(const ConvLayerSpec& layer, const PEArrayConfig& array) {
  const FoldGeometry geom = fold_geometry(layer, array);
  const OutputDims out = derive_output_dims(layer);
  const double pq = static_cast<double>(out.out_width) * out.out_height;
  const double lanes = static_cast<double>(array.rows) * geom.channels_per_fold;
  const double rs = static_cast<double>(layer.kern_height) * layer.kern_width;
  return ReuseMetrics{
      .temporal_weight_reuse = pq * lanes * rs,
      .spatial_input_reuse = out.out_height * lanes * rs,
      .spatial_parallelism = lanes * channel_width(layer),
      .spatial_reduction = pq * lanes * layer.kern_width,
  };
}

double utilization_avg(const FoldPlan& plan) {
  if (plan.filter_folds.empty()) return 0.0;
  const double cells = plan.array.cell_count();
  double sum = 0.0;
  for (const FilterFold& fold : plan.filter_folds) {
    const double idle = cells - static_cast<double>(fold.height) * fold.width;
    sum += (cells - idle) / cells;
  }
  return 100.0 * sum / static_cast<double>(plan.filter_folds.size());
}

ExecCycles exec_cycles(const ConvLayerSpec& layer, const PEArrayConfig& array, const SystemConfig& cfg) {
  const FoldPlan plan = enumerate_filter_folds(layer, array);
  ExecCycles c;
  c.n_ft_col = plan.n_ft_col;
  c.n_ft_row = plan.n_ft_row;
  c.shifts = plan.out.out_height;
  c.n_dt = plan.out.out_width * layer.batch_n;
  const double base = cfg.k_log_base.value_or(layer.kern_width + 1.0);
  // Small epsilon so exact powers of the base do not floor one step low.
  c.k = std::floor(std::log(static_cast<double>(array.cols)) / std::log(base) + 1e-9) + 1.0;
  c.add_ops = plan.n_ft_col - 1;
  const double bracket = c.n_ft_col + cfg.shift_stage_factor * c.shifts * c.n_dt * static_cast<double>(c.n_ft_col) +
                         c.k + c.add_ops * cfg.add_ccs;
  c.t_ops = bracket * c.n_ft_row;
  return c;
}

Gflops gflops_from_cycles(const ConvLayerSpec& layer, double t_ops, double clock_ghz) {
  const double halo = 2.0 * layer.pad / layer.stride;
  const double height = layer.in_height + halo;
  const double width = layer.in_width + halo;
  const double work = static_cast<double>(layer.num_filters) * layer.in_channels * layer.kern_height *
                      layer.kern_width;
  Gflops g;
  g.value = 2.0 * height * width * work / t_ops * clock_ghz;
  if (layer.in_height != layer.in_width) {
    g.note = "non-square input: used (X + 2*pad/stride) * (Y + 2*pad/stride) in place of (I + 2*pad/stride)^2";
  }
  return g;
}

Gflops gflops(const ConvLayerSpec& layer, const PEArrayConfig& array, const SystemConfig& cfg) {
  return gflops_from_cycles(layer, exec_cycles(layer, array, cfg).t_ops, cfg.clock_ghz);
}

std::string to_string(Provenance p) { return p == Provenance::kComputed ? "computed" : "supplied"; }

EventCounters predict_counters(const FoldPlan& plan) {
  const ConvLayerSpec& l = plan.layer;
  const auto n = static_cast<std::uint64_t>(l.batch_n);
  const auto p = static_cast<std::uint64_t>(plan.out.out_width);
  const auto q = static_cast<std::uint64_t>(plan.out.out_height);
  const auto r = static_cast<std::uint64_t>(l.kern_height);
  const auto s = static_cast<std::uint64_t>(l.kern_width);
  const auto stride = static_cast<std::uint64_t>(l.stride);
  const auto fc = static_cast<std::uint64_t>(l.num_filters) * static_cast<std::uint64_t>(l.in_channels);

  // Distinct padded columns one image's folds load.
  const std::uint64_t distinct = stride >= s ? p * s : (p - 1) * stride + s;

  EventCounters c;
  c.weight_loads = fc * r * s;
  c.macs = n * p * q * fc * r * s;
  c.multicasts = n * q * r * distinct * fc;
  c.forwards = n * q * r * (p * s - distinct) * fc;
  c.stage1_reductions = n * p * q * fc * s;
  c.stage2_reductions = n * p * q * fc * (s - 1);
  c.stage3_reductions = n * p * q * static_cast<std::uint64_t>(l.num_filters) *
                        static_cast<std::uint64_t>(l.in_channels - plan.n_ft_col);
  c.shifts = n * p * q * static_cast<std::uint64_t>(plan.total_folds);
  for (const FilterFold& fold : plan.filter_folds) {
    c.active_pe_per_cycle[fold.height * fold.width] += n * p * q;
  }
  return c;
}

CommCycles comm_cycles(std::span<const ConvLayerSpec> layers, const SystemConfig& cfg) {
  cfg.validate();
  CommCycles comm;
  for (const ConvLayerSpec& layer : layers) {
    comm.inputs.weight_elements += layer.weight_count();
    const FoldPlan plan = make_fold_plan(layer, cfg.array, false);
    const EventCounters predicted = predict_counters(plan);
    comm.inputs.messages += predicted.multicasts + predicted.forwards + predicted.reductions();
  }
  if (!layers.empty()) {
    const std::int64_t elements =
        comm.inputs.weight_elements + layers.front().input_count() * static_cast<std::int64_t>(cfg.batches);
    comm.inputs.transfer_bytes = elements * cfg.bytes_per_element;
    comm.computed_t_pcie = std::ceil(static_cast<double>(comm.inputs.transfer_bytes) * (cfg.clock_ghz * 1e9) / cfg.pcie_bw);
    comm.computed_t_wl = std::ceil(static_cast<double>(comm.inputs.weight_elements) / cfg.wl_inject_rate);
    comm.computed_t_mt = std::ceil(static_cast<double>(comm.inputs.messages) / cfg.mt_inject_rate);
  }

  auto pick = [](std::optional<double> supplied, double computed) {
    return supplied ? CycleTerm{*supplied, Provenance::kSupplied} : CycleTerm{computed, Provenance::kComputed};
  };
  comm.t_pcie = pick(cfg.supplied_t_pcie, comm.computed_t_pcie);
  comm.t_wl = pick(cfg.supplied_t_wl, comm.computed_t_wl);
  comm.t_mt = pick(cfg.supplied_t_mt, comm.computed_t_mt);
  return comm;
}

CyclesBreakdown make_breakdown(double t_ops, const CommCycles& comm) {
  CyclesBreakdown b;
  b.t_ops = CycleTerm{t_ops, Provenance::kComputed};
  b.t_pcie = comm.t_pcie;
  b.t_wl = comm.t_wl;
  b.t_mt = comm.t_mt;
  b.t_total = b.t_pcie.cycles + b.t_wl.cycles + b.t_mt.cycles + b.t_ops.cycles;
  return b;
}

Kips kips_from_ops(std::int64_t total_ops, int images, const SystemConfig& cfg, double t_total, double util_avg) {
  if (!(t_total > 0.0)) throw ConfigError("t_total must be positive to compute KIPS");
  Kips k;
  k.total_ops = total_ops;
  k.ops_inf = static_cast<double>(total_ops) / (static_cast<double>(cfg.batches) * images);
  k.ops_sec = static_cast<double>(total_ops) / t_total * (cfg.effective_tiles() * 256.0) * (util_avg / 100.0) *
              cfg.clock_ghz * 1e9;
  k.kips = k.ops_inf > 0.0 ? k.ops_sec / (k.ops_inf * 1e3) : 0.0;
  return k;
}

Kips kips(std::span<const ConvLayerSpec> layers, const SystemConfig& cfg, const CyclesBreakdown& cycles,
          double util_avg) {
  const int images = layers.empty() ? 1 : layers.front().batch_n;
  return kips_from_ops(total_ops(layers), images, cfg, cycles.t_total, util_avg);
}

LayerPerf model_layer(const ConvLayerSpec& layer, const SystemConfig& cfg) {
  const FoldPlan plan = make_fold_plan(layer, cfg.array, false);
  LayerPerf perf;
  perf.name = layer.name;
  perf.n_ft_row = plan.n_ft_row;
  perf.n_ft_col = plan.n_ft_col;
  perf.total_folds = plan.total_folds;
  perf.fold_type = plan.fold_type();
  perf.block_length = plan.out.out_width * layer.batch_n;
  perf.shifts = plan.out.out_height;
  perf.util_pct = utilization_avg(plan);
  perf.cycles = exec_cycles(layer, cfg.array, cfg);
  perf.gflops = gflops_from_cycles(layer, perf.cycles.t_ops, cfg.clock_ghz);
  perf.reuse = reuse_metrics(layer, cfg.array);
  const ConvLayerSpec single[] = {layer};
  perf.ops = total_ops(single);
  return perf;
}

PerfReport model_suite(std::span<const ConvLayerSpec> layers, const SystemConfig& cfg) {
  cfg.validate();
  PerfReport report;
  report.array = cfg.array;
  report.cfg = cfg;
  report.layers.resize(layers.size());
  const int count = static_cast<int>(layers.size());
  std::vector<std::exception_ptr> failures(layers.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < count; ++i) {
    try {
      report.layers[static_cast<std::size_t>(i)] = model_layer(layers[static_cast<std::size_t>(i)], cfg);
    } catch (...) {
      failures[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const std::exception_ptr& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }

  double t_ops = 0.0;
  double util_sum = 0.0;
  for (const LayerPerf& perf : report.layers) {
    t_ops += perf.cycles.t_ops;
    util_sum += perf.util_pct;
    report.total_ops += perf.ops;
  }
  report.util_avg = report.layers.empty() ? 0.0 : util_sum / static_cast<double>(report.layers.size());
  report.comm = comm_cycles(layers, cfg);
  report.cycles = make_breakdown(t_ops, report.comm);
  if (report.cycles.t_total > 0.0) report.throughput = kips(layers, cfg, report.cycles, report.util_avg);
  return report;
}

PerfReport model_vgg16(const SystemConfig& cfg) {
  const std::vector<ConvLayerSpec> layers = vgg16_suite();
  return model_suite(layers, cfg);
}

}  // namespace foldmap
