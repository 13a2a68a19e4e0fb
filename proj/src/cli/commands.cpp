#include "foldmap/commands.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "foldmap/error.hpp"
#include "foldmap/fabric.hpp"
#include "foldmap/folding.hpp"
#include "foldmap/schedule.hpp"
#include "report.hpp"

namespace foldmap {

namespace fs = std::filesystem;
using report::fixed;
using report::Json;

std::vector<ConvLayerSpec> resolve_layers(const RunConfig& cfg) {
  const int sources = int{cfg.suite.has_value()} + int{cfg.layer_file.has_value()} + int{cfg.layer_inline.has_value()};
  if (sources > 1) throw ConfigError("give exactly one of --suite, --layer-file, --layer");
  if (cfg.layer_file) return load_layer_file(*cfg.layer_file);
  if (cfg.layer_inline) {
    try {
      return {parse_layer_line(*cfg.layer_inline)};
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("--layer: ") + e.what());
    }
  }
  return suite_by_name(cfg.suite.value_or("synthetic"));
}

namespace {

std::vector<PEArrayConfig> arrays_or(const RunConfig& cfg, std::vector<PEArrayConfig> fallback) {
  return cfg.arrays.empty() ? fallback : cfg.arrays;
}

const std::vector<PEArrayConfig> kBenchArrays{{16, 16}, {32, 32}, {64, 64}};

std::ofstream open_output(const fs::path& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ConfigError("cannot write '" + path.string() + "'");
  return file;
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

SystemConfig system_for(const RunConfig& cfg, const PEArrayConfig& array) {
  SystemConfig sys = cfg.system;
  sys.array = array;
  return sys;
}

}  // namespace

const std::vector<std::string>& bench_file_names() {
  static const std::vector<std::string> names{"table3.csv",      "fig7_util.csv",  "fig7_cycles.csv",
                                              "fig7_gflops.csv", "fig8_reuse.csv", "fig9_vgg.csv"};
  return names;
}

std::vector<BenchRecord> bench_records(const std::vector<ConvLayerSpec>& layers,
                                       const std::vector<PEArrayConfig>& arrays, const SystemConfig& base) {
  std::vector<BenchRecord> records;
  for (const PEArrayConfig& array : arrays) {
    SystemConfig sys = base;
    sys.array = array;
    for (const ConvLayerSpec& layer : layers) {
      const LayerPerf perf = model_layer(layer, sys);
      records.push_back(BenchRecord{.workload = layer.name,
                                    .array = array,
                                    .fold_count = perf.total_folds,
                                    .fold_type = perf.fold_type,
                                    .block_length = perf.block_length,
                                    .shifts = perf.shifts,
                                    .util_pct = perf.util_pct,
                                    .t_ops = perf.cycles.t_ops,
                                    .gflops = perf.gflops.value});
    }
  }
  return records;
}

int cmd_map(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const std::vector<ConvLayerSpec> layers = resolve_layers(cfg);
  const std::vector<PEArrayConfig> arrays = arrays_or(cfg, {{64, 64}});

  std::vector<FoldPlan> plans;
  for (const PEArrayConfig& array : arrays) {
    for (const ConvLayerSpec& layer : layers) {
      try {
        plans.push_back(make_fold_plan(layer, array, cfg.schedule));
      } catch (const UnmappableLayer& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
      }
    }
  }

  const std::vector<std::string> header{"layer", "array",    "w_ch",  "ch/fold", "fold",      "n_ft_row",
                                        "n_ft_col", "folds", "blocks", "folds/block", "shifts", "type"};
  auto cells = [](const FoldPlan& p) {
    return std::vector<std::string>{p.layer.name,
                                    p.array.label(),
                                    std::to_string(p.w_ch),
                                    std::to_string(p.channels_per_fold),
                                    std::to_string(p.fold_rows) + "x" + std::to_string(p.fold_cols),
                                    std::to_string(p.n_ft_row),
                                    std::to_string(p.n_ft_col),
                                    std::to_string(p.total_folds),
                                    std::to_string(p.image_blocks.size()),
                                    std::to_string(p.out.out_width * p.layer.batch_n),
                                    std::to_string(p.out.out_height),
                                    p.fold_type()};
  };

  auto write_table = [&](std::ostream& os) {
    report::TextTable table(header);
    for (const FoldPlan& p : plans) table.add_row(cells(p));
    table.print(os);
  };
  auto write_csv = [&](std::ostream& os) {
    report::CsvWriter csv(os, header);
    for (const FoldPlan& p : plans) csv.row(cells(p));
  };
  auto write_json = [&](std::ostream& os) {
    for (const FoldPlan& p : plans) os << report::plan_json(p).dump() << "\n";
  };

  switch (cfg.format) {
    case OutputFormat::kTable: write_table(out); break;
    case OutputFormat::kCsv: write_csv(out); break;
    case OutputFormat::kJson: write_json(out); break;
    case OutputFormat::kDefault:
      write_table(out);
      out << "\n";
      write_json(out);
      break;
  }
  if (cfg.schedule) {
    for (const FoldPlan& p : plans) out << "\n" << emit_schedule(p);
  }
  if (cfg.out_dir) {
    const fs::path dir = ensure_dir(*cfg.out_dir);
    std::ofstream csv = open_output(dir / "map.csv");
    write_csv(csv);
    std::ofstream jsonl = open_output(dir / "map.jsonl");
    write_json(jsonl);
  }
  return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const std::vector<ConvLayerSpec> layers = resolve_layers(cfg);
  const std::vector<PEArrayConfig> arrays = arrays_or(cfg, {{64, 64}});
  if (!cfg.full) {
    for (const ConvLayerSpec& layer : layers) {
      if (layer.mac_count() > kSimulateMacLimit) {
        throw ConfigError("layer '" + layer.name + "' has " + std::to_string(layer.mac_count()) +
                          " MACs; functional simulation of layers above " + std::to_string(kSimulateMacLimit) +
                          " MACs needs --full");
      }
    }
  }

  Json records = Json::array();
  report::TextTable summary({"layer", "array", "mode", "verdict", "max_dev", "instances", "weight_loads", "macs"});
  bool all_match = true;
  for (const PEArrayConfig& array : arrays) {
    for (const ConvLayerSpec& layer : layers) {
      Verdict v;
      try {
        v = verify_against_oracle(layer, array, cfg.seed, cfg.mode, ExecPolicy::kParallel);
      } catch (const UnmappableLayer& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
      }
      all_match = all_match && v.match;
      summary.add_row({layer.name, array.label(), to_string(v.mode), v.match ? "match" : "MISMATCH",
                       v.max_deviation == 0.0 ? "0" : report::fixed(v.max_deviation, 9),
                       std::to_string(v.block_instances), std::to_string(v.counters.weight_loads),
                       std::to_string(v.counters.macs)});
      Json j;
      j["layer"] = layer.name;
      j["array"] = array.label();
      j["mode"] = to_string(v.mode);
      j["seed"] = cfg.seed;
      j["match"] = v.match;
      j["max_deviation"] = v.max_deviation;
      j["block_instances"] = v.block_instances;
      j["counters"] = report::counters_json(v.counters);
      records.push_back(j);
      if (cfg.format == OutputFormat::kDefault || cfg.format == OutputFormat::kTable) {
        out << "== " << layer.name << " on " << array.label() << ": " << (v.match ? "match" : "MISMATCH") << "\n";
        report::print_counters_table(out, v.counters);
        out << "\n";
      }
    }
  }

  if (cfg.format != OutputFormat::kJson) summary.print(out);
  if (cfg.format == OutputFormat::kDefault || cfg.format == OutputFormat::kJson) {
    if (cfg.format == OutputFormat::kDefault) out << "\n";
    for (const Json& j : records) out << j.dump() << "\n";
  }
  if (cfg.out_dir) {
    std::ofstream file = open_output(ensure_dir(*cfg.out_dir) / "simulate.jsonl");
    for (const Json& j : records) file << j.dump() << "\n";
  }
  return all_match ? kExitOk : kExitMismatch;
}

namespace {

const std::vector<std::string> kModelHeader{"layer", "util_pct", "t_ops", "gflops", "eq6", "eq7", "eq8", "eq9"};

void write_model_csv(std::ostream& os, const PerfReport& r) {
  report::CsvWriter csv(os, kModelHeader);
  for (const LayerPerf& l : r.layers) {
    csv.row({l.name, fixed(l.util_pct, 2), fixed(l.cycles.t_ops, 0), fixed(l.gflops.value, 2),
             fixed(l.reuse.temporal_weight_reuse, 0), fixed(l.reuse.spatial_input_reuse, 0),
             fixed(l.reuse.spatial_parallelism, 0), fixed(l.reuse.spatial_reduction, 0)});
  }
}

}  // namespace

int cmd_model(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const std::vector<ConvLayerSpec> layers = resolve_layers(cfg);
  const std::vector<PEArrayConfig> arrays = arrays_or(cfg, {cfg.system.array});
  for (const PEArrayConfig& array : arrays) {
    PerfReport r;
    try {
      r = model_suite(layers, system_for(cfg, array));
    } catch (const UnmappableLayer& e) {
      err << "error: " << e.what() << "\n";
      return kExitConfig;
    }
    Json agg = report::aggregate_json(r);
    if (cfg.format != OutputFormat::kJson) {
      if (cfg.format == OutputFormat::kTable) {
        report::TextTable table(kModelHeader);
        for (const LayerPerf& l : r.layers) {
          table.add_row({l.name, fixed(l.util_pct, 2), fixed(l.cycles.t_ops, 0), fixed(l.gflops.value, 2),
                         fixed(l.reuse.temporal_weight_reuse, 0), fixed(l.reuse.spatial_input_reuse, 0),
                         fixed(l.reuse.spatial_parallelism, 0), fixed(l.reuse.spatial_reduction, 0)});
        }
        table.print(out);
      } else {
        write_model_csv(out, r);
      }
    }
    if (cfg.format != OutputFormat::kCsv && cfg.format != OutputFormat::kTable) out << agg.dump(2) << "\n";
    if (cfg.out_dir) {
      const fs::path dir = ensure_dir(*cfg.out_dir);
      std::ofstream csv = open_output(dir / ("model_" + array.label() + ".csv"));
      write_model_csv(csv, r);
      std::ofstream json = open_output(dir / ("model_" + array.label() + ".json"));
      json << agg.dump(2) << "\n";
    }
  }
  return kExitOk;
}

int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const std::vector<ConvLayerSpec> workloads = resolve_layers(cfg);
  const std::vector<PEArrayConfig> arrays = arrays_or(cfg, kBenchArrays);
  const fs::path dir = ensure_dir(cfg.out_dir.value_or("bench_out"));

  std::vector<BenchRecord> records;
  try {
    records = bench_records(workloads, arrays, cfg.system);
  } catch (const UnmappableLayer& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  {
    std::ofstream file = open_output(dir / "table3.csv");
    report::CsvWriter csv(file, {"workload", "array", "fold_count", "fold_type", "block_length", "shifts", "util_pct",
                                 "t_ops", "gflops"});
    for (const BenchRecord& r : records) {
      csv.row({r.workload, r.array.label(), std::to_string(r.fold_count), r.fold_type, std::to_string(r.block_length),
               std::to_string(r.shifts), fixed(r.util_pct, 2), fixed(r.t_ops, 0), fixed(r.gflops, 2)});
    }
  }
  {
    std::ofstream file = open_output(dir / "fig7_util.csv");
    report::CsvWriter csv(file, {"workload", "array", "util_pct"});
    for (const BenchRecord& r : records) csv.row({r.workload, r.array.label(), fixed(r.util_pct, 2)});
  }
  {
    std::ofstream file = open_output(dir / "fig7_cycles.csv");
    report::CsvWriter csv(file, {"workload", "array", "t_ops"});
    for (const BenchRecord& r : records) csv.row({r.workload, r.array.label(), fixed(r.t_ops, 0)});
  }
  {
    std::ofstream file = open_output(dir / "fig7_gflops.csv");
    report::CsvWriter csv(file, {"workload", "array", "gflops"});
    for (const BenchRecord& r : records) csv.row({r.workload, r.array.label(), fixed(r.gflops, 2)});
  }
  {
    std::ofstream file = open_output(dir / "fig8_reuse.csv");
    report::CsvWriter csv(file, {"workload", "array", "temporal_weight_reuse", "spatial_input_reuse",
                                 "spatial_parallelism", "spatial_reduction"});
    for (const PEArrayConfig& array : arrays) {
      for (const ConvLayerSpec& layer : workloads) {
        const ReuseMetrics m = reuse_metrics(layer, array);
        csv.row({layer.name, array.label(), fixed(m.temporal_weight_reuse, 0), fixed(m.spatial_input_reuse, 0),
                 fixed(m.spatial_parallelism, 0), fixed(m.spatial_reduction, 0)});
      }
    }
  }
  {
    std::ofstream file = open_output(dir / "fig9_vgg.csv");
    report::CsvWriter csv(file, {"layer", "array", "util_pct", "t_ops", "kcc"});
    const std::vector<ConvLayerSpec> vgg = vgg16_suite();
    for (const PEArrayConfig& array : arrays) {
      const PerfReport r = model_suite(vgg, system_for(cfg, array));
      for (const LayerPerf& l : r.layers) {
        csv.row({l.name, array.label(), fixed(l.util_pct, 2), fixed(l.cycles.t_ops, 0), fixed(l.cycles.t_ops / 1e3, 1)});
      }
    }
  }

  out << "wrote";
  for (const std::string& name : bench_file_names()) out << " " << (dir / name).string();
  out << "\n";
  report::TextTable table({"workload", "array", "folds", "type", "length", "shifts", "util_pct", "t_ops", "gflops"});
  for (const BenchRecord& r : records) {
    table.add_row({r.workload, r.array.label(), std::to_string(r.fold_count), r.fold_type,
                   std::to_string(r.block_length), std::to_string(r.shifts), fixed(r.util_pct, 2), fixed(r.t_ops, 0),
                   fixed(r.gflops, 2)});
  }
  table.print(out);
  return kExitOk;
}

namespace {

OutputFormat parse_format(const std::string& text) {
  if (text == "table") return OutputFormat::kTable;
  if (text == "csv") return OutputFormat::kCsv;
  if (text == "json") return OutputFormat::kJson;
  throw ConfigError("unknown format '" + text + "' (expected table, csv, or json)");
}

std::vector<double> parse_supply_comm(const std::string& text) {
  std::vector<double> values;
  std::stringstream stream(text);
  std::string field;
  while (std::getline(stream, field, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(field, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != field.size() || v < 0) {
      throw ConfigError("--supply-comm: '" + field + "' is not a nonnegative number");
    }
    values.push_back(v);
  }
  if (values.size() != 3) throw ConfigError("--supply-comm expects t_pcie,t_wl,t_mt");
  return values;
}

struct RawOptions {
  std::string suite;
  std::string layer_file;
  std::string layer;
  std::vector<std::string> arrays;
  std::string config;
  std::vector<std::string> sets;
  std::string supply_comm;
  std::string mode = "int";
  std::string format;
  std::string out;
  std::uint64_t seed = 1;
  bool schedule = false;
  bool full = false;
};

void add_common(CLI::App* cmd, RawOptions& o) {
  cmd->add_option("--suite", o.suite, "built-in suite: synthetic, vgg16, example, small");
  cmd->add_option("--layer-file", o.layer_file, "layer file (name, N, C, X, Y, N_F, R, S, stride, pad per line)");
  cmd->add_option("--layer", o.layer, "one inline layer: [name,]N,C,X,Y,N_F,R,S,stride,pad");
  cmd->add_option("--array", o.arrays, "PE array RxC (repeatable)");
  cmd->add_option("--config", o.config, "key=value system config file");
  cmd->add_option("--set", o.sets, "override one config key, key=value (repeatable)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--format", o.format, "table | csv | json");
}

RunConfig build_config(const std::string& sub, const RawOptions& o, const CLI::App& app) {
  RunConfig cfg;
  cfg.subcommand = sub;
  const CLI::App* cmd = app.get_subcommand(sub);
  if (cmd->count("--suite")) cfg.suite = o.suite;
  if (cmd->count("--layer-file")) cfg.layer_file = o.layer_file;
  if (cmd->count("--layer")) cfg.layer_inline = o.layer;
  for (const std::string& a : o.arrays) cfg.arrays.push_back(parse_array_dims(a));
  if (!o.config.empty()) apply_config_file(o.config, cfg.system);
  if (!o.sets.empty()) {
    std::stringstream text;
    for (const std::string& s : o.sets) text << s << "\n";
    try {
      apply_config_text(text, cfg.system);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("--set: ") + e.what());
    }
  }
  if (!o.supply_comm.empty()) {
    const std::vector<double> v = parse_supply_comm(o.supply_comm);
    cfg.system.supplied_t_pcie = v[0];
    cfg.system.supplied_t_wl = v[1];
    cfg.system.supplied_t_mt = v[2];
  }
  if (!o.format.empty()) cfg.format = parse_format(o.format);
  if (!o.out.empty()) cfg.out_dir = o.out;
  cfg.mode = parse_data_mode(o.mode);
  cfg.seed = o.seed;
  cfg.schedule = o.schedule;
  cfg.full = o.full;
  cfg.system.validate();
  return cfg;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fold-based convolution mapping, simulation, and performance model"};
  app.require_subcommand(1);
  RawOptions o;

  CLI::App* map = app.add_subcommand("map", "print fold plans");
  add_common(map, o);
  map->add_flag("--schedule", o.schedule, "also emit the two-view schedule");

  CLI::App* simulate = app.add_subcommand("simulate", "run the fabric simulator against the reference convolution");
  add_common(simulate, o);
  simulate->add_option("--seed", o.seed, "data seed");
  simulate->add_option("--mode", o.mode, "int | fp32");
  simulate->add_flag("--full", o.full, "allow large layers");

  CLI::App* model = app.add_subcommand("model", "evaluate the analytical performance model");
  add_common(model, o);
  model->add_option("--supply-comm", o.supply_comm, "supplied t_pcie,t_wl,t_mt cycles");

  CLI::App* bench = app.add_subcommand("bench", "regenerate the figure-data CSVs");
  add_common(bench, o);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
  }

  try {
    const std::string sub = app.get_subcommands().front()->get_name();
    const RunConfig cfg = build_config(sub, o, app);
    if (sub == "map") return cmd_map(cfg, out, err);
    if (sub == "simulate") return cmd_simulate(cfg, out, err);
    if (sub == "model") return cmd_model(cfg, out, err);
    return cmd_bench(cfg, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const MappingError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace foldmap
