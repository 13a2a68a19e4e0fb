#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace foldmap::report {

std::string fixed(double value, int decimals) {
  // Avoid printing "-0.00".
  if (std::abs(value) < 0.5 * std::pow(10.0, -decimals)) value = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

TextTable::TextTable(std::vector<std::string> header) { rows_.push_back(std::move(header)); }

void TextTable::add_row(std::vector<std::string> row) {
  row.resize(rows_.front().size());
  rows_.push_back(std::move(row));
}

void TextTable::print(std::ostream& out) const {
  std::vector<std::size_t> widths(rows_.front().size(), 0);
  for (const auto& row : rows_)
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());

  auto print_row = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << "  ";
      // Names left-aligned, numbers right-aligned.
      if (i == 0) {
        out << row[i] << std::string(widths[i] - row[i].size(), ' ');
      } else {
        out << std::string(widths[i] - row[i].size(), ' ') << row[i];
      }
    }
    out << "\n";
  };
  print_row(rows_.front());
  std::size_t total = 0;
  for (std::size_t w : widths) total += w;
  out << std::string(total + 2 * (widths.size() - 1), '-') << "\n";
  for (std::size_t r = 1; r < rows_.size(); ++r) print_row(rows_[r]);
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out), width_(header.size()) {
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw std::logic_error("csv row width does not match header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ",";
    out_ << cells[i];
  }
  out_ << "\n";
}

Json plan_json(const FoldPlan& plan) {
  const auto partial = std::count_if(plan.filter_folds.begin(), plan.filter_folds.end(),
                                     [](const FilterFold& f) { return f.is_partial; });
  Json j;
  j["name"] = plan.layer.name;
  j["array"] = plan.array.label();
  j["w_ch"] = plan.w_ch;
  j["channels_per_fold"] = plan.channels_per_fold;
  j["fold_rows"] = plan.fold_rows;
  j["fold_cols"] = plan.fold_cols;
  j["n_ft_row"] = plan.n_ft_row;
  j["n_ft_col"] = plan.n_ft_col;
  j["total_folds"] = plan.total_folds;
  j["block_count"] = plan.image_blocks.size();
  j["folds_per_block"] = plan.out.out_width * plan.layer.batch_n;
  j["shifts"] = plan.out.out_height;
  j["fold_type"] = plan.fold_type();
  j["trailing_partial_folds"] = partial;
  return j;
}

Json counters_json(const EventCounters& c) {
  Json j;
  j["weight_loads"] = c.weight_loads;
  j["multicasts"] = c.multicasts;
  j["forwards"] = c.forwards;
  j["macs"] = c.macs;
  j["stage1_reductions"] = c.stage1_reductions;
  j["stage2_reductions"] = c.stage2_reductions;
  j["stage3_reductions"] = c.stage3_reductions;
  j["shifts"] = c.shifts;
  j["peak_active_pes"] = c.peak_active_pes();
  Json hist = Json::object();
  for (const auto& [active, steps] : c.active_pe_per_cycle) hist[std::to_string(active)] = steps;
  j["active_pe_per_cycle"] = hist;
  return j;
}

namespace {

Json term_json(const CycleTerm& term) {
  Json j;
  j["cycles"] = term.cycles;
  j["provenance"] = to_string(term.provenance);
  return j;
}

}  // namespace

Json aggregate_json(const PerfReport& r) {
  Json j;
  j["array"] = r.array.label();
  j["layers"] = r.layers.size();
  j["total_ops"] = r.total_ops;
  j["util_avg_pct"] = r.util_avg;
  Json total;
  total["t_pcie"] = term_json(r.cycles.t_pcie);
  total["t_wl"] = term_json(r.cycles.t_wl);
  total["t_mt"] = term_json(r.cycles.t_mt);
  total["t_ops"] = term_json(r.cycles.t_ops);
  total["t_total"] = r.cycles.t_total;
  j["t_total_breakdown"] = total;
  j["ops_inf"] = r.throughput.ops_inf;
  j["ops_sec"] = r.throughput.ops_sec;
  j["kips"] = r.throughput.kips;

  Json comm;
  comm["transfer_bytes"] = r.comm.inputs.transfer_bytes;
  comm["weight_elements"] = r.comm.inputs.weight_elements;
  comm["messages"] = r.comm.inputs.messages;
  comm["pcie_bw_bytes_per_s"] = r.cfg.pcie_bw;
  comm["wl_inject_rate"] = r.cfg.wl_inject_rate;
  comm["mt_inject_rate"] = r.cfg.mt_inject_rate;
  comm["computed_t_pcie"] = r.comm.computed_t_pcie;
  comm["computed_t_wl"] = r.comm.computed_t_wl;
  comm["computed_t_mt"] = r.comm.computed_t_mt;
  j["comm_model"] = comm;

  Json cfg;
  cfg["clock_ghz"] = r.cfg.clock_ghz;
  cfg["tiles"] = r.cfg.effective_tiles();
  cfg["batches"] = r.cfg.batches;
  cfg["mem_bw_bytes_per_s"] = r.cfg.mem_bw;
  cfg["shift_stage_factor"] = r.cfg.shift_stage_factor;
  cfg["add_ccs"] = r.cfg.add_ccs;
  cfg["k_log_base"] = r.cfg.k_log_base ? Json(*r.cfg.k_log_base) : Json("S+1");
  j["config"] = cfg;

  Json notes = Json::array();
  for (const LayerPerf& layer : r.layers) {
    if (!layer.gflops.note.empty()) notes.push_back(layer.name + ": " + layer.gflops.note);
  }
  j["notes"] = notes;
  return j;
}

void print_counters_table(std::ostream& out, const EventCounters& c) {
  TextTable table({"event", "count"});
  table.add_row({"weight_loads", std::to_string(c.weight_loads)});
  table.add_row({"multicasts", std::to_string(c.multicasts)});
  table.add_row({"forwards", std::to_string(c.forwards)});
  table.add_row({"macs", std::to_string(c.macs)});
  table.add_row({"stage1_reductions", std::to_string(c.stage1_reductions)});
  table.add_row({"stage2_reductions", std::to_string(c.stage2_reductions)});
  table.add_row({"stage3_reductions", std::to_string(c.stage3_reductions)});
  table.add_row({"shifts", std::to_string(c.shifts)});
  table.add_row({"peak_active_pes", std::to_string(c.peak_active_pes())});
  table.print(out);
}

}  // namespace foldmap::report
