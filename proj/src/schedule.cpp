#include "foldmap/schedule.hpp"

#include <sstream>

namespace foldmap {

ScheduleSummary summarize_schedule(const FoldPlan& plan) {
  return ScheduleSummary{
      .spatial_ff_groups = plan.n_ft_row,
      .temporal_blocks = plan.n_ft_col,
      .ff_instances = plan.total_folds,
      .folds_per_block = plan.out.out_width * plan.layer.batch_n,
      .shifts_per_fold = plan.out.out_height,
      .stride = plan.layer.stride,
      .ps_folds_reduced = plan.n_ft_col,
  };
}

std::string emit_schedule(const FoldPlan& plan) {
  const ScheduleSummary s = summarize_schedule(plan);
  const ConvLayerSpec& l = plan.layer;
  std::ostringstream out;

  out << "schedule for layer " << l.name << " on " << plan.array.label() << " PE array\n";
  out << "  W_ch=" << plan.w_ch << " channels_per_fold=" << plan.channels_per_fold << " fold=" << plan.fold_rows
      << "x" << plan.fold_cols << "\n";
  out << "  FF instances: " << s.ff_instances << " (" << s.spatial_ff_groups << " spatial FF groups x "
      << s.temporal_blocks << " temporal blocks)\n";
  out << "  IF per block: " << s.folds_per_block << ", shifts per IF: " << s.shifts_per_fold
      << ", PS folds reduced: " << s.ps_folds_reduced << "\n\n";

  out << "data-centric view\n";
  out << "Loop 1: fold interaction\n";
  out << "  spatial_map  FF[g]  g in [0, " << s.spatial_ff_groups << ")   # filters " << l.num_filters
      << " over PE clusters of " << plan.array.rows << " rows\n";
  out << "    temporal_map IB[b]  b in [0, " << s.temporal_blocks << ")   # " << plan.channels_per_fold
      << " channels per block\n";
  out << "      program FF[g][b] (weight stationary)\n";
  out << "      temporal_map IF[i]  i in [0, " << s.folds_per_block << ")   # P*N image folds\n";
  out << "        multicast IF[i] across " << plan.fold_rows << " rows\n";
  out << "        temporal_map shift[q]  q in [0, " << s.shifts_per_fold << ")   # stride " << s.stride << "\n";
  out << "          multiply; reduce width -> depth -> multi-depth; PS[g][b][i][q]\n";
  out << "Loop 2: partial-sum reduction\n";
  if (s.ps_folds_reduced == 1) {
    out << "  output = PS[.][0]   # single PS fold, copy\n";
  } else {
    out << "  temporal_reduce PS[b]  b in [0, " << s.ps_folds_reduced << ")   # output += PS fold b, ascending depth\n";
  }

  out << "\nloop-nest view\n";
  out << "parallel_for ff_row in [0, " << plan.n_ft_row << "):        # N_F=" << l.num_filters << " tiled by R_P="
      << plan.array.rows << "\n";
  out << "  for ib in [0, " << plan.n_ft_col << "):                  # C=" << l.in_channels << " tiled by "
      << plan.channels_per_fold << "\n";
  out << "    for n in [0, " << l.batch_n << "):\n";
  out << "      for p in [0, " << plan.out.out_width << "):          # image fold\n";
  out << "        for q in [0, " << plan.out.out_height << "):        # shift\n";
  out << "          parallel_for f, c, r, s in FF[ff_row][ib]:   # " << plan.fold_rows << "x" << plan.fold_cols
      << " PEs\n";
  out << "            PS[ib][n][f][q][p] += W[f][c][r][s] * I[n][c][q*" << l.stride << "+r][p*" << l.stride
      << "+s]\n";
  out << "for ib in [0, " << plan.n_ft_col << "): O += PS[ib]\n";
  return out.str();
}

}  // namespace foldmap
