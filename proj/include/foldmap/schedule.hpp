#pragma once

#include <string>

#include "foldmap/folding.hpp"

namespace foldmap {

// Tile counts substituted into the two schedule views.
struct ScheduleSummary {
  int spatial_ff_groups = 0;    // row splits, mapped over PE clusters
  int temporal_blocks = 0;      // column splits, streamed one after another
  int ff_instances = 0;         // filter folds programmed
  int folds_per_block = 0;      // P * N image folds
  int shifts_per_fold = 0;      // Q
  int stride = 1;
  int ps_folds_reduced = 0;     // partial-sum folds per output element
};

ScheduleSummary summarize_schedule(const FoldPlan& plan);

// Renders the data-centric view (Loop 1: fold interaction, Loop 2: partial-sum
// reduction) followed by the tiled loop-nest view.
std::string emit_schedule(const FoldPlan& plan);

}  // namespace foldmap
