#include <gtest/gtest.h>

#include <random>
#include <set>

#include "foldmap/fabric.hpp"
#include "foldmap/perfmodel.hpp"
#include "test_support.hpp"

namespace foldmap {
namespace {

std::string describe(const testing::LayerCase& c) {
  const ConvLayerSpec& l = c.layer;
  return "N=" + std::to_string(l.batch_n) + " C=" + std::to_string(l.in_channels) + " X=" +
         std::to_string(l.in_height) + " NF=" + std::to_string(l.num_filters) + " R=" +
         std::to_string(l.kern_height) + " stride=" + std::to_string(l.stride) + " pad=" + std::to_string(l.pad) +
         " array=" + c.array.label();
}

TEST(Property, IntegerOutputIsBitIdentical) {
  std::mt19937_64 rng(20240611);
  for (int i = 0; i < 200; ++i) {
    const auto c = testing::random_case(rng);
    const Verdict v = verify_against_oracle(c.layer, c.array, static_cast<std::uint64_t>(i));
    ASSERT_TRUE(v.match) << describe(c) << " deviation " << v.max_deviation;
  }
}

TEST(Property, Float32WithinRelativeTolerance) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 100; ++i) {
    const auto c = testing::random_case(rng);
    const Verdict v = verify_against_oracle(c.layer, c.array, static_cast<std::uint64_t>(i), DataMode::kFloat32);
    ASSERT_TRUE(v.match) << describe(c) << " deviation " << v.max_deviation;
  }
}

TEST(Property, PredictedCountersEqualSimulated) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const auto c = testing::random_case(rng);
    const Verdict v = verify_against_oracle(c.layer, c.array, 1);
    ASSERT_EQ(v.counters, predict_counters(make_fold_plan(c.layer, c.array, false))) << describe(c);
  }
}

TEST(Property, EveryWeightProgrammedOnce) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const auto c = testing::random_case(rng);
    const ConvLayerSpec& l = c.layer;
    const FoldPlan plan = make_fold_plan(l, c.array, false);
    const FlatFilterMatrix flat = flatten_filters(Tensor4D(l.filter_shape()), l);
    std::set<std::tuple<int, int, int, int>> seen;
    std::uint64_t reserved = 0;
    for (const FilterFold& fold : plan.filter_folds) {
      EventCounters counters;
      const PEGrid grid = program_filter_fold(c.array, fold, flat, l.kern_height, l.kern_width, counters);
      for (int row = 0; row < fold.height; ++row)
        for (int col = 0; col < fold.width; ++col) {
          const FlatEntry& e = flat.entry(fold.filters.begin + row, fold.flat_col_begin + col);
          if (e.reserved()) {
            ++reserved;
            ASSERT_EQ(grid.cell(row, col).kind, PEState::Kind::kReserved);
            continue;
          }
          ASSERT_TRUE(seen.insert({e.weight->filter, e.weight->channel, e.weight->row, e.weight->col}).second)
              << describe(c);
        }
    }
    EXPECT_EQ(seen.size(), static_cast<std::size_t>(l.weight_count())) << describe(c);
    EXPECT_EQ(reserved, static_cast<std::uint64_t>(l.num_filters) * l.in_channels * l.kern_width) << describe(c);
  }
}

TEST(Property, ImageFoldsLoadEachNeededColumnOnce) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 100; ++i) {
    const auto c = testing::random_case(rng);
    const ConvLayerSpec& l = c.layer;
    const OutputDims out = derive_output_dims(l);
    const auto folds = enumerate_image_folds(0, {0, 1}, l);
    ASSERT_EQ(folds.size(), static_cast<std::size_t>(out.out_width * l.batch_n));
    for (int n = 0; n < l.batch_n; ++n) {
      std::multiset<int> loaded;
      std::set<int> needed;
      for (const ImageFold& f : folds) {
        if (f.image != n) continue;
        loaded.insert(f.columns.begin(), f.columns.end());
        for (int s = 0; s < l.kern_width; ++s) needed.insert(f.origin * l.stride + s);
      }
      EXPECT_EQ(loaded, std::multiset<int>(needed.begin(), needed.end())) << describe(c);
    }
  }
}

TEST(Property, FullFoldCountersMatchClosedForms) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 60; ++i) {
    const auto c = testing::full_fold_case(rng);
    const ConvLayerSpec& l = c.layer;
    const FoldPlan plan = make_fold_plan(l, c.array);
    const ReuseMetrics eq = reuse_metrics(l, c.array);
    const Tensor4D input = testing::patterned(l.input_shape(), 7, 3);
    const FlatFilterMatrix flat = flatten_filters(testing::patterned(l.filter_shape(), 5, 1), l);
    PartialSumStore store(plan);
    for (const FilterFold& fold : plan.filter_folds) {
      ASSERT_FALSE(fold.is_partial);
      EventCounters counters;
      PEGrid grid = program_filter_fold(c.array, fold, flat, l.kern_height, l.kern_width, counters);
      interact_block(grid, plan.image_blocks[static_cast<std::size_t>(fold.col_split)], input, l, store, counters);
      const double image_folds = plan.out.out_width;
      EXPECT_EQ(static_cast<double>(counters.macs), eq.temporal_weight_reuse) << describe(c);
      EXPECT_EQ(static_cast<double>(counters.macs) / image_folds, eq.spatial_input_reuse) << describe(c);
      EXPECT_EQ(static_cast<double>(counters.peak_active_pes()), eq.spatial_parallelism) << describe(c);
      EXPECT_EQ(static_cast<double>(counters.stage1_reductions), eq.spatial_reduction) << describe(c);
    }
  }
}

TEST(Property, SimulationIsDeterministic) {
  std::mt19937_64 rng(19);
  for (int i = 0; i < 20; ++i) {
    const auto c = testing::random_case(rng);
    const Verdict a = verify_against_oracle(c.layer, c.array, 5, DataMode::kFloat32);
    const Verdict b = verify_against_oracle(c.layer, c.array, 5, DataMode::kFloat32);
    EXPECT_EQ(a.counters, b.counters);
    EXPECT_EQ(a.max_deviation, b.max_deviation);
  }
}

TEST(Property, CountersIgnoreData) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 30; ++i) {
    const auto c = testing::random_case(rng);
    EXPECT_EQ(verify_against_oracle(c.layer, c.array, 1).counters, verify_against_oracle(c.layer, c.array, 2).counters)
        << describe(c);
  }
}

TEST(Property, ParallelSimulationMatchesSerial) {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 30; ++i) {
    const auto c = testing::random_case(rng);
    const Tensor4D input = random_tensor(c.layer.input_shape(), DataMode::kFloat32, 3);
    const Tensor4D filters = random_tensor(c.layer.filter_shape(), DataMode::kFloat32, 4);
    const SimulationResult serial = simulate_layer(c.layer, c.array, input, filters, ExecPolicy::kSerial);
    const SimulationResult parallel = simulate_layer(c.layer, c.array, input, filters, ExecPolicy::kParallel);
    EXPECT_EQ(serial.output, parallel.output) << describe(c);
    EXPECT_EQ(serial.counters, parallel.counters) << describe(c);
  }
}

TEST(Property, ExecCyclesShrinkWithArraySize) {
  const PEArrayConfig arrays[] = {{16, 16}, {32, 32}, {64, 64}, {128, 128}};
  for (const auto& l : synthetic_suite()) {
    double previous = 0;
    for (std::size_t i = 0; i < std::size(arrays); ++i) {
      SystemConfig cfg;
      cfg.array = arrays[i];
      const double t = exec_cycles(l, arrays[i], cfg).t_ops;
      if (i) {
        EXPECT_LT(t, previous) << l.name << " " << arrays[i].label();
      }
      previous = t;
    }
  }
}

}  // namespace
}  // namespace foldmap
