#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "foldmap/fabric.hpp"
#include "foldmap/folding.hpp"
#include "foldmap/perfmodel.hpp"

namespace foldmap::report {

using Json = nlohmann::ordered_json;

std::string fixed(double value, int decimals);

// Column-aligned text table; the first row is the header.
class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header);
  void add_row(std::vector<std::string> row);
  void print(std::ostream& out) const;

 private:
  std::vector<std::vector<std::string>> rows_;
};

// Comma-separated rows with a fixed header.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);

 private:
  std::ostream& out_;
  std::size_t width_;
};

Json plan_json(const FoldPlan& plan);
Json counters_json(const EventCounters& counters);
Json aggregate_json(const PerfReport& report);

void print_counters_table(std::ostream& out, const EventCounters& counters);

}  // namespace foldmap::report
