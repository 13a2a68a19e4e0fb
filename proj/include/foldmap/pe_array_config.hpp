#pragma once

#include <string>

namespace foldmap {

// R_P x C_P grid of processing elements.
struct PEArrayConfig {
  int rows = 1;
  int cols = 1;

  int cell_count() const { return rows * cols; }
  std::string label() const { return std::to_string(rows) + "x" + std::to_string(cols); }

  friend bool operator==(const PEArrayConfig&, const PEArrayConfig&) = default;
};

// Parses "RxC" (case-insensitive x). Throws ConfigError.
PEArrayConfig parse_array_dims(const std::string& text);

}  // namespace foldmap
