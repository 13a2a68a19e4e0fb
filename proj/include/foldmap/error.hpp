#pragma once

#include <stdexcept>
#include <string>

namespace foldmap {

// Bad user input: malformed layer, config file, or flag value.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor extents disagree with the layer they are used with.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A layer (or fold) does not fit the PE array.
class MappingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One channel footprint is wider than the array; min_cols is the smallest C_P
// that would accept the layer.
class UnmappableLayer : public MappingError {
 public:
  UnmappableLayer(const std::string& layer_name, int min_cols, int have_cols)
      : MappingError("layer '" + layer_name + "' is unmappable: needs at least C_P=" +
                     std::to_string(min_cols) + " PE columns, array has " +
                     std::to_string(have_cols)),
        min_cols_(min_cols) {}

  int min_cols() const { return min_cols_; }

 private:
  int min_cols_;
};

// Partial-sum accumulation found a hole left by the simulation.
class IncompleteSimulation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace foldmap
