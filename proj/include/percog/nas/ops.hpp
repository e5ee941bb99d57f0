#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace percog::nas {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Candidate operations on a directed cell edge, in canonical order. The
/// five convolutions carry layer weights; the other five do not.
enum class OpKind : int {
  MaxPool3 = 0,
  AvgPool3,
  SepConv3,
  SepConv5,
  DilConv3,
  DilConv5,
  TConv3,
  UpLinear,
  UpNearest,
  Identity,
};

constexpr int kNumOps = 10;
constexpr int kNumWeighted = 5;  // SepConv3, SepConv5, DilConv3, DilConv5, TConv3
constexpr int kNumWeightless = 5;

enum class CellKind { Regular, Down, Up };
/// Temporal behaviour of one edge: preserve, halve or double T. Within a
/// down (up) cell only the edges leaving the two input nodes reduce
/// (expand); edges between intermediate nodes preserve length.
enum class EdgeRole { Regular, Down, Up };

struct OperationSpec {
  OpKind kind;
  const char* name;
  int kernel_extent;  // 0 for weightless ops
  bool has_weights;
  int dilation;  // for convolutions
};

const std::array<OperationSpec, kNumOps>& operation_table();

/// Position of a weighted op among the weighted subset (0..4), -1 otherwise.
int weighted_index(OpKind k);
/// Position of a weightless op among the weightless subset (0..4), -1 otherwise.
int weightless_index(OpKind k);

const char* op_name(OpKind k);
OpKind op_from_name(const std::string& name);

using ValidityMask = std::array<char, kNumOps>;

/// Which candidate ops are admissible for each edge role. Overridable from
/// configuration; these are the defaults.
struct ValidityTable {
  ValidityMask regular{1, 1, 1, 1, 1, 1, 1, 0, 0, 1};
  ValidityMask down{1, 1, 1, 1, 1, 1, 0, 0, 0, 0};
  ValidityMask up{0, 0, 0, 0, 0, 0, 1, 1, 1, 0};

  const ValidityMask& for_role(EdgeRole r) const {
    switch (r) {
      case EdgeRole::Down: return down;
      case EdgeRole::Up: return up;
      default: return regular;
    }
  }
};

const char* cell_kind_name(CellKind k);
CellKind cell_kind_from_name(const std::string& name);

}  // namespace percog::nas
