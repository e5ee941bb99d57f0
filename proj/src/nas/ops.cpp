#include "percog/nas/ops.hpp"

namespace percog::nas {

const std::array<OperationSpec, kNumOps>& operation_table() {
  static const std::array<OperationSpec, kNumOps> table{{
      {OpKind::MaxPool3, "max_pool_1x3", 0, false, 1},
      {OpKind::AvgPool3, "avg_pool_1x3", 0, false, 1},
      {OpKind::SepConv3, "sep_conv_1x3", 3, true, 1},
      {OpKind::SepConv5, "sep_conv_1x5", 5, true, 1},
      {OpKind::DilConv3, "dil_conv_1x3", 3, true, 2},
      {OpKind::DilConv5, "dil_conv_1x5", 5, true, 2},
      {OpKind::TConv3, "t_conv_1x3", 3, true, 1},
      {OpKind::UpLinear, "up_linear", 0, false, 1},
      {OpKind::UpNearest, "up_nearest", 0, false, 1},
      {OpKind::Identity, "identity", 0, false, 1},
  }};
  return table;
}

int weighted_index(OpKind k) {
  int i = static_cast<int>(k);
  if (i >= static_cast<int>(OpKind::SepConv3) && i <= static_cast<int>(OpKind::TConv3))
    return i - static_cast<int>(OpKind::SepConv3);
  return -1;
}

int weightless_index(OpKind k) {
  switch (k) {
    case OpKind::MaxPool3: return 0;
    case OpKind::AvgPool3: return 1;
    case OpKind::UpLinear: return 2;
    case OpKind::UpNearest: return 3;
    case OpKind::Identity: return 4;
    default: return -1;
  }
}

const char* op_name(OpKind k) {
  return operation_table()[static_cast<std::size_t>(k)].name;
}

OpKind op_from_name(const std::string& name) {
  for (const auto& spec : operation_table())
    if (name == spec.name) return spec.kind;
  throw ConfigError("unknown operation name: " + name);
}

const char* cell_kind_name(CellKind k) {
  switch (k) {
    case CellKind::Regular: return "regular";
    case CellKind::Down: return "down";
    case CellKind::Up: return "up";
  }
  return "regular";
}

CellKind cell_kind_from_name(const std::string& name) {
  if (name == "regular") return CellKind::Regular;
  if (name == "down") return CellKind::Down;
  if (name == "up") return CellKind::Up;
  throw ConfigError("unknown cell kind: " + name);
}

}  // namespace percog::nas
