#pragma once

#include <string>
#include <vector>

#include "percog/nas/ops.hpp"
#include "percog/tensor.hpp"

namespace percog::archgraph {

enum class LwMode { Top5, Histogram };

const char* lw_mode_name(LwMode m);
LwMode lw_mode_from_name(const std::string& name);

/// Fixed-size summary of one weighted operation's kernels, independent of
/// the channel counts.
///
/// Top5: the kernels (one length-K vector per (c_in,c_out) pair, kernel
/// index = c_in*C_out + c_out) are ranked by L1 norm; the five strongest are
/// concatenated in descending-L1 order (ties by kernel index) and
/// zero-padded when fewer than five exist. Output length 5*K.
std::vector<double> extract_lw_top5(const Tensor& op_weights);

/// Histogram: per kernel position, a B-bin frequency histogram over all
/// kernels with the bin range [-|w|max, +|w|max] of the layer; an all-zero
/// layer puts frequency 1 in the central bin. Output length K*B.
std::vector<double> extract_lw_hist(const Tensor& op_weights, int bins);

/// Per-op representation length for the chosen mode.
int lw_op_dim(nas::OpKind op, LwMode mode, int bins);
/// Total length of the concatenated representation over the 5 weighted ops.
int lw_total_dim(LwMode mode, int bins);

/// Guard used by record builders: the op must carry weights.
void require_weighted(nas::OpKind op);

}  // namespace percog::archgraph
