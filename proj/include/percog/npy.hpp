#pragma once

#include <string>
#include <vector>

#include "percog/tensor.hpp"

namespace percog {

// Minimal NPY (format version 1.0) reader/writer for little-endian float32
// and float64 C-order arrays. This is the on-disk array convention for all
// landmark, spectrogram and window artifacts.

/// Writes t as '<f4' (float32=true) or '<f8'.
void npy_write(const std::string& path, const Tensor& t, bool float32 = true);

/// Reads an NPY file into a double Tensor regardless of stored precision.
Tensor npy_read(const std::string& path);

}  // namespace percog
