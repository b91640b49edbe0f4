#pragma once

#include <string>
#include <vector>

#include "spgnn/tensor.hpp"

namespace spgnn {

/// Reads binary 8-bit PPM (P6) into a [3,H,W] tensor with values
/// clamped to [0,1]. Requires H, W >= 32.
Tensor load_ppm(const std::string& path);

/// Writes a [3,H,W] tensor as binary 8-bit PPM; values are clamped to
/// [0,1] and rounded to bytes.
void save_ppm(const std::string& path, const Tensor& img);

/// 16-bit big-endian PGM (P5, maxval 65535) for label maps.
void save_pgm16(const std::string& path, const std::vector<int>& values, int w, int h);
std::vector<int> load_pgm16(const std::string& path, int& w, int& h);

/// Reflection-pads the right and bottom edges so both extents become
/// multiples of `multiple`. Outputs the padded image; original size is
/// recoverable from the input dims.
Tensor pad_reflect_to_multiple(const Tensor& img, int multiple);

}  // namespace spgnn
