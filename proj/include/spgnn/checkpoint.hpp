#pragma once

#include <string>
#include <vector>

#include "spgnn/tensor.hpp"

namespace spgnn {

/// Binary weight container: 8-byte magic, little-endian u64 manifest
/// length, UTF-8 JSON manifest [{name, shape, offset}...], then one
/// length-prefixed little-endian float64 array per Parameter at the
/// listed absolute offsets. Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const std::vector<Parameter*>& params);

/// Loads values into `params`; names and shapes must match exactly.
void load_checkpoint(const std::string& path, const std::vector<Parameter*>& params);

}  // namespace spgnn
