#pragma once

#include "spot/numerics/tensor.hpp"

#include <filesystem>
#include <iosfwd>

namespace spot::num {

// Binary layout, little-endian throughout:
//   u64 rank, u64 extent[rank], f64 value[prod(extents)] (row-major)
void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

} // namespace spot::num
