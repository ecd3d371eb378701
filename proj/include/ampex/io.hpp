#pragma once

#include <string>

#include "ampex/grid_tensor.hpp"
#include "ampex/mps.hpp"

namespace ampex {

/// AMPX1 tensor container: magic "AMPX", u8 version=1, u8 dtype=1 (f64 LE),
/// u8 has_C, u8 reserved, u32 d, d x u32 dims, optional f64 C, row-major
/// entries. Everything little-endian, bit-exact across platforms.
void write_grid_tensor(const std::string& path, const GridTensor& tensor);
GridTensor read_grid_tensor(const std::string& path);

/// AMPM1 MPS container: magic "AMPM", u8 version=1, u32 d, u32 D,
/// (d-2) x u32 bonds, cores as f64 LE row-major in chain order, trailing f64
/// norm of core 0.
void write_mps(const std::string& path, const Mps& mps);
Mps read_mps(const std::string& path);

/// Full-precision decimal formatting used for every CSV cell (round-trips
/// doubles exactly).
std::string format_double(double value);

} // namespace ampex
