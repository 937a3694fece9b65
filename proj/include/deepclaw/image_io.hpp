#pragma once

#include <string>

#include "deepclaw/simcell.hpp"

namespace deepclaw {

/// Binary portable pixmap (P6), 8-bit RGB.
void write_ppm(const std::string& path, const Frame& frame);
void read_ppm(const std::string& path, Frame& frame);  // fills color + dims

/// Grayscale portable float map ("Pf"), 32-bit little-endian floats,
/// bottom-to-top rows as the format requires. Depth round-trips exactly at
/// float precision.
void write_pfm(const std::string& path, const Frame& frame);
void read_pfm(const std::string& path, Frame& frame);  // fills depth + dims

}  // namespace deepclaw
