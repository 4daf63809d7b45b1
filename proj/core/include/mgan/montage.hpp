#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mgan/volume.hpp"

namespace mgan::montage {

// Minimal 8-bit grayscale PNG encoder (zlib-compressed, filter 0).
void write_png_gray(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& pixels);

// Mid-axial slice (depth midpoint) rescaled to [0,255] over the slice range.
std::vector<std::uint8_t> mid_axial_slice_u8(const Volume& v, int* width = nullptr, int* height = nullptr);

void write_slice_png(const Volume& v, const std::filesystem::path& path);

}  // namespace mgan::montage
