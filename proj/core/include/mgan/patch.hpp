#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mgan/volume.hpp"

namespace mgan::patch {

// Cubic patch grid over a volume: per-axis offsets 0, stride, 2*stride, ...
// plus a clamped terminal offset at shape-patch; Cartesian product, optionally
// filtered by foreground fraction.
struct PatchGrid {
  std::array<int, 3> volume_shape{};
  int patch_size = 64;
  int stride = 10;
  std::vector<std::array<int, 3>> offsets;
};

// mask (optional) has one byte per voxel of the volume; patches whose
// foreground fraction is below min_fg are dropped.
PatchGrid plan_patch_offsets(const std::array<int, 3>& shape, int patch, int stride,
                             const std::vector<std::uint8_t>* mask = nullptr, float min_fg = 0.0f);

// Patches as [1,p,p,p] tensors in grid offset order.
std::vector<Tensor> extract_patches(const Volume& v, const PatchGrid& grid);
Tensor extract_patch(const Volume& v, const std::array<int, 3>& offset, int patch);

// Overlap-count-weighted mean of patch values; voxels covered by no patch are
// set to the background value -1.
Volume stitch_patches(const std::vector<Tensor>& patches, const PatchGrid& grid);

}  // namespace mgan::patch
