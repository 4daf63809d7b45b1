#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mgan/tensor.hpp"

namespace mgan {

// Single-channel 3D intensity field with voxel spacing, optional foreground
// mask and free-form metadata. Dims are [D,H,W], W fastest.
struct Volume {
  Tensor data;                      // [D,H,W] stored as rank-3 tensor
  std::array<float, 3> spacing{1.0f, 1.0f, 1.0f};
  std::optional<std::vector<std::uint8_t>> mask;  // same voxel count as data
  std::map<std::string, std::string> meta;

  int dim(int i) const { return data.dim(i); }
  std::int64_t voxels() const { return data.numel(); }
  void validate() const;  // no NaN/Inf, mask shape matches

  // data as [1,D,H,W] network tensor and back
  Tensor as_patch_tensor() const;
  static Volume from_tensor(const Tensor& t, std::array<float, 3> spacing = {1, 1, 1});
};

// Affine map of [min,max] (within the mask when present) onto [-1,1];
// voxels outside the mask are set to -1. Records norm_min/norm_max in meta.
// Throws ConstantVolume when max == min.
Volume normalize_intensity(const Volume& v);

// Inverse of normalize_intensity using the recorded min/max.
Volume denormalize_intensity(const Volume& v);

// Foreground mask derived from a normalized volume: voxels above the -1
// background by `tol`. Used when a cohort has no explicit mask files.
std::vector<std::uint8_t> derive_foreground_mask(const Volume& normalized, float tol = 1e-3f);

}  // namespace mgan
