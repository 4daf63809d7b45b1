#include "mgan/patch.hpp"

namespace mgan::patch {

namespace {
std::vector<int> axis_offsets(int extent, int patch, int stride) {
  std::vector<int> offs;
  for (int o = 0; o + patch <= extent; o += stride) offs.push_back(o);
  const int last = extent - patch;
  if (offs.empty() || offs.back() != last) offs.push_back(last);
  return offs;
}
}  // namespace

PatchGrid plan_patch_offsets(const std::array<int, 3>& shape, int patch, int stride,
                             const std::vector<std::uint8_t>* mask, float min_fg) {
  if (patch < 1) throw PatchTooLarge("patch size must be >= 1");
  if (stride < 1) throw InvalidRange("stride must be >= 1");
  for (int s : shape)
    if (patch > s) throw PatchTooLarge("patch exceeds volume extent");
  if (mask && static_cast<std::int64_t>(mask->size()) !=
                  static_cast<std::int64_t>(shape[0]) * shape[1] * shape[2])
    throw GridMismatch("mask size differs from volume shape");

  PatchGrid grid;
  grid.volume_shape = shape;
  grid.patch_size = patch;
  grid.stride = stride;
  const auto dz = axis_offsets(shape[0], patch, stride);
  const auto dy = axis_offsets(shape[1], patch, stride);
  const auto dx = axis_offsets(shape[2], patch, stride);
  const std::int64_t patch_voxels = static_cast<std::int64_t>(patch) * patch * patch;
  for (int oz : dz)
    for (int oy : dy)
      for (int ox : dx) {
        if (mask && min_fg > 0.0f) {
          std::int64_t fg = 0;
          for (int z = oz; z < oz + patch; ++z)
            for (int y = oy; y < oy + patch; ++y) {
              const std::int64_t row = (static_cast<std::int64_t>(z) * shape[1] + y) * shape[2] + ox;
              for (int x = 0; x < patch; ++x) fg += (*mask)[static_cast<size_t>(row + x)] ? 1 : 0;
            }
          if (static_cast<float>(fg) < min_fg * static_cast<float>(patch_voxels)) continue;
        }
        grid.offsets.push_back({oz, oy, ox});
      }
  return grid;
}

Tensor extract_patch(const Volume& v, const std::array<int, 3>& offset, int patch) {
  for (int i = 0; i < 3; ++i)
    if (offset[static_cast<size_t>(i)] < 0 || offset[static_cast<size_t>(i)] + patch > v.dim(i))
      throw GridMismatch("patch offset out of range");
  Tensor out({1, patch, patch, patch});
  const int H = v.dim(1), W = v.dim(2);
  for (int z = 0; z < patch; ++z)
    for (int y = 0; y < patch; ++y) {
      const std::int64_t src =
          (static_cast<std::int64_t>(offset[0] + z) * H + (offset[1] + y)) * W + offset[2];
      const std::int64_t dst = (static_cast<std::int64_t>(z) * patch + y) * patch;
      for (int x = 0; x < patch; ++x) out[dst + x] = v.data[src + x];
    }
  return out;
}

std::vector<Tensor> extract_patches(const Volume& v, const PatchGrid& grid) {
  if (v.dim(0) != grid.volume_shape[0] || v.dim(1) != grid.volume_shape[1] ||
      v.dim(2) != grid.volume_shape[2])
    throw GridMismatch("volume shape differs from grid");
  std::vector<Tensor> out;
  out.reserve(grid.offsets.size());
  for (const auto& off : grid.offsets) out.push_back(extract_patch(v, off, grid.patch_size));
  return out;
}

Volume stitch_patches(const std::vector<Tensor>& patches, const PatchGrid& grid) {
  if (patches.size() != grid.offsets.size()) throw GridMismatch("patch count differs from grid offsets");
  const int p = grid.patch_size;
  for (const Tensor& t : patches) {
    if (t.rank() != 4 || t.dim(0) != 1 || t.dim(1) != p || t.dim(2) != p || t.dim(3) != p)
      throw GridMismatch("patch tensor shape differs from grid patch size");
  }
  const auto& shape = grid.volume_shape;
  Tensor sum({shape[0], shape[1], shape[2]});
  std::vector<std::uint32_t> count(static_cast<size_t>(sum.numel()), 0);
  for (size_t i = 0; i < patches.size(); ++i) {
    const auto& off = grid.offsets[i];
    const Tensor& t = patches[i];
    for (int z = 0; z < p; ++z)
      for (int y = 0; y < p; ++y) {
        const std::int64_t dst =
            (static_cast<std::int64_t>(off[0] + z) * shape[1] + (off[1] + y)) * shape[2] + off[2];
        const std::int64_t src = (static_cast<std::int64_t>(z) * p + y) * p;
        for (int x = 0; x < p; ++x) {
          sum[dst + x] += t[src + x];
          ++count[static_cast<size_t>(dst + x)];
        }
      }
  }
  for (std::int64_t i = 0; i < sum.numel(); ++i)
    sum[i] = count[static_cast<size_t>(i)] ? sum[i] / static_cast<float>(count[static_cast<size_t>(i)]) : -1.0f;
  return Volume::from_tensor(sum);
}

}  // namespace mgan::patch
