#include "mgan/inference.hpp"

namespace mgan {

namespace {
patch::PatchGrid full_cover_grid(const Volume& v, int patch_size, int stride) {
  return patch::plan_patch_offsets({v.dim(0), v.dim(1), v.dim(2)}, patch_size, stride);
}
}  // namespace

Volume predict_volume(const Generator& g, const Volume& normalized, int patch_size, int stride,
                      bool dropout_active, Rng* rng) {
  const auto grid = full_cover_grid(normalized, patch_size, stride);
  std::vector<Tensor> outputs;
  outputs.reserve(grid.offsets.size());
  ad::NoGradGuard ng;
  for (const auto& off : grid.offsets) {
    Tensor p = patch::extract_patch(normalized, off, patch_size);
    outputs.push_back(g.forward(p, dropout_active, rng).s1->value);
  }
  Volume out = patch::stitch_patches(outputs, grid);
  out.spacing = normalized.spacing;
  return out;
}

Volume quality_map_volume(const Discriminator& d, const Volume& normalized, int patch_size, int stride) {
  const auto grid = full_cover_grid(normalized, patch_size, stride);
  std::vector<Tensor> outputs;
  outputs.reserve(grid.offsets.size());
  ad::NoGradGuard ng;
  for (const auto& off : grid.offsets) {
    Tensor p = patch::extract_patch(normalized, off, patch_size);
    outputs.push_back(d.forward(p).s1->value);
  }
  Volume out = patch::stitch_patches(outputs, grid);
  out.spacing = normalized.spacing;
  return out;
}

}  // namespace mgan
