#pragma once

#include "mgan/networks.hpp"
#include "mgan/patch.hpp"

namespace mgan {

// Full-volume prediction by overlapping-patch inference with mean blending.
// `normalized` must already be in [-1,1]. Stochastic passes (MC dropout)
// take an explicit RNG for reproducibility.
Volume predict_volume(const Generator& g, const Volume& normalized, int patch_size, int stride,
                      bool dropout_active = false, Rng* rng = nullptr);

// Stitched discriminator quality map over a (predicted) volume in [-1,1].
Volume quality_map_volume(const Discriminator& d, const Volume& normalized, int patch_size, int stride);

}  // namespace mgan
