#pragma once

#include <string>

#include "mgan/inference.hpp"

namespace mgan::uncertainty {

// One sampled test-time augmentation: per-axis flips ~ B(0.5), per-axis
// rotation angles ~ U(0,2pi), additive Gaussian noise N(0, sigma^2).
// apply = noise, then flips, then rotations; invert = inverse rotations then
// inverse flips (noise is not inverted).
struct TtaTransform {
  std::array<bool, 3> flips{false, false, false};
  std::array<float, 3> angles{0.0f, 0.0f, 0.0f};
  float noise_sigma = 0.05f;
  std::uint64_t seed = 0;

  static TtaTransform sample(std::uint64_t seed, float noise_sigma = 0.05f);
  bool is_identity() const;
};

Volume apply_tta(const Volume& v, const TtaTransform& t);
Volume invert_tta(const Volume& v, const TtaTransform& t);

struct UncertaintyMap {
  std::string kind;  // "epistemic" | "aleatoric"
  Volume sigma;      // voxelwise population standard deviation, >= 0
  int n_samples = 0;
  Volume mean_prediction;
};

// N stochastic full-volume predictions with MC dropout active;
// sigma = sqrt(sum_n (y_n - mean)^2 / N) voxelwise.
UncertaintyMap epistemic_map(const Generator& g, const Volume& normalized, int n = 20,
                             float keep = 0.8f, std::uint64_t seed = 0, int patch_size = 64,
                             int stride = 32);

// N augmented predictions y_n = invert(predict(apply(x, t_n)), t_n) with
// dropout inactive; same population-std reduction.
UncertaintyMap aleatoric_map(const Generator& g, const Volume& normalized, int n = 20,
                             std::uint64_t seed = 0, int patch_size = 64, int stride = 32,
                             float tta_noise_sigma = 0.05f);

// Population standard deviation over a stack of equally-shaped volumes.
Volume population_std(const std::vector<Volume>& samples, Volume* mean_out = nullptr);

}  // namespace mgan::uncertainty
