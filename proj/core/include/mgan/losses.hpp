#pragma once

#include <array>
#include <string>
#include <vector>

#include "mgan/networks.hpp"
#include "mgan/wavelet.hpp"

namespace mgan::losses {

struct LossWeights {
  float lambda_adv = 1.0f;
  float lambda_paired = 10.0f;
  float lambda_cyc = 10.0f;
  float beta = 1.5f;
  std::array<float, 3> scale_weights = {1.0f, 1.0f, 1.0f};

  void validate() const;
};

// Flat per-term/per-scale scalar record, one entry per (term, scale).
// Terms evaluated at s1 only (texture, frequency, cycle) use scale 1.
struct LossReport {
  struct Entry {
    std::string term;
    int scale;
    float value;
  };
  std::vector<Entry> entries;
  float total = 0.0f;

  void set(const std::string& term, int scale, float value);
  float get(const std::string& term, int scale) const;  // 0 when absent
  bool has(const std::string& term, int scale) const;
};

// Non-saturating GAN losses, per scale then combined with scale_weights.
// d_loss = -mean log d_real - mean log(1 - d_fake); g_loss = -mean log d_fake.
// Maps are epsilon-clamped at 1e-7 before the log. Detaching the fake patch
// (discriminator update) or freezing discriminator weights (generator update)
// is the caller's responsibility.
std::pair<ad::Var, ad::Var> adversarial_losses(const MultiScaleOutput& d_real, const MultiScaleOutput& d_fake,
                                               const std::array<float, 3>& scale_weights);

// mean over voxels of |target - pred| * (1-q)^beta; q is a constant weight.
ad::Var quality_loss(const ad::Var& pred, const Tensor& target, const Tensor& q, float beta);

// MSE between Gram matrices of non-overlapping 4^3 block unfoldings.
ad::Var texture_loss(const ad::Var& pred, const Tensor& target);

// sum over the 8 subbands of mean |DWT(target)_k - DWT(pred)_k|.
ad::Var frequency_loss(const ad::Var& pred, const Tensor& target, const wavelet::FilterBank& bank);

// mean |x_a - rec_a| + mean |x_b - rec_b|.
ad::Var cycle_loss(const Tensor& x_a, const ad::Var& rec_a, const Tensor& x_b, const ad::Var& rec_b);

// Three-level target pyramid built by 2x average pooling.
std::array<Tensor, 3> target_pyramid(const Tensor& t);

// Everything the combined generator objective needs for both directions.
struct ObjectiveInputs {
  MultiScaleOutput pred_a2b, pred_b2a;       // G_a(x_a), G_b(x_b)
  std::array<Tensor, 3> target_b, target_a;  // pooled pyramids of x_b, x_a
  // Discriminator outputs on the predictions; present only in the
  // adversarial phase. Values are detached for quality weighting, the graph
  // is used for the generator adversarial term.
  const MultiScaleOutput* d_on_a2b = nullptr;  // D_b(G_a(x_a))
  const MultiScaleOutput* d_on_b2a = nullptr;  // D_a(G_b(x_b))
  ad::Var rec_a, rec_b;                        // G_b(G_a(x_a)).s1, G_a(G_b(x_b)).s1
  Tensor x_a, x_b;                             // cycle references
  bool use_quality_guidance = true;            // ablation: q == 0 when false
  bool enable_texture = true;
  bool enable_frequency = true;
};

// Builds the weighted multi-scale objective:
//   total = sum_s sw[s] * (l_adv*adv_g_s + l_paired*(quality_s+texture_s+frequency_s) + l_cyc*cycle_s)
// with texture/frequency/cycle evaluated at s1 only. Terms are summed over
// both generator directions. Fills `report` with per-term values.
ad::Var total_objective(const ObjectiveInputs& in, const LossWeights& weights,
                        const wavelet::FilterBank& bank, LossReport& report);

}  // namespace mgan::losses
