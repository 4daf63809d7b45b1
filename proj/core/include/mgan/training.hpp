#pragma once

#include <filesystem>
#include <optional>

#include "mgan/adam.hpp"
#include "mgan/checkpoint.hpp"
#include "mgan/losses.hpp"
#include "mgan/networks.hpp"
#include "mgan/patch.hpp"

namespace mgan::training {

struct TrainConfig {
  int pretrain_epochs = 5;
  int adversarial_epochs = 50;
  int patch_size = 64;
  int train_stride = 10;
  float min_fg = 0.1f;
  float lr = 1e-4f;
  int d_steps_per_g = 1;
  bool use_quality_guidance = true;
  bool enable_texture_loss = true;
  bool enable_frequency_loss = true;
  int checkpoint_every = 1;  // epochs
  std::uint64_t seed = 0;
};

// Aligned (x_a, x_b) patch pair, batch size 1.
struct PatchBatch {
  Tensor x_a, x_b;
};

// Both generators, both discriminators, joint optimizers, counters, and the
// config snapshot. Checkpoints round-trip weights and optimizer moments
// bitwise.
class TrainState {
 public:
  TrainState() = default;
  TrainState(const GeneratorConfig& gc, const DiscriminatorConfig& dc, const losses::LossWeights& lw,
             const TrainConfig& tc, const std::string& manifest_digest = "");

  Generator g_a, g_b;
  Discriminator d_a, d_b;
  Adam opt_g, opt_d;
  int epoch = 0;
  std::int64_t step = 0;
  losses::LossWeights loss_weights;
  TrainConfig train_config;
  std::string manifest_digest;
  wavelet::FilterBank bank;

  void save(const std::filesystem::path& archive_path) const;  // + .json sidecar
  static TrainState load(const std::filesystem::path& archive_path);
};

// One paired-pretraining update of both generators (no adversarial term,
// quality maps defined as 0 so the quality loss is plain L1).
losses::LossReport pretrain_step(TrainState& state, const PatchBatch& batch);

// One alternating update: discriminators on real vs detached fakes, then both
// generators on the full multi-scale objective with cycle reconstructions.
losses::LossReport adversarial_step(TrainState& state, const PatchBatch& batch);

// --- manifest handling ---
struct ManifestRow {
  std::string subject, timepoint, path;
};
struct SubjectPair {
  std::string subject;
  std::filesystem::path path_a, path_b;
};

std::vector<ManifestRow> read_manifest(const std::filesystem::path& manifest);
// Pairs rows by subject across the "ta"/"tb" tags; throws ManifestMismatch.
std::vector<SubjectPair> pair_manifest(const std::filesystem::path& manifest);
std::string manifest_digest(const std::filesystem::path& manifest);

// k-fold split by subject order; returns held-out subject indices of `fold`.
std::vector<size_t> fold_holdout(size_t n_subjects, int n_folds, int fold);

// Full run: 5+50 epochs (configurable) over all grid patches of all pairs,
// per-epoch checkpoints and a JSON-lines loss log under out_dir. Returns the
// final checkpoint path. `resume_from` continues a previous run bitwise.
std::filesystem::path train(const std::filesystem::path& manifest, const GeneratorConfig& gc,
                            const DiscriminatorConfig& dc, const losses::LossWeights& lw,
                            const TrainConfig& tc, const std::filesystem::path& out_dir,
                            const std::optional<std::filesystem::path>& resume_from = std::nullopt);

}  // namespace mgan::training
