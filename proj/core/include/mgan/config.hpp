#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "mgan/losses.hpp"
#include "mgan/networks.hpp"
#include "mgan/training.hpp"

namespace mgan {

// Merged run configuration: model/loss/training configs plus paths, seed and
// the ablation toggles. Precedence: CLI flags > config file > defaults; the
// merged snapshot is written next to every run's outputs.
struct RunConfig {
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  losses::LossWeights loss_weights;
  training::TrainConfig train;

  std::uint64_t seed = 0;
  int infer_stride = 32;
  std::string manifest;
  std::string out_dir;
  std::string checkpoint;

  // ablation toggles (Backbone: both false; SFT-NCG: frequency only;
  // ST-CG: quality only; MGAN: both true)
  bool use_frequency_branch = true;
  bool use_quality_guidance = true;
  bool enable_texture_loss = true;
  bool enable_frequency_loss = true;

  // Applies a named ablation preset to the two main toggles.
  void apply_ablation(const std::string& name);
  // Pushes the toggles + seed into the nested configs.
  void sync_nested();
};

void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);
void to_json(nlohmann::json& j, const DiscriminatorConfig& c);
void from_json(const nlohmann::json& j, DiscriminatorConfig& c);

namespace losses_json {
nlohmann::json to_json(const losses::LossWeights& w);
losses::LossWeights weights_from_json(const nlohmann::json& j);
}  // namespace losses_json

nlohmann::json train_config_to_json(const training::TrainConfig& c);
training::TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json run_config_to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);

RunConfig load_run_config(const std::filesystem::path& file);      // JSON file
void save_run_config(const RunConfig& c, const std::filesystem::path& file);

}  // namespace mgan
