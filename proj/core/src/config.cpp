#include "mgan/config.hpp"

#include <fstream>

namespace mgan {

using nlohmann::json;

void RunConfig::apply_ablation(const std::string& name) {
  if (name == "backbone") {
    use_frequency_branch = false;
    use_quality_guidance = false;
  } else if (name == "sft-ncg") {
    use_frequency_branch = true;
    use_quality_guidance = false;
  } else if (name == "st-cg") {
    use_frequency_branch = false;
    use_quality_guidance = true;
  } else if (name == "mgan") {
    use_frequency_branch = true;
    use_quality_guidance = true;
  } else {
    throw UsageError("unknown ablation preset: " + name +
                     " (expected backbone|sft-ncg|st-cg|mgan)");
  }
}

void RunConfig::sync_nested() {
  generator.use_frequency_branch = use_frequency_branch;
  train.use_quality_guidance = use_quality_guidance;
  train.enable_texture_loss = enable_texture_loss;
  train.enable_frequency_loss = enable_frequency_loss;
  train.seed = seed;
}

void to_json(json& j, const GeneratorConfig& c) {
  j = json{{"in_channels", c.in_channels},
           {"enc_channels", c.enc_channels},
           {"enc_strides", c.enc_strides},
           {"sft_channels", c.sft_channels},
           {"n_res_blocks", c.n_res_blocks},
           {"use_frequency_branch", c.use_frequency_branch},
           {"dropout_keep", c.dropout_keep}};
}

void from_json(const json& j, GeneratorConfig& c) {
  c = GeneratorConfig{};
  if (j.contains("in_channels")) j.at("in_channels").get_to(c.in_channels);
  if (j.contains("enc_channels")) j.at("enc_channels").get_to(c.enc_channels);
  if (j.contains("enc_strides")) j.at("enc_strides").get_to(c.enc_strides);
  if (j.contains("sft_channels")) j.at("sft_channels").get_to(c.sft_channels);
  if (j.contains("n_res_blocks")) j.at("n_res_blocks").get_to(c.n_res_blocks);
  if (j.contains("use_frequency_branch")) j.at("use_frequency_branch").get_to(c.use_frequency_branch);
  if (j.contains("dropout_keep")) j.at("dropout_keep").get_to(c.dropout_keep);
}

void to_json(json& j, const DiscriminatorConfig& c) {
  j = json{{"channels", c.channels}, {"kernel", c.kernel}, {"n_levels", c.n_levels}};
}

void from_json(const json& j, DiscriminatorConfig& c) {
  c = DiscriminatorConfig{};
  if (j.contains("channels")) j.at("channels").get_to(c.channels);
  if (j.contains("kernel")) j.at("kernel").get_to(c.kernel);
  if (j.contains("n_levels")) j.at("n_levels").get_to(c.n_levels);
}

namespace losses_json {
json to_json(const losses::LossWeights& w) {
  return json{{"lambda_adv", w.lambda_adv},
              {"lambda_paired", w.lambda_paired},
              {"lambda_cyc", w.lambda_cyc},
              {"beta", w.beta},
              {"scale_weights", w.scale_weights}};
}

losses::LossWeights weights_from_json(const json& j) {
  losses::LossWeights w;
  if (j.contains("lambda_adv")) j.at("lambda_adv").get_to(w.lambda_adv);
  if (j.contains("lambda_paired")) j.at("lambda_paired").get_to(w.lambda_paired);
  if (j.contains("lambda_cyc")) j.at("lambda_cyc").get_to(w.lambda_cyc);
  if (j.contains("beta")) j.at("beta").get_to(w.beta);
  if (j.contains("scale_weights")) j.at("scale_weights").get_to(w.scale_weights);
  return w;
}
}  // namespace losses_json

json train_config_to_json(const training::TrainConfig& c) {
  return json{{"pretrain_epochs", c.pretrain_epochs},
              {"adversarial_epochs", c.adversarial_epochs},
              {"patch_size", c.patch_size},
              {"train_stride", c.train_stride},
              {"min_fg", c.min_fg},
              {"lr", c.lr},
              {"d_steps_per_g", c.d_steps_per_g},
              {"use_quality_guidance", c.use_quality_guidance},
              {"enable_texture_loss", c.enable_texture_loss},
              {"enable_frequency_loss", c.enable_frequency_loss},
              {"checkpoint_every", c.checkpoint_every},
              {"seed", c.seed}};
}

training::TrainConfig train_config_from_json(const json& j) {
  training::TrainConfig c;
  if (j.contains("pretrain_epochs")) j.at("pretrain_epochs").get_to(c.pretrain_epochs);
  if (j.contains("adversarial_epochs")) j.at("adversarial_epochs").get_to(c.adversarial_epochs);
  if (j.contains("patch_size")) j.at("patch_size").get_to(c.patch_size);
  if (j.contains("train_stride")) j.at("train_stride").get_to(c.train_stride);
  if (j.contains("min_fg")) j.at("min_fg").get_to(c.min_fg);
  if (j.contains("lr")) j.at("lr").get_to(c.lr);
  if (j.contains("d_steps_per_g")) j.at("d_steps_per_g").get_to(c.d_steps_per_g);
  if (j.contains("use_quality_guidance")) j.at("use_quality_guidance").get_to(c.use_quality_guidance);
  if (j.contains("enable_texture_loss")) j.at("enable_texture_loss").get_to(c.enable_texture_loss);
  if (j.contains("enable_frequency_loss")) j.at("enable_frequency_loss").get_to(c.enable_frequency_loss);
  if (j.contains("checkpoint_every")) j.at("checkpoint_every").get_to(c.checkpoint_every);
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
  return c;
}

json run_config_to_json(const RunConfig& c) {
  json j;
  j["format"] = "mgan-run-config-v1";
  j["generator"] = c.generator;
  j["discriminator"] = c.discriminator;
  j["loss_weights"] = losses_json::to_json(c.loss_weights);
  j["train"] = train_config_to_json(c.train);
  j["seed"] = c.seed;
  j["infer_stride"] = c.infer_stride;
  j["manifest"] = c.manifest;
  j["out_dir"] = c.out_dir;
  j["checkpoint"] = c.checkpoint;
  j["use_frequency_branch"] = c.use_frequency_branch;
  j["use_quality_guidance"] = c.use_quality_guidance;
  j["enable_texture_loss"] = c.enable_texture_loss;
  j["enable_frequency_loss"] = c.enable_frequency_loss;
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  if (j.contains("generator")) j.at("generator").get_to(c.generator);
  if (j.contains("discriminator")) j.at("discriminator").get_to(c.discriminator);
  if (j.contains("loss_weights")) c.loss_weights = losses_json::weights_from_json(j.at("loss_weights"));
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
  if (j.contains("infer_stride")) j.at("infer_stride").get_to(c.infer_stride);
  if (j.contains("manifest")) j.at("manifest").get_to(c.manifest);
  if (j.contains("out_dir")) j.at("out_dir").get_to(c.out_dir);
  if (j.contains("checkpoint")) j.at("checkpoint").get_to(c.checkpoint);
  if (j.contains("use_frequency_branch")) j.at("use_frequency_branch").get_to(c.use_frequency_branch);
  if (j.contains("use_quality_guidance")) j.at("use_quality_guidance").get_to(c.use_quality_guidance);
  if (j.contains("enable_texture_loss")) j.at("enable_texture_loss").get_to(c.enable_texture_loss);
  if (j.contains("enable_frequency_loss")) j.at("enable_frequency_loss").get_to(c.enable_frequency_loss);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoFailure("cannot open config file " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError("config file " + file.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

void save_run_config(const RunConfig& c, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw IoFailure("cannot write config snapshot " + file.string());
  out << run_config_to_json(c).dump(2) << "\n";
}

}  // namespace mgan
