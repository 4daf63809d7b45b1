#include "mgan/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

#include "mgan/config.hpp"
#include "mgan/metrics.hpp"
#include "mgan/phantom.hpp"
#include "mgan/training.hpp"
#include "mgan/uncertainty.hpp"
#include "mgan/volume_io.hpp"

namespace mgan {

namespace {

void write_snapshot(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  save_run_config(cfg, out_dir / "config_snapshot.json");
}

struct PhantomArgs {
  int n = 4;
  int size = 64;
  int n_blobs = 6;
  float age_a = 0.1f, age_b = 0.9f;
  bool no_contrast_flip = false;
  float deform = 2.0f;
  float noise = 0.02f;
  std::string format = ".nii";
};

int cmd_phantom(const RunConfig& cfg, const PhantomArgs& args) {
  std::vector<phantom::CohortEntry> entries;
  for (int i = 0; i < args.n; ++i) {
    phantom::PhantomSpec spec;
    spec.size = {args.size, args.size, args.size};
    spec.n_blobs = args.n_blobs;
    spec.age_a = args.age_a;
    spec.age_b = args.age_b;
    spec.contrast_flip = !args.no_contrast_flip;
    spec.deform_amplitude = args.deform;
    spec.noise_sigma = args.noise;
    spec.seed = derive_seed(cfg.seed, "subject", static_cast<std::uint64_t>(i));
    char name[16];
    std::snprintf(name, sizeof(name), "sub%03d", i);
    entries.push_back({name, spec});
  }
  const auto manifest = phantom::generate_cohort(entries, cfg.out_dir, args.format);
  write_snapshot(cfg, cfg.out_dir);
  std::cout << "wrote " << 2 * args.n << " volumes and " << manifest.string() << "\n";
  return 0;
}

int cmd_train(RunConfig cfg, const std::string& resume, int folds, int fold) {
  cfg.sync_nested();
  std::filesystem::path manifest = cfg.manifest;
  if (folds > 0) {
    // hold out one fold of subjects; training uses the rest
    const auto pairs = training::pair_manifest(manifest);
    const auto held = training::fold_holdout(pairs.size(), folds, fold);
    std::filesystem::create_directories(cfg.out_dir);
    const auto train_manifest = std::filesystem::path(cfg.out_dir) / "train_manifest.csv";
    const auto held_manifest = std::filesystem::path(cfg.out_dir) / "holdout_manifest.csv";
    std::ofstream tm(train_manifest, std::ios::trunc), hm(held_manifest, std::ios::trunc);
    tm << "subject,timepoint,path\n";
    hm << "subject,timepoint,path\n";
    for (size_t i = 0; i < pairs.size(); ++i) {
      const bool heldout = std::find(held.begin(), held.end(), i) != held.end();
      auto& out = heldout ? hm : tm;
      out << pairs[i].subject << ",ta," << std::filesystem::absolute(pairs[i].path_a).string() << "\n";
      out << pairs[i].subject << ",tb," << std::filesystem::absolute(pairs[i].path_b).string() << "\n";
    }
    manifest = train_manifest;
  }
  write_snapshot(cfg, cfg.out_dir);
  std::optional<std::filesystem::path> resume_from;
  if (!resume.empty()) resume_from = resume;
  const auto ckpt = training::train(manifest, cfg.generator, cfg.discriminator, cfg.loss_weights,
                                    cfg.train, cfg.out_dir, resume_from);
  std::cout << "final checkpoint: " << ckpt.string() << "\n";
  return 0;
}

int cmd_predict(const RunConfig& cfg, const std::string& input, const std::string& output,
                const std::string& direction) {
  training::TrainState state = training::TrainState::load(cfg.checkpoint);
  Volume v = normalize_intensity(read_volume(input));
  const Generator& gen = direction == "b2a" ? state.g_b : state.g_a;
  Volume pred = predict_volume(gen, v, state.train_config.patch_size, cfg.infer_stride);
  const std::filesystem::path out_path(output);
  if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
  write_volume(pred, out_path);
  std::cout << "wrote " << output << "\n";
  return 0;
}

int cmd_uncertainty(const RunConfig& cfg, const std::string& input, const std::string& out_prefix,
                    const std::string& kind, int n, float keep) {
  training::TrainState state = training::TrainState::load(cfg.checkpoint);
  Volume v = normalize_intensity(read_volume(input));
  const int patch = state.train_config.patch_size;
  const std::filesystem::path prefix(out_prefix);
  if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
  if (kind == "epistemic" || kind == "both") {
    auto map = uncertainty::epistemic_map(state.g_a, v, n, keep, cfg.seed, patch, cfg.infer_stride);
    write_volume(map.sigma, out_prefix + ".epistemic.nii");
    write_volume(map.mean_prediction, out_prefix + ".epistemic_mean.nii");
  }
  if (kind == "aleatoric" || kind == "both") {
    auto map = uncertainty::aleatoric_map(state.g_a, v, n, cfg.seed, patch, cfg.infer_stride);
    write_volume(map.sigma, out_prefix + ".aleatoric.nii");
    write_volume(map.mean_prediction, out_prefix + ".aleatoric_mean.nii");
  }
  std::cout << "wrote uncertainty maps with prefix " << out_prefix << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, bool full_volume, int unc_samples) {
  metrics::EvaluateOptions opts;
  opts.stride = cfg.infer_stride;
  opts.masked = !full_volume;
  opts.uncertainty_samples = unc_samples;
  write_snapshot(cfg, cfg.out_dir);
  const auto report = metrics::evaluate_cohort(cfg.manifest, cfg.checkpoint, cfg.out_dir, opts);
  for (const auto& s : report.summaries)
    std::cout << s.direction << ": PSNR " << s.psnr_mean << " +- " << s.psnr_std << " dB, SSIM "
              << s.ssim_mean << " +- " << s.ssim_std << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  // --config is resolved before option definition so file values become the
  // defaults that explicit CLI flags then override
  RunConfig cfg;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      try {
        cfg = load_run_config(argv[i + 1]);
      } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return 1;
      }
      break;
    }
  }

  CLI::App app{"Metamorphic GAN for longitudinal volumetric image translation"};
  app.require_subcommand(1);
  std::string config_file;
  app.add_option("--config", config_file, "JSON config file (CLI flags override it)");

  PhantomArgs ph;
  std::string resume, direction = "a2b", input, output, out_prefix, kind = "both", ablation;
  int folds = 0, fold = 0, n_samples = 20;
  float keep = 0.8f;
  bool full_volume = false;
  int unc_samples = 4;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "global RNG seed")->capture_default_str();
    sub->add_option("--out", cfg.out_dir, "output directory");
  };

  CLI::App* p = app.add_subcommand("phantom", "generate a synthetic longitudinal cohort");
  add_common(p);
  p->add_option("--n", ph.n, "number of subjects")->capture_default_str();
  p->add_option("--size", ph.size, "cubic volume size")->capture_default_str();
  p->add_option("--blobs", ph.n_blobs, "structure blobs")->capture_default_str();
  p->add_option("--age-a", ph.age_a)->capture_default_str();
  p->add_option("--age-b", ph.age_b)->capture_default_str();
  p->add_flag("--no-contrast-flip", ph.no_contrast_flip, "disable class intensity inversion");
  p->add_option("--deform", ph.deform, "deformation amplitude (voxels)")->capture_default_str();
  p->add_option("--noise", ph.noise, "foreground noise sigma")->capture_default_str();
  p->add_option("--format", ph.format, ".nii or .mgv")->capture_default_str();

  CLI::App* t = app.add_subcommand("train", "two-phase training on a manifest");
  add_common(t);
  t->add_option("--manifest", cfg.manifest, "cohort manifest CSV")->required();
  t->add_option("--pretrain-epochs", cfg.train.pretrain_epochs)->capture_default_str();
  t->add_option("--adversarial-epochs", cfg.train.adversarial_epochs)->capture_default_str();
  t->add_option("--patch", cfg.train.patch_size)->capture_default_str();
  t->add_option("--stride", cfg.train.train_stride)->capture_default_str();
  t->add_option("--min-fg", cfg.train.min_fg)->capture_default_str();
  t->add_option("--lr", cfg.train.lr)->capture_default_str();
  t->add_option("--d-steps", cfg.train.d_steps_per_g)->capture_default_str();
  t->add_option("--checkpoint-every", cfg.train.checkpoint_every)->capture_default_str();
  t->add_option("--resume", resume, "checkpoint to resume from");
  t->add_option("--folds", folds, "k-fold split count (0 = use all subjects)");
  t->add_option("--fold", fold, "held-out fold index");
  t->add_option("--ablation", ablation, "preset: backbone|sft-ncg|st-cg|mgan");
  t->add_flag("!--no-frequency-branch", cfg.use_frequency_branch, "disable the SFT frequency branch");
  t->add_flag("!--no-quality-guidance", cfg.use_quality_guidance, "disable quality-map weighting");
  t->add_flag("!--no-texture-loss", cfg.enable_texture_loss, "disable the texture term");
  t->add_flag("!--no-frequency-loss", cfg.enable_frequency_loss, "disable the frequency term");

  CLI::App* pr = app.add_subcommand("predict", "full-volume prediction");
  add_common(pr);
  pr->add_option("--checkpoint", cfg.checkpoint, "trained checkpoint")->required();
  pr->add_option("--input", input, "input volume")->required();
  pr->add_option("--output", output, "output volume path")->required();
  pr->add_option("--direction", direction, "a2b or b2a")->capture_default_str();
  pr->add_option("--stride", cfg.infer_stride, "inference stride")->capture_default_str();

  CLI::App* u = app.add_subcommand("uncertainty", "epistemic / aleatoric maps");
  add_common(u);
  u->add_option("--checkpoint", cfg.checkpoint)->required();
  u->add_option("--input", input)->required();
  u->add_option("--out-prefix", out_prefix)->required();
  u->add_option("--kind", kind, "epistemic|aleatoric|both")->capture_default_str();
  u->add_option("--n", n_samples, "number of stochastic passes")->capture_default_str();
  u->add_option("--keep", keep, "dropout keep rate")->capture_default_str();
  u->add_option("--stride", cfg.infer_stride)->capture_default_str();

  CLI::App* e = app.add_subcommand("evaluate", "cohort metrics, CSVs and montages");
  add_common(e);
  e->add_option("--checkpoint", cfg.checkpoint)->required();
  e->add_option("--manifest", cfg.manifest)->required();
  e->add_option("--stride", cfg.infer_stride)->capture_default_str();
  e->add_flag("--full-volume", full_volume, "evaluate without the foreground mask");
  e->add_option("--uncertainty-samples", unc_samples)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& help) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& err) {
    std::cerr << err.what() << "\n" << app.help();
    return 1;
  }

  try {
    if (!ablation.empty()) cfg.apply_ablation(ablation);
    cfg.sync_nested();
    if (p->parsed()) return cmd_phantom(cfg, ph);
    if (t->parsed()) return cmd_train(cfg, resume, folds, fold);
    if (pr->parsed()) return cmd_predict(cfg, input, output, direction);
    if (u->parsed()) return cmd_uncertainty(cfg, input, out_prefix, kind, n_samples, keep);
    if (e->parsed()) return cmd_evaluate(cfg, full_volume, unc_samples);
    std::cerr << app.help();
    return 1;
  } catch (const UsageError& err) {
    std::cerr << err.what() << "\n";
    return 1;
  } catch (const Error& err) {
    std::cerr << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
}

}  // namespace mgan
