#include "mgan/training.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include <json.hpp>

#include "mgan/config.hpp"
#include "mgan/volume_io.hpp"

namespace mgan::training {

namespace {

std::vector<std::pair<std::string, ad::Var>> prefixed_params(const std::string& prefix,
                                                             const nn::ParamDict& params) {
  std::vector<std::pair<std::string, ad::Var>> out;
  for (const auto& [name, v] : params.items()) out.emplace_back(prefix + "/" + name, v);
  return out;
}

void check_finite(const losses::LossReport& report, const char* phase) {
  if (std::isfinite(report.total)) return;
  std::string dump = std::string(phase) + " total loss is not finite; per-term values:";
  for (const auto& e : report.entries)
    dump += " " + e.term + "@s" + std::to_string(e.scale) + "=" + std::to_string(e.value);
  throw NonFiniteLoss(dump);
}

// One Fisher-Yates shuffle with a stream derived from (seed, epoch).
void shuffle_order(std::vector<size_t>& order, std::uint64_t seed, int epoch) {
  Rng rng(derive_seed(seed, "shuffle", static_cast<std::uint64_t>(epoch)));
  for (size_t i = order.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.below(i));
    std::swap(order[i - 1], order[j]);
  }
}

std::string format_value(float v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

}  // namespace

TrainState::TrainState(const GeneratorConfig& gc, const DiscriminatorConfig& dc,
                       const losses::LossWeights& lw, const TrainConfig& tc,
                       const std::string& digest)
    : loss_weights(lw), train_config(tc), manifest_digest(digest), bank(wavelet::bior13_filter_bank()) {
  lw.validate();
  g_a = Generator(gc, derive_seed(tc.seed, "init/G_a"));
  g_b = Generator(gc, derive_seed(tc.seed, "init/G_b"));
  d_a = Discriminator(dc, derive_seed(tc.seed, "init/D_a"));
  d_b = Discriminator(dc, derive_seed(tc.seed, "init/D_b"));
  AdamConfig ac;
  ac.lr = tc.lr;
  auto gp = prefixed_params("G_a", g_a.params());
  auto gp_b = prefixed_params("G_b", g_b.params());
  gp.insert(gp.end(), gp_b.begin(), gp_b.end());
  opt_g = Adam(std::move(gp), ac);
  auto dp = prefixed_params("D_a", d_a.params());
  auto dp_b = prefixed_params("D_b", d_b.params());
  dp.insert(dp.end(), dp_b.begin(), dp_b.end());
  opt_d = Adam(std::move(dp), ac);
}

void TrainState::save(const std::filesystem::path& archive_path) const {
  Archive a;
  for (const auto& [n, v] : g_a.params().items()) a.add("G_a/" + n, v->value);
  for (const auto& [n, v] : g_b.params().items()) a.add("G_b/" + n, v->value);
  for (const auto& [n, v] : d_a.params().items()) a.add("D_a/" + n, v->value);
  for (const auto& [n, v] : d_b.params().items()) a.add("D_b/" + n, v->value);
  for (const auto& s : opt_g.slots()) {
    a.add("opt_g/m/" + s.name, s.m);
    a.add("opt_g/v/" + s.name, s.v);
  }
  for (const auto& s : opt_d.slots()) {
    a.add("opt_d/m/" + s.name, s.m);
    a.add("opt_d/v/" + s.name, s.v);
  }
  save_archive(a, archive_path);

  nlohmann::json j;
  j["format"] = "mgan-checkpoint-v1";
  j["epoch"] = epoch;
  j["step"] = step;
  j["opt_g_t"] = opt_g.t();
  j["opt_d_t"] = opt_d.t();
  j["generator"] = g_a.config();
  j["discriminator"] = d_a.config();
  j["loss_weights"] = losses_json::to_json(loss_weights);
  j["train"] = train_config_to_json(train_config);
  j["manifest_digest"] = manifest_digest;
  std::filesystem::path sidecar = archive_path;
  sidecar += ".json";
  std::ofstream out(sidecar, std::ios::trunc);
  if (!out) throw IoFailure("cannot write sidecar " + sidecar.string());
  out << j.dump(2) << "\n";
}

TrainState TrainState::load(const std::filesystem::path& archive_path) {
  std::filesystem::path sidecar = archive_path;
  sidecar += ".json";
  std::ifstream in(sidecar);
  if (!in) throw CheckpointMismatch("missing sidecar " + sidecar.string());
  nlohmann::json j;
  in >> j;

  GeneratorConfig gc = j.at("generator").get<GeneratorConfig>();
  DiscriminatorConfig dc = j.at("discriminator").get<DiscriminatorConfig>();
  losses::LossWeights lw = losses_json::weights_from_json(j.at("loss_weights"));
  TrainConfig tc = train_config_from_json(j.at("train"));
  TrainState state(gc, dc, lw, tc, j.value("manifest_digest", ""));
  state.epoch = j.at("epoch").get<int>();
  state.step = j.at("step").get<std::int64_t>();
  state.opt_g.set_t(j.at("opt_g_t").get<std::int64_t>());
  state.opt_d.set_t(j.at("opt_d_t").get<std::int64_t>());

  Archive a = load_archive(archive_path);
  auto load_params = [&a](const std::string& prefix, nn::ParamDict& params) {
    for (auto& [n, v] : params.items()) {
      const Tensor& t = a.get(prefix + "/" + n);
      if (!t.same_shape(v->value))
        throw CheckpointMismatch("shape mismatch for " + prefix + "/" + n);
      v->value = t;
    }
  };
  load_params("G_a", state.g_a.params());
  load_params("G_b", state.g_b.params());
  load_params("D_a", state.d_a.params());
  load_params("D_b", state.d_b.params());
  for (auto& s : state.opt_g.slots()) {
    s.m = a.get("opt_g/m/" + s.name);
    s.v = a.get("opt_g/v/" + s.name);
  }
  for (auto& s : state.opt_d.slots()) {
    s.m = a.get("opt_d/m/" + s.name);
    s.v = a.get("opt_d/v/" + s.name);
  }
  return state;
}

namespace {

// Builds the shared generator objective graph and fills the report.
losses::LossReport generator_update(TrainState& s, const PatchBatch& batch, bool adversarial) {
  const TrainConfig& tc = s.train_config;
  losses::ObjectiveInputs in;
  in.x_a = batch.x_a;
  in.x_b = batch.x_b;
  in.use_quality_guidance = tc.use_quality_guidance;
  in.enable_texture = tc.enable_texture_loss;
  in.enable_frequency = tc.enable_frequency_loss;

  ad::Var xa = ad::constant(batch.x_a), xb = ad::constant(batch.x_b);
  in.pred_a2b = s.g_a.forward(xa);
  in.pred_b2a = s.g_b.forward(xb);
  in.rec_a = s.g_b.forward(in.pred_a2b.s1).s1;
  in.rec_b = s.g_a.forward(in.pred_b2a.s1).s1;
  in.target_b = losses::target_pyramid(batch.x_b);
  in.target_a = losses::target_pyramid(batch.x_a);

  MultiScaleOutput d_on_a2b, d_on_b2a;
  if (adversarial) {
    // discriminators participate in the graph but stay frozen
    s.d_a.params().set_requires_grad(false);
    s.d_b.params().set_requires_grad(false);
    d_on_a2b = s.d_b.forward(in.pred_a2b.s1);
    d_on_b2a = s.d_a.forward(in.pred_b2a.s1);
    in.d_on_a2b = &d_on_a2b;
    in.d_on_b2a = &d_on_b2a;
  }

  losses::LossReport report;
  ad::Var total = losses::total_objective(in, s.loss_weights, s.bank, report);

  s.opt_g.zero_grad();
  ad::backward(total);
  s.opt_g.step();
  if (adversarial) {
    s.d_a.params().set_requires_grad(true);
    s.d_b.params().set_requires_grad(true);
  }
  return report;
}

}  // namespace

losses::LossReport pretrain_step(TrainState& state, const PatchBatch& batch) {
  losses::LossReport report = generator_update(state, batch, /*adversarial=*/false);
  check_finite(report, "pretrain");
  state.step += 1;
  return report;
}

losses::LossReport adversarial_step(TrainState& state, const PatchBatch& batch) {
  // (1) discriminator update on real vs detached fakes
  Tensor fake_b, fake_a;
  {
    ad::NoGradGuard ng;
    fake_b = state.g_a.forward(batch.x_a).s1->value;
    fake_a = state.g_b.forward(batch.x_b).s1->value;
  }
  losses::LossReport report;
  for (int it = 0; it < state.train_config.d_steps_per_g; ++it) {
    MultiScaleOutput rb = state.d_b.forward(batch.x_b);
    MultiScaleOutput fb = state.d_b.forward(fake_b);
    MultiScaleOutput ra = state.d_a.forward(batch.x_a);
    MultiScaleOutput fa = state.d_a.forward(fake_a);
    auto [d_loss_b, g_unused_b] = losses::adversarial_losses(rb, fb, state.loss_weights.scale_weights);
    auto [d_loss_a, g_unused_a] = losses::adversarial_losses(ra, fa, state.loss_weights.scale_weights);
    ad::Var d_total = ad::add_scalars({d_loss_a, d_loss_b});
    // per-scale report values (sum of both discriminators)
    for (int sc = 0; sc < 3; ++sc) {
      const auto& mb_r = sc == 0 ? rb.s1 : (sc == 1 ? rb.s2 : rb.s3);
      const auto& mb_f = sc == 0 ? fb.s1 : (sc == 1 ? fb.s2 : fb.s3);
      const auto& ma_r = sc == 0 ? ra.s1 : (sc == 1 ? ra.s2 : ra.s3);
      const auto& ma_f = sc == 0 ? fa.s1 : (sc == 1 ? fa.s2 : fa.s3);
      auto nll = [](const Tensor& t, bool flip) {
        double acc = 0.0;
        for (std::int64_t i = 0; i < t.numel(); ++i) {
          float v = flip ? 1.0f - t[i] : t[i];
          v = std::max(1e-7f, std::min(1.0f - 1e-7f, v));
          acc += std::log(static_cast<double>(v));
        }
        return static_cast<float>(-acc / static_cast<double>(t.numel()));
      };
      report.set("adv_d", sc + 1,
                 nll(mb_r->value, false) + nll(mb_f->value, true) + nll(ma_r->value, false) +
                     nll(ma_f->value, true));
    }
    if (!std::isfinite(d_total->value[0])) throw NonFiniteLoss("discriminator loss is not finite");
    state.opt_d.zero_grad();
    ad::backward(d_total);
    state.opt_d.step();
  }

  // (2)+(3) generator update with quality maps from the updated discriminators
  losses::LossReport g_report = generator_update(state, batch, /*adversarial=*/true);
  for (const auto& e : g_report.entries) report.set(e.term, e.scale, e.value);
  report.total = g_report.total;
  check_finite(report, "adversarial");
  state.step += 1;
  return report;
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IoFailure("cannot open manifest " + manifest.string());
  std::vector<ManifestRow> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      if (line != "subject,timepoint,path")
        throw ManifestMismatch("manifest header must be 'subject,timepoint,path'");
      header = false;
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw ManifestMismatch("malformed manifest row: " + line);
    rows.push_back({line.substr(0, c1), line.substr(c1 + 1, c2 - c1 - 1), line.substr(c2 + 1)});
  }
  return rows;
}

std::vector<SubjectPair> pair_manifest(const std::filesystem::path& manifest) {
  const auto rows = read_manifest(manifest);
  const auto dir = manifest.parent_path();
  std::map<std::string, SubjectPair> by_subject;
  std::vector<std::string> order;
  for (const auto& r : rows) {
    if (!by_subject.count(r.subject)) order.push_back(r.subject);
    auto& p = by_subject[r.subject];
    p.subject = r.subject;
    std::filesystem::path path = r.path;
    if (path.is_relative()) path = dir / path;
    if (r.timepoint == "ta") {
      if (!p.path_a.empty()) throw ManifestMismatch("duplicate ta row for subject " + r.subject);
      p.path_a = path;
    } else if (r.timepoint == "tb") {
      if (!p.path_b.empty()) throw ManifestMismatch("duplicate tb row for subject " + r.subject);
      p.path_b = path;
    } else {
      throw ManifestMismatch("unknown timepoint tag '" + r.timepoint + "' for subject " + r.subject);
    }
  }
  std::vector<SubjectPair> pairs;
  for (const auto& s : order) {
    const auto& p = by_subject[s];
    if (p.path_a.empty() || p.path_b.empty())
      throw ManifestMismatch("subject " + s + " is missing one time point");
    pairs.push_back(p);
  }
  return pairs;
}

std::string manifest_digest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw IoFailure("cannot open manifest " + manifest.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<size_t> fold_holdout(size_t n_subjects, int n_folds, int fold) {
  if (n_folds < 2 || fold < 0 || fold >= n_folds) throw InvalidRange("fold index out of range");
  std::vector<size_t> held;
  for (size_t i = 0; i < n_subjects; ++i)
    if (static_cast<int>(i % static_cast<size_t>(n_folds)) == fold) held.push_back(i);
  return held;
}

std::filesystem::path train(const std::filesystem::path& manifest, const GeneratorConfig& gc,
                            const DiscriminatorConfig& dc, const losses::LossWeights& lw,
                            const TrainConfig& tc, const std::filesystem::path& out_dir,
                            const std::optional<std::filesystem::path>& resume_from) {
  std::filesystem::create_directories(out_dir);
  const auto pairs = pair_manifest(manifest);
  if (pairs.empty()) throw ManifestMismatch("manifest lists no subjects");
  const std::string digest = manifest_digest(manifest);

  TrainState state = resume_from ? TrainState::load(*resume_from) : TrainState(gc, dc, lw, tc, digest);
  if (resume_from && !state.manifest_digest.empty() && state.manifest_digest != digest)
    throw CheckpointMismatch("checkpoint was trained on a different manifest");
  // On resume the checkpointed config governs; the arguments are ignored.
  const TrainConfig& cfg = state.train_config;

  // Patch preparation: normalize, derive masks, fixed grid per volume.
  std::vector<PatchBatch> batches;
  for (const auto& p : pairs) {
    Volume va = normalize_intensity(read_volume(p.path_a));
    Volume vb = normalize_intensity(read_volume(p.path_b));
    if (va.data.shape() != vb.data.shape())
      throw ManifestMismatch("subject " + p.subject + " volumes have different shapes");
    auto mask_a = derive_foreground_mask(va);
    const auto mask_b = derive_foreground_mask(vb);
    for (size_t i = 0; i < mask_a.size(); ++i) mask_a[i] = mask_a[i] || mask_b[i];
    const auto grid = patch::plan_patch_offsets({va.dim(0), va.dim(1), va.dim(2)}, cfg.patch_size,
                                                cfg.train_stride, &mask_a, cfg.min_fg);
    auto patches_a = patch::extract_patches(va, grid);
    auto patches_b = patch::extract_patches(vb, grid);
    for (size_t i = 0; i < patches_a.size(); ++i)
      batches.push_back({std::move(patches_a[i]), std::move(patches_b[i])});
  }
  if (batches.empty()) throw ManifestMismatch("no training patches pass the foreground filter");

  const std::filesystem::path log_path = out_dir / "loss_log.jsonl";
  std::ofstream log(log_path, resume_from ? std::ios::app : std::ios::trunc);
  if (!log) throw IoFailure("cannot write " + log_path.string());

  const int total_epochs = cfg.pretrain_epochs + cfg.adversarial_epochs;
  std::vector<size_t> order(batches.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::filesystem::path last_ckpt;
  for (int epoch = state.epoch; epoch < total_epochs; ++epoch) {
    const bool pretrain = epoch < cfg.pretrain_epochs;
    shuffle_order(order, cfg.seed, epoch);
    for (size_t idx : order) {
      losses::LossReport report =
          pretrain ? pretrain_step(state, batches[idx]) : adversarial_step(state, batches[idx]);
      for (const auto& e : report.entries) {
        log << "{\"step\":" << state.step << ",\"epoch\":" << epoch << ",\"phase\":\""
            << (pretrain ? "pretrain" : "adversarial") << "\",\"term\":\"" << e.term
            << "\",\"scale\":" << e.scale << ",\"value\":" << format_value(e.value) << "}\n";
      }
      log << "{\"step\":" << state.step << ",\"epoch\":" << epoch << ",\"phase\":\""
          << (pretrain ? "pretrain" : "adversarial") << "\",\"term\":\"total\",\"scale\":0,\"value\":"
          << format_value(report.total) << "}\n";
    }
    state.epoch = epoch + 1;
    if (cfg.checkpoint_every > 0 &&
        ((epoch + 1) % cfg.checkpoint_every == 0 || epoch + 1 == total_epochs)) {
      char name[64];
      std::snprintf(name, sizeof(name), "ckpt_epoch_%03d.mgck", epoch + 1);
      last_ckpt = out_dir / name;
      state.save(last_ckpt);
    }
  }
  log.flush();
  if (last_ckpt.empty()) {
    last_ckpt = out_dir / "ckpt_final.mgck";
    state.save(last_ckpt);
  }
  return last_ckpt;
}

}  // namespace mgan::training
