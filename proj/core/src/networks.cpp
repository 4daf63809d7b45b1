#include "mgan/networks.hpp"

namespace mgan {

void GeneratorConfig::validate() const {
  if (n_res_blocks < 1) throw InvalidRange("n_res_blocks must be >= 1");
  if (!(dropout_keep > 0.0f && dropout_keep <= 1.0f)) throw InvalidRange("dropout_keep must be in (0,1]");
  if (in_channels < 1) throw InvalidRange("in_channels must be >= 1");
}

void DiscriminatorConfig::validate() const {
  if (n_levels != static_cast<int>(channels.size())) throw InvalidRange("n_levels must equal len(channels)");
  if (kernel < 2) throw InvalidRange("discriminator kernel too small");
}

SftBlock::SftBlock(nn::ParamDict& params, const std::string& prefix, const GeneratorConfig& cfg, Rng& rng)
    : use_freq_(cfg.use_frequency_branch), bank_(wavelet::bior13_filter_bank()) {
  const int cin = cfg.enc_channels[1];
  const int c = cfg.sft_channels;
  if (use_freq_) {
    freq_in_ = nn::Conv3d(params, prefix + ".freq_in", 8 * cin, c, 3, 1, 1, rng);
    for (int i = 0; i < cfg.n_res_blocks; ++i)
      freq_res_.emplace_back(params, prefix + ".freq_res" + std::to_string(i), c, rng);
    freq_out_ = nn::Conv3d(params, prefix + ".freq_out", c, 8 * cin, 3, 1, 1, rng);
  }
  spat_down_ = nn::Conv3d(params, prefix + ".spat_down", cin, c, 3, 2, 1, rng);
  for (int i = 0; i < cfg.n_res_blocks; ++i)
    spat_res_.emplace_back(params, prefix + ".spat_res" + std::to_string(i), c, rng);
  spat_up_ = nn::ConvTranspose3d(params, prefix + ".spat_up", c, c, 3, 2, 1, 1, rng);
  const int fuse_in = use_freq_ ? cin + c : c;
  fuse_ = nn::ConvBlock(params, prefix + ".fuse", fuse_in, c, 3, 1, 1, rng);
}

ad::Var SftBlock::forward(const ad::Var& x) const {
  ad::Var sp = spat_down_.forward(x);
  for (const auto& r : spat_res_) sp = r.forward(sp);
  sp = spat_up_.forward(sp);
  if (!use_freq_) return fuse_.forward(sp);

  ad::Var fb = ad::dwt3_stacked(x, bank_);
  fb = freq_in_.forward(fb);
  for (const auto& r : freq_res_) fb = r.forward(fb);
  fb = freq_out_.forward(fb);
  ad::Var fr = ad::idwt3_stacked(fb, bank_);
  return fuse_.forward(ad::concat_channels({fr, sp}));
}

Generator::Generator(const GeneratorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(derive_seed(seed, "generator"));
  const int c0 = cfg.enc_channels[0], c1 = cfg.enc_channels[1], c = cfg.sft_channels;
  enc1_ = nn::ConvBlock(params_, "enc1", cfg.in_channels, c0, 3, cfg.enc_strides[0], 1, rng);
  enc2_ = nn::ConvBlock(params_, "enc2", c0, c1, 3, cfg.enc_strides[1], 1, rng);
  sft_ = SftBlock(params_, "sft", cfg, rng);
  dec_up_ = nn::ConvTranspose3d(params_, "dec.up", c, c, 3, 2, 1, 1, rng);
  dec_norm_ = nn::InstanceNorm(params_, "dec.norm", c);
  head_s1_ = nn::Conv3d(params_, "head_s1", c, 1, 3, 1, 1, rng);
  head_s2_ = nn::Conv3d(params_, "head_s2", c, 1, 3, 1, 1, rng);
  s3_down_ = nn::ConvBlock(params_, "s3_down", c, c, 3, 2, 1, rng);
  head_s3_ = nn::Conv3d(params_, "head_s3", c, 1, 3, 1, 1, rng);
}

MultiScaleOutput Generator::forward(const ad::Var& patch, bool dropout_active, Rng* rng) const {
  if (patch->value.rank() != 4 || patch->value.dim(0) != cfg_.in_channels)
    throw ShapeMismatch("generator input must be [in_channels,D,H,W]");
  if (patch->value.min() < -1.0f - 1e-5f || patch->value.max() > 1.0f + 1e-5f)
    throw InvalidRange("generator input values must lie in [-1,1]");
  if (dropout_active && !rng) throw InvalidRange("dropout_active requires an RNG");

  Rng dummy(0);
  Rng& r = rng ? *rng : dummy;
  ad::Var h = enc1_.forward(patch);
  h = enc2_.forward(h);
  h = ad::dropout(h, cfg_.dropout_keep, r, dropout_active);  // MC dropout site 1
  ad::Var fu = sft_.forward(h);
  fu = ad::dropout(fu, cfg_.dropout_keep, r, dropout_active);  // MC dropout site 2
  ad::Var d = ad::relu(dec_norm_.forward(dec_up_.forward(fu)));

  MultiScaleOutput out;
  out.s1 = ad::tanh_act(head_s1_.forward(d));
  out.s2 = ad::tanh_act(head_s2_.forward(fu));
  out.s3 = ad::tanh_act(head_s3_.forward(s3_down_.forward(fu)));
  return out;
}

MultiScaleOutput Generator::forward(const Tensor& patch, bool dropout_active, Rng* rng) const {
  return forward(ad::constant(patch), dropout_active, rng);
}

Discriminator::Discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(derive_seed(seed, "discriminator"));
  const int k = cfg.kernel;
  const int c0 = cfg.channels[0], c1 = cfg.channels[1], c2 = cfg.channels[2];
  down1_ = nn::ConvBlock(params_, "down1", 1, c0, k, 2, 1, rng);
  down2_ = nn::ConvBlock(params_, "down2", c0, c1, k, 2, 1, rng);
  down3_ = nn::ConvBlock(params_, "down3", c1, c2, k, 2, 1, rng);
  up1_ = nn::ConvTranspose3d(params_, "up1", c2, c1, k, 2, 1, 0, rng);
  un1_ = nn::InstanceNorm(params_, "un1", c1);
  up2_ = nn::ConvTranspose3d(params_, "up2", c1 + c1, c0, k, 2, 1, 0, rng);
  un2_ = nn::InstanceNorm(params_, "un2", c0);
  up3_ = nn::ConvTranspose3d(params_, "up3", c0 + c0, c0, k, 2, 1, 0, rng);
  un3_ = nn::InstanceNorm(params_, "un3", c0);
  head_s3_ = nn::Conv3d(params_, "head_s3", c1 + c1, 1, 1, 1, 0, rng);
  head_s2_ = nn::Conv3d(params_, "head_s2", c0 + c0, 1, 1, 1, 0, rng);
  head_s1_ = nn::Conv3d(params_, "head_s1", c0, 1, 1, 1, 0, rng);
}

MultiScaleOutput Discriminator::forward(const ad::Var& patch) const {
  if (patch->value.rank() != 4 || patch->value.dim(0) != 1)
    throw ShapeMismatch("discriminator input must be [1,D,H,W]");
  ad::Var e1 = down1_.forward(patch);
  ad::Var e2 = down2_.forward(e1);
  ad::Var e3 = down3_.forward(e2);
  ad::Var u1 = ad::concat_channels({ad::relu(un1_.forward(up1_.forward(e3))), e2});
  ad::Var u2 = ad::concat_channels({ad::relu(un2_.forward(up2_.forward(u1))), e1});
  ad::Var u3 = ad::relu(un3_.forward(up3_.forward(u2)));

  MultiScaleOutput out;
  out.s3 = ad::sigmoid(head_s3_.forward(u1));
  out.s2 = ad::sigmoid(head_s2_.forward(u2));
  out.s1 = ad::sigmoid(head_s1_.forward(u3));
  return out;
}

MultiScaleOutput Discriminator::forward(const Tensor& patch) const { return forward(ad::constant(patch)); }

}  // namespace mgan
