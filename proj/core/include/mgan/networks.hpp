#pragma once

#include <array>
#include <cstdint>
#include <memory>

#include "mgan/nn.hpp"
#include "mgan/wavelet.hpp"

namespace mgan {

struct GeneratorConfig {
  int in_channels = 1;
  std::array<int, 2> enc_channels = {64, 32};
  std::array<int, 2> enc_strides = {1, 2};
  int sft_channels = 64;
  int n_res_blocks = 9;
  bool use_frequency_branch = true;
  float dropout_keep = 0.8f;

  void validate() const;
};

struct DiscriminatorConfig {
  std::array<int, 3> channels = {64, 128, 256};
  int kernel = 4;
  int n_levels = 3;

  void validate() const;
};

// Predictions (generator) or quality maps (discriminator) at the three
// deep-supervision scales; s2 halves s1, s3 halves s2.
struct MultiScaleOutput {
  ad::Var s1, s2, s3;
};

// Spatial-frequency transfer block: parallel wavelet-domain and strided
// spatial translation paths fused by convolution. The wavelet projections
// stack the 8 subbands on the channel axis.
class SftBlock {
 public:
  SftBlock() = default;
  SftBlock(nn::ParamDict& params, const std::string& prefix, const GeneratorConfig& cfg, Rng& rng);

  ad::Var forward(const ad::Var& x) const;

 private:
  bool use_freq_ = true;
  wavelet::FilterBank bank_;
  nn::Conv3d freq_in_;
  std::vector<nn::ResidualBlock> freq_res_;
  nn::Conv3d freq_out_;
  nn::Conv3d spat_down_;
  std::vector<nn::ResidualBlock> spat_res_;
  nn::ConvTranspose3d spat_up_;
  nn::ConvBlock fuse_;
};

// Metamorphic generator: two-stage encoder, SFT block, deep-supervised
// decoder with tanh heads; two MC-dropout sites active only on request.
class Generator {
 public:
  Generator() = default;
  Generator(const GeneratorConfig& cfg, std::uint64_t seed);

  MultiScaleOutput forward(const ad::Var& patch, bool dropout_active = false, Rng* rng = nullptr) const;
  MultiScaleOutput forward(const Tensor& patch, bool dropout_active = false, Rng* rng = nullptr) const;

  const GeneratorConfig& config() const { return cfg_; }
  nn::ParamDict& params() { return params_; }
  const nn::ParamDict& params() const { return params_; }

 private:
  GeneratorConfig cfg_;
  nn::ParamDict params_;
  nn::ConvBlock enc1_, enc2_;
  SftBlock sft_;
  nn::ConvTranspose3d dec_up_;
  nn::InstanceNorm dec_norm_;
  nn::Conv3d head_s1_, head_s2_;
  nn::ConvBlock s3_down_;
  nn::Conv3d head_s3_;
};

// U-shaped multi-scale discriminator emitting voxelwise quality probability
// maps at three decoder resolutions.
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed);

  MultiScaleOutput forward(const ad::Var& patch) const;
  MultiScaleOutput forward(const Tensor& patch) const;

  const DiscriminatorConfig& config() const { return cfg_; }
  nn::ParamDict& params() { return params_; }
  const nn::ParamDict& params() const { return params_; }

 private:
  DiscriminatorConfig cfg_;
  nn::ParamDict params_;
  nn::ConvBlock down1_, down2_, down3_;
  nn::ConvTranspose3d up1_, up2_, up3_;
  nn::InstanceNorm un1_, un2_, un3_;
  nn::Conv3d head_s1_, head_s2_, head_s3_;
};

}  // namespace mgan
