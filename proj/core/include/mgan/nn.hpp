#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mgan/autodiff.hpp"

namespace mgan::nn {

// Ordered registry of named trainable parameters. The order is the build
// order, which is deterministic for a given config, so optimizer state and
// checkpoints can be keyed by name.
class ParamDict {
 public:
  ad::Var add(const std::string& name, Tensor init);
  const ad::Var& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  const std::vector<std::pair<std::string, ad::Var>>& items() const { return items_; }
  size_t size() const { return items_.size(); }

  void zero_grad();
  void set_requires_grad(bool value);
  std::int64_t parameter_count() const;

 private:
  std::vector<std::pair<std::string, ad::Var>> items_;
};

Tensor he_normal(const std::vector<int>& shape, int fan_in, Rng& rng);

// Conv3d + bias. Weight [Cout,Cin,k,k,k].
struct Conv3d {
  ad::Var w, b;
  int stride = 1, pad = 1;
  Conv3d() = default;
  Conv3d(ParamDict& params, const std::string& prefix, int cin, int cout, int k, int stride, int pad,
         Rng& rng);
  ad::Var forward(const ad::Var& x) const { return ad::conv3d(x, w, b, stride, pad); }
};

// Transposed Conv3d + bias. Weight [Cin,Cout,k,k,k].
struct ConvTranspose3d {
  ad::Var w, b;
  int stride = 2, pad = 1, out_pad = 0;
  ConvTranspose3d() = default;
  ConvTranspose3d(ParamDict& params, const std::string& prefix, int cin, int cout, int k, int stride,
                  int pad, int out_pad, Rng& rng);
  ad::Var forward(const ad::Var& x) const { return ad::conv_transpose3d(x, w, b, stride, pad, out_pad); }
};

struct InstanceNorm {
  ad::Var gamma, beta;
  float eps = 1e-5f;
  InstanceNorm() = default;
  InstanceNorm(ParamDict& params, const std::string& prefix, int channels);
  ad::Var forward(const ad::Var& x) const { return ad::instance_norm(x, gamma, beta, eps); }
};

// Conv -> IN -> ReLU
struct ConvBlock {
  Conv3d conv;
  InstanceNorm norm;
  ConvBlock() = default;
  ConvBlock(ParamDict& params, const std::string& prefix, int cin, int cout, int k, int stride, int pad,
            Rng& rng);
  ad::Var forward(const ad::Var& x) const { return ad::relu(norm.forward(conv.forward(x))); }
};

// x + IN(Conv(ReLU(IN(Conv(x))))), 3^3 kernels, shape preserving.
struct ResidualBlock {
  Conv3d conv1, conv2;
  InstanceNorm norm1, norm2;
  ResidualBlock() = default;
  ResidualBlock(ParamDict& params, const std::string& prefix, int channels, Rng& rng);
  ad::Var forward(const ad::Var& x) const;
};

}  // namespace mgan::nn
