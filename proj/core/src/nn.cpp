#include "mgan/nn.hpp"

#include <cmath>

namespace mgan::nn {

ad::Var ParamDict::add(const std::string& name, Tensor init) {
  if (contains(name)) throw Error("duplicate parameter name: " + name);
  ad::Var v = ad::param(std::move(init));
  items_.emplace_back(name, v);
  return v;
}

const ad::Var& ParamDict::get(const std::string& name) const {
  for (const auto& [n, v] : items_)
    if (n == name) return v;
  throw Error("unknown parameter: " + name);
}

bool ParamDict::contains(const std::string& name) const {
  for (const auto& [n, v] : items_)
    if (n == name) return true;
  return false;
}

void ParamDict::zero_grad() {
  for (auto& [n, v] : items_) v->grad = Tensor();
}

void ParamDict::set_requires_grad(bool value) {
  for (auto& [n, v] : items_) v->requires_grad = value;
}

std::int64_t ParamDict::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& [name, v] : items_) n += v->value.numel();
  return n;
}

Tensor he_normal(const std::vector<int>& shape, int fan_in, Rng& rng) {
  Tensor t(shape);
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<float>(rng.normal(0.0, stddev));
  return t;
}

Conv3d::Conv3d(ParamDict& params, const std::string& prefix, int cin, int cout, int k, int stride, int pad,
               Rng& rng)
    : stride(stride), pad(pad) {
  w = params.add(prefix + ".w", he_normal({cout, cin, k, k, k}, cin * k * k * k, rng));
  b = params.add(prefix + ".b", Tensor({cout}));
}

ConvTranspose3d::ConvTranspose3d(ParamDict& params, const std::string& prefix, int cin, int cout, int k,
                                 int stride, int pad, int out_pad, Rng& rng)
    : stride(stride), pad(pad), out_pad(out_pad) {
  w = params.add(prefix + ".w", he_normal({cin, cout, k, k, k}, cin * k * k * k, rng));
  b = params.add(prefix + ".b", Tensor({cout}));
}

InstanceNorm::InstanceNorm(ParamDict& params, const std::string& prefix, int channels) {
  gamma = params.add(prefix + ".gamma", Tensor::full({channels}, 1.0f));
  beta = params.add(prefix + ".beta", Tensor({channels}));
}

ConvBlock::ConvBlock(ParamDict& params, const std::string& prefix, int cin, int cout, int k, int stride,
                     int pad, Rng& rng)
    : conv(params, prefix + ".conv", cin, cout, k, stride, pad, rng), norm(params, prefix + ".norm", cout) {}

ResidualBlock::ResidualBlock(ParamDict& params, const std::string& prefix, int channels, Rng& rng)
    : conv1(params, prefix + ".conv1", channels, channels, 3, 1, 1, rng),
      conv2(params, prefix + ".conv2", channels, channels, 3, 1, 1, rng),
      norm1(params, prefix + ".norm1", channels),
      norm2(params, prefix + ".norm2", channels) {}

ad::Var ResidualBlock::forward(const ad::Var& x) const {
  ad::Var h = ad::relu(norm1.forward(conv1.forward(x)));
  h = norm2.forward(conv2.forward(h));
  return ad::add(x, h);
}

}  // namespace mgan::nn
