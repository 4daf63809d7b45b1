#include "mgan/adam.hpp"

#include <cmath>

namespace mgan {

Adam::Adam(std::vector<std::pair<std::string, ad::Var>> params, AdamConfig cfg) : cfg_(cfg) {
  for (auto& [name, p] : params) {
    Slot s;
    s.name = name;
    s.param = p;
    s.m = Tensor(p->value.shape());
    s.v = Tensor(p->value.shape());
    slots_.push_back(std::move(s));
  }
}

void Adam::step() {
  ++t_;
  const float bc1 = 1.0f - std::pow(cfg_.beta1, static_cast<float>(t_));
  const float bc2 = 1.0f - std::pow(cfg_.beta2, static_cast<float>(t_));
  for (Slot& s : slots_) {
    Tensor& w = s.param->value;
    const bool has_grad = s.param->has_grad();
    for (std::int64_t i = 0; i < w.numel(); ++i) {
      const float g = has_grad ? s.param->grad[i] : 0.0f;
      s.m[i] = cfg_.beta1 * s.m[i] + (1.0f - cfg_.beta1) * g;
      s.v[i] = cfg_.beta2 * s.v[i] + (1.0f - cfg_.beta2) * g * g;
      const float mhat = s.m[i] / bc1;
      const float vhat = s.v[i] / bc2;
      w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (Slot& s : slots_) s.param->grad = Tensor();
}

Tensor& Adam::moment_m(const std::string& name) {
  for (Slot& s : slots_)
    if (s.name == name) return s.m;
  throw Error("adam: unknown parameter " + name);
}

Tensor& Adam::moment_v(const std::string& name) {
  for (Slot& s : slots_)
    if (s.name == name) return s.v;
  throw Error("adam: unknown parameter " + name);
}

}  // namespace mgan
