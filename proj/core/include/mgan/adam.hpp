#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mgan/autodiff.hpp"

namespace mgan {

struct AdamConfig {
  float lr = 1e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// Adam over an ordered list of named parameters. Missing gradients are
// treated as zeros so moment decay stays well-defined.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<std::pair<std::string, ad::Var>> params, AdamConfig cfg = {});

  void step();
  void zero_grad();

  const AdamConfig& config() const { return cfg_; }
  std::int64_t t() const { return t_; }

  struct Slot {
    std::string name;
    ad::Var param;
    Tensor m, v;
  };
  const std::vector<Slot>& slots() const { return slots_; }
  std::vector<Slot>& slots() { return slots_; }
  Tensor& moment_m(const std::string& name);
  Tensor& moment_v(const std::string& name);
  void set_t(std::int64_t t) { t_ = t; }

 private:
  AdamConfig cfg_;
  std::vector<Slot> slots_;
  std::int64_t t_ = 0;
};

}  // namespace mgan
