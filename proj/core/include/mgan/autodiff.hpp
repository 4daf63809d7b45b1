#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "mgan/rng.hpp"
#include "mgan/tensor.hpp"
#include "mgan/wavelet.hpp"

namespace mgan::ad {

// Reverse-mode autodiff over a dynamically built DAG of tensor ops.
// Graphs are rebuilt per training step and freed when the root Var drops.
struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;  // allocated lazily by backward()
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backward_fn;  // pushes grad into parents

  void accumulate(const Tensor& g);
  bool has_grad() const { return !grad.shape().empty(); }
};

// While a NoGradGuard is alive, newly created nodes track neither parents nor
// gradients; use it for inference passes so activations are freed eagerly.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};
bool grad_enabled();

Var constant(Tensor value);
Var param(Tensor value);  // leaf with requires_grad=true

// Runs reverse-mode accumulation from a scalar root (seed gradient 1).
void backward(const Var& root);

// --- elementwise / reduction ---
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, float s);
Var mul_const(const Var& a, Tensor weights);  // elementwise, no grad into weights
Var abs_val(const Var& a);
Var one_minus(const Var& a);  // 1 - a
Var square(const Var& a);
Var log_clamped(const Var& a, float eps);  // log(clamp(a, eps, 1-eps))
Var mean_all(const Var& a);                // -> scalar [1]
Var add_scalars(const std::vector<Var>& terms);

// --- activations ---
Var relu(const Var& a);
Var tanh_act(const Var& a);
Var sigmoid(const Var& a);
Var dropout(const Var& a, float keep, Rng& rng, bool active);

// --- structure ---
Var concat_channels(const std::vector<Var>& xs);
Var slice_channels(const Var& x, int c0, int c1);

// --- convolution ---
Var conv3d(const Var& x, const Var& w, const Var& b, int stride, int pad);
Var conv_transpose3d(const Var& x, const Var& w, const Var& b, int stride, int pad, int out_pad);

// --- normalization ---
Var instance_norm(const Var& x, const Var& gamma, const Var& beta, float eps = 1e-5f);

// --- fixed-filter wavelet layers ---
Var dwt3_stacked(const Var& x, const wavelet::FilterBank& bank);
Var idwt3_stacked(const Var& x, const wavelet::FilterBank& bank);

// --- texture statistics ---
// Unfolds [1,d,d,d] into non-overlapping block^3 blocks and returns the Gram
// matrix F^T F / (n_blocks * block^3) of shape [block^3, block^3].
Var gram_matrix(const Var& x, int block);

// Detached copy: same value, no graph history.
Var detach(const Var& x);

}  // namespace mgan::ad
