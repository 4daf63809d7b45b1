#include "mgan/autodiff.hpp"

#include <cblas.h>

#include <cmath>
#include <cstring>
#include <unordered_set>

#include "mgan/conv_kernels.hpp"

namespace mgan::ad {

namespace {
thread_local int no_grad_depth = 0;

Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  if (grad_enabled()) {
    for (const Var& p : parents)
      if (p->requires_grad) {
        n->requires_grad = true;
        break;
      }
    if (n->requires_grad) {
      n->parents = std::move(parents);
      n->backward_fn = std::move(backward_fn);
    }
  }
  return n;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a->value.same_shape(b->value)) throw ShapeMismatch(std::string(op) + ": operand shapes differ");
}
}  // namespace

NoGradGuard::NoGradGuard() { ++no_grad_depth; }
NoGradGuard::~NoGradGuard() { --no_grad_depth; }
bool grad_enabled() { return no_grad_depth == 0; }

void Node::accumulate(const Tensor& g) {
  if (!has_grad()) {
    grad = g;
    return;
  }
  if (!grad.same_shape(g)) throw ShapeMismatch("gradient shape mismatch");
  for (std::int64_t i = 0; i < grad.numel(); ++i) grad[i] += g[i];
}

Var constant(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return n;
}

Var param(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  return n;
}

void backward(const Var& root) {
  if (root->value.numel() != 1) throw ShapeMismatch("backward() expects a scalar root");
  // topological order via iterative DFS
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  // order is reverse-topological (children after parents); walk backwards
  root->grad = Tensor::scalar(1.0f);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->has_grad()) n->backward_fn(*n);
  }
}

// ---------------- elementwise ----------------

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  Tensor out = a->value + b->value;
  return make_node(std::move(out), {a, b}, [a, b](Node& n) {
    if (a->requires_grad) a->accumulate(n.grad);
    if (b->requires_grad) b->accumulate(n.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  Tensor out = a->value - b->value;
  return make_node(std::move(out), {a, b}, [a, b](Node& n) {
    if (a->requires_grad) a->accumulate(n.grad);
    if (b->requires_grad) {
      Tensor neg = -1.0f * n.grad;
      b->accumulate(neg);
    }
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  Tensor out = a->value * b->value;
  return make_node(std::move(out), {a, b}, [a, b](Node& n) {
    if (a->requires_grad) a->accumulate(n.grad * b->value);
    if (b->requires_grad) b->accumulate(n.grad * a->value);
  });
}

Var scale(const Var& a, float s) {
  Tensor out = s * a->value;
  return make_node(std::move(out), {a}, [a, s](Node& n) {
    Tensor g = s * n.grad;
    a->accumulate(g);
  });
}

Var mul_const(const Var& a, Tensor weights) {
  if (!a->value.same_shape(weights)) throw ShapeMismatch("mul_const: weight shape differs");
  Tensor out = a->value * weights;
  auto w = std::make_shared<Tensor>(std::move(weights));
  return make_node(std::move(out), {a}, [a, w](Node& n) {
    Tensor g = n.grad * *w;
    a->accumulate(g);
  });
}

Var one_minus(const Var& a) {
  Tensor out(a->value.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = 1.0f - a->value[i];
  return make_node(std::move(out), {a}, [a](Node& n) {
    Tensor g = -1.0f * n.grad;
    a->accumulate(g);
  });
}

Var abs_val(const Var& a) {
  Tensor out(a->value.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::fabs(a->value[i]);
  return make_node(std::move(out), {a}, [a](Node& n) {
    Tensor g(n.grad.shape());
    for (std::int64_t i = 0; i < g.numel(); ++i) {
      const float x = a->value[i];
      g[i] = n.grad[i] * (x > 0.0f ? 1.0f : (x < 0.0f ? -1.0f : 0.0f));
    }
    a->accumulate(g);
  });
}

Var square(const Var& a) {
  Tensor out(a->value.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] * a->value[i];
  return make_node(std::move(out), {a}, [a](Node& n) {
    Tensor g(n.grad.shape());
    for (std::int64_t i = 0; i < g.numel(); ++i) g[i] = n.grad[i] * 2.0f * a->value[i];
    a->accumulate(g);
  });
}

Var log_clamped(const Var& a, float eps) {
  Tensor out(a->value.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    float v = a->value[i];
    v = v < eps ? eps : (v > 1.0f - eps ? 1.0f - eps : v);
    out[i] = std::log(v);
  }
  return make_node(std::move(out), {a}, [a, eps](Node& n) {
    Tensor g(n.grad.shape());
    for (std::int64_t i = 0; i < g.numel(); ++i) {
      const float v = a->value[i];
      // zero gradient in the clamped region
      g[i] = (v < eps || v > 1.0f - eps) ? 0.0f : n.grad[i] / v;
    }
    a->accumulate(g);
  });
}

Var mean_all(const Var& a) {
  const std::int64_t n_elem = a->value.numel();
  Tensor out = Tensor::scalar(static_cast<float>(a->value.sum() / static_cast<double>(n_elem)));
  return make_node(std::move(out), {a}, [a, n_elem](Node& n) {
    const float g = n.grad[0] / static_cast<float>(n_elem);
    Tensor ga = Tensor::full(a->value.shape(), g);
    a->accumulate(ga);
  });
}

Var add_scalars(const std::vector<Var>& terms) {
  if (terms.empty()) return constant(Tensor::scalar(0.0f));
  double s = 0.0;
  for (const Var& t : terms) {
    if (t->value.numel() != 1) throw ShapeMismatch("add_scalars expects scalar terms");
    s += t->value[0];
  }
  std::vector<Var> parents = terms;
  return make_node(Tensor::scalar(static_cast<float>(s)), std::move(parents), [terms](Node& n) {
    for (const Var& t : terms)
      if (t->requires_grad) t->accumulate(n.grad);
  });
}

// ---------------- activations ----------------

Var relu(const Var& a) {
  Tensor out(a->value.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] > 0.0f ? a->value[i] : 0.0f;
  return make_node(std::move(out), {a}, [a](Node& n) {
    Tensor g(n.grad.shape());
    for (std::int64_t i = 0; i < g.numel(); ++i) g[i] = a->value[i] > 0.0f ? n.grad[i] : 0.0f;
    a->accumulate(g);
  });
}

Var tanh_act(const Var& a) {
  Tensor out(a->value.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(a->value[i]);
  return make_node(std::move(out), {a}, [a](Node& n) {
    Tensor g(n.grad.shape());
    for (std::int64_t i = 0; i < g.numel(); ++i) {
      const float y = n.value[i];
      g[i] = n.grad[i] * (1.0f - y * y);
    }
    a->accumulate(g);
  });
}

Var sigmoid(const Var& a) {
  Tensor out(a->value.shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = 1.0f / (1.0f + std::exp(-a->value[i]));
  return make_node(std::move(out), {a}, [a](Node& n) {
    Tensor g(n.grad.shape());
    for (std::int64_t i = 0; i < g.numel(); ++i) {
      const float y = n.value[i];
      g[i] = n.grad[i] * y * (1.0f - y);
    }
    a->accumulate(g);
  });
}

Var dropout(const Var& a, float keep, Rng& rng, bool active) {
  if (keep <= 0.0f || keep > 1.0f) throw InvalidRange("dropout keep rate must be in (0,1]");
  if (!active || keep == 1.0f) return a;
  auto mask = std::make_shared<Tensor>(a->value.shape());
  const float inv = 1.0f / keep;
  for (std::int64_t i = 0; i < mask->numel(); ++i) (*mask)[i] = rng.bernoulli(keep) ? inv : 0.0f;
  Tensor out = a->value * *mask;
  return make_node(std::move(out), {a}, [a, mask](Node& n) {
    Tensor g = n.grad * *mask;
    a->accumulate(g);
  });
}

// ---------------- structure ----------------

Var concat_channels(const std::vector<Var>& xs) {
  if (xs.empty()) throw ShapeMismatch("concat of zero tensors");
  int C = 0;
  const auto& s0 = xs[0]->value.shape();
  for (const Var& x : xs) {
    if (x->value.rank() != 4) throw ShapeMismatch("concat expects [C,D,H,W]");
    for (int i = 1; i < 4; ++i)
      if (x->value.dim(i) != s0[static_cast<size_t>(i)]) throw ShapeMismatch("concat spatial dims differ");
    C += x->value.dim(0);
  }
  Tensor out({C, s0[1], s0[2], s0[3]});
  std::int64_t off = 0;
  for (const Var& x : xs) {
    std::memcpy(out.data() + off, x->value.data(), static_cast<size_t>(x->value.numel()) * sizeof(float));
    off += x->value.numel();
  }
  std::vector<Var> parents = xs;
  return make_node(std::move(out), std::move(parents), [xs](Node& n) {
    std::int64_t off = 0;
    for (const Var& x : xs) {
      if (x->requires_grad) {
        Tensor g(x->value.shape());
        std::memcpy(g.data(), n.grad.data() + off, static_cast<size_t>(g.numel()) * sizeof(float));
        x->accumulate(g);
      }
      off += x->value.numel();
    }
  });
}

Var slice_channels(const Var& x, int c0, int c1) {
  if (x->value.rank() != 4 || c0 < 0 || c1 > x->value.dim(0) || c0 >= c1)
    throw ShapeMismatch("slice_channels bounds");
  const std::int64_t spatial = x->value.numel() / x->value.dim(0);
  Tensor out({c1 - c0, x->value.dim(1), x->value.dim(2), x->value.dim(3)});
  std::memcpy(out.data(), x->value.data() + c0 * spatial, static_cast<size_t>(out.numel()) * sizeof(float));
  return make_node(std::move(out), {x}, [x, c0, spatial](Node& n) {
    Tensor g(x->value.shape());  // zeros
    std::memcpy(g.data() + c0 * spatial, n.grad.data(), static_cast<size_t>(n.grad.numel()) * sizeof(float));
    x->accumulate(g);
  });
}

// ---------------- convolution ----------------

Var conv3d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  const Tensor* bias = (b && b->value.numel()) ? &b->value : nullptr;
  Tensor out = conv::conv3d_forward(x->value, w->value, bias, stride, pad);
  std::vector<Var> parents = b ? std::vector<Var>{x, w, b} : std::vector<Var>{x, w};
  return make_node(std::move(out), std::move(parents), [x, w, b, stride, pad](Node& n) {
    if (x->requires_grad) {
      std::array<int, 4> in_shape = {x->value.dim(0), x->value.dim(1), x->value.dim(2), x->value.dim(3)};
      Tensor dx = conv::conv3d_backward_input(n.grad, w->value, in_shape, stride, pad);
      x->accumulate(dx);
    }
    if (w->requires_grad) {
      Tensor dw = conv::conv3d_backward_weight(n.grad, x->value, w->value.dim(2), stride, pad);
      w->accumulate(dw);
    }
    if (b && b->requires_grad) {
      Tensor db = conv::conv3d_backward_bias(n.grad);
      b->accumulate(db);
    }
  });
}

Var conv_transpose3d(const Var& x, const Var& w, const Var& b, int stride, int pad, int out_pad) {
  const Tensor* bias = (b && b->value.numel()) ? &b->value : nullptr;
  Tensor out = conv::conv_transpose3d_forward(x->value, w->value, bias, stride, pad, out_pad);
  std::vector<Var> parents = b ? std::vector<Var>{x, w, b} : std::vector<Var>{x, w};
  return make_node(std::move(out), std::move(parents), [x, w, b, stride, pad](Node& n) {
    if (x->requires_grad) {
      std::array<int, 4> in_shape = {x->value.dim(0), x->value.dim(1), x->value.dim(2), x->value.dim(3)};
      Tensor dx = conv::conv_transpose3d_backward_input(n.grad, w->value, in_shape, stride, pad);
      x->accumulate(dx);
    }
    if (w->requires_grad) {
      Tensor dw = conv::conv_transpose3d_backward_weight(n.grad, x->value, w->value.dim(2), stride, pad);
      w->accumulate(dw);
    }
    if (b && b->requires_grad) {
      Tensor db = conv::conv3d_backward_bias(n.grad);
      b->accumulate(db);
    }
  });
}

// ---------------- instance norm ----------------

Var instance_norm(const Var& x, const Var& gamma, const Var& beta, float eps) {
  if (x->value.rank() != 4) throw ShapeMismatch("instance_norm expects [C,D,H,W]");
  const int C = x->value.dim(0);
  if (gamma->value.numel() != C || beta->value.numel() != C)
    throw ShapeMismatch("instance_norm affine params must have C elements");
  const std::int64_t spatial = x->value.numel() / C;
  Tensor out(x->value.shape());
  auto mean = std::make_shared<Tensor>(Tensor({C}));
  auto inv_std = std::make_shared<Tensor>(Tensor({C}));
  for (int c = 0; c < C; ++c) {
    const float* xc = x->value.data() + c * spatial;
    double s = 0.0;
    for (std::int64_t i = 0; i < spatial; ++i) s += xc[i];
    const double mu = s / static_cast<double>(spatial);
    double v = 0.0;
    for (std::int64_t i = 0; i < spatial; ++i) {
      const double d = xc[i] - mu;
      v += d * d;
    }
    const double var = v / static_cast<double>(spatial);
    const float istd = static_cast<float>(1.0 / std::sqrt(var + eps));
    (*mean)[c] = static_cast<float>(mu);
    (*inv_std)[c] = istd;
    const float g = gamma->value[c], bt = beta->value[c], m = static_cast<float>(mu);
    float* oc = out.data() + c * spatial;
    for (std::int64_t i = 0; i < spatial; ++i) oc[i] = g * (xc[i] - m) * istd + bt;
  }
  return make_node(std::move(out), {x, gamma, beta}, [x, gamma, beta, mean, inv_std, spatial](Node& n) {
    const int C = x->value.dim(0);
    Tensor dx(x->value.shape()), dgamma({C}), dbeta({C});
    for (int c = 0; c < C; ++c) {
      const float* xc = x->value.data() + c * spatial;
      const float* gc = n.grad.data() + c * spatial;
      const float m = (*mean)[c], istd = (*inv_std)[c], g = gamma->value[c];
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (std::int64_t i = 0; i < spatial; ++i) {
        const float xhat = (xc[i] - m) * istd;
        sum_dy += gc[i];
        sum_dy_xhat += static_cast<double>(gc[i]) * xhat;
      }
      dgamma[c] = static_cast<float>(sum_dy_xhat);
      dbeta[c] = static_cast<float>(sum_dy);
      const float mean_dy = static_cast<float>(sum_dy / static_cast<double>(spatial));
      const float mean_dy_xhat = static_cast<float>(sum_dy_xhat / static_cast<double>(spatial));
      float* dc = dx.data() + c * spatial;
      for (std::int64_t i = 0; i < spatial; ++i) {
        const float xhat = (xc[i] - m) * istd;
        dc[i] = g * istd * (gc[i] - mean_dy - xhat * mean_dy_xhat);
      }
    }
    if (x->requires_grad) x->accumulate(dx);
    if (gamma->requires_grad) gamma->accumulate(dgamma);
    if (beta->requires_grad) beta->accumulate(dbeta);
  });
}

// ---------------- wavelet layers ----------------

Var dwt3_stacked(const Var& x, const wavelet::FilterBank& bank) {
  Tensor out = wavelet::dwt3_stacked(x->value, bank);
  auto bk = std::make_shared<wavelet::FilterBank>(bank);
  return make_node(std::move(out), {x}, [x, bk](Node& n) {
    Tensor dx = wavelet::dwt3_stacked_adjoint(n.grad, *bk);
    x->accumulate(dx);
  });
}

Var idwt3_stacked(const Var& x, const wavelet::FilterBank& bank) {
  Tensor out = wavelet::idwt3_stacked(x->value, bank);
  auto bk = std::make_shared<wavelet::FilterBank>(bank);
  return make_node(std::move(out), {x}, [x, bk](Node& n) {
    Tensor dx = wavelet::idwt3_stacked_adjoint(n.grad, *bk);
    x->accumulate(dx);
  });
}

// ---------------- Gram matrix ----------------

namespace {
// Builds the block-unfold index map: row r of F is block r flattened.
std::vector<std::int64_t> block_rows(int d, int block) {
  const int nb = d / block;
  std::vector<std::int64_t> idx;
  idx.reserve(static_cast<size_t>(nb) * nb * nb * block * block * block);
  for (int bz = 0; bz < nb; ++bz)
    for (int by = 0; by < nb; ++by)
      for (int bx = 0; bx < nb; ++bx)
        for (int iz = 0; iz < block; ++iz)
          for (int iy = 0; iy < block; ++iy)
            for (int ix = 0; ix < block; ++ix)
              idx.push_back((static_cast<std::int64_t>(bz * block + iz) * d + (by * block + iy)) * d +
                            (bx * block + ix));
  return idx;
}
}  // namespace

Var gram_matrix(const Var& x, int block) {
  if (x->value.rank() != 4 || x->value.dim(0) != 1) throw ShapeMismatch("gram_matrix expects [1,d,d,d]");
  const int d = x->value.dim(1);
  if (x->value.dim(2) != d || x->value.dim(3) != d) throw ShapeMismatch("gram_matrix expects cubic input");
  if (d % block) throw ShapeMismatch("gram_matrix: dim not divisible by block");
  const int bs = block * block * block;
  const int nb = (d / block) * (d / block) * (d / block);
  auto idx = std::make_shared<std::vector<std::int64_t>>(block_rows(d, block));
  // F [nb, bs]
  auto F = std::make_shared<Tensor>(Tensor({nb, bs}));
  for (std::int64_t i = 0; i < F->numel(); ++i) (*F)[i] = x->value[(*idx)[static_cast<size_t>(i)]];
  const float norm = 1.0f / (static_cast<float>(nb) * static_cast<float>(bs));
  Tensor M({bs, bs});
  cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, bs, bs, nb, norm, F->data(), bs, F->data(), bs, 0.0f,
              M.data(), bs);
  return make_node(std::move(M), {x}, [x, F, idx, nb, bs, norm](Node& n) {
    // dF = F * (dM + dM^T) * norm   (M = norm * F^T F)
    Tensor dM_sym({bs, bs});
    for (int i = 0; i < bs; ++i)
      for (int j = 0; j < bs; ++j)
        dM_sym[static_cast<std::int64_t>(i) * bs + j] =
            n.grad[static_cast<std::int64_t>(i) * bs + j] + n.grad[static_cast<std::int64_t>(j) * bs + i];
    Tensor dF({nb, bs});
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, nb, bs, bs, norm, F->data(), bs, dM_sym.data(),
                bs, 0.0f, dF.data(), bs);
    Tensor dx(x->value.shape());
    for (std::int64_t i = 0; i < dF.numel(); ++i) dx[(*idx)[static_cast<size_t>(i)]] += dF[i];
    x->accumulate(dx);
  });
}

Var detach(const Var& x) { return constant(x->value); }

}  // namespace mgan::ad
