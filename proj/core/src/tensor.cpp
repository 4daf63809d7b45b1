#include "mgan/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace mgan {

std::int64_t Tensor::shape_numel(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeMismatch("negative dimension");
    n *= d;
  }
  return shape.empty() ? 0 : n;
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), numel_(shape_numel(shape_)), data_(static_cast<size_t>(numel_), 0.0f) {}

Tensor Tensor::full(std::vector<int> shape, float value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

Tensor Tensor::scalar(float value) {
  Tensor t({1});
  t[0] = value;
  return t;
}

void Tensor::fill(float value) { std::fill(data_.begin(), data_.end(), value); }

Tensor Tensor::reshaped(std::vector<int> new_shape) const {
  if (shape_numel(new_shape) != numel_) throw ShapeMismatch("reshape changes element count");
  Tensor t;
  t.shape_ = std::move(new_shape);
  t.numel_ = numel_;
  t.data_ = data_;
  return t;
}

bool Tensor::all_finite() const {
  for (float v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

float Tensor::min() const {
  float m = data_.empty() ? 0.0f : data_[0];
  for (float v : data_) m = std::min(m, v);
  return m;
}

float Tensor::max() const {
  float m = data_.empty() ? 0.0f : data_[0];
  for (float v : data_) m = std::max(m, v);
  return m;
}

double Tensor::sum() const {
  double s = 0.0;
  for (float v : data_) s += v;
  return s;
}

float Tensor::mean() const { return numel_ ? static_cast<float>(sum() / static_cast<double>(numel_)) : 0.0f; }

static void check_same(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ShapeMismatch("tensor shapes differ");
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  check_same(a, b);
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] + b[i];
  return out;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  check_same(a, b);
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] - b[i];
  return out;
}

Tensor operator*(const Tensor& a, const Tensor& b) {
  check_same(a, b);
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] * b[i];
  return out;
}

Tensor operator*(float s, const Tensor& a) {
  Tensor out(a.shape());
  for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = s * a[i];
  return out;
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
  check_same(a, b);
  float m = 0.0f;
  for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

Tensor avg_pool2(const Tensor& x) {
  if (x.rank() != 4) throw ShapeMismatch("avg_pool2 expects [C,D,H,W]");
  const int C = x.dim(0), D = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (D % 2 || H % 2 || W % 2) throw OddDimension("avg_pool2 needs even spatial dims");
  Tensor out({C, D / 2, H / 2, W / 2});
  for (int c = 0; c < C; ++c)
    for (int d = 0; d < D / 2; ++d)
      for (int h = 0; h < H / 2; ++h)
        for (int w = 0; w < W / 2; ++w) {
          float s = 0.0f;
          for (int dz = 0; dz < 2; ++dz)
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx) s += x.at(c, 2 * d + dz, 2 * h + dy, 2 * w + dx);
          out.at(c, d, h, w) = s / 8.0f;
        }
  return out;
}

}  // namespace mgan
