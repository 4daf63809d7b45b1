#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "mgan/errors.hpp"

namespace mgan {

// Dense float32 tensor, row-major with the last dimension fastest.
// Feature maps use the [C, D, H, W] convention throughout.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::initializer_list<int> shape) : Tensor(std::vector<int>(shape)) {}

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, float value);
  static Tensor scalar(float value);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  std::int64_t numel() const { return numel_; }
  bool empty() const { return numel_ == 0; }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  float& operator[](std::int64_t i) { return data_[static_cast<size_t>(i)]; }
  float operator[](std::int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // 4D accessor for [C,D,H,W] tensors
  float& at(int c, int d, int h, int w) {
    return data_[static_cast<size_t>(((static_cast<std::int64_t>(c) * shape_[1] + d) * shape_[2] + h) * shape_[3] + w)];
  }
  float at(int c, int d, int h, int w) const {
    return data_[static_cast<size_t>(((static_cast<std::int64_t>(c) * shape_[1] + d) * shape_[2] + h) * shape_[3] + w)];
  }

  void fill(float value);
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  Tensor reshaped(std::vector<int> new_shape) const;

  bool all_finite() const;
  float min() const;
  float max() const;
  double sum() const;  // double accumulation
  float mean() const;

  static std::int64_t shape_numel(const std::vector<int>& shape);

 private:
  std::vector<int> shape_;
  std::int64_t numel_ = 0;
  std::vector<float> data_;
};

// Elementwise helpers on plain tensors (no gradient tracking).
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator*(float s, const Tensor& a);
float max_abs_diff(const Tensor& a, const Tensor& b);

// 2x average pooling of a [C,D,H,W] tensor with even spatial dims.
Tensor avg_pool2(const Tensor& x);

}  // namespace mgan
