#include "mgan/volume.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace mgan {

void Volume::validate() const {
  if (data.rank() != 3) throw ShapeMismatch("volume data must be [D,H,W]");
  if (!data.all_finite()) throw InvalidRange("volume contains NaN/Inf");
  if (mask && static_cast<std::int64_t>(mask->size()) != data.numel())
    throw ShapeMismatch("mask size differs from volume");
}

Tensor Volume::as_patch_tensor() const {
  return data.reshaped({1, data.dim(0), data.dim(1), data.dim(2)});
}

Volume Volume::from_tensor(const Tensor& t, std::array<float, 3> spacing) {
  Volume v;
  if (t.rank() == 4) {
    if (t.dim(0) != 1) throw ShapeMismatch("expected single-channel tensor");
    v.data = t.reshaped({t.dim(1), t.dim(2), t.dim(3)});
  } else if (t.rank() == 3) {
    v.data = t;
  } else {
    throw ShapeMismatch("expected rank-3 or [1,D,H,W] tensor");
  }
  v.spacing = spacing;
  return v;
}

namespace {
std::string float_to_meta(float v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

float meta_to_float(const std::string& s) { return std::strtof(s.c_str(), nullptr); }
}  // namespace

Volume normalize_intensity(const Volume& v) {
  v.validate();
  float lo = 0.0f, hi = 0.0f;
  bool first = true;
  for (std::int64_t i = 0; i < v.data.numel(); ++i) {
    if (v.mask && !(*v.mask)[static_cast<size_t>(i)]) continue;
    const float x = v.data[i];
    if (first) {
      lo = hi = x;
      first = false;
    } else {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (first) throw ConstantVolume("mask selects no voxels");
  if (hi == lo) throw ConstantVolume("max == min, normalization undefined");

  Volume out = v;
  const float s = 2.0f / (hi - lo);
  for (std::int64_t i = 0; i < v.data.numel(); ++i) {
    if (v.mask && !(*v.mask)[static_cast<size_t>(i)]) {
      out.data[i] = -1.0f;
    } else {
      out.data[i] = (v.data[i] - lo) * s - 1.0f;
    }
  }
  out.meta["norm_min"] = float_to_meta(lo);
  out.meta["norm_max"] = float_to_meta(hi);
  return out;
}

Volume denormalize_intensity(const Volume& v) {
  auto it_lo = v.meta.find("norm_min"), it_hi = v.meta.find("norm_max");
  if (it_lo == v.meta.end() || it_hi == v.meta.end())
    throw InvalidRange("volume has no recorded normalization bounds");
  const float lo = meta_to_float(it_lo->second), hi = meta_to_float(it_hi->second);
  Volume out = v;
  for (std::int64_t i = 0; i < v.data.numel(); ++i)
    out.data[i] = (v.data[i] + 1.0f) * 0.5f * (hi - lo) + lo;
  out.meta.erase("norm_min");
  out.meta.erase("norm_max");
  return out;
}

std::vector<std::uint8_t> derive_foreground_mask(const Volume& normalized, float tol) {
  std::vector<std::uint8_t> mask(static_cast<size_t>(normalized.data.numel()));
  for (std::int64_t i = 0; i < normalized.data.numel(); ++i)
    mask[static_cast<size_t>(i)] = normalized.data[i] > -1.0f + tol ? 1 : 0;
  return mask;
}

}  // namespace mgan
