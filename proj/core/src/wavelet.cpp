#include "mgan/wavelet.hpp"

#include <cmath>
#include <cstring>

namespace mgan::wavelet {

namespace {

// Phase offset of the periodized transform. Analysis and synthesis must use
// the same value for perfect reconstruction; 2 centers the 6-tap filters.
constexpr int kOffset = 2;

struct AxisView {
  std::int64_t outer, n, inner;
};

AxisView axis_view(const std::vector<int>& shape, int axis) {
  AxisView v{1, shape[static_cast<size_t>(axis)], 1};
  for (int i = 0; i < axis; ++i) v.outer *= shape[static_cast<size_t>(i)];
  for (size_t i = static_cast<size_t>(axis) + 1; i < shape.size(); ++i) v.inner *= shape[i];
  return v;
}

// out[o,k,i] = sum_m h[m] * x[o, (2k+m-ofs) mod n, i]; halves the axis.
Tensor gather_axis(const Tensor& x, const std::vector<float>& h, int axis) {
  const auto& shp = x.shape();
  if (shp[static_cast<size_t>(axis)] % 2) throw OddDimension("wavelet axis must be even");
  AxisView v = axis_view(shp, axis);
  std::vector<int> oshape = shp;
  oshape[static_cast<size_t>(axis)] = static_cast<int>(v.n / 2);
  Tensor out(oshape);
  const int L = static_cast<int>(h.size());
  const float* xp = x.data();
  float* op = out.data();
  const std::int64_t xstride = v.n * v.inner, ostride = (v.n / 2) * v.inner;
  for (std::int64_t o = 0; o < v.outer; ++o) {
    const float* xo = xp + o * xstride;
    float* oo = op + o * ostride;
    for (std::int64_t k = 0; k < v.n / 2; ++k) {
      float* orow = oo + k * v.inner;
      for (int m = 0; m < L; ++m) {
        const std::int64_t src = (((2 * k + m - kOffset) % v.n) + v.n) % v.n;
        const float c = h[static_cast<size_t>(m)];
        const float* xrow = xo + src * v.inner;
        for (std::int64_t i = 0; i < v.inner; ++i) orow[i] += c * xrow[i];
      }
    }
  }
  return out;
}

// out[o,(2k+m-ofs) mod n, i] += h[m] * x[o,k,i]; doubles the axis.
// Accumulates into `out`, which must be pre-sized.
void scatter_axis_into(const Tensor& x, const std::vector<float>& h, int axis, Tensor& out) {
  const auto& shp = out.shape();
  AxisView v = axis_view(shp, axis);
  const int L = static_cast<int>(h.size());
  const float* xp = x.data();
  float* op = out.data();
  const std::int64_t xstride = (v.n / 2) * v.inner, ostride = v.n * v.inner;
  for (std::int64_t o = 0; o < v.outer; ++o) {
    const float* xo = xp + o * xstride;
    float* oo = op + o * ostride;
    for (std::int64_t k = 0; k < v.n / 2; ++k) {
      const float* xrow = xo + k * v.inner;
      for (int m = 0; m < L; ++m) {
        const std::int64_t dst = (((2 * k + m - kOffset) % v.n) + v.n) % v.n;
        const float c = h[static_cast<size_t>(m)];
        float* orow = oo + dst * v.inner;
        for (std::int64_t i = 0; i < v.inner; ++i) orow[i] += c * xrow[i];
      }
    }
  }
}

// Gather staging: split W, then H, then D. Band index bit0=W, bit1=H, bit2=D.
std::array<Tensor, 8> analyze(const Tensor& x, const std::vector<float>& lo, const std::vector<float>& hi) {
  Tensor w0 = gather_axis(x, lo, 3), w1 = gather_axis(x, hi, 3);
  Tensor h00 = gather_axis(w0, lo, 2), h01 = gather_axis(w1, lo, 2);
  Tensor h10 = gather_axis(w0, hi, 2), h11 = gather_axis(w1, hi, 2);
  std::array<Tensor, 8> bands;
  bands[0] = gather_axis(h00, lo, 1);  // LLL
  bands[1] = gather_axis(h01, lo, 1);  // LLH
  bands[2] = gather_axis(h10, lo, 1);  // LHL
  bands[3] = gather_axis(h11, lo, 1);  // LHH
  bands[4] = gather_axis(h00, hi, 1);  // HLL
  bands[5] = gather_axis(h01, hi, 1);  // HLH
  bands[6] = gather_axis(h10, hi, 1);  // HHL
  bands[7] = gather_axis(h11, hi, 1);  // HHH
  return bands;
}

// Scatter staging: combine D, then H, then W (exact adjoint of analyze).
Tensor synthesize(const std::array<Tensor, 8>& bands, const std::vector<float>& lo,
                  const std::vector<float>& hi, const std::array<int, 4>& out_shape) {
  const int C = out_shape[0], D = out_shape[1], H = out_shape[2], W = out_shape[3];
  auto combined = [&](const Tensor& a, const Tensor& d, int axis, std::vector<int> shape) {
    Tensor out(std::move(shape));
    scatter_axis_into(a, lo, axis, out);
    scatter_axis_into(d, hi, axis, out);
    return out;
  };
  std::array<Tensor, 4> hstage;
  for (int k = 0; k < 4; ++k)
    hstage[static_cast<size_t>(k)] =
        combined(bands[static_cast<size_t>(k)], bands[static_cast<size_t>(k + 4)], 1, {C, D, H / 2, W / 2});
  std::array<Tensor, 2> wstage;
  for (int k = 0; k < 2; ++k)
    wstage[static_cast<size_t>(k)] =
        combined(hstage[static_cast<size_t>(k)], hstage[static_cast<size_t>(k + 2)], 2, {C, D, H, W / 2});
  return combined(wstage[0], wstage[1], 3, {C, D, H, W});
}

std::array<int, 4> shape4(const Tensor& x) {
  if (x.rank() != 4) throw ShapeMismatch("expected [C,D,H,W] tensor");
  return {x.dim(0), x.dim(1), x.dim(2), x.dim(3)};
}

Tensor stack_bands(const std::array<Tensor, 8>& bands) {
  const auto& b0 = bands[0].shape();
  Tensor out({8 * b0[0], b0[1], b0[2], b0[3]});
  const std::int64_t n = bands[0].numel();
  for (int k = 0; k < 8; ++k)
    std::memcpy(out.data() + k * n, bands[static_cast<size_t>(k)].data(), static_cast<size_t>(n) * sizeof(float));
  return out;
}

std::array<Tensor, 8> unstack_bands(const Tensor& stacked) {
  if (stacked.rank() != 4 || stacked.dim(0) % 8)
    throw BandShapeMismatch("stacked band tensor must have 8*C channels");
  const int C = stacked.dim(0) / 8;
  std::array<Tensor, 8> bands;
  const std::int64_t n = static_cast<std::int64_t>(C) * stacked.dim(1) * stacked.dim(2) * stacked.dim(3);
  for (int k = 0; k < 8; ++k) {
    bands[static_cast<size_t>(k)] = Tensor({C, stacked.dim(1), stacked.dim(2), stacked.dim(3)});
    std::memcpy(bands[static_cast<size_t>(k)].data(), stacked.data() + k * n, static_cast<size_t>(n) * sizeof(float));
  }
  return bands;
}

}  // namespace

FilterBank bior13_filter_bank() {
  const float s16 = static_cast<float>(std::sqrt(2.0) / 16.0);
  const float s2 = static_cast<float>(std::sqrt(2.0) / 2.0);
  FilterBank b;
  b.dec_lo = {-s16, s16, 8 * s16, 8 * s16, s16, -s16};
  b.dec_hi = {0.0f, 0.0f, s2, -s2, 0.0f, 0.0f};
  b.rec_lo = {0.0f, 0.0f, s2, s2, 0.0f, 0.0f};
  b.rec_hi = {-s16, -s16, 8 * s16, -8 * s16, s16, s16};
  b.name = "bior1.3";
  return b;
}

FilterBank filter_bank(const std::string& name) {
  if (name == "bior1.3") return bior13_filter_bank();
  throw Error("unknown wavelet family: " + name);
}

const Tensor& WaveletBands::band(const std::string& key) const {
  for (size_t k = 0; k < 8; ++k)
    if (key == kBandKeys[k]) return bands[k];
  throw BandShapeMismatch("unknown band key: " + key);
}

void WaveletBands::validate() const {
  for (int i = 0; i < 3; ++i)
    if (source_shape[static_cast<size_t>(i) + 1] % 2)
      throw BandShapeMismatch("source spatial dims must be even");
  for (const Tensor& b : bands) {
    if (b.rank() != 4) throw BandShapeMismatch("band is not 4D");
    if (b.dim(0) != source_shape[0] || b.dim(1) != source_shape[1] / 2 ||
        b.dim(2) != source_shape[2] / 2 || b.dim(3) != source_shape[3] / 2)
      throw BandShapeMismatch("band shape inconsistent with source shape");
  }
}

WaveletBands dwt3(const Tensor& x, const FilterBank& bank) {
  WaveletBands out;
  out.source_shape = shape4(x);
  out.bands = analyze(x, bank.dec_lo, bank.dec_hi);
  return out;
}

Tensor idwt3(const WaveletBands& b, const FilterBank& bank) {
  b.validate();
  return synthesize(b.bands, bank.rec_lo, bank.rec_hi, b.source_shape);
}

Tensor dwt3_stacked(const Tensor& x, const FilterBank& bank) {
  shape4(x);
  return stack_bands(analyze(x, bank.dec_lo, bank.dec_hi));
}

Tensor idwt3_stacked(const Tensor& stacked, const FilterBank& bank) {
  auto bands = unstack_bands(stacked);
  std::array<int, 4> out_shape = {stacked.dim(0) / 8, 2 * stacked.dim(1), 2 * stacked.dim(2), 2 * stacked.dim(3)};
  return synthesize(bands, bank.rec_lo, bank.rec_hi, out_shape);
}

Tensor dwt3_stacked_adjoint(const Tensor& grad_stacked, const FilterBank& bank) {
  auto bands = unstack_bands(grad_stacked);
  std::array<int, 4> out_shape = {grad_stacked.dim(0) / 8, 2 * grad_stacked.dim(1), 2 * grad_stacked.dim(2),
                                  2 * grad_stacked.dim(3)};
  return synthesize(bands, bank.dec_lo, bank.dec_hi, out_shape);
}

Tensor idwt3_stacked_adjoint(const Tensor& grad_volume, const FilterBank& bank) {
  shape4(grad_volume);
  return stack_bands(analyze(grad_volume, bank.rec_lo, bank.rec_hi));
}

}  // namespace mgan::wavelet
