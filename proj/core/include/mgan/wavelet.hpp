#pragma once

#include <array>
#include <string>
#include <vector>

#include "mgan/tensor.hpp"

namespace mgan::wavelet {

// Analysis/synthesis filter pairs of one biorthogonal bank.
// Filters are fixed data, never trained; gradients flow through the
// transform, not into it.
struct FilterBank {
  std::vector<float> dec_lo, dec_hi, rec_lo, rec_hi;
  std::string name;
};

// bior1.3: 6-tap spline pair. sum(dec_lo)=sqrt(2), sum(dec_hi)=0.
FilterBank bior13_filter_bank();

// Registry by family name; only "bior1.3" is shipped.
FilterBank filter_bank(const std::string& name);

// Subband order: key letters are (depth, height, width), L=lowpass.
// Index k = 4*hi_depth + 2*hi_height + hi_width, i.e. LLL=0 ... HHH=7.
inline constexpr std::array<const char*, 8> kBandKeys = {
    "LLL", "LLH", "LHL", "LHH", "HLL", "HLH", "HHL", "HHH"};

struct WaveletBands {
  std::array<Tensor, 8> bands;      // each [C, D/2, H/2, W/2]
  std::array<int, 4> source_shape;  // [C, D, H, W]

  const Tensor& band(const std::string& key) const;
  void validate() const;  // throws BandShapeMismatch
};

// Single-level separable 3D DWT with periodic boundary extension.
// Input [C, D, H, W] with even spatial dims; throws OddDimension otherwise.
WaveletBands dwt3(const Tensor& x, const FilterBank& bank);

// Inverse transform; idwt3(dwt3(x)) == x to float32 accuracy.
Tensor idwt3(const WaveletBands& b, const FilterBank& bank);

// Stacked forms used by the network: bands concatenated band-major on the
// channel axis, [8C, D/2, H/2, W/2]. Band k occupies channels [k*C,(k+1)*C).
Tensor dwt3_stacked(const Tensor& x, const FilterBank& bank);
Tensor idwt3_stacked(const Tensor& stacked, const FilterBank& bank);

// Adjoint operators (transpose of the linear maps above), needed for
// backpropagation through fixed-filter layers.
Tensor dwt3_stacked_adjoint(const Tensor& grad_stacked, const FilterBank& bank);
Tensor idwt3_stacked_adjoint(const Tensor& grad_volume, const FilterBank& bank);

}  // namespace mgan::wavelet
