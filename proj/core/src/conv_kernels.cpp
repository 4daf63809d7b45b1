#include "mgan/conv_kernels.hpp"

#include <cblas.h>

#include <cstdlib>
#include <cstring>
#include <vector>

namespace mgan::conv {

namespace {

struct BlasInit {
  BlasInit() { openblas_set_num_threads(1); }
};
const BlasInit blas_init;

// C[M x N] = A[M x K] * B[K x N] (+ beta*C), row-major; degenerate shapes go
// through level-2 BLAS because sgemm handles M==1 / K==1 poorly.
void gemm_nn(int M, int N, int K, const float* A, const float* B, float beta, float* C) {
  if (M == 1) {
    cblas_sgemv(CblasRowMajor, CblasTrans, K, N, 1.0f, B, N, A, 1, beta, C, 1);
  } else if (K == 1) {
    if (beta == 0.0f) std::memset(C, 0, static_cast<size_t>(M) * N * sizeof(float));
    cblas_sger(CblasRowMajor, M, N, 1.0f, A, 1, B, 1, C, N);
  } else {
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, M, N, K, 1.0f, A, K, B, N, beta, C, N);
  }
}

// C[M x N] = A^T (A is K x M row-major) * B[K x N]
void gemm_tn(int M, int N, int K, const float* A, const float* B, float beta, float* C) {
  if (M == 1) {
    cblas_sgemv(CblasRowMajor, CblasTrans, K, N, 1.0f, B, N, A, 1, beta, C, 1);
  } else if (K == 1) {
    if (beta == 0.0f) std::memset(C, 0, static_cast<size_t>(M) * N * sizeof(float));
    cblas_sger(CblasRowMajor, M, N, 1.0f, A, 1, B, 1, C, N);
  } else {
    cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, M, N, K, 1.0f, A, M, B, N, beta, C, N);
  }
}

// C[M x N] = A[M x K] * B^T (B is N x K row-major), beta accumulate
void gemm_nt(int M, int N, int K, const float* A, const float* B, float beta, float* C) {
  if (M == 1) {
    cblas_sgemv(CblasRowMajor, CblasNoTrans, N, K, 1.0f, B, K, A, 1, beta, C, 1);
  } else if (K == 1) {
    if (beta == 0.0f) std::memset(C, 0, static_cast<size_t>(M) * N * sizeof(float));
    cblas_sger(CblasRowMajor, M, N, 1.0f, A, 1, B, 1, C, N);
  } else {
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, M, N, K, 1.0f, A, K, B, K, beta, C, N);
  }
}

// Output planes are processed in blocks so each GEMM sees a large N while the
// column buffer stays bounded.
constexpr std::int64_t kColBudgetFloats = 12 * 1024 * 1024;  // 48 MB

int plane_block(int K3, int HoWo, int Do) {
  const std::int64_t per_plane = static_cast<std::int64_t>(K3) * HoWo;
  int planes = static_cast<int>(kColBudgetFloats / (per_plane > 0 ? per_plane : 1));
  if (planes < 1) planes = 1;
  return planes > Do ? Do : planes;
}

// Fills col[Cin*k^3][nplanes*Ho*Wo] for output planes [od0, od0+nplanes).
// Row order matches the weight layout (ci, kd, kh, kw).
void im2col_block(const float* x, int Cin, int D, int H, int W, int k, int stride, int pad, int od0,
                  int nplanes, int Ho, int Wo, float* col) {
  const std::int64_t block_cols = static_cast<std::int64_t>(nplanes) * Ho * Wo;
  const std::int64_t HoWo = static_cast<std::int64_t>(Ho) * Wo;
  for (int ci = 0; ci < Cin; ++ci) {
    const float* xc = x + static_cast<std::int64_t>(ci) * D * H * W;
    for (int kd = 0; kd < k; ++kd) {
      for (int kh = 0; kh < k; ++kh) {
        for (int kw = 0; kw < k; ++kw) {
          float* row = col + static_cast<std::int64_t>(((ci * k + kd) * k + kh) * k + kw) * block_cols;
          for (int p = 0; p < nplanes; ++p) {
            const int id = (od0 + p) * stride - pad + kd;
            float* prow = row + p * HoWo;
            if (id < 0 || id >= D) {
              std::memset(prow, 0, static_cast<size_t>(HoWo) * sizeof(float));
              continue;
            }
            for (int oh = 0; oh < Ho; ++oh) {
              const int ih = oh * stride - pad + kh;
              float* seg = prow + static_cast<std::int64_t>(oh) * Wo;
              if (ih < 0 || ih >= H) {
                std::memset(seg, 0, static_cast<size_t>(Wo) * sizeof(float));
                continue;
              }
              const float* xrow = xc + (static_cast<std::int64_t>(id) * H + ih) * W;
              if (stride == 1) {
                int lo = pad - kw, hi = W - 1 + pad - kw;  // inclusive ow bounds
                if (lo < 0) lo = 0;
                if (hi > Wo - 1) hi = Wo - 1;
                if (lo > 0) std::memset(seg, 0, static_cast<size_t>(lo) * sizeof(float));
                if (hi >= lo)
                  std::memcpy(seg + lo, xrow + lo - pad + kw, static_cast<size_t>(hi - lo + 1) * sizeof(float));
                if (hi < Wo - 1) std::memset(seg + hi + 1, 0, static_cast<size_t>(Wo - 1 - hi) * sizeof(float));
              } else {
                for (int ow = 0; ow < Wo; ++ow) {
                  const int iw = ow * stride - pad + kw;
                  seg[ow] = (iw >= 0 && iw < W) ? xrow[iw] : 0.0f;
                }
              }
            }
          }
        }
      }
    }
  }
}

// Adjoint of im2col_block: scatter-adds the column block into dx.
void col2im_block(const float* col, int Cin, int D, int H, int W, int k, int stride, int pad, int od0,
                  int nplanes, int Ho, int Wo, float* dx) {
  const std::int64_t block_cols = static_cast<std::int64_t>(nplanes) * Ho * Wo;
  const std::int64_t HoWo = static_cast<std::int64_t>(Ho) * Wo;
  for (int ci = 0; ci < Cin; ++ci) {
    float* xc = dx + static_cast<std::int64_t>(ci) * D * H * W;
    for (int kd = 0; kd < k; ++kd) {
      for (int kh = 0; kh < k; ++kh) {
        for (int kw = 0; kw < k; ++kw) {
          const float* row = col + static_cast<std::int64_t>(((ci * k + kd) * k + kh) * k + kw) * block_cols;
          for (int p = 0; p < nplanes; ++p) {
            const int id = (od0 + p) * stride - pad + kd;
            if (id < 0 || id >= D) continue;
            const float* prow = row + p * HoWo;
            for (int oh = 0; oh < Ho; ++oh) {
              const int ih = oh * stride - pad + kh;
              if (ih < 0 || ih >= H) continue;
              float* xrow = xc + (static_cast<std::int64_t>(id) * H + ih) * W;
              const float* seg = prow + static_cast<std::int64_t>(oh) * Wo;
              if (stride == 1) {
                int lo = pad - kw, hi = W - 1 + pad - kw;
                if (lo < 0) lo = 0;
                if (hi > Wo - 1) hi = Wo - 1;
                const float* s = seg + lo;
                float* xr = xrow + lo - pad + kw;
                for (int ow = lo; ow <= hi; ++ow) *xr++ += *s++;
              } else {
                for (int ow = 0; ow < Wo; ++ow) {
                  const int iw = ow * stride - pad + kw;
                  if (iw >= 0 && iw < W) xrow[iw] += seg[ow];
                }
              }
            }
          }
        }
      }
    }
  }
}

int kernel_dim_from_weight(const Tensor& w) {
  if (w.rank() != 5 || w.dim(2) != w.dim(3) || w.dim(3) != w.dim(4))
    throw ShapeMismatch("conv weight must be [Co,Ci,k,k,k] cubic");
  return w.dim(2);
}

// Copies grad_out planes [od0, od0+nplanes) into a contiguous [Cout, block]
// matrix.
void gather_out_block(const Tensor& grad_out, int od0, int nplanes, float* gblock) {
  const int Cout = grad_out.dim(0), Do = grad_out.dim(1);
  const std::int64_t HoWo = static_cast<std::int64_t>(grad_out.dim(2)) * grad_out.dim(3);
  const std::int64_t block = static_cast<std::int64_t>(nplanes) * HoWo;
  for (int co = 0; co < Cout; ++co)
    std::memcpy(gblock + co * block, grad_out.data() + (static_cast<std::int64_t>(co) * Do + od0) * HoWo,
                static_cast<size_t>(block) * sizeof(float));
}

}  // namespace

int conv_out_dim(int n, int k, int stride, int pad) {
  const int t = n + 2 * pad - k;
  if (t < 0) throw ShapeMismatch("kernel larger than padded input");
  return t / stride + 1;
}

Tensor conv3d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, int stride, int pad) {
  const int k = kernel_dim_from_weight(w);
  if (x.rank() != 4 || x.dim(0) != w.dim(1)) throw ShapeMismatch("conv3d input/weight channel mismatch");
  const int Cin = x.dim(0), D = x.dim(1), H = x.dim(2), W = x.dim(3), Cout = w.dim(0);
  const int Do = conv_out_dim(D, k, stride, pad), Ho = conv_out_dim(H, k, stride, pad),
            Wo = conv_out_dim(W, k, stride, pad);
  Tensor out({Cout, Do, Ho, Wo});
  const int K3 = Cin * k * k * k;
  const std::int64_t HoWo = static_cast<std::int64_t>(Ho) * Wo;
  const int bp = plane_block(K3, static_cast<int>(HoWo), Do);
  std::vector<float> col(static_cast<size_t>(K3) * bp * HoWo);
  std::vector<float> oblock(static_cast<size_t>(Cout) * bp * HoWo);
  for (int od0 = 0; od0 < Do; od0 += bp) {
    const int nplanes = std::min(bp, Do - od0);
    const std::int64_t block = static_cast<std::int64_t>(nplanes) * HoWo;
    im2col_block(x.data(), Cin, D, H, W, k, stride, pad, od0, nplanes, Ho, Wo, col.data());
    gemm_nn(Cout, static_cast<int>(block), K3, w.data(), col.data(), 0.0f, oblock.data());
    for (int co = 0; co < Cout; ++co)
      std::memcpy(out.data() + (static_cast<std::int64_t>(co) * Do + od0) * HoWo,
                  oblock.data() + co * block, static_cast<size_t>(block) * sizeof(float));
  }
  if (bias) {
    if (bias->numel() != Cout) throw ShapeMismatch("bias size != Cout");
    for (int co = 0; co < Cout; ++co) {
      float* oc = out.data() + static_cast<std::int64_t>(co) * Do * HoWo;
      const float b = (*bias)[co];
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(Do) * HoWo; ++i) oc[i] += b;
    }
  }
  return out;
}

Tensor conv3d_backward_input(const Tensor& grad_out, const Tensor& w, const std::array<int, 4>& in_shape,
                             int stride, int pad) {
  const int k = kernel_dim_from_weight(w);
  const int Cout = w.dim(0), Cin = w.dim(1);
  if (grad_out.dim(0) != Cout) throw ShapeMismatch("grad_out channels != Cout");
  if (in_shape[0] != Cin) throw ShapeMismatch("in_shape channels != Cin");
  const int D = in_shape[1], H = in_shape[2], W = in_shape[3];
  const int Do = grad_out.dim(1), Ho = grad_out.dim(2), Wo = grad_out.dim(3);
  Tensor dx({Cin, D, H, W});
  const int K3 = Cin * k * k * k;
  const std::int64_t HoWo = static_cast<std::int64_t>(Ho) * Wo;
  const int bp = plane_block(K3, static_cast<int>(HoWo), Do);
  std::vector<float> col(static_cast<size_t>(K3) * bp * HoWo);
  std::vector<float> gblock(static_cast<size_t>(Cout) * bp * HoWo);
  for (int od0 = 0; od0 < Do; od0 += bp) {
    const int nplanes = std::min(bp, Do - od0);
    const std::int64_t block = static_cast<std::int64_t>(nplanes) * HoWo;
    gather_out_block(grad_out, od0, nplanes, gblock.data());
    gemm_tn(K3, static_cast<int>(block), Cout, w.data(), gblock.data(), 0.0f, col.data());
    col2im_block(col.data(), Cin, D, H, W, k, stride, pad, od0, nplanes, Ho, Wo, dx.data());
  }
  return dx;
}

Tensor conv3d_backward_weight(const Tensor& grad_out, const Tensor& x, int k, int stride, int pad) {
  const int Cin = x.dim(0), D = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Cout = grad_out.dim(0), Do = grad_out.dim(1), Ho = grad_out.dim(2), Wo = grad_out.dim(3);
  Tensor dw({Cout, Cin, k, k, k});
  const int K3 = Cin * k * k * k;
  const std::int64_t HoWo = static_cast<std::int64_t>(Ho) * Wo;
  const int bp = plane_block(K3, static_cast<int>(HoWo), Do);
  std::vector<float> col(static_cast<size_t>(K3) * bp * HoWo);
  std::vector<float> gblock(static_cast<size_t>(Cout) * bp * HoWo);
  for (int od0 = 0; od0 < Do; od0 += bp) {
    const int nplanes = std::min(bp, Do - od0);
    const std::int64_t block = static_cast<std::int64_t>(nplanes) * HoWo;
    im2col_block(x.data(), Cin, D, H, W, k, stride, pad, od0, nplanes, Ho, Wo, col.data());
    gather_out_block(grad_out, od0, nplanes, gblock.data());
    gemm_nt(Cout, K3, static_cast<int>(block), gblock.data(), col.data(), 1.0f, dw.data());
  }
  return dw;
}

Tensor conv3d_backward_bias(const Tensor& grad_out) {
  const int Cout = grad_out.dim(0);
  const std::int64_t spatial = grad_out.numel() / Cout;
  Tensor db({Cout});
  for (int co = 0; co < Cout; ++co) {
    double s = 0.0;
    const float* g = grad_out.data() + co * spatial;
    for (std::int64_t i = 0; i < spatial; ++i) s += g[i];
    db[co] = static_cast<float>(s);
  }
  return db;
}

Tensor conv_transpose3d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, int stride, int pad,
                                int out_pad) {
  const int k = kernel_dim_from_weight(w);
  const int Cin = w.dim(0), Cout = w.dim(1);
  if (x.dim(0) != Cin) throw ShapeMismatch("conv_transpose input channels != Cin");
  if (out_pad < 0 || out_pad >= stride) throw ShapeMismatch("output padding must be in [0, stride)");
  std::array<int, 4> out_shape = {Cout, (x.dim(1) - 1) * stride - 2 * pad + k + out_pad,
                                  (x.dim(2) - 1) * stride - 2 * pad + k + out_pad,
                                  (x.dim(3) - 1) * stride - 2 * pad + k + out_pad};
  Tensor out = conv3d_backward_input(x, w, out_shape, stride, pad);
  if (bias) {
    if (bias->numel() != Cout) throw ShapeMismatch("bias size != Cout");
    const std::int64_t spatial = out.numel() / Cout;
    for (int co = 0; co < Cout; ++co) {
      float* oc = out.data() + co * spatial;
      const float b = (*bias)[co];
      for (std::int64_t i = 0; i < spatial; ++i) oc[i] += b;
    }
  }
  return out;
}

Tensor conv_transpose3d_backward_input(const Tensor& grad_out, const Tensor& w, const std::array<int, 4>& in_shape,
                                       int stride, int pad) {
  Tensor dx = conv3d_forward(grad_out, w, nullptr, stride, pad);
  if (dx.dim(1) != in_shape[1] || dx.dim(2) != in_shape[2] || dx.dim(3) != in_shape[3])
    throw ShapeMismatch("conv_transpose backward shape mismatch");
  return dx;
}

Tensor conv_transpose3d_backward_weight(const Tensor& grad_out, const Tensor& x, int k, int stride, int pad) {
  // dV[ci,co,m] = sum_od x[ci,od] * g[co, od*s - p + m]
  return conv3d_backward_weight(/*grad_out=*/x, /*x=*/grad_out, k, stride, pad);
}

}  // namespace mgan::conv
