#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sdlnet/tensor.hpp"

// Raw forward/backward kernels. Shapes follow the [B,C,H,W] convention,
// kernels are [Cout,Cin,k,k] (conv), [C,1,k,k] (depthwise) and
// [Cin,Cout,k,k] (transposed conv). All backward kernels accumulate.
namespace sdlnet::kernels {

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// valid output range [o0, o1] for i = o*stride - pad + kk, 0 <= i < extent
inline void tap_bounds(int extent, int out, int stride, int pad, int kk, int& o0, int& o1) {
  // smallest o with o*stride >= pad - kk
  int lo = pad - kk;
  o0 = lo <= 0 ? 0 : (lo + stride - 1) / stride;
  int hi = extent - 1 + pad - kk;  // largest o with o*stride <= hi
  o1 = hi < 0 ? -1 : std::min(out - 1, hi / stride);
}

}  // namespace detail

inline int conv_out_dim(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

template <typename T>
void check_conv_args(const Tensor<T>& x, const Tensor<T>& w, int stride, int pad, bool depthwise) {
  detail::require(x.rank() == 4, "conv2d: input must be 4-d [B,C,H,W], got " + x.shape_string());
  detail::require(w.rank() == 4, "conv2d: kernel must be 4-d, got " + w.shape_string());
  detail::require(stride >= 1, "conv2d: stride must be >= 1");
  detail::require(pad >= 0, "conv2d: padding must be >= 0");
  detail::require(w.dim(2) == w.dim(3) && w.dim(2) >= 1, "conv2d: kernel must be square, k >= 1");
  const int k = static_cast<int>(w.dim(2));
  detail::require(static_cast<int>(x.dim(2)) + 2 * pad >= k &&
                      static_cast<int>(x.dim(3)) + 2 * pad >= k,
                  "conv2d: padded input smaller than kernel");
  if (depthwise) {
    detail::require(w.dim(1) == 1, "depthwise_conv2d: kernel must be [C,1,k,k], got " + w.shape_string());
    detail::require(w.dim(0) == x.dim(1),
                    "depthwise_conv2d: kernel channels " + std::to_string(w.dim(0)) +
                        " != input channels " + std::to_string(x.dim(1)));
  } else {
    detail::require(w.dim(1) == x.dim(1),
                    "conv2d: kernel Cin " + std::to_string(w.dim(1)) + " != input channels " +
                        std::to_string(x.dim(1)) + " (input " + x.shape_string() + ", kernel " +
                        w.shape_string() + ")");
  }
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, int stride, int pad) {
  check_conv_args(x, w, stride, pad, false);
  const int B = (int)x.dim(0), Ci = (int)x.dim(1), H = (int)x.dim(2), W = (int)x.dim(3);
  const int Co = (int)w.dim(0), k = (int)w.dim(2);
  const int Ho = conv_out_dim(H, k, stride, pad), Wo = conv_out_dim(W, k, stride, pad);
  Tensor<T> y({(std::size_t)B, (std::size_t)Co, (std::size_t)Ho, (std::size_t)Wo});
  const T* xd = x.data();
  const T* wd = w.data();
  T* yd = y.data();
  for (int b = 0; b < B; ++b)
    for (int co = 0; co < Co; ++co) {
      T* yc = yd + ((std::size_t)(b * Co + co)) * Ho * Wo;
      for (int ci = 0; ci < Ci; ++ci) {
        const T* xc = xd + ((std::size_t)(b * Ci + ci)) * H * W;
        const T* wk = wd + ((std::size_t)(co * Ci + ci)) * k * k;
        for (int ky = 0; ky < k; ++ky)
          for (int kx = 0; kx < k; ++kx) {
            const T wv = wk[ky * k + kx];
            int oy0, oy1, ox0, ox1;
            detail::tap_bounds(H, Ho, stride, pad, ky, oy0, oy1);
            detail::tap_bounds(W, Wo, stride, pad, kx, ox0, ox1);
            for (int oy = oy0; oy <= oy1; ++oy) {
              const T* xr = xc + (std::size_t)(oy * stride - pad + ky) * W + (ox0 * stride - pad + kx);
              T* yr = yc + (std::size_t)oy * Wo;
              if (stride == 1) {
                for (int ox = ox0; ox <= ox1; ++ox) yr[ox] += wv * xr[ox - ox0];
              } else {
                for (int ox = ox0; ox <= ox1; ++ox, xr += stride) yr[ox] += wv * *xr;
              }
            }
          }
      }
    }
  return y;
}

// accumulates into gx and/or gw when non-null (shapes must match x / w)
template <typename T>
void conv2d_grad(const Tensor<T>& x, const Tensor<T>& w, int stride, int pad, const Tensor<T>& gy,
                 Tensor<T>* gx, Tensor<T>* gw) {
  check_conv_args(x, w, stride, pad, false);
  const int B = (int)x.dim(0), Ci = (int)x.dim(1), H = (int)x.dim(2), W = (int)x.dim(3);
  const int Co = (int)w.dim(0), k = (int)w.dim(2);
  const int Ho = conv_out_dim(H, k, stride, pad), Wo = conv_out_dim(W, k, stride, pad);
  detail::require(gy.shape() == std::vector<std::size_t>({(std::size_t)B, (std::size_t)Co,
                                                          (std::size_t)Ho, (std::size_t)Wo}),
                  "conv2d_grad: gy shape mismatch, got " + gy.shape_string());
  if (gx) detail::require(gx->same_shape(x), "conv2d_grad: gx shape mismatch");
  if (gw) detail::require(gw->same_shape(w), "conv2d_grad: gw shape mismatch");
  const T* xd = x.data();
  const T* wd = w.data();
  const T* gyd = gy.data();
  for (int b = 0; b < B; ++b)
    for (int co = 0; co < Co; ++co) {
      const T* gyc = gyd + ((std::size_t)(b * Co + co)) * Ho * Wo;
      for (int ci = 0; ci < Ci; ++ci) {
        const std::size_t xoff = ((std::size_t)(b * Ci + ci)) * H * W;
        const T* xc = xd + xoff;
        T* gxc = gx ? gx->data() + xoff : nullptr;
        const std::size_t woff = ((std::size_t)(co * Ci + ci)) * k * k;
        for (int ky = 0; ky < k; ++ky)
          for (int kx = 0; kx < k; ++kx) {
            const T wv = wd[woff + ky * k + kx];
            int oy0, oy1, ox0, ox1;
            detail::tap_bounds(H, Ho, stride, pad, ky, oy0, oy1);
            detail::tap_bounds(W, Wo, stride, pad, kx, ox0, ox1);
            T wacc = 0;
            for (int oy = oy0; oy <= oy1; ++oy) {
              const std::size_t row = (std::size_t)(oy * stride - pad + ky) * W;
              const int col0 = ox0 * stride - pad + kx;
              const T* gyr = gyc + (std::size_t)oy * Wo;
              if (gx) {
                T* gxr = gxc + row + col0;
                for (int ox = ox0; ox <= ox1; ++ox, gxr += stride) *gxr += wv * gyr[ox];
              }
              if (gw) {
                const T* xr = xc + row + col0;
                for (int ox = ox0; ox <= ox1; ++ox, xr += stride) wacc += gyr[ox] * *xr;
              }
            }
            if (gw) (*gw)[woff + ky * k + kx] += wacc;
          }
      }
    }
}

template <typename T>
Tensor<T> depthwise_conv2d(const Tensor<T>& x, const Tensor<T>& w, int stride, int pad) {
  check_conv_args(x, w, stride, pad, true);
  const int B = (int)x.dim(0), C = (int)x.dim(1), H = (int)x.dim(2), W = (int)x.dim(3);
  const int k = (int)w.dim(2);
  const int Ho = conv_out_dim(H, k, stride, pad), Wo = conv_out_dim(W, k, stride, pad);
  Tensor<T> y({(std::size_t)B, (std::size_t)C, (std::size_t)Ho, (std::size_t)Wo});
  const T* xd = x.data();
  const T* wd = w.data();
  T* yd = y.data();
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const T* xc = xd + ((std::size_t)(b * C + c)) * H * W;
      T* yc = yd + ((std::size_t)(b * C + c)) * Ho * Wo;
      const T* wk = wd + (std::size_t)c * k * k;
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          const T wv = wk[ky * k + kx];
          int oy0, oy1, ox0, ox1;
          detail::tap_bounds(H, Ho, stride, pad, ky, oy0, oy1);
          detail::tap_bounds(W, Wo, stride, pad, kx, ox0, ox1);
          for (int oy = oy0; oy <= oy1; ++oy) {
            const T* xr = xc + (std::size_t)(oy * stride - pad + ky) * W + (ox0 * stride - pad + kx);
            T* yr = yc + (std::size_t)oy * Wo;
            for (int ox = ox0; ox <= ox1; ++ox, xr += stride) yr[ox] += wv * *xr;
          }
        }
    }
  return y;
}

template <typename T>
void depthwise_conv2d_grad(const Tensor<T>& x, const Tensor<T>& w, int stride, int pad,
                           const Tensor<T>& gy, Tensor<T>* gx, Tensor<T>* gw) {
  check_conv_args(x, w, stride, pad, true);
  const int B = (int)x.dim(0), C = (int)x.dim(1), H = (int)x.dim(2), W = (int)x.dim(3);
  const int k = (int)w.dim(2);
  const int Ho = conv_out_dim(H, k, stride, pad), Wo = conv_out_dim(W, k, stride, pad);
  detail::require(gy.shape() == std::vector<std::size_t>({(std::size_t)B, (std::size_t)C,
                                                          (std::size_t)Ho, (std::size_t)Wo}),
                  "depthwise_conv2d_grad: gy shape mismatch");
  const T* xd = x.data();
  const T* wd = w.data();
  const T* gyd = gy.data();
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const std::size_t xoff = ((std::size_t)(b * C + c)) * H * W;
      const std::size_t yoff = ((std::size_t)(b * C + c)) * Ho * Wo;
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          const T wv = wd[(std::size_t)c * k * k + ky * k + kx];
          int oy0, oy1, ox0, ox1;
          detail::tap_bounds(H, Ho, stride, pad, ky, oy0, oy1);
          detail::tap_bounds(W, Wo, stride, pad, kx, ox0, ox1);
          T wacc = 0;
          for (int oy = oy0; oy <= oy1; ++oy) {
            const std::size_t row = (std::size_t)(oy * stride - pad + ky) * W;
            const int col0 = ox0 * stride - pad + kx;
            const T* gyr = gyd + yoff + (std::size_t)oy * Wo;
            if (gx) {
              T* gxr = gx->data() + xoff + row + col0;
              for (int ox = ox0; ox <= ox1; ++ox, gxr += stride) *gxr += wv * gyr[ox];
            }
            if (gw) {
              const T* xr = xd + xoff + row + col0;
              for (int ox = ox0; ox <= ox1; ++ox, xr += stride) wacc += gyr[ox] * *xr;
            }
          }
          if (gw) (*gw)[(std::size_t)c * k * k + ky * k + kx] += wacc;
        }
    }
}

// Transposed convolution, the adjoint of conv2d(kernel k=2*stride,
// pad=stride/2). Only stride 2 yields the exact-doubling geometry the
// upsampler needs; kernel layout is [Cin,Cout,k,k].
template <typename T>
void check_tconv_args(const Tensor<T>& x, const Tensor<T>& w, int stride) {
  detail::require(x.rank() == 4, "conv2d_transpose: input must be 4-d, got " + x.shape_string());
  detail::require(w.rank() == 4, "conv2d_transpose: kernel must be 4-d, got " + w.shape_string());
  detail::require(stride == 2, "conv2d_transpose: stride must be 2");
  detail::require(w.dim(2) == w.dim(3) && (int)w.dim(2) == 2 * stride,
                  "conv2d_transpose: kernel size must be 2*stride, got " + w.shape_string());
  detail::require(w.dim(0) == x.dim(1),
                  "conv2d_transpose: kernel Cin " + std::to_string(w.dim(0)) +
                      " != input channels " + std::to_string(x.dim(1)));
}

template <typename T>
Tensor<T> conv2d_transpose(const Tensor<T>& x, const Tensor<T>& w, int stride) {
  check_tconv_args(x, w, stride);
  const int B = (int)x.dim(0), Ci = (int)x.dim(1), H = (int)x.dim(2), W = (int)x.dim(3);
  const int Co = (int)w.dim(1), k = (int)w.dim(2), pad = stride / 2;
  const int Ho = H * stride, Wo = W * stride;
  Tensor<T> y({(std::size_t)B, (std::size_t)Co, (std::size_t)Ho, (std::size_t)Wo});
  const T* xd = x.data();
  const T* wd = w.data();
  T* yd = y.data();
  // scatter: y[b,co,oy*s-p+ky, ox*s-p+kx] += x[b,ci,oy,ox] * w[ci,co,ky,kx]
  for (int b = 0; b < B; ++b)
    for (int ci = 0; ci < Ci; ++ci) {
      const T* xc = xd + ((std::size_t)(b * Ci + ci)) * H * W;
      for (int co = 0; co < Co; ++co) {
        T* yc = yd + ((std::size_t)(b * Co + co)) * Ho * Wo;
        const T* wk = wd + ((std::size_t)(ci * Co + co)) * k * k;
        for (int ky = 0; ky < k; ++ky)
          for (int kx = 0; kx < k; ++kx) {
            const T wv = wk[ky * k + kx];
            int i0, i1, j0, j1;
            detail::tap_bounds(Ho, H, stride, pad, ky, i0, i1);
            detail::tap_bounds(Wo, W, stride, pad, kx, j0, j1);
            for (int iy = i0; iy <= i1; ++iy) {
              const T* xr = xc + (std::size_t)iy * W;
              T* yr = yc + (std::size_t)(iy * stride - pad + ky) * Wo + (j0 * stride - pad + kx);
              for (int ix = j0; ix <= j1; ++ix, yr += stride) *yr += wv * xr[ix];
            }
          }
      }
    }
  return y;
}

template <typename T>
void conv2d_transpose_grad(const Tensor<T>& x, const Tensor<T>& w, int stride, const Tensor<T>& gy,
                           Tensor<T>* gx, Tensor<T>* gw) {
  check_tconv_args(x, w, stride);
  const int B = (int)x.dim(0), Ci = (int)x.dim(1), H = (int)x.dim(2), W = (int)x.dim(3);
  const int Co = (int)w.dim(1), k = (int)w.dim(2), pad = stride / 2;
  const int Ho = H * stride, Wo = W * stride;
  detail::require(gy.shape() == std::vector<std::size_t>({(std::size_t)B, (std::size_t)Co,
                                                          (std::size_t)Ho, (std::size_t)Wo}),
                  "conv2d_transpose_grad: gy shape mismatch");
  const T* xd = x.data();
  const T* wd = w.data();
  const T* gyd = gy.data();
  for (int b = 0; b < B; ++b)
    for (int ci = 0; ci < Ci; ++ci) {
      const std::size_t xoff = ((std::size_t)(b * Ci + ci)) * H * W;
      for (int co = 0; co < Co; ++co) {
        const T* gyc = gyd + ((std::size_t)(b * Co + co)) * Ho * Wo;
        const std::size_t woff = ((std::size_t)(ci * Co + co)) * k * k;
        for (int ky = 0; ky < k; ++ky)
          for (int kx = 0; kx < k; ++kx) {
            const T wv = wd[woff + ky * k + kx];
            int i0, i1, j0, j1;
            detail::tap_bounds(Ho, H, stride, pad, ky, i0, i1);
            detail::tap_bounds(Wo, W, stride, pad, kx, j0, j1);
            T wacc = 0;
            for (int iy = i0; iy <= i1; ++iy) {
              const T* gyr = gyc + (std::size_t)(iy * stride - pad + ky) * Wo + (j0 * stride - pad + kx);
              if (gx) {
                T* gxr = gx->data() + xoff + (std::size_t)iy * W;
                const T* g = gyr;
                for (int ix = j0; ix <= j1; ++ix, g += stride) gxr[ix] += wv * *g;
              }
              if (gw) {
                const T* xr = xd + xoff + (std::size_t)iy * W;
                const T* g = gyr;
                for (int ix = j0; ix <= j1; ++ix, g += stride) wacc += xr[ix] * *g;
              }
            }
            if (gw) (*gw)[woff + ky * k + kx] += wacc;
          }
      }
    }
}

// ---- pointwise and structural ops ----

template <typename T>
Tensor<T> relu6(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) y[i] = std::min(std::max(x[i], T(0)), T(6));
  return y;
}

// subgradient 0 at both kinks
template <typename T>
void relu6_grad(const Tensor<T>& x, const Tensor<T>& gy, Tensor<T>& gx) {
  for (std::size_t i = 0; i < x.numel(); ++i)
    if (x[i] > T(0) && x[i] < T(6)) gx[i] += gy[i];
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const T v = x[i];
    y[i] = v >= 0 ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
  }
  return y;
}

template <typename T>
void sigmoid_grad(const Tensor<T>& y, const Tensor<T>& gy, Tensor<T>& gx) {
  for (std::size_t i = 0; i < y.numel(); ++i) gx[i] += gy[i] * y[i] * (T(1) - y[i]);
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require(a.same_shape(b),
                  "add: shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  Tensor<T> y(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) y[i] = a[i] + b[i];
  return y;
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require(a.rank() == 4 && b.rank() == 4, "concat_channels: inputs must be 4-d");
  detail::require(a.dim(0) == b.dim(0) && a.dim(2) == b.dim(2) && a.dim(3) == b.dim(3),
                  "concat_channels: non-channel dims differ, " + a.shape_string() + " vs " +
                      b.shape_string());
  const std::size_t B = a.dim(0), Ca = a.dim(1), Cb = b.dim(1), HW = a.dim(2) * a.dim(3);
  Tensor<T> y({B, Ca + Cb, a.dim(2), a.dim(3)});
  for (std::size_t n = 0; n < B; ++n) {
    std::copy(a.data() + n * Ca * HW, a.data() + (n + 1) * Ca * HW, y.data() + n * (Ca + Cb) * HW);
    std::copy(b.data() + n * Cb * HW, b.data() + (n + 1) * Cb * HW,
              y.data() + n * (Ca + Cb) * HW + Ca * HW);
  }
  return y;
}

template <typename T>
void concat_channels_grad(std::size_t Ca, std::size_t Cb, std::size_t B, std::size_t HW,
                          const Tensor<T>& gy, Tensor<T>* ga, Tensor<T>* gb) {
  for (std::size_t n = 0; n < B; ++n) {
    const T* g = gy.data() + n * (Ca + Cb) * HW;
    if (ga)
      for (std::size_t i = 0; i < Ca * HW; ++i) ga->data()[n * Ca * HW + i] += g[i];
    if (gb)
      for (std::size_t i = 0; i < Cb * HW; ++i) gb->data()[n * Cb * HW + i] += g[Ca * HW + i];
  }
}

// per-channel bias on [B,C,H,W]; bias is [C]
template <typename T>
Tensor<T> bias_add(const Tensor<T>& x, const Tensor<T>& b) {
  detail::require(x.rank() == 4 && b.rank() == 1 && b.dim(0) == x.dim(1),
                  "bias_add: need [B,C,H,W] and [C], got " + x.shape_string() + " and " +
                      b.shape_string());
  Tensor<T> y(x.shape());
  const std::size_t B = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t c = 0; c < C; ++c) {
      const T bv = b[c];
      const T* xr = x.data() + (n * C + c) * HW;
      T* yr = y.data() + (n * C + c) * HW;
      for (std::size_t i = 0; i < HW; ++i) yr[i] = xr[i] + bv;
    }
  return y;
}

template <typename T>
void bias_add_grad(const Tensor<T>& gy, Tensor<T>* gx, Tensor<T>* gb) {
  const std::size_t B = gy.dim(0), C = gy.dim(1), HW = gy.dim(2) * gy.dim(3);
  if (gx)
    for (std::size_t i = 0; i < gy.numel(); ++i) gx->data()[i] += gy[i];
  if (gb)
    for (std::size_t n = 0; n < B; ++n)
      for (std::size_t c = 0; c < C; ++c) {
        const T* g = gy.data() + (n * C + c) * HW;
        T acc = 0;
        for (std::size_t i = 0; i < HW; ++i) acc += g[i];
        (*gb)[c] += acc;
      }
}

template <typename T>
T mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  detail::require(pred.same_shape(target), "mse_loss: shape mismatch " + pred.shape_string() +
                                               " vs " + target.shape_string());
  double acc = 0;  // accumulate in double; float sums drift over big batches
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const double d = (double)pred[i] - (double)target[i];
    acc += d * d;
  }
  return static_cast<T>(acc / (double)pred.numel());
}

// Batch statistics for batch_norm; reused by forward and backward.
template <typename T>
struct BatchStats {
  std::vector<T> mean, inv_std;  // per channel; inv_std = 1/sqrt(var + eps)
};

// Train mode: normalize by batch statistics (biased variance) and update
// running stats in place. Eval mode: normalize by running stats.
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     Tensor<T>& running_mean, Tensor<T>& running_var, bool training, T momentum,
                     T eps, BatchStats<T>* saved = nullptr) {
  detail::require(x.rank() == 4, "batch_norm: input must be 4-d, got " + x.shape_string());
  const std::size_t B = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  detail::require(gamma.rank() == 1 && gamma.dim(0) == C && beta.rank() == 1 && beta.dim(0) == C,
                  "batch_norm: gamma/beta must be [C]");
  detail::require(running_mean.dim(0) == C && running_var.dim(0) == C,
                  "batch_norm: running stats must be [C]");
  if (training) detail::require(B * HW >= 2, "batch_norm: train mode needs B*H*W >= 2");

  Tensor<T> y(x.shape());
  const std::size_t N = B * HW;
  for (std::size_t c = 0; c < C; ++c) {
    T mean, var;
    if (training) {
      T s = 0;
      for (std::size_t n = 0; n < B; ++n) {
        const T* xr = x.data() + (n * C + c) * HW;
        for (std::size_t i = 0; i < HW; ++i) s += xr[i];
      }
      mean = s / static_cast<T>(N);
      T v = 0;
      for (std::size_t n = 0; n < B; ++n) {
        const T* xr = x.data() + (n * C + c) * HW;
        for (std::size_t i = 0; i < HW; ++i) {
          const T d = xr[i] - mean;
          v += d * d;
        }
      }
      var = v / static_cast<T>(N);
      running_mean[c] = (T(1) - momentum) * running_mean[c] + momentum * mean;
      running_var[c] = (T(1) - momentum) * running_var[c] + momentum * var;
    } else {
      mean = running_mean[c];
      var = running_var[c];
    }
    const T inv_std = T(1) / std::sqrt(var + eps);
    if (saved) {
      if (saved->mean.size() != C) {
        saved->mean.resize(C);
        saved->inv_std.resize(C);
      }
      saved->mean[c] = mean;
      saved->inv_std[c] = inv_std;
    }
    const T g = gamma[c], bt = beta[c];
    for (std::size_t n = 0; n < B; ++n) {
      const T* xr = x.data() + (n * C + c) * HW;
      T* yr = y.data() + (n * C + c) * HW;
      for (std::size_t i = 0; i < HW; ++i) yr[i] = g * (xr[i] - mean) * inv_std + bt;
    }
  }
  return y;
}

template <typename T>
void batch_norm_grad(const Tensor<T>& x, const Tensor<T>& gamma, const BatchStats<T>& st,
                     bool training, const Tensor<T>& gy, Tensor<T>* gx, Tensor<T>* ggamma,
                     Tensor<T>* gbeta) {
  const std::size_t B = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  const std::size_t N = B * HW;
  for (std::size_t c = 0; c < C; ++c) {
    const T mean = st.mean[c], istd = st.inv_std[c], g = gamma[c];
    T sum_gy = 0, sum_gy_xhat = 0;
    for (std::size_t n = 0; n < B; ++n) {
      const T* xr = x.data() + (n * C + c) * HW;
      const T* gr = gy.data() + (n * C + c) * HW;
      for (std::size_t i = 0; i < HW; ++i) {
        sum_gy += gr[i];
        sum_gy_xhat += gr[i] * (xr[i] - mean) * istd;
      }
    }
    if (gbeta) (*gbeta)[c] += sum_gy;
    if (ggamma) (*ggamma)[c] += sum_gy_xhat;
    if (gx) {
      if (training) {
        // dx = g*istd/N * (N*gy - sum(gy) - xhat * sum(gy*xhat))
        const T k = g * istd / static_cast<T>(N);
        for (std::size_t n = 0; n < B; ++n) {
          const T* xr = x.data() + (n * C + c) * HW;
          const T* gr = gy.data() + (n * C + c) * HW;
          T* dr = gx->data() + (n * C + c) * HW;
          for (std::size_t i = 0; i < HW; ++i) {
            const T xhat = (xr[i] - mean) * istd;
            dr[i] += k * (static_cast<T>(N) * gr[i] - sum_gy - xhat * sum_gy_xhat);
          }
        }
      } else {
        const T k = g * istd;
        for (std::size_t n = 0; n < B; ++n) {
          const T* gr = gy.data() + (n * C + c) * HW;
          T* dr = gx->data() + (n * C + c) * HW;
          for (std::size_t i = 0; i < HW; ++i) dr[i] += k * gr[i];
        }
      }
    }
  }
}

}  // namespace sdlnet::kernels
