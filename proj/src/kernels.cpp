// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#include "srs/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <vector>

namespace srs::kernels {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

bool is_pointwise(const ConvGeometry& g) {
  return g.kernel_h == 1 && g.kernel_w == 1 && g.stride == 1 && g.pad == 0;
}

// Unfolds channels [c0, c0 + patch channels) of one sample into a
// (cin_g * Kh * Kw) x (out_h * out_w) matrix.
template <typename T>
void im2col(const T* sample, const ConvGeometry& g, std::int64_t c0, T* col) {
  const std::int64_t cin = g.in_per_group();
  for (std::int64_t c = 0; c < cin; ++c) {
    const T* plane = sample + (c0 + c) * g.in_h * g.in_w;
    for (std::int64_t ky = 0; ky < g.kernel_h; ++ky) {
      for (std::int64_t kx = 0; kx < g.kernel_w; ++kx) {
        T* row = col + ((c * g.kernel_h + ky) * g.kernel_w + kx) * g.out_pixels();
        for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
          const std::int64_t iy = oy * g.stride - g.pad + ky;
          T* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= g.in_h) {
            std::fill_n(dst, g.out_w, T(0));
            continue;
          }
          const T* src = plane + iy * g.in_w;
          if (g.stride == 1) {
            // Contiguous run; only the borders need zero fill.
            const std::int64_t shift = kx - g.pad;
            const std::int64_t lo = std::clamp<std::int64_t>(-shift, 0, g.out_w);
            const std::int64_t hi = std::clamp<std::int64_t>(g.in_w - shift, lo, g.out_w);
            std::fill_n(dst, lo, T(0));
            std::copy(src + lo + shift, src + hi + shift, dst + lo);
            std::fill(dst + hi, dst + g.out_w, T(0));
          } else {
            for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
              const std::int64_t ix = ox * g.stride - g.pad + kx;
              dst[ox] = (ix >= 0 && ix < g.in_w) ? src[ix] : T(0);
            }
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters-adds the column matrix back onto the sample.
template <typename T>
void col2im(const T* col, const ConvGeometry& g, std::int64_t c0, T* sample) {
  const std::int64_t cin = g.in_per_group();
  for (std::int64_t c = 0; c < cin; ++c) {
    T* plane = sample + (c0 + c) * g.in_h * g.in_w;
    for (std::int64_t ky = 0; ky < g.kernel_h; ++ky) {
      for (std::int64_t kx = 0; kx < g.kernel_w; ++kx) {
        const T* row = col + ((c * g.kernel_h + ky) * g.kernel_w + kx) * g.out_pixels();
        for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
          const std::int64_t iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          T* dst = plane + iy * g.in_w;
          const T* src = row + oy * g.out_w;
          for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
            const std::int64_t ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.in_w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

ConvGeometry conv_geometry(const Shape& x, const Shape& weight, std::int64_t stride, std::int64_t pad,
                           std::int64_t groups) {
  require(x.size() == 4, ErrorKind::kShapeMismatch, "conv2d input must be (B,C,H,W), got " + shape_str(x));
  require(weight.size() == 4, ErrorKind::kShapeMismatch, "conv2d weight must be 4-D, got " + shape_str(weight));
  require(stride > 0 && pad >= 0, ErrorKind::kInvalidArgument, "conv2d needs stride > 0 and pad >= 0");
  require(groups > 0, ErrorKind::kGroupDivisibility, "groups must be positive");
  ConvGeometry g;
  g.batch = x[0];
  g.in_channels = x[1];
  g.in_h = x[2];
  g.in_w = x[3];
  g.out_channels = weight[0];
  g.kernel_h = weight[2];
  g.kernel_w = weight[3];
  g.stride = stride;
  g.pad = pad;
  g.groups = groups;
  require(g.in_channels % groups == 0 && g.out_channels % groups == 0, ErrorKind::kGroupDivisibility,
          "channels " + std::to_string(g.in_channels) + "->" + std::to_string(g.out_channels) +
              " not divisible by groups " + std::to_string(groups));
  require(weight[1] == g.in_channels / groups, ErrorKind::kShapeMismatch,
          "weight " + shape_str(weight) + " does not match input " + shape_str(x) + " with groups " +
              std::to_string(groups));
  const std::int64_t span_h = g.in_h + 2 * pad - g.kernel_h;
  const std::int64_t span_w = g.in_w + 2 * pad - g.kernel_w;
  require(span_h >= 0 && span_w >= 0, ErrorKind::kShapeMismatch, "kernel larger than padded input");
  require(span_h % stride == 0 && span_w % stride == 0, ErrorKind::kShapeMismatch,
          "output extent not integral for input " + shape_str(x) + ", stride " + std::to_string(stride));
  g.out_h = span_h / stride + 1;
  g.out_w = span_w / stride + 1;
  return g;
}

template <typename T>
void gemm(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k, std::int64_t n, bool accumulate) {
  Eigen::Map<const RowMat<T>> ma(a, m, k);
  Eigen::Map<const RowMat<T>> mb(b, k, n);
  Eigen::Map<RowMat<T>> mc(c, m, n);
  if (accumulate) {
    mc.noalias() += ma * mb;
  } else {
    mc.noalias() = ma * mb;
  }
}

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& x, const BasicTensor<T>& weight, const std::type_identity_t<BasicTensor<T>>* bias,
                              std::int64_t stride, std::int64_t pad, std::int64_t groups) {
  const ConvGeometry g = conv_geometry(x.shape(), weight.shape(), stride, pad, groups);
  if (bias) {
    require(bias->shape() == Shape{g.out_channels}, ErrorKind::kShapeMismatch, "bias must be (C_out)");
  }
  BasicTensor<T> out({g.batch, g.out_channels, g.out_h, g.out_w});
  const std::int64_t m = g.out_per_group();
  const std::int64_t kd = g.patch_size();
  const std::int64_t n = g.out_pixels();
  const std::int64_t tasks = g.batch * g.groups;
  const bool pointwise = is_pointwise(g);
  const T* xp = x.ptr();
  const T* wp = weight.ptr();
  T* op = out.ptr();

#pragma omp parallel
  {
    std::vector<T> col(pointwise ? 0 : static_cast<std::size_t>(kd * n));
#pragma omp for schedule(static)
    for (std::int64_t t = 0; t < tasks; ++t) {
      const std::int64_t b = t / g.groups;
      const std::int64_t grp = t % g.groups;
      const T* sample = xp + b * g.in_channels * g.in_h * g.in_w;
      const T* cols = sample + grp * g.in_per_group() * g.in_h * g.in_w;
      if (!pointwise) {
        im2col(sample, g, grp * g.in_per_group(), col.data());
        cols = col.data();
      }
      T* dst = op + (b * g.out_channels + grp * m) * n;
      gemm(wp + grp * m * kd, cols, dst, m, kd, n, false);
      if (bias) {
        for (std::int64_t co = 0; co < m; ++co) {
          const T bv = (*bias)[grp * m + co];
          T* row = dst + co * n;
          for (std::int64_t p = 0; p < n; ++p) row[p] += bv;
        }
      }
    }
  }
  return out;
}

template <typename T>
Conv2dGrads<T> conv2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& weight, const BasicTensor<T>& grad_out,
                               std::int64_t stride, std::int64_t pad, std::int64_t groups, bool need_dx,
                               bool need_dweight, bool need_dbias) {
  const ConvGeometry g = conv_geometry(x.shape(), weight.shape(), stride, pad, groups);
  require(grad_out.shape() == Shape{g.batch, g.out_channels, g.out_h, g.out_w}, ErrorKind::kShapeMismatch,
          "conv2d grad_out shape " + shape_str(grad_out.shape()));
  Conv2dGrads<T> grads;
  const std::int64_t m = g.out_per_group();
  const std::int64_t kd = g.patch_size();
  const std::int64_t n = g.out_pixels();
  const std::int64_t tasks = g.batch * g.groups;
  const bool pointwise = is_pointwise(g);
  const std::int64_t w_numel = weight.numel();

  // At stride 1 the input gradient is itself a convolution of grad_out with
  // the spatially flipped, channel-transposed kernel and padding K - 1 - pad.
  // That keeps the GEMM inner dimension at C_out * K^2 instead of C_out.
  const bool dx_as_conv = need_dx && g.stride == 1 && !pointwise && g.pad <= g.kernel_h - 1 &&
                          g.pad <= g.kernel_w - 1 && g.kernel_h == g.kernel_w;
  if (dx_as_conv) {
    const std::int64_t cin_g = g.in_per_group();
    BasicTensor<T> flipped({g.in_channels, m, g.kernel_h, g.kernel_w});
    const T* wp = weight.ptr();
    for (std::int64_t grp = 0; grp < g.groups; ++grp)
      for (std::int64_t co = 0; co < m; ++co)
        for (std::int64_t ci = 0; ci < cin_g; ++ci)
          for (std::int64_t ky = 0; ky < g.kernel_h; ++ky)
            for (std::int64_t kx = 0; kx < g.kernel_w; ++kx)
              flipped.at(grp * cin_g + ci, co, g.kernel_h - 1 - ky, g.kernel_w - 1 - kx) =
                  wp[(((grp * m + co) * cin_g + ci) * g.kernel_h + ky) * g.kernel_w + kx];
    grads.dx = conv2d_forward(grad_out, flipped, nullptr, 1, g.kernel_h - 1 - g.pad, g.groups);
  }
  const bool dx_by_col2im = need_dx && !dx_as_conv;

  if (dx_by_col2im) grads.dx = BasicTensor<T>::zeros(x.shape());
  // One weight-gradient partial per sample, summed afterwards in sample order
  // so the result does not depend on thread scheduling.
  std::vector<T> dw_partial;
  if (need_dweight) dw_partial.assign(static_cast<std::size_t>(g.batch * w_numel), T(0));

  if (dx_by_col2im || need_dweight) {
    const T* xp = x.ptr();
    const T* wp = weight.ptr();
    const T* gp = grad_out.ptr();
    T* dxp = dx_by_col2im ? grads.dx.ptr() : nullptr;
#pragma omp parallel
    {
      std::vector<T> col(pointwise || !need_dweight ? 0 : static_cast<std::size_t>(kd * n));
      std::vector<T> dcol(pointwise || !dx_by_col2im ? 0 : static_cast<std::size_t>(kd * n));
#pragma omp for schedule(static)
      for (std::int64_t t = 0; t < tasks; ++t) {
        const std::int64_t b = t / g.groups;
        const std::int64_t grp = t % g.groups;
        const std::int64_t c0 = grp * g.in_per_group();
        const T* gout = gp + (b * g.out_channels + grp * m) * n;
        const T* wg = wp + grp * m * kd;
        Eigen::Map<const RowMat<T>> dout(gout, m, n);
        if (need_dweight) {
          const T* sample = xp + b * g.in_channels * g.in_h * g.in_w;
          const T* cols = sample + c0 * g.in_h * g.in_w;
          if (!pointwise) {
            im2col(sample, g, c0, col.data());
            cols = col.data();
          }
          Eigen::Map<const RowMat<T>> cm(cols, kd, n);
          Eigen::Map<RowMat<T>> dw(dw_partial.data() + b * w_numel + grp * m * kd, m, kd);
          dw.noalias() = dout * cm.transpose();
        }
        if (dx_by_col2im) {
          T* dsample = dxp + b * g.in_channels * g.in_h * g.in_w;
          Eigen::Map<const RowMat<T>> wm(wg, m, kd);
          if (pointwise) {
            Eigen::Map<RowMat<T>> dc(dsample + c0 * g.in_h * g.in_w, kd, n);
            dc.noalias() = wm.transpose() * dout;
          } else {
            Eigen::Map<RowMat<T>> dc(dcol.data(), kd, n);
            dc.noalias() = wm.transpose() * dout;
            col2im(dcol.data(), g, c0, dsample);
          }
        }
      }
    }
  }

  if (need_dweight) {
    grads.dweight = BasicTensor<T>::zeros(weight.shape());
    T* dwp = grads.dweight.ptr();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < w_numel; ++i) {
      T acc = 0;
      for (std::int64_t b = 0; b < g.batch; ++b) acc += dw_partial[static_cast<std::size_t>(b * w_numel + i)];
      dwp[i] = acc;
    }
  }

  if (need_dbias) {
    grads.dbias = BasicTensor<T>::zeros({g.out_channels});
    const T* gp = grad_out.ptr();
#pragma omp parallel for schedule(static)
    for (std::int64_t co = 0; co < g.out_channels; ++co) {
      double acc = 0.0;
      for (std::int64_t b = 0; b < g.batch; ++b) {
        const T* row = gp + (b * g.out_channels + co) * n;
        for (std::int64_t p = 0; p < n; ++p) acc += static_cast<double>(row[p]);
      }
      grads.dbias[co] = static_cast<T>(acc);
    }
  }
  return grads;
}

template <typename T>
BasicTensor<T> conv2d_naive(const BasicTensor<T>& x, const BasicTensor<T>& weight, const std::type_identity_t<BasicTensor<T>>* bias,
                            std::int64_t stride, std::int64_t pad, std::int64_t groups) {
  const ConvGeometry g = conv_geometry(x.shape(), weight.shape(), stride, pad, groups);
  if (bias) {
    require(bias->shape() == Shape{g.out_channels}, ErrorKind::kShapeMismatch, "bias must be (C_out)");
  }
  BasicTensor<T> out({g.batch, g.out_channels, g.out_h, g.out_w});
  const std::int64_t cin_g = g.in_per_group();
  const std::int64_t cout_g = g.out_per_group();
  for (std::int64_t b = 0; b < g.batch; ++b) {
    for (std::int64_t co = 0; co < g.out_channels; ++co) {
      const std::int64_t grp = co / cout_g;
      for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
        for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
          double acc = bias ? static_cast<double>((*bias)[co]) : 0.0;
          for (std::int64_t ci = 0; ci < cin_g; ++ci) {
            for (std::int64_t ky = 0; ky < g.kernel_h; ++ky) {
              const std::int64_t iy = oy * g.stride - g.pad + ky;
              if (iy < 0 || iy >= g.in_h) continue;
              for (std::int64_t kx = 0; kx < g.kernel_w; ++kx) {
                const std::int64_t ix = ox * g.stride - g.pad + kx;
                if (ix < 0 || ix >= g.in_w) continue;
                acc += static_cast<double>(x.at(b, grp * cin_g + ci, iy, ix)) *
                       static_cast<double>(weight.at(co, ci, ky, kx));
              }
            }
          }
          out.at(b, co, oy, ox) = static_cast<T>(acc);
        }
      }
    }
  }
  return out;
}

#define SRS_INSTANTIATE_KERNELS(T)                                                                              \
  template void gemm(const T*, const T*, T*, std::int64_t, std::int64_t, std::int64_t, bool);                  \
  template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>*,   \
                                         std::int64_t, std::int64_t, std::int64_t);                            \
  template Conv2dGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&,  \
                                          std::int64_t, std::int64_t, std::int64_t, bool, bool, bool);         \
  template BasicTensor<T> conv2d_naive(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>*,     \
                                       std::int64_t, std::int64_t, std::int64_t);

SRS_INSTANTIATE_KERNELS(float)
SRS_INSTANTIATE_KERNELS(double)

}  // namespace srs::kernels
