// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#include "srs/ops.hpp"

#include <algorithm>
#include <cmath>

#include "srs/kernels.hpp"

namespace srs::ops {

namespace {

template <typename T>
void check_same(const Var<T>& a, const Var<T>& b, const char* op) {
  require(a.shape() == b.shape(), ErrorKind::kShapeMismatch,
          std::string(op) + ": " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

template <typename T>
void check_4d(const Var<T>& x, const char* op) {
  require(x.value().rank() == 4, ErrorKind::kShapeMismatch,
          std::string(op) + " expects (B,C,H,W), got " + shape_str(x.shape()));
}

template <typename T>
void check_2d(const Var<T>& x, const char* op) {
  require(x.value().rank() == 2, ErrorKind::kShapeMismatch,
          std::string(op) + " expects a matrix, got " + shape_str(x.shape()));
}

// Source index and weight pairs for one axis of align_corners=false bilinear x2.
struct LerpTap {
  std::int64_t lo, hi;
  double w_hi;
};

std::vector<LerpTap> bilinear_taps(std::int64_t in_size) {
  std::vector<LerpTap> taps(static_cast<std::size_t>(2 * in_size));
  for (std::int64_t o = 0; o < 2 * in_size; ++o) {
    double src = (static_cast<double>(o) + 0.5) * 0.5 - 0.5;
    if (src < 0.0) src = 0.0;
    const auto lo = static_cast<std::int64_t>(std::floor(src));
    const std::int64_t hi = std::min(lo + 1, in_size - 1);
    taps[static_cast<std::size_t>(o)] = {lo, hi, src - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  check_same(a, b, "add");
  return make_result<T>(elementwise_binary(a.value(), b.value(), BinaryOp::kAdd), {a, b}, [](Node<T>& self) {
    self.parents[0]->accumulate(self.grad);
    self.parents[1]->accumulate(self.grad);
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  check_same(a, b, "sub");
  return make_result<T>(elementwise_binary(a.value(), b.value(), BinaryOp::kSub), {a, b}, [](Node<T>& self) {
    self.parents[0]->accumulate(self.grad);
    if (self.parents[1]->requires_grad) {
      BasicTensor<T> neg = self.grad;
      for (auto& v : neg.data()) v = -v;
      self.parents[1]->accumulate(neg);
    }
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  check_same(a, b, "mul");
  return make_result<T>(elementwise_binary(a.value(), b.value(), BinaryOp::kMul), {a, b}, [](Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) pa.accumulate(elementwise_binary(self.grad, pb.value, BinaryOp::kMul));
    if (pb.requires_grad) pb.accumulate(elementwise_binary(self.grad, pa.value, BinaryOp::kMul));
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T factor) {
  BasicTensor<T> out = a.value();
  for (auto& v : out.data()) v *= factor;
  return make_result<T>(std::move(out), {a}, [factor](Node<T>& self) {
    BasicTensor<T> g = self.grad;
    for (auto& v : g.data()) v *= factor;
    self.parents[0]->accumulate(g);
  });
}

template <typename T>
Var<T> sum(const Var<T>& a) {
  BasicTensor<T> out({1}, sum_all(a.value()));
  return make_result<T>(std::move(out), {a}, [](Node<T>& self) {
    self.parents[0]->accumulate(BasicTensor<T>::full(self.parents[0]->value.shape(), self.grad[0]));
  });
}

template <typename T>
Var<T> mean(const Var<T>& a) {
  const double n = static_cast<double>(a.numel());
  BasicTensor<T> out({1}, static_cast<T>(static_cast<double>(sum_all(a.value())) / n));
  return make_result<T>(std::move(out), {a}, [n](Node<T>& self) {
    self.parents[0]->accumulate(
        BasicTensor<T>::full(self.parents[0]->value.shape(), static_cast<T>(static_cast<double>(self.grad[0]) / n)));
  });
}

template <typename T>
Var<T> weighted_sum(const Var<T>& a, const BasicTensor<T>& weights) {
  require(a.shape() == weights.shape(), ErrorKind::kShapeMismatch, "weighted_sum weight shape");
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) acc += static_cast<double>(a.value()[i]) * static_cast<double>(weights[i]);
  return make_result<T>(BasicTensor<T>({1}, static_cast<T>(acc)), {a}, [weights](Node<T>& self) {
    BasicTensor<T> g = weights;
    for (auto& v : g.data()) v *= self.grad[0];
    self.parents[0]->accumulate(g);
  });
}

template <typename T>
Var<T> reshape(const Var<T>& a, Shape shape) {
  return make_result<T>(a.value().reshape(std::move(shape)), {a}, [](Node<T>& self) {
    self.parents[0]->accumulate(self.grad.reshape(self.parents[0]->value.shape()));
  });
}

template <typename T>
Var<T> relu(const Var<T>& a) {
  BasicTensor<T> out = a.value();
  for (auto& v : out.data()) v = v > T(0) ? v : T(0);
  return make_result<T>(std::move(out), {a}, [](Node<T>& self) {
    BasicTensor<T> g = self.grad;
    const T* y = self.value.ptr();
    T* gp = g.ptr();
    for (std::int64_t i = 0; i < g.numel(); ++i) {
      if (!(y[i] > T(0))) gp[i] = T(0);
    }
    self.parents[0]->accumulate(g);
  });
}

template <typename T>
Var<T> sigmoid(const Var<T>& a) {
  BasicTensor<T> out = a.value();
  for (auto& v : out.data()) v = T(1) / (T(1) + std::exp(-v));
  return make_result<T>(std::move(out), {a}, [](Node<T>& self) {
    BasicTensor<T> g = self.grad;
    const T* y = self.value.ptr();
    T* gp = g.ptr();
    for (std::int64_t i = 0; i < g.numel(); ++i) gp[i] *= y[i] * (T(1) - y[i]);
    self.parents[0]->accumulate(g);
  });
}

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, std::int64_t stride, std::int64_t pad,
              std::int64_t groups) {
  const bool has_bias = bias.defined();
  BasicTensor<T> out =
      kernels::conv2d_forward(x.value(), weight.value(), has_bias ? &bias.value() : nullptr, stride, pad, groups);
  std::vector<Var<T>> parents{x, weight};
  if (has_bias) parents.push_back(bias);
  return make_result<T>(std::move(out), std::move(parents), [stride, pad, groups, has_bias](Node<T>& self) {
    auto& px = *self.parents[0];
    auto& pw = *self.parents[1];
    const bool need_db = has_bias && self.parents[2]->requires_grad;
    auto grads = kernels::conv2d_backward(px.value, pw.value, self.grad, stride, pad, groups, px.requires_grad,
                                          pw.requires_grad, need_db);
    if (px.requires_grad) px.accumulate(grads.dx);
    if (pw.requires_grad) pw.accumulate(grads.dweight);
    if (need_db) self.parents[2]->accumulate(grads.dbias);
  });
}

template <typename T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, BasicTensor<T>& running_mean,
                  BasicTensor<T>& running_var, const BatchNormOptions& options) {
  check_4d(x, "batch_norm");
  const std::int64_t batch = x.dim(0), channels = x.dim(1), plane = x.dim(2) * x.dim(3);
  const Shape cshape{channels};
  require(gamma.shape() == cshape && beta.shape() == cshape && running_mean.shape() == cshape &&
              running_var.shape() == cshape,
          ErrorKind::kShapeMismatch, "batch_norm parameters must be (C)");
  const std::int64_t count = batch * plane;
  std::vector<double> mean(static_cast<std::size_t>(channels)), invstd(static_cast<std::size_t>(channels));
  const T* xp = x.value().ptr();

  if (options.training) {
    require(count > 1, ErrorKind::kInvalidArgument, "batch_norm in training mode needs more than one value per channel");
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < channels; ++c) {
      double s = 0.0;
      for (std::int64_t b = 0; b < batch; ++b) {
        const T* row = xp + (b * channels + c) * plane;
        for (std::int64_t p = 0; p < plane; ++p) s += static_cast<double>(row[p]);
      }
      const double mu = s / static_cast<double>(count);
      double ss = 0.0;
      for (std::int64_t b = 0; b < batch; ++b) {
        const T* row = xp + (b * channels + c) * plane;
        for (std::int64_t p = 0; p < plane; ++p) {
          const double d = static_cast<double>(row[p]) - mu;
          ss += d * d;
        }
      }
      const double var = ss / static_cast<double>(count);
      mean[static_cast<std::size_t>(c)] = mu;
      invstd[static_cast<std::size_t>(c)] = 1.0 / std::sqrt(var + options.eps);
      const double unbiased = ss / static_cast<double>(count - 1);
      running_mean[c] = static_cast<T>((1.0 - options.momentum) * running_mean[c] + options.momentum * mu);
      running_var[c] = static_cast<T>((1.0 - options.momentum) * running_var[c] + options.momentum * unbiased);
    }
  } else {
    for (std::int64_t c = 0; c < channels; ++c) {
      mean[static_cast<std::size_t>(c)] = static_cast<double>(running_mean[c]);
      invstd[static_cast<std::size_t>(c)] = 1.0 / std::sqrt(static_cast<double>(running_var[c]) + options.eps);
    }
  }

  BasicTensor<T> out(x.shape());
  T* op = out.ptr();
  const T* gp = gamma.value().ptr();
  const T* bp = beta.value().ptr();
#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t b = 0; b < batch; ++b) {
    for (std::int64_t c = 0; c < channels; ++c) {
      const auto ci = static_cast<std::size_t>(c);
      const T a = static_cast<T>(static_cast<double>(gp[c]) * invstd[ci]);
      const T shift = static_cast<T>(static_cast<double>(bp[c]) - static_cast<double>(a) * mean[ci]);
      const T* src = xp + (b * channels + c) * plane;
      T* dst = op + (b * channels + c) * plane;
      for (std::int64_t p = 0; p < plane; ++p) dst[p] = a * src[p] + shift;
    }
  }

  const bool training = options.training;
  return make_result<T>(
      std::move(out), {x, gamma, beta},
      [mean = std::move(mean), invstd = std::move(invstd), training, batch, channels, plane](Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        const T* xv = px.value.ptr();
        const T* gy = self.grad.ptr();
        const T* gam = pg.value.ptr();
        const auto count = static_cast<double>(batch * plane);
        std::vector<double> sum_dy(static_cast<std::size_t>(channels)), sum_dy_xhat(static_cast<std::size_t>(channels));
#pragma omp parallel for schedule(static)
        for (std::int64_t c = 0; c < channels; ++c) {
          const auto ci = static_cast<std::size_t>(c);
          double s1 = 0.0, s2 = 0.0;
          for (std::int64_t b = 0; b < batch; ++b) {
            const std::int64_t off = (b * channels + c) * plane;
            for (std::int64_t p = 0; p < plane; ++p) {
              const double dy = static_cast<double>(gy[off + p]);
              s1 += dy;
              s2 += dy * (static_cast<double>(xv[off + p]) - mean[ci]) * invstd[ci];
            }
          }
          sum_dy[ci] = s1;
          sum_dy_xhat[ci] = s2;
        }
        if (pg.requires_grad) {
          BasicTensor<T> dg({channels});
          for (std::int64_t c = 0; c < channels; ++c) dg[c] = static_cast<T>(sum_dy_xhat[static_cast<std::size_t>(c)]);
          pg.accumulate(dg);
        }
        if (pb.requires_grad) {
          BasicTensor<T> db({channels});
          for (std::int64_t c = 0; c < channels; ++c) db[c] = static_cast<T>(sum_dy[static_cast<std::size_t>(c)]);
          pb.accumulate(db);
        }
        if (px.requires_grad) {
          BasicTensor<T> dx(px.value.shape());
          T* dxp = dx.ptr();
#pragma omp parallel for collapse(2) schedule(static)
          for (std::int64_t b = 0; b < batch; ++b) {
            for (std::int64_t c = 0; c < channels; ++c) {
              const auto ci = static_cast<std::size_t>(c);
              const double k = static_cast<double>(gam[c]) * invstd[ci];
              const std::int64_t off = (b * channels + c) * plane;
              if (training) {
                const double m1 = sum_dy[ci] / count;
                const double m2 = sum_dy_xhat[ci] / count;
                for (std::int64_t p = 0; p < plane; ++p) {
                  const double xhat = (static_cast<double>(xv[off + p]) - mean[ci]) * invstd[ci];
                  dxp[off + p] = static_cast<T>(k * (static_cast<double>(gy[off + p]) - m1 - xhat * m2));
                }
              } else {
                for (std::int64_t p = 0; p < plane; ++p) dxp[off + p] = static_cast<T>(k * static_cast<double>(gy[off + p]));
              }
            }
          }
          px.accumulate(dx);
        }
      });
}

template <typename T>
Var<T> max_pool2x2(const Var<T>& x) {
  check_4d(x, "max_pool2x2");
  const std::int64_t batch = x.dim(0), channels = x.dim(1), h = x.dim(2), w = x.dim(3);
  require(h % 2 == 0 && w % 2 == 0, ErrorKind::kOddSpatialDim, "max_pool2x2 needs even H and W, got " + shape_str(x.shape()));
  const std::int64_t oh = h / 2, ow = w / 2;
  BasicTensor<T> out({batch, channels, oh, ow});
  std::vector<std::int32_t> argmax(static_cast<std::size_t>(out.numel()));
  const T* xp = x.value().ptr();
  T* op = out.ptr();
#pragma omp parallel for schedule(static)
  for (std::int64_t bc = 0; bc < batch * channels; ++bc) {
    const T* plane = xp + bc * h * w;
    for (std::int64_t oy = 0; oy < oh; ++oy) {
      for (std::int64_t ox = 0; ox < ow; ++ox) {
        std::int64_t best = (2 * oy) * w + 2 * ox;
        for (std::int64_t idx : {(2 * oy) * w + 2 * ox + 1, (2 * oy + 1) * w + 2 * ox, (2 * oy + 1) * w + 2 * ox + 1}) {
          if (plane[idx] > plane[best]) best = idx;
        }
        const std::int64_t o = (bc * oh + oy) * ow + ox;
        op[o] = plane[best];
        argmax[static_cast<std::size_t>(o)] = static_cast<std::int32_t>(best);
      }
    }
  }
  return make_result<T>(std::move(out), {x}, [argmax = std::move(argmax), h, w, oh, ow](Node<T>& self) {
    BasicTensor<T> dx = BasicTensor<T>::zeros(self.parents[0]->value.shape());
    const std::int64_t planes = self.value.numel() / (oh * ow);
    const T* g = self.grad.ptr();
    T* d = dx.ptr();
    for (std::int64_t bc = 0; bc < planes; ++bc) {
      for (std::int64_t i = 0; i < oh * ow; ++i) {
        const std::int64_t o = bc * oh * ow + i;
        d[bc * h * w + argmax[static_cast<std::size_t>(o)]] += g[o];
      }
    }
    self.parents[0]->accumulate(dx);
  });
}

template <typename T>
Var<T> upsample_bilinear2x(const Var<T>& x) {
  check_4d(x, "upsample_bilinear2x");
  const std::int64_t batch = x.dim(0), channels = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::int64_t oh = 2 * h, ow = 2 * w;
  auto ty = bilinear_taps(h);
  auto tx = bilinear_taps(w);
  BasicTensor<T> out({batch, channels, oh, ow});
  const T* xp = x.value().ptr();
  T* op = out.ptr();
#pragma omp parallel for schedule(static)
  for (std::int64_t bc = 0; bc < batch * channels; ++bc) {
    const T* plane = xp + bc * h * w;
    T* dst = op + bc * oh * ow;
    for (std::int64_t oy = 0; oy < oh; ++oy) {
      const auto& a = ty[static_cast<std::size_t>(oy)];
      const T wy = static_cast<T>(a.w_hi);
      for (std::int64_t ox = 0; ox < ow; ++ox) {
        const auto& b = tx[static_cast<std::size_t>(ox)];
        const T wx = static_cast<T>(b.w_hi);
        const T top = plane[a.lo * w + b.lo] + wx * (plane[a.lo * w + b.hi] - plane[a.lo * w + b.lo]);
        const T bot = plane[a.hi * w + b.lo] + wx * (plane[a.hi * w + b.hi] - plane[a.hi * w + b.lo]);
        dst[oy * ow + ox] = top + wy * (bot - top);
      }
    }
  }
  return make_result<T>(std::move(out), {x}, [ty = std::move(ty), tx = std::move(tx), h, w, oh, ow](Node<T>& self) {
    BasicTensor<T> dx = BasicTensor<T>::zeros(self.parents[0]->value.shape());
    const std::int64_t planes = self.value.numel() / (oh * ow);
    const T* g = self.grad.ptr();
    T* d = dx.ptr();
#pragma omp parallel for schedule(static)
    for (std::int64_t bc = 0; bc < planes; ++bc) {
      const T* gp = g + bc * oh * ow;
      T* dp = d + bc * h * w;
      for (std::int64_t oy = 0; oy < oh; ++oy) {
        const auto& a = ty[static_cast<std::size_t>(oy)];
        const T wy = static_cast<T>(a.w_hi);
        for (std::int64_t ox = 0; ox < ow; ++ox) {
          const auto& b = tx[static_cast<std::size_t>(ox)];
          const T wx = static_cast<T>(b.w_hi);
          const T gv = gp[oy * ow + ox];
          dp[a.lo * w + b.lo] += gv * (T(1) - wy) * (T(1) - wx);
          dp[a.lo * w + b.hi] += gv * (T(1) - wy) * wx;
          dp[a.hi * w + b.lo] += gv * wy * (T(1) - wx);
          dp[a.hi * w + b.hi] += gv * wy * wx;
        }
      }
    }
    self.parents[0]->accumulate(dx);
  });
}

template <typename T>
Var<T> adaptive_avg_pool1(const Var<T>& x) {
  check_4d(x, "adaptive_avg_pool1");
  const std::int64_t batch = x.dim(0), channels = x.dim(1), plane = x.dim(2) * x.dim(3);
  BasicTensor<T> out({batch, channels, 1, 1});
  const T* xp = x.value().ptr();
  for (std::int64_t bc = 0; bc < batch * channels; ++bc) {
    double s = 0.0;
    for (std::int64_t p = 0; p < plane; ++p) s += static_cast<double>(xp[bc * plane + p]);
    out[bc] = static_cast<T>(s / static_cast<double>(plane));
  }
  return make_result<T>(std::move(out), {x}, [plane](Node<T>& self) {
    BasicTensor<T> dx(self.parents[0]->value.shape());
    T* d = dx.ptr();
    for (std::int64_t bc = 0; bc < self.value.numel(); ++bc) {
      const T v = static_cast<T>(static_cast<double>(self.grad[bc]) / static_cast<double>(plane));
      std::fill_n(d + bc * plane, plane, v);
    }
    self.parents[0]->accumulate(dx);
  });
}

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
  require(!parts.empty(), ErrorKind::kInvalidArgument, "concat_channels of nothing");
  for (const auto& p : parts) check_4d(p, "concat_channels");
  const Shape& s0 = parts.front().shape();
  std::int64_t total = 0;
  std::vector<std::int64_t> widths;
  for (const auto& p : parts) {
    require(p.dim(0) == s0[0] && p.dim(2) == s0[2] && p.dim(3) == s0[3], ErrorKind::kShapeMismatch,
            "concat_channels: " + shape_str(p.shape()) + " vs " + shape_str(s0));
    widths.push_back(p.dim(1));
    total += p.dim(1);
  }
  const std::int64_t batch = s0[0], plane = s0[2] * s0[3];
  BasicTensor<T> out({batch, total, s0[2], s0[3]});
  for (std::int64_t b = 0; b < batch; ++b) {
    std::int64_t c0 = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const std::int64_t n = widths[i] * plane;
      std::copy_n(parts[i].value().ptr() + b * n, n, out.ptr() + (b * total + c0) * plane);
      c0 += widths[i];
    }
  }
  return make_result<T>(std::move(out), parts, [widths = std::move(widths), batch, total, plane](Node<T>& self) {
    std::int64_t c0 = 0;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      auto& p = *self.parents[i];
      if (p.requires_grad) {
        BasicTensor<T> g(p.value.shape());
        const std::int64_t n = widths[i] * plane;
        for (std::int64_t b = 0; b < batch; ++b) std::copy_n(self.grad.ptr() + (b * total + c0) * plane, n, g.ptr() + b * n);
        p.accumulate(g);
      }
      c0 += widths[i];
    }
  });
}

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  check_2d(a, "matmul");
  check_2d(b, "matmul");
  const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  require(b.dim(0) == k, ErrorKind::kShapeMismatch, "matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  BasicTensor<T> out({m, n});
  kernels::gemm(a.value().ptr(), b.value().ptr(), out.ptr(), m, k, n, false);
  return make_result<T>(std::move(out), {a, b}, [m, k, n](Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      // dA = dC * B^T
      BasicTensor<T> bt({n, k});
      for (std::int64_t i = 0; i < k; ++i)
        for (std::int64_t j = 0; j < n; ++j) bt[j * k + i] = pb.value[i * n + j];
      BasicTensor<T> da({m, k});
      kernels::gemm(self.grad.ptr(), bt.ptr(), da.ptr(), m, n, k, false);
      pa.accumulate(da);
    }
    if (pb.requires_grad) {
      // dB = A^T * dC
      BasicTensor<T> at({k, m});
      for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < k; ++j) at[j * m + i] = pa.value[i * k + j];
      BasicTensor<T> db({k, n});
      kernels::gemm(at.ptr(), self.grad.ptr(), db.ptr(), k, m, n, false);
      pb.accumulate(db);
    }
  });
}

template <typename T>
Var<T> add_row_bias(const Var<T>& x, const Var<T>& bias) {
  check_2d(x, "add_row_bias");
  const std::int64_t m = x.dim(0), n = x.dim(1);
  require(bias.shape() == Shape{n}, ErrorKind::kShapeMismatch, "add_row_bias: bias must be (n)");
  BasicTensor<T> out = x.value();
  for (std::int64_t i = 0; i < m; ++i)
    for (std::int64_t j = 0; j < n; ++j) out[i * n + j] += bias.value()[j];
  return make_result<T>(std::move(out), {x, bias}, [m, n](Node<T>& self) {
    self.parents[0]->accumulate(self.grad);
    if (self.parents[1]->requires_grad) {
      BasicTensor<T> db({n});
      for (std::int64_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::int64_t i = 0; i < m; ++i) s += static_cast<double>(self.grad[i * n + j]);
        db[j] = static_cast<T>(s);
      }
      self.parents[1]->accumulate(db);
    }
  });
}

template <typename T>
Var<T> softmax_rows(const Var<T>& x) {
  check_2d(x, "softmax_rows");
  const std::int64_t m = x.dim(0), n = x.dim(1);
  BasicTensor<T> out(x.shape());
  for (std::int64_t i = 0; i < m; ++i) {
    const T* row = x.value().ptr() + i * n;
    const T mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::int64_t j = 0; j < n; ++j) z += std::exp(static_cast<double>(row[j] - mx));
    for (std::int64_t j = 0; j < n; ++j) out[i * n + j] = static_cast<T>(std::exp(static_cast<double>(row[j] - mx)) / z);
  }
  return make_result<T>(std::move(out), {x}, [m, n](Node<T>& self) {
    BasicTensor<T> dx(self.value.shape());
    for (std::int64_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::int64_t j = 0; j < n; ++j)
        dot += static_cast<double>(self.grad[i * n + j]) * static_cast<double>(self.value[i * n + j]);
      for (std::int64_t j = 0; j < n; ++j)
        dx[i * n + j] = static_cast<T>(static_cast<double>(self.value[i * n + j]) * (static_cast<double>(self.grad[i * n + j]) - dot));
    }
    self.parents[0]->accumulate(dx);
  });
}

#define SRS_INSTANTIATE_OPS(T)                                                                                   \
  template Var<T> add(const Var<T>&, const Var<T>&);                                                            \
  template Var<T> sub(const Var<T>&, const Var<T>&);                                                            \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                                            \
  template Var<T> scale(const Var<T>&, T);                                                                      \
  template Var<T> sum(const Var<T>&);                                                                           \
  template Var<T> mean(const Var<T>&);                                                                          \
  template Var<T> weighted_sum(const Var<T>&, const BasicTensor<T>&);                                           \
  template Var<T> reshape(const Var<T>&, Shape);                                                                \
  template Var<T> relu(const Var<T>&);                                                                          \
  template Var<T> sigmoid(const Var<T>&);                                                                       \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>&, std::int64_t, std::int64_t, std::int64_t); \
  template Var<T> batch_norm(const Var<T>&, const Var<T>&, const Var<T>&, BasicTensor<T>&, BasicTensor<T>&,     \
                             const BatchNormOptions&);                                                          \
  template Var<T> max_pool2x2(const Var<T>&);                                                                   \
  template Var<T> upsample_bilinear2x(const Var<T>&);                                                           \
  template Var<T> adaptive_avg_pool1(const Var<T>&);                                                            \
  template Var<T> concat_channels(const std::vector<Var<T>>&);                                                  \
  template Var<T> matmul(const Var<T>&, const Var<T>&);                                                         \
  template Var<T> add_row_bias(const Var<T>&, const Var<T>&);                                                   \
  template Var<T> softmax_rows(const Var<T>&);

SRS_INSTANTIATE_OPS(float)
SRS_INSTANTIATE_OPS(double)

}  // namespace srs::ops
