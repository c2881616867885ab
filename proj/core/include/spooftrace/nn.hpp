#pragma once

#define EIGEN_DONT_PARALLELIZE 1
#include <Eigen/Core>

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "spooftrace/autodiff.hpp"
#include "spooftrace/warp3d.hpp"

namespace spooftrace {

template <typename S>
using MatrixMap = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename S>
using ConstMatrixMap =
    Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

namespace detail {

inline int conv_out_size(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

/// NHWC im2col: row per output position, columns ordered (ky, kx, ci).
template <typename S>
void im2col(const S* img, int h, int w, int c, int k, int stride, int pad, int oh, int ow,
            S* col) {
  const int row_len = k * k * c;
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      S* row = col + (static_cast<std::int64_t>(oy) * ow + ox) * row_len;
      const int iy0 = oy * stride - pad;
      const int ix0 = ox * stride - pad;
      for (int ky = 0; ky < k; ++ky) {
        const int iy = iy0 + ky;
        S* dst = row + static_cast<std::int64_t>(ky) * k * c;
        if (iy < 0 || iy >= h) {
          std::fill(dst, dst + static_cast<std::int64_t>(k) * c, S(0));
          continue;
        }
        const S* src_row = img + (static_cast<std::int64_t>(iy) * w) * c;
        for (int kx = 0; kx < k; ++kx) {
          const int ix = ix0 + kx;
          if (ix < 0 || ix >= w)
            std::fill(dst + kx * c, dst + (kx + 1) * c, S(0));
          else
            std::copy(src_row + ix * c, src_row + (ix + 1) * c, dst + kx * c);
        }
      }
    }
}

/// Adjoint of im2col: scatter-adds column rows back into image layout.
template <typename S>
void col2im(const S* col, int h, int w, int c, int k, int stride, int pad, int oh, int ow,
            S* img) {
  const int row_len = k * k * c;
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      const S* row = col + (static_cast<std::int64_t>(oy) * ow + ox) * row_len;
      const int iy0 = oy * stride - pad;
      const int ix0 = ox * stride - pad;
      for (int ky = 0; ky < k; ++ky) {
        const int iy = iy0 + ky;
        if (iy < 0 || iy >= h) continue;
        S* dst_row = img + (static_cast<std::int64_t>(iy) * w) * c;
        for (int kx = 0; kx < k; ++kx) {
          const int ix = ix0 + kx;
          if (ix < 0 || ix >= w) continue;
          const S* src = row + (static_cast<std::int64_t>(ky) * k + kx) * c;
          S* dst = dst_row + ix * c;
          for (int i = 0; i < c; ++i) dst[i] += src[i];
        }
      }
    }
}

template <typename S>
std::vector<S>& scratch() {
  thread_local std::vector<S> buf;
  return buf;
}

}  // namespace detail

/// 2D convolution, NHWC activations, weights [K,K,Cin,Cout].
template <typename S>
Var<S> conv2d(const Var<S>& x, const Var<S>& w, const Var<S>& b, int stride, int pad) {
  const Shape4 s = as4(x.val());
  const int k = w.val().dim(0), ci = w.val().dim(2), co = w.val().dim(3);
  if (w.val().dim(1) != k || ci != s.c) throw std::invalid_argument("conv2d: weight shape mismatch");
  const int oh = detail::conv_out_size(s.h, k, stride, pad);
  const int ow = detail::conv_out_size(s.w, k, stride, pad);
  const int row_len = k * k * ci;
  const std::int64_t rows = static_cast<std::int64_t>(oh) * ow;

  Tensor<S> y({s.b, oh, ow, co});
  ConstMatrixMap<S> wm(w.val().data(), row_len, co);
#pragma omp parallel for schedule(static)
  for (int bi = 0; bi < s.b; ++bi) {
    auto& buf = detail::scratch<S>();
    buf.resize(static_cast<size_t>(rows) * row_len);
    detail::im2col(x.val().data() + bi * s.plane(), s.h, s.w, s.c, k, stride, pad, oh, ow,
                   buf.data());
    ConstMatrixMap<S> cm(buf.data(), rows, row_len);
    MatrixMap<S> ym(y.data() + static_cast<std::int64_t>(bi) * rows * co, rows, co);
    ym.noalias() = cm * wm;
  }
  if (b.defined()) {
    const std::int64_t total = y.size() / co;
    for (std::int64_t i = 0; i < total; ++i)
      for (int c = 0; c < co; ++c) y[i * co + c] += b.val()[c];
  }

  std::vector<Var<S>> parents = b.defined() ? std::vector<Var<S>>{x, w, b} : std::vector<Var<S>>{x, w};
  return make_op<S>(std::move(y), std::move(parents), [x, w, b, stride, pad](Node<S>& n) {
    const Shape4 s = as4(x.val());
    const int k = w.val().dim(0), ci = w.val().dim(2), co = w.val().dim(3);
    const Shape4 so = as4(n.value);
    const int oh = so.h, ow = so.w;
    const int row_len = k * k * ci;
    const std::int64_t rows = static_cast<std::int64_t>(oh) * ow;

    if (b.defined() && b.requires_grad()) {
      Tensor<S>& db = b.grad();
      const std::int64_t total = n.grad.size() / co;
      for (std::int64_t i = 0; i < total; ++i)
        for (int c = 0; c < co; ++c) db[c] += n.grad[i * co + c];
    }

    const bool need_dx = x.requires_grad();
    const bool need_dw = w.requires_grad();
    Tensor<S> dw_per_image;
    if (need_dw) dw_per_image = Tensor<S>({s.b, row_len, co});
    if (need_dx) x.grad();  // allocate before the parallel region

    ConstMatrixMap<S> wm(w.val().data(), row_len, co);
#pragma omp parallel for schedule(static)
    for (int bi = 0; bi < s.b; ++bi) {
      auto& buf = detail::scratch<S>();
      const size_t col_sz = static_cast<size_t>(rows) * row_len;
      buf.resize(col_sz * 2);
      S* cols = buf.data();
      S* dcols = buf.data() + col_sz;
      ConstMatrixMap<S> gm(n.grad.data() + static_cast<std::int64_t>(bi) * rows * co, rows, co);
      if (need_dw) {
        detail::im2col(x.val().data() + bi * s.plane(), s.h, s.w, s.c, k, stride, pad, oh, ow,
                       cols);
        ConstMatrixMap<S> cm(cols, rows, row_len);
        MatrixMap<S> dwm(dw_per_image.data() + static_cast<std::int64_t>(bi) * row_len * co,
                         row_len, co);
        dwm.noalias() = cm.transpose() * gm;
      }
      if (need_dx) {
        MatrixMap<S> dcm(dcols, rows, row_len);
        dcm.noalias() = gm * wm.transpose();
        detail::col2im(dcols, s.h, s.w, s.c, k, stride, pad, oh, ow,
                       x.grad().data() + bi * s.plane());
      }
    }
    if (need_dw) {
      Tensor<S>& dw = w.grad();
      const std::int64_t per = static_cast<std::int64_t>(row_len) * co;
      for (int bi = 0; bi < s.b; ++bi)
        for (std::int64_t i = 0; i < per; ++i) dw[i] += dw_per_image[bi * per + i];
    }
  });
}

/// Transposed convolution (stride-s upsampling), weights [K,K,Cout,Cin];
/// implemented as the adjoint of a stride-s convolution.
template <typename S>
Var<S> conv2d_transpose(const Var<S>& x, const Var<S>& w, const Var<S>& b, int stride, int pad) {
  const Shape4 s = as4(x.val());
  const int k = w.val().dim(0), co = w.val().dim(2), ci = w.val().dim(3);
  if (w.val().dim(1) != k || ci != s.c)
    throw std::invalid_argument("conv2d_transpose: weight shape mismatch");
  const int oh = s.h * stride, ow = s.w * stride;
  if (detail::conv_out_size(oh, k, stride, pad) != s.h ||
      detail::conv_out_size(ow, k, stride, pad) != s.w)
    throw std::invalid_argument("conv2d_transpose: incompatible geometry");
  const int row_len = k * k * co;
  const std::int64_t rows = static_cast<std::int64_t>(s.h) * s.w;

  Tensor<S> y({s.b, oh, ow, co});
  ConstMatrixMap<S> wm(w.val().data(), row_len, ci);
#pragma omp parallel for schedule(static)
  for (int bi = 0; bi < s.b; ++bi) {
    auto& buf = detail::scratch<S>();
    buf.resize(static_cast<size_t>(rows) * row_len);
    ConstMatrixMap<S> xm(x.val().data() + bi * s.plane(), rows, ci);
    MatrixMap<S> cm(buf.data(), rows, row_len);
    cm.noalias() = xm * wm.transpose();
    detail::col2im(buf.data(), oh, ow, co, k, stride, pad, s.h, s.w,
                   y.data() + static_cast<std::int64_t>(bi) * oh * ow * co);
  }
  if (b.defined()) {
    const std::int64_t total = y.size() / co;
    for (std::int64_t i = 0; i < total; ++i)
      for (int c = 0; c < co; ++c) y[i * co + c] += b.val()[c];
  }

  std::vector<Var<S>> parents = b.defined() ? std::vector<Var<S>>{x, w, b} : std::vector<Var<S>>{x, w};
  return make_op<S>(std::move(y), std::move(parents), [x, w, b, stride, pad](Node<S>& n) {
    const Shape4 s = as4(x.val());
    const int k = w.val().dim(0), co = w.val().dim(2), ci = w.val().dim(3);
    const Shape4 so = as4(n.value);
    const int row_len = k * k * co;
    const std::int64_t rows = static_cast<std::int64_t>(s.h) * s.w;

    if (b.defined() && b.requires_grad()) {
      Tensor<S>& db = b.grad();
      const std::int64_t total = n.grad.size() / co;
      for (std::int64_t i = 0; i < total; ++i)
        for (int c = 0; c < co; ++c) db[c] += n.grad[i * co + c];
    }

    const bool need_dx = x.requires_grad();
    const bool need_dw = w.requires_grad();
    Tensor<S> dw_per_image;
    if (need_dw) dw_per_image = Tensor<S>({s.b, row_len, ci});
    if (need_dx) x.grad();

    ConstMatrixMap<S> wm(w.val().data(), row_len, ci);
#pragma omp parallel for schedule(static)
    for (int bi = 0; bi < s.b; ++bi) {
      auto& buf = detail::scratch<S>();
      buf.resize(static_cast<size_t>(rows) * row_len);
      detail::im2col(n.grad.data() + static_cast<std::int64_t>(bi) * so.plane(), so.h, so.w, co,
                     k, stride, pad, s.h, s.w, buf.data());
      ConstMatrixMap<S> gcols(buf.data(), rows, row_len);
      if (need_dx) {
        MatrixMap<S> dxm(x.grad().data() + bi * s.plane(), rows, ci);
        dxm.noalias() += gcols * wm;
      }
      if (need_dw) {
        ConstMatrixMap<S> xm(x.val().data() + bi * s.plane(), rows, ci);
        MatrixMap<S> dwm(dw_per_image.data() + static_cast<std::int64_t>(bi) * row_len * ci,
                         row_len, ci);
        dwm.noalias() = gcols.transpose() * xm;
      }
    }
    if (need_dw) {
      Tensor<S>& dw = w.grad();
      const std::int64_t per = static_cast<std::int64_t>(row_len) * ci;
      for (int bi = 0; bi < s.b; ++bi)
        for (std::int64_t i = 0; i < per; ++i) dw[i] += dw_per_image[bi * per + i];
    }
  });
}

/// Batch normalization over (B,H,W) per channel. In training mode the batch
/// statistics normalize and the running buffers are updated in place; in
/// inference mode the running statistics are used and treated as constants.
template <typename S>
Var<S> batch_norm(const Var<S>& x, const Var<S>& gamma, const Var<S>& beta,
                  Tensor<S>* running_mean, Tensor<S>* running_var, bool training,
                  S momentum = S(0.9), S eps = S(1e-5)) {
  const Shape4 s = as4(x.val());
  const int c = s.c;
  const std::int64_t n = x.val().size() / c;

  auto mean = std::make_shared<std::vector<S>>(c, S(0));
  auto inv_std = std::make_shared<std::vector<S>>(c, S(0));
  if (training) {
    std::vector<double> mu(c, 0.0), var(c, 0.0);
    for (std::int64_t i = 0; i < n; ++i)
      for (int k = 0; k < c; ++k) mu[k] += x.val()[i * c + k];
    for (int k = 0; k < c; ++k) mu[k] /= static_cast<double>(n);
    for (std::int64_t i = 0; i < n; ++i)
      for (int k = 0; k < c; ++k) {
        const double d = x.val()[i * c + k] - mu[k];
        var[k] += d * d;
      }
    for (int k = 0; k < c; ++k) {
      var[k] /= static_cast<double>(n);
      (*mean)[k] = static_cast<S>(mu[k]);
      (*inv_std)[k] = static_cast<S>(1.0 / std::sqrt(var[k] + static_cast<double>(eps)));
      if (running_mean)
        (*running_mean)[k] = momentum * (*running_mean)[k] + (S(1) - momentum) * static_cast<S>(mu[k]);
      if (running_var)
        (*running_var)[k] = momentum * (*running_var)[k] + (S(1) - momentum) * static_cast<S>(var[k]);
    }
  } else {
    for (int k = 0; k < c; ++k) {
      (*mean)[k] = (*running_mean)[k];
      (*inv_std)[k] = S(1) / std::sqrt((*running_var)[k] + eps);
    }
  }

  Tensor<S> y(x.val().dims());
  for (std::int64_t i = 0; i < n; ++i)
    for (int k = 0; k < c; ++k)
      y[i * c + k] =
          gamma.val()[k] * ((x.val()[i * c + k] - (*mean)[k]) * (*inv_std)[k]) + beta.val()[k];

  return make_op<S>(std::move(y), {x, gamma, beta},
                    [x, gamma, beta, mean, inv_std, training](Node<S>& n_) {
    const int c = as4(x.val()).c;
    const std::int64_t n = x.val().size() / c;
    std::vector<double> dg(c, 0.0), db(c, 0.0), dxhat_mean(c, 0.0), dxhat_xhat_mean(c, 0.0);
    for (std::int64_t i = 0; i < n; ++i)
      for (int k = 0; k < c; ++k) {
        const S g = n_.grad[i * c + k];
        const S xhat = (x.val()[i * c + k] - (*mean)[k]) * (*inv_std)[k];
        dg[k] += g * xhat;
        db[k] += g;
      }
    if (gamma.requires_grad()) {
      Tensor<S>& gg = gamma.grad();
      for (int k = 0; k < c; ++k) gg[k] += static_cast<S>(dg[k]);
    }
    if (beta.requires_grad()) {
      Tensor<S>& gb = beta.grad();
      for (int k = 0; k < c; ++k) gb[k] += static_cast<S>(db[k]);
    }
    if (!x.requires_grad()) return;
    Tensor<S>& dx = x.grad();
    if (training) {
      for (int k = 0; k < c; ++k) {
        dxhat_mean[k] = db[k] / static_cast<double>(n);
        dxhat_xhat_mean[k] = dg[k] / static_cast<double>(n);
      }
      for (std::int64_t i = 0; i < n; ++i)
        for (int k = 0; k < c; ++k) {
          const S xhat = (x.val()[i * c + k] - (*mean)[k]) * (*inv_std)[k];
          const double dxhat = static_cast<double>(n_.grad[i * c + k]) * gamma.val()[k];
          dx[i * c + k] += static_cast<S>(
              (*inv_std)[k] * (dxhat - dxhat_mean[k] * gamma.val()[k] -
                               static_cast<double>(xhat) * dxhat_xhat_mean[k] * gamma.val()[k]));
        }
    } else {
      for (std::int64_t i = 0; i < n; ++i)
        for (int k = 0; k < c; ++k)
          dx[i * c + k] += n_.grad[i * c + k] * gamma.val()[k] * (*inv_std)[k];
    }
  });
}

template <typename S>
Var<S> leaky_relu(const Var<S>& x, std::type_identity_t<S> slope = S(0.2)) {
  Tensor<S> y = map(x.val(), [slope](S v) { return v > S(0) ? v : slope * v; });
  return make_op<S>(std::move(y), {x}, [x, slope](Node<S>& n) {
    if (!x.requires_grad()) return;
    Tensor<S>& dx = x.grad();
    for (std::int64_t i = 0; i < n.grad.size(); ++i)
      dx[i] += n.grad[i] * (x.val()[i] > S(0) ? S(1) : slope);
  });
}

template <typename S>
Var<S> sigmoid(const Var<S>& x) {
  Tensor<S> y = map(x.val(), [](S v) { return S(1) / (S(1) + std::exp(-v)); });
  return make_op<S>(std::move(y), {x}, [x](Node<S>& n) {
    if (!x.requires_grad()) return;
    Tensor<S>& dx = x.grad();
    for (std::int64_t i = 0; i < n.grad.size(); ++i) {
      const S s = n.value[i];
      dx[i] += n.grad[i] * s * (S(1) - s);
    }
  });
}

template <typename S>
Var<S> tanh_(const Var<S>& x) {
  Tensor<S> y = map(x.val(), [](S v) { return std::tanh(v); });
  return make_op<S>(std::move(y), {x}, [x](Node<S>& n) {
    if (!x.requires_grad()) return;
    Tensor<S>& dx = x.grad();
    for (std::int64_t i = 0; i < n.grad.size(); ++i) {
      const S t = n.value[i];
      dx[i] += n.grad[i] * (S(1) - t * t);
    }
  });
}

/// Differentiable warp: gradients flow into both the image and the offsets.
template <typename S>
Var<S> warp(const Var<S>& img, const Var<S>& offset) {
  return make_op<S>(warp(img.val(), offset.val()), {img, offset}, [img, offset](Node<S>& n) {
    Tensor<S>* gi = img.requires_grad() ? &img.grad() : nullptr;
    Tensor<S>* go = offset.requires_grad() ? &offset.grad() : nullptr;
    warp_backward(img.val(), offset.val(), n.grad, gi, go);
  });
}

/// Mean over spatial dims: [B,H,W,C] -> [B,C].
template <typename S>
Var<S> global_avg_pool(const Var<S>& x) {
  const Shape4 s = as4(x.val());
  Tensor<S> y({s.b, s.c});
  const std::int64_t hw = static_cast<std::int64_t>(s.h) * s.w;
  for (int b = 0; b < s.b; ++b)
    for (std::int64_t i = 0; i < hw; ++i)
      for (int c = 0; c < s.c; ++c) y[b * s.c + c] += x.val()[(b * hw + i) * s.c + c];
  for (std::int64_t i = 0; i < y.size(); ++i) y[i] /= static_cast<S>(hw);
  return make_op<S>(std::move(y), {x}, [x](Node<S>& n) {
    if (!x.requires_grad()) return;
    const Shape4 s = as4(x.val());
    const std::int64_t hw = static_cast<std::int64_t>(s.h) * s.w;
    const S inv = S(1) / static_cast<S>(hw);
    Tensor<S>& dx = x.grad();
    for (int b = 0; b < s.b; ++b)
      for (std::int64_t i = 0; i < hw; ++i)
        for (int c = 0; c < s.c; ++c)
          dx[(b * hw + i) * s.c + c] += n.grad[b * s.c + c] * inv;
  });
}

/// Fully connected layer on [B,Cin] inputs; weights [Cin,Cout].
template <typename S>
Var<S> dense(const Var<S>& x, const Var<S>& w, const Var<S>& b) {
  const int bsz = x.val().dim(0), ci = x.val().dim(1);
  const int co = w.val().dim(1);
  if (w.val().dim(0) != ci) throw std::invalid_argument("dense: weight shape mismatch");
  Tensor<S> y({bsz, co});
  ConstMatrixMap<S> xm(x.val().data(), bsz, ci);
  ConstMatrixMap<S> wm(w.val().data(), ci, co);
  MatrixMap<S> ym(y.data(), bsz, co);
  ym.noalias() = xm * wm;
  if (b.defined())
    for (int i = 0; i < bsz; ++i)
      for (int c = 0; c < co; ++c) y[i * co + c] += b.val()[c];
  std::vector<Var<S>> parents = b.defined() ? std::vector<Var<S>>{x, w, b} : std::vector<Var<S>>{x, w};
  return make_op<S>(std::move(y), std::move(parents), [x, w, b](Node<S>& n) {
    const int bsz = x.val().dim(0), ci = x.val().dim(1), co = w.val().dim(1);
    ConstMatrixMap<S> gm(n.grad.data(), bsz, co);
    if (x.requires_grad()) {
      MatrixMap<S> dxm(x.grad().data(), bsz, ci);
      ConstMatrixMap<S> wm(w.val().data(), ci, co);
      dxm.noalias() += gm * wm.transpose();
    }
    if (w.requires_grad()) {
      MatrixMap<S> dwm(w.grad().data(), ci, co);
      ConstMatrixMap<S> xm(x.val().data(), bsz, ci);
      dwm.noalias() += xm.transpose() * gm;
    }
    if (b.defined() && b.requires_grad()) {
      Tensor<S>& db = b.grad();
      for (int i = 0; i < bsz; ++i)
        for (int c = 0; c < co; ++c) db[c] += n.grad[i * co + c];
    }
  });
}

/// Mean softmax cross-entropy over a batch of logits [B,K].
template <typename S>
Var<S> softmax_cross_entropy(const Var<S>& logits, const std::vector<int>& labels) {
  const int bsz = logits.val().dim(0), k = logits.val().dim(1);
  if (static_cast<int>(labels.size()) != bsz)
    throw std::invalid_argument("softmax_cross_entropy: label count mismatch");
  auto probs = std::make_shared<Tensor<S>>(logits.val().dims());
  double loss = 0.0;
  for (int i = 0; i < bsz; ++i) {
    S m = logits.val()[i * k];
    for (int j = 1; j < k; ++j) m = std::max(m, logits.val()[i * k + j]);
    double z = 0.0;
    for (int j = 0; j < k; ++j) z += std::exp(static_cast<double>(logits.val()[i * k + j] - m));
    for (int j = 0; j < k; ++j)
      (*probs)[i * k + j] =
          static_cast<S>(std::exp(static_cast<double>(logits.val()[i * k + j] - m)) / z);
    loss -= std::log(static_cast<double>((*probs)[i * k + labels[i]]) + 1e-30) / bsz;
  }
  return make_op<S>(Tensor<S>::scalar(static_cast<S>(loss)), {logits},
                    [logits, probs, labels](Node<S>& n) {
    if (!logits.requires_grad()) return;
    const int bsz = logits.val().dim(0), k = logits.val().dim(1);
    const S g = n.grad[0] / static_cast<S>(bsz);
    Tensor<S>& dx = logits.grad();
    for (int i = 0; i < bsz; ++i)
      for (int j = 0; j < k; ++j)
        dx[i * k + j] += g * ((*probs)[i * k + j] - (j == labels[i] ? S(1) : S(0)));
  });
}

// ---- parameter handling ----

/// Named trainable tensors plus non-trainable buffers (batch-norm running
/// statistics). The registry order is the optimizer and checkpoint order.
/// Buffers are graph leaves so their storage survives moves of the owning
/// network.
template <typename S>
struct ParamSet {
  std::vector<std::pair<std::string, Var<S>>> params;
  std::vector<std::pair<std::string, Var<S>>> buffers;

  Var<S> add(const std::string& name, Tensor<S> init) {
    params.emplace_back(name, Var<S>::leaf(std::move(init), true));
    return params.back().second;
  }
  Var<S> add_buffer(const std::string& name, Tensor<S> init) {
    buffers.emplace_back(name, Var<S>::leaf(std::move(init), false));
    return buffers.back().second;
  }

  void zero_grad() {
    for (auto& [_, p] : params) p.zero_grad();
  }
  void set_requires_grad(bool rg) {
    for (auto& [_, p] : params) p.set_requires_grad(rg);
  }
  std::int64_t count() const {
    std::int64_t n = 0;
    for (const auto& [_, p] : params) n += p.val().size();
    return n;
  }
};

/// Temporarily freezes a parameter set so a graph built in scope treats the
/// parameters as constants.
template <typename S>
class FreezeGuard {
 public:
  explicit FreezeGuard(ParamSet<S>& ps) : ps_(ps) { ps_.set_requires_grad(false); }
  ~FreezeGuard() { ps_.set_requires_grad(true); }
  FreezeGuard(const FreezeGuard&) = delete;
  FreezeGuard& operator=(const FreezeGuard&) = delete;

 private:
  ParamSet<S>& ps_;
};

template <typename S>
Tensor<S> normal_init(std::vector<int> dims, std::mt19937& rng, S stddev = S(0.02)) {
  std::normal_distribution<double> d(0.0, static_cast<double>(stddev));
  Tensor<S> t(std::move(dims));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<S>(d(rng));
  return t;
}

/// Conv + optional batch-norm + leaky-ReLU block, the recurring unit of the
/// generator and discriminators.
template <typename S>
struct ConvBlock {
  Var<S> w, b;
  Var<S> gamma, beta;
  Var<S> running_mean, running_var;
  int stride = 1, pad = 1;
  bool bn = true, act = true, transpose = false;

  ConvBlock() = default;

  ConvBlock(ParamSet<S>& ps, const std::string& name, int k, int cin, int cout, int stride_,
            std::mt19937& rng, bool bn_ = true, bool act_ = true, bool transpose_ = false)
      : stride(stride_), pad((k - 1) / 2), bn(bn_), act(act_), transpose(transpose_) {
    if (transpose)
      w = ps.add(name + ".w", normal_init<S>({k, k, cout, cin}, rng));
    else
      w = ps.add(name + ".w", normal_init<S>({k, k, cin, cout}, rng));
    if (!bn) b = ps.add(name + ".b", Tensor<S>::zeros({cout}));
    if (bn) {
      gamma = ps.add(name + ".bn.gamma", Tensor<S>::ones({cout}));
      beta = ps.add(name + ".bn.beta", Tensor<S>::zeros({cout}));
      running_mean = ps.add_buffer(name + ".bn.running_mean", Tensor<S>::zeros({cout}));
      running_var = ps.add_buffer(name + ".bn.running_var", Tensor<S>::ones({cout}));
    }
  }

  Var<S> operator()(const Var<S>& x, bool training) {
    Var<S> y = transpose ? conv2d_transpose(x, w, b, stride, pad)
                         : conv2d(x, w, b, stride, pad);
    if (bn)
      y = batch_norm(y, gamma, beta, &running_mean.mutable_val(), &running_var.mutable_val(),
                     training);
    if (act) y = leaky_relu(y, S(0.2));
    return y;
  }
};

}  // namespace spooftrace
