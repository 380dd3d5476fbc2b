// Copyright 2026 The canids Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CANIDS_LAYERS_HPP
#define CANIDS_LAYERS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "canids/error.hpp"
#include "canids/tensor.hpp"

namespace canids {

inline constexpr double kBceClamp = 1e-7;

template <typename T>
struct ConvParams {
  Tensor4<T> kernel;  // (kh, kw, c_in, c_out)
  std::vector<T> bias;

  std::size_t in_channels() const { return kernel.dims()[2]; }
  std::size_t out_channels() const { return kernel.dims()[3]; }
};

template <typename T>
struct BnParams {
  std::vector<T> gamma, beta;
  std::vector<T> running_mean, running_var;
  bool stats_ready = false;

  std::size_t channels() const { return gamma.size(); }
};

template <typename T>
struct DenseParams {
  std::size_t in = 0, out = 0;
  std::vector<T> weight;  // (in, out) row-major
  std::vector<T> bias;
};

// ---------------------------------------------------------------------------
// Conv2D, stride 1, same (zero) padding, cross-correlation convention.
// ---------------------------------------------------------------------------

template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& x, const ConvParams<T>& p) {
  const auto& w = p.kernel;
  const std::size_t kb = w.dims()[0], kw = w.dims()[1];
  const std::size_t ci = x.channels(), co = w.dims()[3];
  if (w.dims()[2] != ci) {
    throw ShapeMismatch("conv2d: input channels " + std::to_string(ci) +
                        " vs kernel " + std::to_string(w.dims()[2]));
  }
  if (p.bias.size() != co) throw ShapeMismatch("conv2d: bias size");
  if (kb % 2 == 0 || kw % 2 == 0) {
    throw ShapeMismatch("conv2d: kernel dims must be odd for same padding");
  }
  const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(kb / 2);
  const std::ptrdiff_t pw = static_cast<std::ptrdiff_t>(kw / 2);
  const std::size_t bs = x.batch(), h = x.height(), wi = x.width();

  Tensor4<T> y(bs, h, wi, co);
  for (std::size_t b = 0; b < bs; ++b) {
    for (std::size_t oy = 0; oy < h; ++oy) {
      for (std::size_t ox = 0; ox < wi; ++ox) {
        T* out = y.ptr(b, oy, ox);
        for (std::size_t c = 0; c < co; ++c) out[c] = p.bias[c];
        for (std::size_t ky = 0; ky < kb; ++ky) {
          const std::ptrdiff_t iy =
              static_cast<std::ptrdiff_t>(oy + ky) - ph;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kx = 0; kx < kw; ++kx) {
            const std::ptrdiff_t ix =
                static_cast<std::ptrdiff_t>(ox + kx) - pw;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(wi)) continue;
            const T* in = x.ptr(b, static_cast<std::size_t>(iy),
                                static_cast<std::size_t>(ix));
            const T* wk = w.ptr(ky, kx, 0);
            for (std::size_t c = 0; c < ci; ++c) {
              const T v = in[c];
              const T* wrow = wk + c * co;
              for (std::size_t k = 0; k < co; ++k) out[k] += v * wrow[k];
            }
          }
        }
      }
    }
  }
  return y;
}

/// Gradients of the same-padding conv. `dx` may be null for the first layer.
template <typename T>
void conv2d_backward(const Tensor4<T>& x, const ConvParams<T>& p,
                     const Tensor4<T>& dy, Tensor4<T>* dx,
                     ConvParams<T>* grad) {
  const auto& w = p.kernel;
  const std::size_t kb = w.dims()[0], kw = w.dims()[1];
  const std::size_t ci = x.channels(), co = w.dims()[3];
  const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(kb / 2);
  const std::ptrdiff_t pw = static_cast<std::ptrdiff_t>(kw / 2);
  const std::size_t bs = x.batch(), h = x.height(), wi = x.width();
  if (dy.batch() != bs || dy.height() != h || dy.width() != wi ||
      dy.channels() != co) {
    throw ShapeMismatch("conv2d backward: dy " + dy.shape_str());
  }

  grad->kernel = Tensor4<T>::zeros_like(w);
  grad->bias.assign(co, T{});
  if (dx != nullptr) *dx = Tensor4<T>::zeros_like(x);

  for (std::size_t b = 0; b < bs; ++b) {
    for (std::size_t oy = 0; oy < h; ++oy) {
      for (std::size_t ox = 0; ox < wi; ++ox) {
        const T* g = dy.ptr(b, oy, ox);
        for (std::size_t k = 0; k < co; ++k) grad->bias[k] += g[k];
        for (std::size_t ky = 0; ky < kb; ++ky) {
          const std::ptrdiff_t iy =
              static_cast<std::ptrdiff_t>(oy + ky) - ph;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kx = 0; kx < kw; ++kx) {
            const std::ptrdiff_t ix =
                static_cast<std::ptrdiff_t>(ox + kx) - pw;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(wi)) continue;
            const T* in = x.ptr(b, static_cast<std::size_t>(iy),
                                static_cast<std::size_t>(ix));
            const T* wk = w.ptr(ky, kx, 0);
            T* dwk = grad->kernel.ptr(ky, kx, 0);
            T* dxp = dx ? dx->ptr(b, static_cast<std::size_t>(iy),
                                  static_cast<std::size_t>(ix))
                        : nullptr;
            for (std::size_t c = 0; c < ci; ++c) {
              const T v = in[c];
              const T* wrow = wk + c * co;
              T* dwrow = dwk + c * co;
              T acc{};
              for (std::size_t k = 0; k < co; ++k) {
                dwrow[k] += v * g[k];
                acc += wrow[k] * g[k];
              }
              if (dxp) dxp[c] += acc;
            }
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Batch normalization over (batch, height, width) per channel.
// ---------------------------------------------------------------------------

template <typename T>
struct BnCache {
  Tensor4<T> xhat;
  std::vector<T> inv_std;
};

/// Training-mode forward: batch statistics, running stats updated as
/// running = momentum * running + (1 - momentum) * batch.
template <typename T>
Tensor4<T> batchnorm_forward_train(const Tensor4<T>& x, BnParams<T>& p, T eps,
                                   T momentum, BnCache<T>* cache) {
  const std::size_t c = x.channels();
  if (p.channels() != c) throw ShapeMismatch("batchnorm: channel count");
  if (x.batch() < 2) {
    throw DegenerateBatch(
        "batchnorm requires batch size >= 2 in training mode");
  }
  const std::size_t m = x.batch() * x.height() * x.width();
  const std::size_t n = x.size();
  const T* xd = x.data();

  std::vector<T> mean(c, T{}), var(c, T{});
  for (std::size_t i = 0; i < n; i += c) {
    for (std::size_t k = 0; k < c; ++k) mean[k] += xd[i + k];
  }
  for (std::size_t k = 0; k < c; ++k) mean[k] /= static_cast<T>(m);
  for (std::size_t i = 0; i < n; i += c) {
    for (std::size_t k = 0; k < c; ++k) {
      const T d = xd[i + k] - mean[k];
      var[k] += d * d;
    }
  }
  for (std::size_t k = 0; k < c; ++k) var[k] /= static_cast<T>(m);

  cache->inv_std.resize(c);
  for (std::size_t k = 0; k < c; ++k) {
    cache->inv_std[k] = T{1} / std::sqrt(var[k] + eps);
  }

  cache->xhat = Tensor4<T>::zeros_like(x);
  Tensor4<T> y = Tensor4<T>::zeros_like(x);
  T* xh = cache->xhat.data();
  T* yd = y.data();
  for (std::size_t i = 0; i < n; i += c) {
    for (std::size_t k = 0; k < c; ++k) {
      const T h = (xd[i + k] - mean[k]) * cache->inv_std[k];
      xh[i + k] = h;
      yd[i + k] = p.gamma[k] * h + p.beta[k];
    }
  }

  for (std::size_t k = 0; k < c; ++k) {
    p.running_mean[k] = momentum * p.running_mean[k] +
                        (T{1} - momentum) * mean[k];
    p.running_var[k] = momentum * p.running_var[k] +
                       (T{1} - momentum) * var[k];
  }
  p.stats_ready = true;
  return y;
}

template <typename T>
Tensor4<T> batchnorm_forward_infer(const Tensor4<T>& x, const BnParams<T>& p,
                                   T eps) {
  const std::size_t c = x.channels();
  if (p.channels() != c) throw ShapeMismatch("batchnorm: channel count");
  std::vector<T> scale(c), shift(c);
  for (std::size_t k = 0; k < c; ++k) {
    scale[k] = p.gamma[k] / std::sqrt(p.running_var[k] + eps);
    shift[k] = p.beta[k] - scale[k] * p.running_mean[k];
  }
  Tensor4<T> y = Tensor4<T>::zeros_like(x);
  const T* xd = x.data();
  T* yd = y.data();
  for (std::size_t i = 0; i < x.size(); i += c) {
    for (std::size_t k = 0; k < c; ++k) {
      yd[i + k] = scale[k] * xd[i + k] + shift[k];
    }
  }
  return y;
}

template <typename T>
Tensor4<T> batchnorm_backward(const BnCache<T>& cache,
                              const std::vector<T>& gamma,
                              const Tensor4<T>& dy, std::vector<T>* dgamma,
                              std::vector<T>* dbeta) {
  const std::size_t c = dy.channels();
  const std::size_t m = dy.batch() * dy.height() * dy.width();
  const std::size_t n = dy.size();
  const T* g = dy.data();
  const T* xh = cache.xhat.data();

  dgamma->assign(c, T{});
  dbeta->assign(c, T{});
  for (std::size_t i = 0; i < n; i += c) {
    for (std::size_t k = 0; k < c; ++k) {
      (*dgamma)[k] += g[i + k] * xh[i + k];
      (*dbeta)[k] += g[i + k];
    }
  }

  // dx = gamma * inv_std / m * (m*dy - sum(dy) - xhat * sum(dy*xhat))
  Tensor4<T> dx = Tensor4<T>::zeros_like(dy);
  T* dxd = dx.data();
  const T inv_m = T{1} / static_cast<T>(m);
  for (std::size_t i = 0; i < n; i += c) {
    for (std::size_t k = 0; k < c; ++k) {
      dxd[i + k] = gamma[k] * cache.inv_std[k] * inv_m *
                   (static_cast<T>(m) * g[i + k] - (*dbeta)[k] -
                    xh[i + k] * (*dgamma)[k]);
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// ReLU / dropout
// ---------------------------------------------------------------------------

template <typename T>
void relu_inplace(Tensor4<T>& x) {
  T* d = x.data();
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = d[i] > T{} ? d[i] : T{};
}

/// dx from dy using the forward output (y > 0 iff the unit was active).
template <typename T>
Tensor4<T> relu_backward(const Tensor4<T>& y, const Tensor4<T>& dy) {
  require_same_shape(y, dy, "relu backward");
  Tensor4<T> dx = Tensor4<T>::zeros_like(dy);
  const T* yd = y.data();
  const T* g = dy.data();
  T* o = dx.data();
  for (std::size_t i = 0; i < y.size(); ++i) o[i] = yd[i] > T{} ? g[i] : T{};
  return dx;
}

/// Inverted dropout: kept units are scaled by 1/(1-p). The mask holds the
/// multiplier applied to each element, so backward is a plain product.
template <typename T>
Tensor4<T> dropout_forward(const Tensor4<T>& x, T p, std::mt19937_64& rng,
                           Tensor4<T>* mask) {
  *mask = Tensor4<T>::zeros_like(x);
  Tensor4<T> y = Tensor4<T>::zeros_like(x);
  const T keep = T{1} - p;
  const T inv_keep = T{1} / keep;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const T* xd = x.data();
  T* md = mask->data();
  T* yd = y.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T m = u(rng) < static_cast<double>(keep) ? inv_keep : T{};
    md[i] = m;
    yd[i] = xd[i] * m;
  }
  return y;
}

template <typename T>
Tensor4<T> dropout_backward(const Tensor4<T>& mask, const Tensor4<T>& dy) {
  require_same_shape(mask, dy, "dropout backward");
  Tensor4<T> dx = Tensor4<T>::zeros_like(dy);
  const T* md = mask.data();
  const T* g = dy.data();
  T* o = dx.data();
  for (std::size_t i = 0; i < dy.size(); ++i) o[i] = md[i] * g[i];
  return dx;
}

// ---------------------------------------------------------------------------
// Dense head. The (B,h,w,c) input is consumed as B rows of h*w*c values,
// which is a no-op flatten in this layout.
// ---------------------------------------------------------------------------

template <typename T>
Tensor4<T> dense_forward(const Tensor4<T>& x, const DenseParams<T>& p) {
  const std::size_t d = x.height() * x.width() * x.channels();
  if (d != p.in) {
    throw ShapeMismatch("dense: input size " + std::to_string(d) + " vs " +
                        std::to_string(p.in));
  }
  const std::size_t bs = x.batch(), k = p.out;
  Tensor4<T> y(bs, 1, 1, k);
  for (std::size_t b = 0; b < bs; ++b) {
    const T* xb = x.data() + b * d;
    T* out = y.ptr(b, 0, 0);
    for (std::size_t j = 0; j < k; ++j) out[j] = p.bias[j];
    for (std::size_t i = 0; i < d; ++i) {
      const T v = xb[i];
      const T* wrow = p.weight.data() + i * k;
      for (std::size_t j = 0; j < k; ++j) out[j] += v * wrow[j];
    }
  }
  return y;
}

template <typename T>
void dense_backward(const Tensor4<T>& x, const DenseParams<T>& p,
                    const Tensor4<T>& dy, Tensor4<T>* dx,
                    DenseParams<T>* grad) {
  const std::size_t d = p.in, k = p.out, bs = x.batch();
  grad->in = d;
  grad->out = k;
  grad->weight.assign(d * k, T{});
  grad->bias.assign(k, T{});
  if (dx != nullptr) *dx = Tensor4<T>::zeros_like(x);

  for (std::size_t b = 0; b < bs; ++b) {
    const T* xb = x.data() + b * d;
    const T* g = dy.ptr(b, 0, 0);
    T* dxb = dx ? dx->data() + b * d : nullptr;
    for (std::size_t j = 0; j < k; ++j) grad->bias[j] += g[j];
    for (std::size_t i = 0; i < d; ++i) {
      const T v = xb[i];
      const T* wrow = p.weight.data() + i * k;
      T* dwrow = grad->weight.data() + i * k;
      T acc{};
      for (std::size_t j = 0; j < k; ++j) {
        dwrow[j] += v * g[j];
        acc += wrow[j] * g[j];
      }
      if (dxb) dxb[i] = acc;
    }
  }
}

// ---------------------------------------------------------------------------
// Softmax head and binary cross-entropy on the attack-class probability.
// ---------------------------------------------------------------------------

template <typename T>
Tensor4<T> softmax_rows(const Tensor4<T>& logits) {
  const std::size_t k = logits.channels(), bs = logits.batch();
  Tensor4<T> probs = Tensor4<T>::zeros_like(logits);
  for (std::size_t b = 0; b < bs; ++b) {
    const T* z = logits.ptr(b, 0, 0);
    T* p = probs.ptr(b, 0, 0);
    T zmax = z[0];
    for (std::size_t j = 1; j < k; ++j) zmax = std::max(zmax, z[j]);
    T sum{};
    for (std::size_t j = 0; j < k; ++j) {
      p[j] = std::exp(z[j] - zmax);
      sum += p[j];
    }
    for (std::size_t j = 0; j < k; ++j) p[j] /= sum;
  }
  return probs;
}

/// Mean BCE over the batch, computed on the attack-class (index 1)
/// probability, clamped to [1e-7, 1-1e-7].
template <typename T>
T bce_loss(const Tensor4<T>& probs, const std::vector<int>& labels) {
  if (probs.batch() != labels.size() || probs.channels() != 2) {
    throw ShapeMismatch("bce_loss: probs " + probs.shape_str());
  }
  const T lo = static_cast<T>(kBceClamp), hi = T{1} - static_cast<T>(kBceClamp);
  T total{};
  for (std::size_t b = 0; b < labels.size(); ++b) {
    T p = probs(b, 0, 0, 1);
    p = std::min(std::max(p, lo), hi);
    total += labels[b] == 1 ? -std::log(p) : -std::log(T{1} - p);
  }
  return total / static_cast<T>(labels.size());
}

/// Combined softmax+BCE gradient w.r.t. the logits: (probs - onehot) / B.
template <typename T>
Tensor4<T> softmax_bce_backward(const Tensor4<T>& probs,
                                const std::vector<int>& labels) {
  Tensor4<T> dz = Tensor4<T>::zeros_like(probs);
  const T inv_b = T{1} / static_cast<T>(labels.size());
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const T* p = probs.ptr(b, 0, 0);
    T* g = dz.ptr(b, 0, 0);
    g[0] = (p[0] - (labels[b] == 0 ? T{1} : T{})) * inv_b;
    g[1] = (p[1] - (labels[b] == 1 ? T{1} : T{})) * inv_b;
  }
  return dz;
}

template <typename T>
void require_finite(const T* data, std::size_t n, const char* what) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(static_cast<double>(data[i]))) {
      throw Error(std::string("non-finite value in ") + what);
    }
  }
}

}  // namespace canids

#endif  // CANIDS_LAYERS_HPP
