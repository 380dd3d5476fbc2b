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

// Test-only reference implementations: a naive direct convolution, a central
// finite-difference gradient checker, and small dataset builders. These stay
// independent of the library's optimized paths.

#ifndef CANIDS_TESTS_SUPPORT_ORACLES_HPP
#define CANIDS_TESTS_SUPPORT_ORACLES_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "canids/model.hpp"
#include "canids/train.hpp"
#include "canids/window.hpp"

namespace canids::testing {

/// Direct convolution, one multiply at a time: stride 1, same zero padding,
/// cross-correlation. Deliberately written as plain nested loops.
template <typename T>
Tensor4<T> naive_conv2d(const Tensor4<T>& x, const Tensor4<T>& kernel,
                        const std::vector<T>& bias) {
  const std::size_t bs = x.batch(), h = x.height(), w = x.width();
  const std::size_t ci = x.channels();
  const std::size_t kh = kernel.dims()[0], kw = kernel.dims()[1];
  const std::size_t co = kernel.dims()[3];
  const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(kh / 2);
  const std::ptrdiff_t pw = static_cast<std::ptrdiff_t>(kw / 2);
  Tensor4<T> y(bs, h, w, co);
  for (std::size_t b = 0; b < bs; ++b) {
    for (std::size_t oy = 0; oy < h; ++oy) {
      for (std::size_t ox = 0; ox < w; ++ox) {
        for (std::size_t k = 0; k < co; ++k) {
          T acc = bias[k];
          for (std::size_t ky = 0; ky < kh; ++ky) {
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const std::ptrdiff_t iy =
                  static_cast<std::ptrdiff_t>(oy + ky) - ph;
              const std::ptrdiff_t ix =
                  static_cast<std::ptrdiff_t>(ox + kx) - pw;
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
              for (std::size_t c = 0; c < ci; ++c) {
                acc += x(b, static_cast<std::size_t>(iy),
                         static_cast<std::size_t>(ix), c) *
                       kernel(ky, kx, c, k);
              }
            }
          }
          y(b, oy, ox, k) = acc;
        }
      }
    }
  }
  return y;
}

// ---------------------------------------------------------------------------
// Finite-difference gradient checking
// ---------------------------------------------------------------------------

struct LossEval {
  double loss = 0;
  std::uint64_t relu_pattern = 0;  // hash of all ReLU on/off states
  bool near_clamp = false;         // BCE clamp active or close to it
};

/// Training-mode loss for a fixed dropout seed. The model is copied, so BN
/// running-stat updates do not leak. The ReLU activity pattern is hashed:
/// central differences are only valid when it is identical at theta-h and
/// theta+h (the loss is smooth on that segment).
template <typename T>
LossEval eval_loss(const ModelT<T>& model_in, const Tensor4<T>& batch,
                   const std::vector<int>& labels, std::uint64_t seed) {
  ModelT<T> model = model_in;
  auto rng = make_rng(seed, 0xD40F);
  ForwardCache<T> cache;
  forward_train(model, batch, rng, &cache);

  LossEval r;
  r.loss = static_cast<double>(bce_loss(cache.probs, labels));
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& t : cache.relu_out) {
    const T* d = t.data();
    for (std::size_t i = 0; i < t.size(); ++i) {
      h = (h ^ static_cast<std::uint64_t>(d[i] > T{})) * 1099511628211ull;
    }
  }
  r.relu_pattern = h;
  const double margin = 10.0 * kBceClamp;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const double p = static_cast<double>(cache.probs(b, 0, 0, 1));
    if (p < margin || p > 1.0 - margin) r.near_clamp = true;
  }
  return r;
}

struct GradCheckResult {
  std::size_t probes = 0;
  std::size_t resampled = 0;
  double max_rel_err = 0;
};

/// Central finite differences at `target_probes` randomly chosen parameters,
/// against the analytic gradients. Probes where a ReLU flips state between
/// theta-h and theta+h (or the BCE clamp is active) are resampled: the
/// two-sided difference does not estimate the derivative across a kink.
/// Relative error uses max(|analytic|, |fd|, 1) as the denominator.
template <typename T>
GradCheckResult grad_check(const ModelT<T>& model_in, const Tensor4<T>& batch,
                           const std::vector<int>& labels,
                           std::size_t target_probes, double h,
                           std::uint64_t seed) {
  const std::uint64_t dropout_seed = derive_seed(seed, 0x66);

  ModelT<T> model = model_in;
  FlatGrads<T> grads;
  {
    ModelT<T> work = model_in;
    auto rng = make_rng(dropout_seed, 0xD40F);
    grads = backward(work, batch, labels, rng);
  }

  auto params = learnable_params(model);
  std::mt19937_64 pick(derive_seed(seed, 0x9A));
  std::uniform_int_distribution<std::size_t> upar(0, params.size() - 1);

  GradCheckResult res;
  std::size_t guard = 0;
  while (res.probes < target_probes) {
    if (++guard > target_probes * 20) {
      throw Error("grad_check: too many kink resamples");
    }
    const std::size_t pi = upar(pick);
    auto& vec = *params[pi].data;
    std::uniform_int_distribution<std::size_t> uel(0, vec.size() - 1);
    const std::size_t j = uel(pick);

    const T saved = vec[j];
    vec[j] = saved + static_cast<T>(h);
    const LossEval up = eval_loss(model, batch, labels, dropout_seed);
    vec[j] = saved - static_cast<T>(h);
    const LossEval dn = eval_loss(model, batch, labels, dropout_seed);
    vec[j] = saved;

    if (up.relu_pattern != dn.relu_pattern || up.near_clamp ||
        dn.near_clamp) {
      ++res.resampled;
      continue;
    }
    const double fd = (up.loss - dn.loss) / (2.0 * h);
    const double an = static_cast<double>(grads[pi][j]);
    const double rel =
        std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1.0});
    res.max_rel_err = std::max(res.max_rel_err, rel);
    ++res.probes;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Dataset builders
// ---------------------------------------------------------------------------

inline IdWindow make_window(const std::vector<std::uint32_t>& ids,
                            FrameLabel label, unsigned width = 16) {
  IdWindow w;
  for (auto id : ids) w.rows.push_back(encode_id(id, width));
  w.label = label;
  return w;
}

/// Linearly separable toy set: attack windows end in the all-zero id, normal
/// windows end in a nonzero pool id. A single conv layer separates it.
inline std::vector<IdWindow> toy_separable_windows(std::size_t count,
                                                   std::uint64_t seed) {
  const std::vector<std::uint32_t> pool = {0x316, 0x18f, 0x260, 0x43f};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> upick(0, pool.size() - 1);
  std::vector<IdWindow> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<std::uint32_t> ids;
    for (int k = 0; k < 3; ++k) ids.push_back(pool[upick(rng)]);
    const bool attack = i % 2 == 1;
    ids.push_back(attack ? 0x000 : pool[upick(rng)]);
    out.push_back(make_window(ids, attack ? FrameLabel::Attack
                                          : FrameLabel::Normal));
  }
  return out;
}

inline std::vector<IdWindow> random_windows(std::size_t count, std::size_t n,
                                            unsigned width,
                                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> uid(0, kMaxStandardId);
  std::vector<IdWindow> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<std::uint32_t> ids;
    for (std::size_t k = 0; k < n; ++k) ids.push_back(uid(rng));
    out.push_back(make_window(ids, (rng() & 1) ? FrameLabel::Attack
                                               : FrameLabel::Normal,
                              width));
  }
  return out;
}

/// Random tensor with entries uniform in [-1, 1].
template <typename T>
Tensor4<T> random_tensor(std::size_t b, std::size_t h, std::size_t w,
                         std::size_t c, std::mt19937_64& rng) {
  Tensor4<T> t(b, h, w, c);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t.data()[i] = static_cast<T>(u(rng));
  }
  return t;
}

}  // namespace canids::testing

#endif  // CANIDS_TESTS_SUPPORT_ORACLES_HPP
