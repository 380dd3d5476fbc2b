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

#ifndef CANIDS_MODEL_HPP
#define CANIDS_MODEL_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "canids/can.hpp"
#include "canids/layers.hpp"
#include "canids/rng.hpp"
#include "canids/tensor.hpp"

namespace canids {

struct Hyperparams {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
};

/// Architecture description. Every conv layer is 3x3, stride 1, same
/// padding; each block is Conv -> BatchNorm -> ReLU, with dropout after the
/// blocks listed in `dropout_after` (1-based). The head is Flatten ->
/// Dense(classes) -> Softmax.
struct ModelSpec {
  std::size_t window = 4;  // n input rows
  unsigned id_width = 16;  // W columns
  std::vector<std::size_t> conv_filters;
  bool batchnorm = true;
  std::vector<std::size_t> dropout_after;
  double dropout_p = 0.2;
  std::size_t classes = 2;
  double bn_eps = 1e-5;
  double bn_momentum = 0.9;
  std::string profile = "custom";

  static ModelSpec paper(std::size_t n = 4, unsigned width = 16) {
    ModelSpec s;
    s.window = n;
    s.id_width = width;
    s.conv_filters = {40, 80, 120, 160, 200, 240, 256, 512};
    s.dropout_after = {2, 4, 6, 8};
    s.profile = "paper";
    return s;
  }

  /// Reduced architecture for desk-scale runs and CI.
  static ModelSpec tiny(std::size_t n = 4, unsigned width = 16) {
    ModelSpec s;
    s.window = n;
    s.id_width = width;
    s.conv_filters = {8, 16, 16, 32};
    s.dropout_after = {2, 4};
    s.profile = "tiny";
    return s;
  }

  static ModelSpec profile_by_name(const std::string& name, std::size_t n,
                                   unsigned width) {
    if (name == "paper") return paper(n, width);
    if (name == "tiny") return tiny(n, width);
    throw ConfigError("unknown profile: " + name);
  }

  std::size_t blocks() const { return conv_filters.size(); }
  std::size_t flat_dim() const {
    return window * id_width * conv_filters.back();
  }
  bool dropout_at(std::size_t block) const {  // 0-based block index
    return dropout_p > 0 &&
           std::find(dropout_after.begin(), dropout_after.end(), block + 1) !=
               dropout_after.end();
  }
};

template <typename T>
struct ModelT {
  ModelSpec spec;
  AttackKind attack = AttackKind::None;
  std::uint64_t seed = 0;
  Hyperparams hparams;

  std::vector<ConvParams<T>> convs;
  std::vector<BnParams<T>> bns;  // empty when spec.batchnorm == false
  DenseParams<T> head;
};

using Model = ModelT<float>;

/// He-uniform init for conv/dense weights, zero biases, identity batchnorm.
/// The draw order is fixed, so a seed pins every parameter.
template <typename T>
ModelT<T> build_model(const ModelSpec& spec, std::uint64_t seed) {
  if (spec.conv_filters.empty()) throw ConfigError("no conv layers");
  if (spec.classes != 2) throw ConfigError("head must have 2 classes");
  ModelT<T> m;
  m.spec = spec;
  m.seed = seed;
  auto rng = make_rng(seed, 0x1217);

  auto he_uniform = [&rng](std::vector<T>& w, std::size_t fan_in) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (auto& v : w) v = static_cast<T>(u(rng));
  };

  std::size_t c_in = 1;
  for (std::size_t f : spec.conv_filters) {
    ConvParams<T> conv;
    conv.kernel = Tensor4<T>(3, 3, c_in, f);
    he_uniform(conv.kernel.storage(), 9 * c_in);
    conv.bias.assign(f, T{});
    m.convs.push_back(std::move(conv));
    if (spec.batchnorm) {
      BnParams<T> bn;
      bn.gamma.assign(f, T{1});
      bn.beta.assign(f, T{});
      bn.running_mean.assign(f, T{});
      bn.running_var.assign(f, T{1});
      m.bns.push_back(std::move(bn));
    }
    c_in = f;
  }

  m.head.in = spec.flat_dim();
  m.head.out = spec.classes;
  m.head.weight.assign(m.head.in * m.head.out, T{});
  he_uniform(m.head.weight, m.head.in);
  m.head.bias.assign(m.head.out, T{});
  return m;
}

/// Number of learnable scalars: conv kernels+biases, BN gamma/beta, dense.
inline std::size_t param_count(const ModelSpec& spec) {
  std::size_t total = 0;
  std::size_t c_in = 1;
  for (std::size_t f : spec.conv_filters) {
    total += 3 * 3 * c_in * f + f;
    if (spec.batchnorm) total += 2 * f;
    c_in = f;
  }
  total += spec.flat_dim() * spec.classes + spec.classes;
  return total;
}

template <typename T>
std::size_t param_count(const ModelT<T>& m) {
  return param_count(m.spec);
}

// ---------------------------------------------------------------------------
// Parameter enumeration (fixed order shared by Adam, serialization and the
// gradient pipeline).
// ---------------------------------------------------------------------------

template <typename T>
struct ParamRef {
  std::string name;
  std::vector<T>* data;
  std::vector<std::size_t> dims;
};

template <typename T>
std::vector<ParamRef<T>> learnable_params(ModelT<T>& m) {
  std::vector<ParamRef<T>> out;
  for (std::size_t i = 0; i < m.convs.size(); ++i) {
    const std::string base = "conv" + std::to_string(i);
    auto& k = m.convs[i].kernel;
    out.push_back({base + ".kernel", &k.storage(),
                   {k.dims()[0], k.dims()[1], k.dims()[2], k.dims()[3]}});
    out.push_back({base + ".bias", &m.convs[i].bias,
                   {m.convs[i].bias.size()}});
    if (m.spec.batchnorm) {
      out.push_back({"bn" + std::to_string(i) + ".gamma", &m.bns[i].gamma,
                     {m.bns[i].gamma.size()}});
      out.push_back({"bn" + std::to_string(i) + ".beta", &m.bns[i].beta,
                     {m.bns[i].beta.size()}});
    }
  }
  out.push_back({"head.weight", &m.head.weight, {m.head.in, m.head.out}});
  out.push_back({"head.bias", &m.head.bias, {m.head.out}});
  return out;
}

/// Non-learnable state (batchnorm running statistics).
template <typename T>
std::vector<ParamRef<T>> state_buffers(ModelT<T>& m) {
  std::vector<ParamRef<T>> out;
  for (std::size_t i = 0; i < m.bns.size(); ++i) {
    out.push_back({"bn" + std::to_string(i) + ".running_mean",
                   &m.bns[i].running_mean, {m.bns[i].running_mean.size()}});
    out.push_back({"bn" + std::to_string(i) + ".running_var",
                   &m.bns[i].running_var, {m.bns[i].running_var.size()}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Forward passes
// ---------------------------------------------------------------------------

template <typename T>
void require_input_shape(const ModelSpec& spec, const Tensor4<T>& x) {
  if (x.height() != spec.window || x.width() != spec.id_width ||
      x.channels() != 1) {
    throw ShapeMismatch("input " + x.shape_str() + " does not match model (" +
                        std::to_string(spec.window) + "," +
                        std::to_string(spec.id_width) + ",1)");
  }
}

/// Inference-mode forward: BN running statistics, dropout off.
/// Returns softmax probabilities of shape (B, 1, 1, classes).
template <typename T>
Tensor4<T> forward_infer(const ModelT<T>& m, const Tensor4<T>& x) {
  require_input_shape(m.spec, x);
  Tensor4<T> cur = x;
  for (std::size_t i = 0; i < m.convs.size(); ++i) {
    cur = conv2d_forward(cur, m.convs[i]);
    if (m.spec.batchnorm) {
      cur = batchnorm_forward_infer(cur, m.bns[i],
                                    static_cast<T>(m.spec.bn_eps));
    }
    relu_inplace(cur);
  }
  Tensor4<T> logits = dense_forward(cur, m.head);
  return softmax_rows(logits);
}

/// Per-block activations kept for backpropagation.
template <typename T>
struct ForwardCache {
  std::vector<Tensor4<T>> block_in;   // input to each conv
  std::vector<Tensor4<T>> relu_out;   // post-ReLU activation per block
  std::vector<Tensor4<T>> drop_mask;  // empty tensor when no dropout
  std::vector<BnCache<T>> bn;
  Tensor4<T> head_in;
  Tensor4<T> probs;
};

/// Training-mode forward: batch statistics, running stats updated, dropout
/// masks drawn from `rng` in a fixed order.
template <typename T>
Tensor4<T> forward_train(ModelT<T>& m, const Tensor4<T>& x,
                         std::mt19937_64& rng, ForwardCache<T>* cache) {
  require_input_shape(m.spec, x);
  cache->block_in.clear();
  cache->relu_out.clear();
  cache->drop_mask.assign(m.convs.size(), Tensor4<T>());
  cache->bn.assign(m.spec.batchnorm ? m.convs.size() : 0, BnCache<T>());

  Tensor4<T> cur = x;
  for (std::size_t i = 0; i < m.convs.size(); ++i) {
    cache->block_in.push_back(cur);
    Tensor4<T> z = conv2d_forward(cur, m.convs[i]);
    if (m.spec.batchnorm) {
      z = batchnorm_forward_train(z, m.bns[i], static_cast<T>(m.spec.bn_eps),
                                  static_cast<T>(m.spec.bn_momentum),
                                  &cache->bn[i]);
    }
    relu_inplace(z);
    cache->relu_out.push_back(z);
    if (m.spec.dropout_at(i)) {
      cur = dropout_forward(z, static_cast<T>(m.spec.dropout_p), rng,
                            &cache->drop_mask[i]);
    } else {
      cur = std::move(z);
    }
  }
  cache->head_in = cur;
  Tensor4<T> logits = dense_forward(cur, m.head);
  cache->probs = softmax_rows(logits);
  return cache->probs;
}

/// Single-window probabilities (p_normal, p_attack); inference mode.
template <typename T>
std::array<T, 2> predict(const ModelT<T>& m, const Tensor4<T>& window) {
  if (window.batch() != 1) {
    throw ShapeMismatch("predict expects a single-window tensor");
  }
  Tensor4<T> probs = forward_infer(m, window);
  return {probs(0, 0, 0, 0), probs(0, 0, 0, 1)};
}

template <typename T>
FrameLabel classify(const ModelT<T>& m, const Tensor4<T>& window) {
  const auto p = predict(m, window);
  return p[1] > p[0] ? FrameLabel::Attack : FrameLabel::Normal;
}

}  // namespace canids

#endif  // CANIDS_MODEL_HPP
