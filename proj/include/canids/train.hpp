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

#ifndef CANIDS_TRAIN_HPP
#define CANIDS_TRAIN_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "canids/model.hpp"
#include "canids/window.hpp"

namespace canids {

/// Per-parameter gradient vectors, aligned with learnable_params() order.
template <typename T>
using FlatGrads = std::vector<std::vector<T>>;

template <typename T>
struct BatchStats {
  T loss{};
  std::size_t correct = 0;
};

template <typename T>
std::size_t count_correct(const Tensor4<T>& probs,
                          const std::vector<int>& labels) {
  std::size_t correct = 0;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const int pred = probs(b, 0, 0, 1) > probs(b, 0, 0, 0) ? 1 : 0;
    if (pred == labels[b]) ++correct;
  }
  return correct;
}

/// Training-mode forward + full backpropagation. Returns one gradient
/// vector per learnable parameter (mean reduction over the batch, baked
/// into the loss gradient). BN running stats are updated as a side effect.
template <typename T>
FlatGrads<T> backward(ModelT<T>& m, const Tensor4<T>& batch,
                      const std::vector<int>& labels, std::mt19937_64& rng,
                      BatchStats<T>* stats = nullptr) {
  if (batch.batch() != labels.size()) {
    throw ShapeMismatch("backward: batch " + batch.shape_str() + " vs " +
                        std::to_string(labels.size()) + " labels");
  }
  ForwardCache<T> cache;
  Tensor4<T> probs = forward_train(m, batch, rng, &cache);
  if (stats != nullptr) {
    stats->loss = bce_loss(probs, labels);
    stats->correct = count_correct(probs, labels);
  }

  const std::size_t nb = m.convs.size();
  std::vector<ConvParams<T>> gconv(nb);
  std::vector<std::vector<T>> ggamma(nb), gbeta(nb);
  DenseParams<T> ghead;

  Tensor4<T> dcur;
  {
    Tensor4<T> dlogits = softmax_bce_backward(probs, labels);
    dense_backward(cache.head_in, m.head, dlogits, &dcur, &ghead);
  }
  for (std::size_t i = nb; i-- > 0;) {
    if (m.spec.dropout_at(i)) {
      dcur = dropout_backward(cache.drop_mask[i], dcur);
    }
    dcur = relu_backward(cache.relu_out[i], dcur);
    if (m.spec.batchnorm) {
      dcur = batchnorm_backward(cache.bn[i], m.bns[i].gamma, dcur, &ggamma[i],
                                &gbeta[i]);
    }
    Tensor4<T> dprev;
    conv2d_backward(cache.block_in[i], m.convs[i], dcur,
                    i > 0 ? &dprev : nullptr, &gconv[i]);
    dcur = std::move(dprev);
  }

  FlatGrads<T> grads;
  for (std::size_t i = 0; i < nb; ++i) {
    grads.push_back(std::move(gconv[i].kernel.storage()));
    grads.push_back(std::move(gconv[i].bias));
    if (m.spec.batchnorm) {
      grads.push_back(std::move(ggamma[i]));
      grads.push_back(std::move(gbeta[i]));
    }
  }
  grads.push_back(std::move(ghead.weight));
  grads.push_back(std::move(ghead.bias));
  return grads;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

template <typename T>
struct AdamState {
  std::vector<std::vector<T>> m, v;  // first/second moments per parameter
  std::int64_t step = 0;
};

template <typename T>
AdamState<T> make_adam_state(ModelT<T>& model) {
  AdamState<T> s;
  for (const auto& p : learnable_params(model)) {
    s.m.emplace_back(p.data->size(), T{});
    s.v.emplace_back(p.data->size(), T{});
  }
  return s;
}

/// Standard bias-corrected Adam update.
template <typename T>
void adam_step(AdamState<T>& st, ModelT<T>& model, const FlatGrads<T>& grads,
               const Hyperparams& hp) {
  auto params = learnable_params(model);
  if (params.size() != grads.size() || params.size() != st.m.size()) {
    throw ShapeMismatch("adam_step: parameter/gradient count mismatch");
  }
  st.step += 1;
  const T lr = static_cast<T>(hp.lr);
  const T b1 = static_cast<T>(hp.beta1), b2 = static_cast<T>(hp.beta2);
  const T eps = static_cast<T>(hp.epsilon);
  const T bc1 = T{1} - static_cast<T>(std::pow(hp.beta1,
                                               static_cast<double>(st.step)));
  const T bc2 = T{1} - static_cast<T>(std::pow(hp.beta2,
                                               static_cast<double>(st.step)));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& theta = *params[i].data;
    const auto& g = grads[i];
    if (g.size() != theta.size()) {
      throw ShapeMismatch("adam_step: gradient size for " + params[i].name);
    }
    auto& mi = st.m[i];
    auto& vi = st.v[i];
    for (std::size_t j = 0; j < theta.size(); ++j) {
      mi[j] = b1 * mi[j] + (T{1} - b1) * g[j];
      vi[j] = b2 * vi[j] + (T{1} - b2) * g[j] * g[j];
      const T mhat = mi[j] / bc1;
      const T vhat = vi[j] / bc2;
      theta[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct EpochStats {
  double train_loss = 0, train_acc = 0;
  double val_loss = 0, val_acc = 0;
};

struct History {
  std::vector<EpochStats> epochs;
};

struct EvalResult {
  double loss = 0, accuracy = 0;
  std::size_t count = 0;
};

/// Inference-mode loss/accuracy over a window set, batched.
template <typename T>
EvalResult evaluate(const ModelT<T>& model, const std::vector<IdWindow>& set,
                    std::size_t batch_size = 256) {
  EvalResult r;
  if (set.empty()) return r;
  double total_loss = 0;
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < set.size(); start += batch_size) {
    const std::size_t end = std::min(set.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    Tensor4<T> bx = stack_windows<T>(set, idx);
    const auto labels = window_labels(set, idx);
    Tensor4<T> probs = forward_infer(model, bx);
    total_loss += static_cast<double>(bce_loss(probs, labels)) * idx.size();
    correct += count_correct(probs, labels);
  }
  r.count = set.size();
  r.loss = total_loss / static_cast<double>(r.count);
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.count);
  return r;
}

/// Mini-batch Adam training. Deterministic for a fixed seed: the shuffle and
/// dropout streams are derived from it. Keeps the parameters of the best
/// validation-loss epoch when a validation set is given.
///
/// A trailing batch of size 1 is skipped: batch statistics are undefined
/// for it (see DegenerateBatch).
template <typename T>
History train(ModelT<T>& model, const std::vector<IdWindow>& train_set,
              const std::vector<IdWindow>& val_set, const Hyperparams& hp,
              std::uint64_t seed) {
  model.hparams = hp;
  History hist;
  if (hp.epochs == 0) return hist;
  if (train_set.empty()) throw SingleClassTrainingSet("empty training set");
  bool has_normal = false, has_attack = false;
  for (const auto& w : train_set) {
    (w.label == FrameLabel::Attack ? has_attack : has_normal) = true;
  }
  if (!has_normal || !has_attack) {
    throw SingleClassTrainingSet(
        "training set must contain both classes");
  }

  auto shuffle_rng = make_rng(seed, 0x5483);
  auto dropout_rng = make_rng(seed, 0xD40F);
  AdamState<T> adam = make_adam_state(model);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  ModelT<T> best;
  double best_val_loss = std::numeric_limits<double>::infinity();
  bool have_best = false;

  std::vector<std::size_t> batch_idx;
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double ep_loss = 0;
    std::size_t ep_correct = 0, seen = 0;
    for (std::size_t start = 0; start < order.size();
         start += hp.batch_size) {
      const std::size_t end = std::min(order.size(), start + hp.batch_size);
      if (end - start < 2 && model.spec.batchnorm) continue;
      batch_idx.assign(order.begin() + start, order.begin() + end);
      Tensor4<T> bx = stack_windows<T>(train_set, batch_idx);
      const auto labels = window_labels(train_set, batch_idx);
      BatchStats<T> stats;
      auto grads = backward(model, bx, labels, dropout_rng, &stats);
      if (!std::isfinite(static_cast<double>(stats.loss))) {
        throw Error("non-finite training loss");
      }
      adam_step(adam, model, grads, hp);
      ep_loss += static_cast<double>(stats.loss) * batch_idx.size();
      ep_correct += stats.correct;
      seen += batch_idx.size();
    }

    EpochStats es;
    es.train_loss = seen ? ep_loss / static_cast<double>(seen) : 0;
    es.train_acc = seen ? static_cast<double>(ep_correct) / seen : 0;
    if (!val_set.empty()) {
      const EvalResult ev = evaluate(model, val_set);
      es.val_loss = ev.loss;
      es.val_acc = ev.accuracy;
      if (ev.loss < best_val_loss) {
        best_val_loss = ev.loss;
        best = model;
        have_best = true;
      }
    } else {
      es.val_loss = std::numeric_limits<double>::quiet_NaN();
      es.val_acc = std::numeric_limits<double>::quiet_NaN();
    }
    hist.epochs.push_back(es);

    for (const auto& p : learnable_params(model)) {
      require_finite(p.data->data(), p.data->size(), p.name.c_str());
    }
  }

  if (have_best) model = std::move(best);
  return hist;
}

}  // namespace canids

#endif  // CANIDS_TRAIN_HPP
