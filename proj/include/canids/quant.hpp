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

#ifndef CANIDS_QUANT_HPP
#define CANIDS_QUANT_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "canids/metrics.hpp"
#include "canids/model.hpp"
#include "canids/window.hpp"

namespace canids {

inline constexpr double kScaleFloor = 1e-8;  // for degenerate tensors

/// Affine int8 mapping: real = scale * (q - zero_point). Weights are
/// symmetric (zero_point 0, range [-127, 127]); activations are asymmetric
/// per tensor with the zero point pinned to the grid.
struct QuantParams {
  double scale = 1.0;
  std::int32_t zero_point = 0;
};

/// Asymmetric params covering [mn, mx], widened to include 0 so that the
/// real value 0 lands exactly on a grid point.
inline QuantParams affine_from_range(double mn, double mx) {
  mn = std::min(mn, 0.0);
  mx = std::max(mx, 0.0);
  QuantParams q;
  q.scale = std::max((mx - mn) / 255.0, kScaleFloor);
  const double zp = -128.0 - mn / q.scale;
  q.zero_point = static_cast<std::int32_t>(
      std::min(127.0, std::max(-128.0, std::round(zp))));
  return q;
}

inline std::int8_t quantize_value(double x, const QuantParams& q) {
  const double v = std::round(x / q.scale) + q.zero_point;
  return static_cast<std::int8_t>(std::min(127.0, std::max(-128.0, v)));
}

inline double dequantize_value(std::int8_t v, const QuantParams& q) {
  return q.scale * (static_cast<double>(v) - q.zero_point);
}

// ---------------------------------------------------------------------------
// Fixed-point requantization multiplier: M ~= mult * 2^(shift - 31) with
// mult a normalized int32 in [2^30, 2^31).
// ---------------------------------------------------------------------------

inline void quantize_multiplier(double m, std::int32_t* mult,
                                std::int32_t* shift) {
  if (m == 0.0) {
    *mult = 0;
    *shift = 0;
    return;
  }
  int exp = 0;
  const double q = std::frexp(m, &exp);  // q in [0.5, 1)
  std::int64_t q_fixed = std::llround(q * (1ll << 31));
  if (q_fixed == (1ll << 31)) {
    q_fixed /= 2;
    ++exp;
  }
  *mult = static_cast<std::int32_t>(q_fixed);
  *shift = exp;
}

/// Rounding fixed-point multiply: round(x * mult * 2^(shift-31)).
inline std::int32_t multiply_by_quantized_multiplier(std::int32_t x,
                                                     std::int32_t mult,
                                                     std::int32_t shift) {
  const std::int64_t total_shift = 31 - shift;
  if (total_shift > 62) return 0;
  const std::int64_t round = std::int64_t{1} << (total_shift - 1);
  const std::int64_t result =
      (static_cast<std::int64_t>(x) * mult + round) >> total_shift;
  const std::int64_t lo = std::numeric_limits<std::int32_t>::min();
  const std::int64_t hi = std::numeric_limits<std::int32_t>::max();
  return static_cast<std::int32_t>(std::min(hi, std::max(lo, result)));
}

// ---------------------------------------------------------------------------
// Batchnorm folding
// ---------------------------------------------------------------------------

/// Merges each BN layer into the preceding conv: kernel scaled by
/// gamma/sqrt(var+eps) per output channel, bias shifted accordingly. The
/// returned model has batchnorm disabled and matches the original's
/// inference outputs up to rounding.
inline Model fold_batchnorm(const Model& m) {
  if (!m.spec.batchnorm) {
    throw ConfigError("model has no batchnorm layers to fold");
  }
  for (const auto& bn : m.bns) {
    if (!bn.stats_ready) {
      throw MissingRunningStats("batchnorm running statistics not populated");
    }
  }
  Model folded = m;
  folded.spec.batchnorm = false;
  folded.bns.clear();
  for (std::size_t i = 0; i < m.convs.size(); ++i) {
    const auto& bn = m.bns[i];
    auto& conv = folded.convs[i];
    const std::size_t co = conv.out_channels();
    const std::size_t per = conv.kernel.size() / co;
    for (std::size_t c = 0; c < co; ++c) {
      const double s =
          static_cast<double>(bn.gamma[c]) /
          std::sqrt(static_cast<double>(bn.running_var[c]) + m.spec.bn_eps);
      float* k = conv.kernel.data();
      for (std::size_t j = 0; j < per; ++j) {
        k[j * co + c] = static_cast<float>(k[j * co + c] * s);
      }
      conv.bias[c] = static_cast<float>(
          (static_cast<double>(conv.bias[c]) - bn.running_mean[c]) * s +
          bn.beta[c]);
    }
  }
  return folded;
}

// ---------------------------------------------------------------------------
// Calibration: per-boundary min/max over a calibration set
// ---------------------------------------------------------------------------

struct Calibration {
  QuantParams input;
  std::vector<QuantParams> block_out;  // post-ReLU, one per conv block
  QuantParams logits;
};

/// Runs the model in inference mode over the calibration windows and maps
/// observed per-boundary ranges to asymmetric int8 params. Deterministic:
/// windows are visited in order.
inline Calibration calibrate(const Model& model,
                             const std::vector<IdWindow>& calib_set,
                             std::size_t batch_size = 256) {
  if (calib_set.empty()) {
    throw EmptyCalibrationSet("calibration set is empty");
  }
  const std::size_t nb = model.convs.size();
  struct Range {
    double mn = std::numeric_limits<double>::infinity();
    double mx = -std::numeric_limits<double>::infinity();
    void see(const Tensor4<float>& t) {
      const float* d = t.data();
      for (std::size_t i = 0; i < t.size(); ++i) {
        mn = std::min(mn, static_cast<double>(d[i]));
        mx = std::max(mx, static_cast<double>(d[i]));
      }
    }
  };
  Range in_r, logit_r;
  std::vector<Range> block_r(nb);

  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < calib_set.size(); start += batch_size) {
    const std::size_t end = std::min(calib_set.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    Tensor4<float> cur = stack_windows<float>(calib_set, idx);
    require_input_shape(model.spec, cur);
    in_r.see(cur);
    for (std::size_t i = 0; i < nb; ++i) {
      cur = conv2d_forward(cur, model.convs[i]);
      if (model.spec.batchnorm) {
        cur = batchnorm_forward_infer(cur, model.bns[i],
                                      static_cast<float>(model.spec.bn_eps));
      }
      relu_inplace(cur);
      block_r[i].see(cur);
    }
    Tensor4<float> logits = dense_forward(cur, model.head);
    logit_r.see(logits);
  }

  Calibration cal;
  cal.input = affine_from_range(in_r.mn, in_r.mx);
  cal.block_out.reserve(nb);
  for (const auto& r : block_r) {
    cal.block_out.push_back(affine_from_range(r.mn, r.mx));
  }
  cal.logits = affine_from_range(logit_r.mn, logit_r.mx);
  return cal;
}

// ---------------------------------------------------------------------------
// Quantized model
// ---------------------------------------------------------------------------

struct QConvLayer {
  std::array<std::size_t, 4> kdims{};  // (3, 3, c_in, c_out)
  std::vector<std::int8_t> kernel;     // same layout as the float kernel
  std::vector<std::int32_t> bias;      // scale = in_scale * w_scale[c]
  std::vector<float> w_scale;          // per output channel, symmetric
  QuantParams in_q, out_q;
  std::vector<std::int32_t> mult, shift;  // per-channel requantization
  bool relu_fused = true;
};

struct QDenseLayer {
  std::size_t in = 0, out = 0;
  std::vector<std::int8_t> weight;  // (in, out)
  std::vector<std::int32_t> bias;
  std::vector<float> w_scale;  // per output unit
  QuantParams in_q, out_q;
  std::vector<std::int32_t> mult, shift;
};

struct QuantizedModel {
  ModelSpec spec;  // batchnorm already folded away
  AttackKind attack = AttackKind::None;
  std::uint64_t seed = 0;
  QuantParams input_q;
  std::vector<QConvLayer> convs;
  QDenseLayer head;
};

namespace detail {

/// Per-output-channel symmetric weight quantization; `stride` is the
/// distance between consecutive values of one channel (c_out for kernels).
inline void quantize_channel(const float* w, std::size_t count,
                             std::size_t stride, std::size_t offset,
                             double in_scale, double out_scale, float fbias,
                             std::int8_t* qw, float* w_scale,
                             std::int32_t* qbias, std::int32_t* mult,
                             std::int32_t* shift) {
  double wmax = 0;
  for (std::size_t j = 0; j < count; ++j) {
    wmax = std::max(wmax, std::abs(static_cast<double>(w[j * stride +
                                                         offset])));
  }
  const double s = std::max(wmax / 127.0, kScaleFloor);
  *w_scale = static_cast<float>(s);
  for (std::size_t j = 0; j < count; ++j) {
    const double q = std::round(static_cast<double>(w[j * stride + offset]) /
                                s);
    qw[j * stride + offset] =
        static_cast<std::int8_t>(std::min(127.0, std::max(-127.0, q)));
  }
  const double bias_scale = in_scale * s;
  const double qb = std::round(static_cast<double>(fbias) / bias_scale);
  const double lo = std::numeric_limits<std::int32_t>::min();
  const double hi = std::numeric_limits<std::int32_t>::max();
  *qbias = static_cast<std::int32_t>(std::min(hi, std::max(lo, qb)));
  quantize_multiplier(bias_scale / out_scale, mult, shift);
}

}  // namespace detail

/// Converts a folded float model to int8: per-output-channel symmetric
/// weights, int32 biases at in_scale*w_scale, and per-channel fixed-point
/// requantization multipliers into the next activation's grid.
inline QuantizedModel quantize_model(const Model& folded,
                                     const Calibration& cal) {
  if (folded.spec.batchnorm) {
    throw ConfigError("quantize_model expects a batchnorm-folded model");
  }
  if (cal.block_out.size() != folded.convs.size()) {
    throw ShapeMismatch("calibration does not match model depth");
  }
  QuantizedModel qm;
  qm.spec = folded.spec;
  qm.attack = folded.attack;
  qm.seed = folded.seed;
  qm.input_q = cal.input;

  for (std::size_t i = 0; i < folded.convs.size(); ++i) {
    const auto& conv = folded.convs[i];
    QConvLayer q;
    q.kdims = conv.kernel.dims();
    q.kernel.resize(conv.kernel.size());
    const std::size_t co = q.kdims[3];
    const std::size_t per = conv.kernel.size() / co;
    q.bias.resize(co);
    q.w_scale.resize(co);
    q.mult.resize(co);
    q.shift.resize(co);
    q.in_q = i == 0 ? cal.input : cal.block_out[i - 1];
    q.out_q = cal.block_out[i];
    for (std::size_t c = 0; c < co; ++c) {
      detail::quantize_channel(conv.kernel.data(), per, co, c, q.in_q.scale,
                               q.out_q.scale, conv.bias[c], q.kernel.data(),
                               &q.w_scale[c], &q.bias[c], &q.mult[c],
                               &q.shift[c]);
    }
    qm.convs.push_back(std::move(q));
  }

  QDenseLayer& h = qm.head;
  h.in = folded.head.in;
  h.out = folded.head.out;
  h.weight.resize(h.in * h.out);
  h.bias.resize(h.out);
  h.w_scale.resize(h.out);
  h.mult.resize(h.out);
  h.shift.resize(h.out);
  h.in_q = cal.block_out.back();
  h.out_q = cal.logits;
  for (std::size_t c = 0; c < h.out; ++c) {
    detail::quantize_channel(folded.head.weight.data(), h.in, h.out, c,
                             h.in_q.scale, h.out_q.scale,
                             folded.head.bias[c], h.weight.data(),
                             &h.w_scale[c], &h.bias[c], &h.mult[c],
                             &h.shift[c]);
  }
  return qm;
}

// ---------------------------------------------------------------------------
// Integer inference path (int8 x int8 -> int32 accumulate, fixed-point
// requantization, ReLU fused as an integer clamp; softmax stays in float).
// ---------------------------------------------------------------------------

namespace detail {

struct QTensor {
  std::size_t b = 0, h = 0, w = 0, c = 0;
  std::vector<std::int8_t> data;

  void resize(std::size_t b_, std::size_t h_, std::size_t w_,
              std::size_t c_) {
    b = b_;
    h = h_;
    w = w_;
    c = c_;
    data.assign(b * h * w * c, 0);
  }
  std::size_t offset(std::size_t bi, std::size_t y, std::size_t x) const {
    return ((bi * h + y) * w + x) * c;
  }
};

inline void qconv_forward(const QTensor& x, const QConvLayer& p, QTensor* y) {
  const std::size_t kh = p.kdims[0], kw = p.kdims[1];
  const std::size_t ci = p.kdims[2], co = p.kdims[3];
  if (x.c != ci) throw ShapeMismatch("qconv: channel mismatch");
  const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(kh / 2);
  const std::ptrdiff_t pw = static_cast<std::ptrdiff_t>(kw / 2);
  y->resize(x.b, x.h, x.w, co);
  const std::int32_t zp_in = p.in_q.zero_point;
  const std::int32_t zp_out = p.out_q.zero_point;
  // ReLU on the grid: real 0 quantizes to zp_out.
  const std::int32_t lo = p.relu_fused ? zp_out : -128;

  std::vector<std::int32_t> acc(co);
  for (std::size_t b = 0; b < x.b; ++b) {
    for (std::size_t oy = 0; oy < x.h; ++oy) {
      for (std::size_t ox = 0; ox < x.w; ++ox) {
        for (std::size_t k = 0; k < co; ++k) acc[k] = p.bias[k];
        for (std::size_t ky = 0; ky < kh; ++ky) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) - ph;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(x.h)) continue;
          for (std::size_t kx = 0; kx < kw; ++kx) {
            const std::ptrdiff_t ix =
                static_cast<std::ptrdiff_t>(ox + kx) - pw;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(x.w)) continue;
            const std::int8_t* in =
                x.data.data() + x.offset(b, static_cast<std::size_t>(iy),
                                         static_cast<std::size_t>(ix));
            const std::int8_t* wk =
                p.kernel.data() + (ky * kw + kx) * ci * co;
            for (std::size_t c = 0; c < ci; ++c) {
              const std::int32_t v = static_cast<std::int32_t>(in[c]) - zp_in;
              const std::int8_t* wrow = wk + c * co;
              for (std::size_t k = 0; k < co; ++k) {
                acc[k] += v * static_cast<std::int32_t>(wrow[k]);
              }
            }
          }
        }
        std::int8_t* out = y->data.data() + y->offset(b, oy, ox);
        for (std::size_t k = 0; k < co; ++k) {
          const std::int32_t r =
              multiply_by_quantized_multiplier(acc[k], p.mult[k],
                                               p.shift[k]) +
              zp_out;
          out[k] = static_cast<std::int8_t>(
              std::min<std::int32_t>(127, std::max<std::int32_t>(lo, r)));
        }
      }
    }
  }
}

inline void qdense_forward(const QTensor& x, const QDenseLayer& p,
                           std::vector<std::int8_t>* logits) {
  const std::size_t d = x.h * x.w * x.c;
  if (d != p.in) throw ShapeMismatch("qdense: input size mismatch");
  logits->assign(x.b * p.out, 0);
  const std::int32_t zp_in = p.in_q.zero_point;
  const std::int32_t zp_out = p.out_q.zero_point;
  for (std::size_t b = 0; b < x.b; ++b) {
    const std::int8_t* xb = x.data.data() + b * d;
    for (std::size_t k = 0; k < p.out; ++k) {
      std::int64_t acc = p.bias[k];
      for (std::size_t i = 0; i < d; ++i) {
        acc += static_cast<std::int64_t>(
                   static_cast<std::int32_t>(xb[i]) - zp_in) *
               static_cast<std::int32_t>(p.weight[i * p.out + k]);
      }
      const std::int32_t acc32 = static_cast<std::int32_t>(
          std::min<std::int64_t>(std::numeric_limits<std::int32_t>::max(),
                                 std::max<std::int64_t>(
                                     std::numeric_limits<std::int32_t>::min(),
                                     acc)));
      const std::int32_t r =
          multiply_by_quantized_multiplier(acc32, p.mult[k], p.shift[k]) +
          zp_out;
      (*logits)[b * p.out + k] = static_cast<std::int8_t>(
          std::min<std::int32_t>(127, std::max<std::int32_t>(-128, r)));
    }
  }
}

}  // namespace detail

/// Batched integer-path inference; returns softmax probabilities (B,1,1,2)
/// computed in float on the dequantized logits. Bit-exact across runs and
/// threads for identical inputs.
inline Tensor4<float> quantized_forward(const QuantizedModel& qm,
                                        const Tensor4<float>& x) {
  require_input_shape(qm.spec, x);
  detail::QTensor cur;
  cur.resize(x.batch(), x.height(), x.width(), x.channels());
  const float* xd = x.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    cur.data[i] = quantize_value(static_cast<double>(xd[i]), qm.input_q);
  }

  detail::QTensor next;
  for (const auto& layer : qm.convs) {
    detail::qconv_forward(cur, layer, &next);
    std::swap(cur, next);
  }

  std::vector<std::int8_t> qlogits;
  detail::qdense_forward(cur, qm.head, &qlogits);

  Tensor4<float> logits(x.batch(), 1, 1, qm.head.out);
  for (std::size_t b = 0; b < x.batch(); ++b) {
    for (std::size_t k = 0; k < qm.head.out; ++k) {
      logits(b, 0, 0, k) = static_cast<float>(
          dequantize_value(qlogits[b * qm.head.out + k], qm.head.out_q));
    }
  }
  return softmax_rows(logits);
}

inline std::array<float, 2> quantized_predict(const QuantizedModel& qm,
                                              const Tensor4<float>& window) {
  if (window.batch() != 1) {
    throw ShapeMismatch("quantized_predict expects a single-window tensor");
  }
  Tensor4<float> probs = quantized_forward(qm, window);
  return {probs(0, 0, 0, 0), probs(0, 0, 0, 1)};
}

// ---------------------------------------------------------------------------
// Paired float/int8 evaluation
// ---------------------------------------------------------------------------

struct ModelComparison {
  ConfusionMatrix float_cm, quant_cm;
  Metrics float_metrics, quant_metrics;
  double label_agreement = 0;  // fraction of windows where verdicts match
  std::size_t count = 0;
};

/// Runs both paths over the same windows and reports paired metrics plus
/// the verdict agreement rate.
inline ModelComparison compare_models(const Model& model,
                                      const QuantizedModel& qm,
                                      const std::vector<IdWindow>& windows,
                                      std::size_t batch_size = 256) {
  ModelComparison cmp;
  cmp.count = windows.size();
  if (windows.empty()) return cmp;
  std::size_t agree = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < windows.size(); start += batch_size) {
    const std::size_t end = std::min(windows.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    Tensor4<float> bx = stack_windows<float>(windows, idx);
    Tensor4<float> fp = forward_infer(model, bx);
    Tensor4<float> qp = quantized_forward(qm, bx);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const FrameLabel actual = windows[idx[b]].label;
      const FrameLabel f_pred = fp(b, 0, 0, 1) > fp(b, 0, 0, 0)
                                    ? FrameLabel::Attack
                                    : FrameLabel::Normal;
      const FrameLabel q_pred = qp(b, 0, 0, 1) > qp(b, 0, 0, 0)
                                    ? FrameLabel::Attack
                                    : FrameLabel::Normal;
      accumulate(cmp.float_cm, f_pred, actual);
      accumulate(cmp.quant_cm, q_pred, actual);
      if (f_pred == q_pred) ++agree;
    }
  }
  cmp.float_metrics = compute(cmp.float_cm);
  cmp.quant_metrics = compute(cmp.quant_cm);
  cmp.label_agreement =
      static_cast<double>(agree) / static_cast<double>(cmp.count);
  return cmp;
}

}  // namespace canids

#endif  // CANIDS_QUANT_HPP
