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

#ifndef CANIDS_METRICS_HPP
#define CANIDS_METRICS_HPP

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "canids/can.hpp"
#include "canids/error.hpp"

namespace canids {

/// Binary confusion counts with Attack as the positive class.
struct ConfusionMatrix {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }

  /// Cell-wise sum; lets evaluation shards be merged.
  ConfusionMatrix& merge(const ConfusionMatrix& other) {
    tp += other.tp;
    fp += other.fp;
    fn += other.fn;
    tn += other.tn;
    return *this;
  }
};

inline void accumulate(ConfusionMatrix& cm, FrameLabel predicted,
                       FrameLabel actual) {
  const bool pred_attack = predicted == FrameLabel::Attack;
  const bool is_attack = actual == FrameLabel::Attack;
  if (pred_attack && is_attack) {
    ++cm.tp;
  } else if (pred_attack && !is_attack) {
    ++cm.fp;
  } else if (!pred_attack && is_attack) {
    ++cm.fn;
  } else {
    ++cm.tn;
  }
}

/// Derived rates. A metric whose denominator is zero is left unset and
/// rendered as "-"; the published evaluation never hits that case.
struct Metrics {
  std::optional<double> precision, recall, f1, fpr, fnr;
  double accuracy = 0;
};

inline Metrics compute(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw EmptyMatrix("empty confusion matrix");
  Metrics m;
  const auto ratio = [](std::uint64_t num,
                        std::uint64_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.recall = ratio(cm.tp, cm.tp + cm.fn);
  m.fpr = ratio(cm.fp, cm.fp + cm.tn);
  m.fnr = ratio(cm.fn, cm.fn + cm.tp);
  if (m.precision && m.recall && (*m.precision + *m.recall) > 0) {
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  m.accuracy = static_cast<double>(cm.tp + cm.tn) /
               static_cast<double>(cm.total());
  return m;
}

/// Arithmetic mean of per-attack accuracies.
inline double average_accuracy(const std::vector<Metrics>& per_attack) {
  if (per_attack.empty()) throw EmptyMatrix("no metrics to average");
  double sum = 0;
  for (const auto& m : per_attack) sum += m.accuracy;
  return sum / static_cast<double>(per_attack.size());
}

// ---------------------------------------------------------------------------
// Rendering: ratios at 4 decimals, FPR/FNR as percentages at 2 decimals.
// ---------------------------------------------------------------------------

inline std::string format_ratio(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *v);
  return buf;
}

inline std::string format_percent(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", *v * 100.0);
  return buf;
}

struct MetricsRow {
  std::string attack;
  std::string model;  // "float32" or "int8"
  Metrics metrics;
};

inline std::string render_metrics_table(const std::vector<MetricsRow>& rows) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %-8s %-10s %-8s %-8s %-7s %-7s\n",
                "attack", "model", "precision", "recall", "f1", "fpr(%)",
                "fnr(%)");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-10s %-8s %-10s %-8s %-8s %-7s %-7s\n",
                  r.attack.c_str(), r.model.c_str(),
                  format_ratio(r.metrics.precision).c_str(),
                  format_ratio(r.metrics.recall).c_str(),
                  format_ratio(r.metrics.f1).c_str(),
                  format_percent(r.metrics.fpr).c_str(),
                  format_percent(r.metrics.fnr).c_str());
    out += line;
  }
  return out;
}

inline std::string render_confusion_table(const std::string& title,
                                          const ConfusionMatrix& cm) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%s\n%-14s %16s %16s\n", title.c_str(),
                "", "predicted attack", "predicted normal");
  out += line;
  std::snprintf(line, sizeof(line), "%-14s %16llu %16llu\n", "true attack",
                static_cast<unsigned long long>(cm.tp),
                static_cast<unsigned long long>(cm.fn));
  out += line;
  std::snprintf(line, sizeof(line), "%-14s %16llu %16llu\n", "true normal",
                static_cast<unsigned long long>(cm.fp),
                static_cast<unsigned long long>(cm.tn));
  out += line;
  return out;
}

/// Machine-readable key=value lines, full precision.
inline std::string render_kv(const std::string& prefix,
                             const ConfusionMatrix& cm, const Metrics& m) {
  std::string out;
  char line[128];
  const auto emit_count = [&](const char* key, std::uint64_t v) {
    std::snprintf(line, sizeof(line), "%s.%s=%llu\n", prefix.c_str(), key,
                  static_cast<unsigned long long>(v));
    out += line;
  };
  emit_count("tp", cm.tp);
  emit_count("fp", cm.fp);
  emit_count("fn", cm.fn);
  emit_count("tn", cm.tn);
  const auto emit_metric = [&](const char* key,
                               const std::optional<double>& v) {
    if (v) {
      std::snprintf(line, sizeof(line), "%s.%s=%.9f\n", prefix.c_str(), key,
                    *v);
    } else {
      std::snprintf(line, sizeof(line), "%s.%s=undefined\n", prefix.c_str(),
                    key);
    }
    out += line;
  };
  emit_metric("precision", m.precision);
  emit_metric("recall", m.recall);
  emit_metric("f1", m.f1);
  emit_metric("fpr", m.fpr);
  emit_metric("fnr", m.fnr);
  emit_metric("accuracy", m.accuracy);
  return out;
}

}  // namespace canids

#endif  // CANIDS_METRICS_HPP
