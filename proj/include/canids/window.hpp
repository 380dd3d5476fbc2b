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

#ifndef CANIDS_WINDOW_HPP
#define CANIDS_WINDOW_HPP

#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

#include "canids/can.hpp"
#include "canids/tensor.hpp"
#include "canids/trace.hpp"

namespace canids {

/// The n most recent encoded CAN ids, oldest first. The window label is the
/// label of the newest frame: the verdict is attributed to the message that
/// triggered inference.
struct IdWindow {
  std::vector<IdBits> rows;
  FrameLabel label = FrameLabel::Normal;

  std::size_t n() const { return rows.size(); }
  std::size_t width() const { return rows.empty() ? 0 : rows[0].width(); }
};

/// FIFO of encoded ids, one slot per received message. Single-owner: one
/// producer pushes; emitted windows are immutable snapshots.
class WindowBuffer {
 public:
  WindowBuffer(std::size_t n, unsigned width) : n_(n), width_(width) {
    if (n == 0) throw ConfigError("window length must be >= 1");
    detail::id_field_bits(width);  // validates width
  }

  /// Appends the frame's encoded id, evicting the oldest entry. Returns a
  /// window snapshot once n frames have been seen; warm-up pushes yield
  /// nothing.
  std::optional<IdWindow> push(const CanFrame& frame) {
    rows_.push_back(encode_id(frame, width_));
    if (rows_.size() > n_) rows_.pop_front();
    newest_label_ = frame.label;
    if (rows_.size() < n_) return std::nullopt;
    IdWindow w;
    w.rows.assign(rows_.begin(), rows_.end());
    w.label = newest_label_ == FrameLabel::Attack ? FrameLabel::Attack
                                                  : FrameLabel::Normal;
    return w;
  }

  std::size_t n() const { return n_; }
  unsigned width() const { return width_; }

 private:
  std::size_t n_;
  unsigned width_;
  std::deque<IdBits> rows_;
  FrameLabel newest_label_ = FrameLabel::Normal;
};

/// All stride-1 windows of the trace: max(0, len - n + 1) of them, in
/// chronological order.
inline std::vector<IdWindow> windows_from_trace(const Trace& trace,
                                                std::size_t n,
                                                unsigned width) {
  std::vector<IdWindow> out;
  if (trace.frames.size() >= n) out.reserve(trace.frames.size() - n + 1);
  WindowBuffer buf(n, width);
  for (const auto& frame : trace.frames) {
    if (auto w = buf.push(frame)) out.push_back(std::move(*w));
  }
  return out;
}

/// Window -> (1, n, W, 1) tensor; row i column j is bit j of rows[i].
template <typename T>
Tensor4<T> to_tensor(const IdWindow& window) {
  const std::size_t n = window.n(), w = window.width();
  Tensor4<T> t(1, n, w, 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      t(0, i, j, 0) = static_cast<T>(window.rows[i].bits[j]);
    }
  }
  return t;
}

/// Stacks windows[indices] into a (B, n, W, 1) batch tensor.
template <typename T>
Tensor4<T> stack_windows(const std::vector<IdWindow>& windows,
                         const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw ShapeMismatch("stack_windows: empty batch");
  const std::size_t n = windows[indices[0]].n();
  const std::size_t w = windows[indices[0]].width();
  Tensor4<T> t(indices.size(), n, w, 1);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const IdWindow& win = windows[indices[b]];
    if (win.n() != n || win.width() != w) {
      throw ShapeMismatch("stack_windows: ragged window set");
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        t(b, i, j, 0) = static_cast<T>(win.rows[i].bits[j]);
      }
    }
  }
  return t;
}

inline std::vector<int> window_labels(const std::vector<IdWindow>& windows,
                                      const std::vector<std::size_t>& indices) {
  std::vector<int> labels(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    labels[i] = windows[indices[i]].label == FrameLabel::Attack ? 1 : 0;
  }
  return labels;
}

}  // namespace canids

#endif  // CANIDS_WINDOW_HPP
