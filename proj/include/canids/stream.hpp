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

#ifndef CANIDS_STREAM_HPP
#define CANIDS_STREAM_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <numeric>
#include <optional>
#include <thread>
#include <vector>

#include "canids/model.hpp"
#include "canids/quant.hpp"
#include "canids/window.hpp"

namespace canids {

// ---------------------------------------------------------------------------
// Bounded single-producer/single-consumer ring. Depth 1 models one in-flight
// inference (the non-threaded accelerator baseline); larger depths emulate
// the threaded offload mode.
// ---------------------------------------------------------------------------

template <typename T>
class SpscQueue {
 public:
  explicit SpscQueue(std::size_t capacity)
      : slots_(capacity + 1), ring_(capacity + 1) {
    if (capacity == 0) throw ConfigError("queue depth must be >= 1");
  }

  /// Blocks while the ring is full.
  void push(T item) {
    const std::size_t head = head_.load(std::memory_order_relaxed);
    const std::size_t next = (head + 1) % ring_;
    while (next == tail_.load(std::memory_order_acquire)) {
      std::this_thread::yield();
    }
    slots_[head] = std::move(item);
    head_.store(next, std::memory_order_release);
  }

  /// Blocks while empty; returns nullopt once closed and drained.
  std::optional<T> pop() {
    const std::size_t tail = tail_.load(std::memory_order_relaxed);
    while (tail == head_.load(std::memory_order_acquire)) {
      if (closed_.load(std::memory_order_acquire) &&
          tail == head_.load(std::memory_order_acquire)) {
        return std::nullopt;
      }
      std::this_thread::yield();
    }
    T item = std::move(slots_[tail]);
    tail_.store((tail + 1) % ring_, std::memory_order_release);
    return item;
  }

  void close() { closed_.store(true, std::memory_order_release); }

 private:
  std::vector<T> slots_;
  std::size_t ring_;
  std::atomic<std::size_t> head_{0};
  std::atomic<std::size_t> tail_{0};
  std::atomic<bool> closed_{false};
};

// ---------------------------------------------------------------------------
// Predictors: the uniform face of the float and integer paths.
// ---------------------------------------------------------------------------

struct FloatPredictor {
  const Model* model;

  std::array<float, 2> operator()(const Tensor4<float>& t) const {
    return predict(*model, t);
  }
  Tensor4<float> forward_batch(const Tensor4<float>& t) const {
    return forward_infer(*model, t);
  }
  std::size_t window() const { return model->spec.window; }
  unsigned id_width() const { return model->spec.id_width; }
};

struct QuantPredictor {
  const QuantizedModel* model;

  std::array<float, 2> operator()(const Tensor4<float>& t) const {
    return quantized_predict(*model, t);
  }
  Tensor4<float> forward_batch(const Tensor4<float>& t) const {
    return quantized_forward(*model, t);
  }
  std::size_t window() const { return model->spec.window; }
  unsigned id_width() const { return model->spec.id_width; }
};

// ---------------------------------------------------------------------------
// Streaming engine
// ---------------------------------------------------------------------------

struct StreamVerdict {
  std::size_t frame_index = 0;  // index in the trace
  FrameLabel predicted = FrameLabel::Normal;
  float p_attack = 0;
  std::int64_t latency_ns = 0;  // enqueue-to-verdict
};

struct StreamOptions {
  std::size_t queue_depth = 1;
};

/// Receive-path emulation: the caller thread owns the FIFO and feeds frames;
/// a worker thread owns the model and runs inference on snapshot tensors
/// handed over through a bounded queue. Every post-warm-up frame yields
/// exactly one verdict, in frame order.
template <typename Predictor>
std::vector<StreamVerdict> stream(const Trace& trace, const Predictor& pred,
                                  std::size_t n, unsigned width,
                                  StreamOptions opt = {}) {
  if (pred.window() != n || pred.id_width() != width) {
    throw ShapeMismatch("model expects n=" + std::to_string(pred.window()) +
                        " width=" + std::to_string(pred.id_width()));
  }

  struct Job {
    std::size_t index;
    Tensor4<float> tensor;
    std::chrono::steady_clock::time_point enqueued;
  };

  SpscQueue<Job> queue(opt.queue_depth);
  std::vector<StreamVerdict> verdicts;
  std::exception_ptr worker_error;

  std::thread worker([&] {
    while (auto job = queue.pop()) {
      if (worker_error) continue;  // drain so the feeder never blocks
      try {
        const auto p = pred(job->tensor);
        StreamVerdict v;
        v.frame_index = job->index;
        v.predicted = p[1] > p[0] ? FrameLabel::Attack : FrameLabel::Normal;
        v.p_attack = p[1];
        v.latency_ns = std::max<std::int64_t>(
            1, std::chrono::duration_cast<std::chrono::nanoseconds>(
                   std::chrono::steady_clock::now() - job->enqueued)
                   .count());
        verdicts.push_back(v);
      } catch (...) {
        worker_error = std::current_exception();
      }
    }
  });

  WindowBuffer buf(n, width);
  for (std::size_t i = 0; i < trace.frames.size(); ++i) {
    auto w = buf.push(trace.frames[i]);
    if (!w) continue;
    Job job;
    job.index = i;
    job.tensor = to_tensor<float>(*w);
    job.enqueued = std::chrono::steady_clock::now();
    queue.push(std::move(job));
  }
  queue.close();
  worker.join();

  if (worker_error) {
    try {
      std::rethrow_exception(worker_error);
    } catch (const std::exception& e) {
      throw StreamError(std::string("inference worker failed: ") + e.what());
    }
  }
  return verdicts;
}

// ---------------------------------------------------------------------------
// Latency benchmark
// ---------------------------------------------------------------------------

enum class BenchMode { PerMessage, Batch };

struct BenchOptions {
  BenchMode mode = BenchMode::PerMessage;
  std::size_t repeats = 1;
  std::size_t batch_size = 256;  // batch mode only
};

struct LatencyReport {
  std::size_t count = 0;  // windows evaluated per pass
  std::size_t repeats = 1;
  double mean_ms = 0, median_ms = 0, p95_ms = 0, p99_ms = 0;
  double min_ms = 0, max_ms = 0;
  double throughput_mps = 0;  // messages per second
  BenchMode mode = BenchMode::PerMessage;
  std::size_t batch_size = 0;
};

namespace detail {

inline double percentile_ms(const std::vector<double>& sorted_ns, double q) {
  const std::size_t n = sorted_ns.size();
  std::size_t idx = static_cast<std::size_t>(
      std::ceil(q * static_cast<double>(n)));
  idx = std::min(n, std::max<std::size_t>(1, idx)) - 1;
  return sorted_ns[idx] / 1e6;
}

}  // namespace detail

/// Times only the execute span, back to back, with the input buffers
/// already populated. Per-message mode times each call; batch mode runs
/// grouped calls of `batch_size` windows and attributes time per message.
template <typename Predictor>
LatencyReport bench(const Trace& trace, const Predictor& pred, std::size_t n,
                    unsigned width, BenchOptions opt = {}) {
  if (pred.window() != n || pred.id_width() != width) {
    throw ShapeMismatch("model expects n=" + std::to_string(pred.window()) +
                        " width=" + std::to_string(pred.id_width()));
  }
  if (opt.repeats == 0) throw ConfigError("repeats must be >= 1");
  const auto windows = windows_from_trace(trace, n, width);
  if (windows.size() < 1000) {
    throw InsufficientSamples("bench needs >= 1000 windows, got " +
                              std::to_string(windows.size()));
  }

  using clock = std::chrono::steady_clock;
  std::vector<double> samples_ns;  // one entry per message
  double total_ns = 0;
  float sink = 0;

  if (opt.mode == BenchMode::PerMessage) {
    std::vector<Tensor4<float>> tensors;
    tensors.reserve(windows.size());
    for (const auto& w : windows) tensors.push_back(to_tensor<float>(w));
    samples_ns.reserve(tensors.size() * opt.repeats);
    for (std::size_t r = 0; r < opt.repeats; ++r) {
      for (const auto& t : tensors) {
        const auto t0 = clock::now();
        const auto p = pred(t);
        const auto t1 = clock::now();
        sink += p[1];
        const double ns = static_cast<double>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0)
                .count());
        samples_ns.push_back(ns);
        total_ns += ns;
      }
    }
  } else {
    std::vector<Tensor4<float>> chunks;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < windows.size();
         start += opt.batch_size) {
      const std::size_t end = std::min(windows.size(),
                                       start + opt.batch_size);
      idx.resize(end - start);
      std::iota(idx.begin(), idx.end(), start);
      chunks.push_back(stack_windows<float>(windows, idx));
    }
    samples_ns.reserve(windows.size() * opt.repeats);
    for (std::size_t r = 0; r < opt.repeats; ++r) {
      for (const auto& chunk : chunks) {
        const auto t0 = clock::now();
        const Tensor4<float> probs = pred.forward_batch(chunk);
        const auto t1 = clock::now();
        sink += probs(0, 0, 0, 1);
        const double ns = static_cast<double>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0)
                .count());
        total_ns += ns;
        const double per_msg = ns / static_cast<double>(chunk.batch());
        for (std::size_t i = 0; i < chunk.batch(); ++i) {
          samples_ns.push_back(per_msg);
        }
      }
    }
  }
  volatile float guard = sink;  // keep the timed calls observable
  (void)guard;

  std::sort(samples_ns.begin(), samples_ns.end());
  LatencyReport rep;
  rep.count = windows.size();
  rep.repeats = opt.repeats;
  rep.mode = opt.mode;
  rep.batch_size = opt.mode == BenchMode::Batch ? opt.batch_size : 0;
  rep.mean_ms = total_ns / static_cast<double>(samples_ns.size()) / 1e6;
  rep.min_ms = samples_ns.front() / 1e6;
  rep.max_ms = samples_ns.back() / 1e6;
  rep.median_ms = detail::percentile_ms(samples_ns, 0.50);
  rep.p95_ms = detail::percentile_ms(samples_ns, 0.95);
  rep.p99_ms = detail::percentile_ms(samples_ns, 0.99);
  rep.throughput_mps =
      static_cast<double>(samples_ns.size()) / (total_ns / 1e9);
  return rep;
}

inline std::string render_latency_report(const LatencyReport& r,
                                         const std::string& platform) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-24s %10s %10s %10s %10s %10s %10s\n",
                "platform", "mean(ms)", "median", "p95", "p99", "min", "max");
  out += buf;
  std::snprintf(buf, sizeof(buf),
                "%-24s %10.4f %10.4f %10.4f %10.4f %10.4f %10.4f\n",
                platform.c_str(), r.mean_ms, r.median_ms, r.p95_ms, r.p99_ms,
                r.min_ms, r.max_ms);
  out += buf;
  std::snprintf(buf, sizeof(buf),
                "mode=%s windows=%zu repeats=%zu batch_size=%zu "
                "throughput=%.0f msg/s\n",
                r.mode == BenchMode::Batch ? "batch" : "per_message", r.count,
                r.repeats, r.batch_size, r.throughput_mps);
  out += buf;
  return out;
}

inline std::string render_latency_kv(const LatencyReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "bench.mode=%s\nbench.count=%zu\nbench.repeats=%zu\n"
                "bench.batch_size=%zu\nbench.mean_ms=%.6f\n"
                "bench.median_ms=%.6f\nbench.p95_ms=%.6f\nbench.p99_ms=%.6f\n"
                "bench.min_ms=%.6f\nbench.max_ms=%.6f\n"
                "bench.throughput_mps=%.1f\n",
                r.mode == BenchMode::Batch ? "batch" : "per_message", r.count,
                r.repeats, r.batch_size, r.mean_ms, r.median_ms, r.p95_ms,
                r.p99_ms, r.min_ms, r.max_ms, r.throughput_mps);
  return buf;
}

}  // namespace canids

#endif  // CANIDS_STREAM_HPP
