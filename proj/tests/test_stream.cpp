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

#include <catch_amalgamated.hpp>

#include "canids/stream.hpp"
#include "canids/train.hpp"
#include "support/oracles.hpp"

using namespace canids;
using canids::testing::toy_separable_windows;

namespace {

Model trained_tiny(std::uint64_t seed) {
  auto m = build_model<float>(ModelSpec::tiny(4, 16), seed);
  m.attack = AttackKind::DoS;
  Hyperparams hp;
  hp.epochs = 4;
  hp.batch_size = 32;
  hp.lr = 1e-3;
  train(m, toy_separable_windows(256, seed), toy_separable_windows(64, seed),
        hp, seed);
  return m;
}

Trace small_dos_trace(double seconds, std::uint64_t seed) {
  GeneratorConfig cfg = GeneratorConfig::defaults(AttackKind::DoS);
  cfg.duration_s = seconds;
  cfg.dos.period_s = 0.002;
  cfg.rng_seed = seed;
  return generate_trace(cfg);
}

struct ThrowingPredictor {
  std::size_t window() const { return 4; }
  unsigned id_width() const { return 16; }
  std::array<float, 2> operator()(const Tensor4<float>&) const {
    throw std::runtime_error("boom");
  }
  Tensor4<float> forward_batch(const Tensor4<float>& t) const {
    throw std::runtime_error("boom");
  }
};

}  // namespace

TEST_CASE("stream: warm-up frames produce no verdicts") {
  const Model m = trained_tiny(1);
  Trace t = small_dos_trace(1.0, 2);
  t.frames.resize(3);  // n - 1
  const auto verdicts = stream(t, FloatPredictor{&m}, 4, 16);
  CHECK(verdicts.empty());
}

TEST_CASE("stream: n+k frames produce k+1 verdicts in frame order") {
  const Model m = trained_tiny(1);
  Trace t = small_dos_trace(1.0, 3);
  t.frames.resize(40);
  const auto verdicts = stream(t, FloatPredictor{&m}, 4, 16);
  REQUIRE(verdicts.size() == 37);
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    CHECK(verdicts[i].frame_index == i + 3);
    CHECK(verdicts[i].latency_ns > 0);
  }
}

TEST_CASE("stream verdicts equal the offline pipeline, float and int8") {
  const Model m = trained_tiny(5);
  const Model folded = fold_batchnorm(m);
  const Trace t = small_dos_trace(2.0, 7);
  const auto windows = windows_from_trace(t, 4, 16);
  const QuantizedModel qm = quantize_model(folded, calibrate(folded, windows));

  SECTION("float path") {
    const auto verdicts = stream(t, FloatPredictor{&m}, 4, 16);
    REQUIRE(verdicts.size() == windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const auto p = predict(m, to_tensor<float>(windows[i]));
      const FrameLabel offline =
          p[1] > p[0] ? FrameLabel::Attack : FrameLabel::Normal;
      REQUIRE(verdicts[i].predicted == offline);
      REQUIRE(verdicts[i].p_attack == p[1]);
    }
  }
  SECTION("quantized path") {
    const auto verdicts = stream(t, QuantPredictor{&qm}, 4, 16);
    REQUIRE(verdicts.size() == windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const auto p = quantized_predict(qm, to_tensor<float>(windows[i]));
      const FrameLabel offline =
          p[1] > p[0] ? FrameLabel::Attack : FrameLabel::Normal;
      REQUIRE(verdicts[i].predicted == offline);
    }
  }
}

TEST_CASE("stream: deeper queues preserve order and results") {
  const Model m = trained_tiny(6);
  const Trace t = small_dos_trace(1.0, 8);
  const auto base = stream(t, FloatPredictor{&m}, 4, 16);
  StreamOptions opt;
  opt.queue_depth = 4;
  const auto deep = stream(t, FloatPredictor{&m}, 4, 16, opt);
  REQUIRE(deep.size() == base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(deep[i].frame_index == base[i].frame_index);
    CHECK(deep[i].predicted == base[i].predicted);
  }
}

TEST_CASE("stream surfaces worker failures") {
  const Trace t = small_dos_trace(0.5, 9);
  CHECK_THROWS_AS(stream(t, ThrowingPredictor{}, 4, 16), StreamError);
}

TEST_CASE("stream rejects mismatched model geometry") {
  const Model m = trained_tiny(7);
  const Trace t = small_dos_trace(0.5, 10);
  CHECK_THROWS_AS(stream(t, FloatPredictor{&m}, 8, 16), ShapeMismatch);
}

TEST_CASE("bench: per-message report is complete and ordered") {
  const Model m = trained_tiny(8);
  const Trace t = small_dos_trace(3.0, 11);
  REQUIRE(windows_from_trace(t, 4, 16).size() >= 1000);
  const LatencyReport r = bench(t, FloatPredictor{&m}, 4, 16);
  CHECK(r.count == t.frames.size() - 3);
  CHECK(r.repeats == 1);
  CHECK(r.min_ms > 0);
  CHECK(r.min_ms <= r.median_ms);
  CHECK(r.median_ms <= r.p95_ms);
  CHECK(r.p95_ms <= r.p99_ms);
  CHECK(r.p99_ms <= r.max_ms);
  CHECK(r.mean_ms > 0);
  CHECK(r.throughput_mps > 0);
  const std::string text = render_latency_report(r, "this host (float32)");
  CHECK(text.find("mean(ms)") != std::string::npos);
  const std::string kv = render_latency_kv(r);
  CHECK(kv.find("bench.mode=per_message") != std::string::npos);
}

TEST_CASE("bench: batch mode records the grouping") {
  const Model m = trained_tiny(9);
  const Trace t = small_dos_trace(3.0, 12);
  BenchOptions opt;
  opt.mode = BenchMode::Batch;
  opt.batch_size = 128;
  const LatencyReport r = bench(t, FloatPredictor{&m}, 4, 16, opt);
  CHECK(r.mode == BenchMode::Batch);
  CHECK(r.batch_size == 128);
  CHECK(r.count == t.frames.size() - 3);
  CHECK(r.min_ms <= r.median_ms);
  CHECK(r.median_ms <= r.max_ms);
}

TEST_CASE("bench refuses thin traces") {
  const Model m = trained_tiny(10);
  Trace t = small_dos_trace(1.0, 13);
  t.frames.resize(500);
  CHECK_THROWS_AS(bench(t, FloatPredictor{&m}, 4, 16), InsufficientSamples);
}

TEST_CASE("spsc queue moves items in order across threads") {
  SpscQueue<int> q(2);
  std::vector<int> got;
  std::thread consumer([&] {
    while (auto v = q.pop()) got.push_back(*v);
  });
  for (int i = 0; i < 1000; ++i) q.push(int{i});
  q.close();
  consumer.join();
  REQUIRE(got.size() == 1000);
  for (int i = 0; i < 1000; ++i) REQUIRE(got[i] == i);
}
