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

#include <random>

#include "canids/window.hpp"

using namespace canids;

namespace {

CanFrame frame_with(std::uint32_t id, double t,
                    FrameLabel label = FrameLabel::Normal) {
  CanFrame f;
  f.timestamp = t;
  f.id = id;
  f.dlc = 0;
  f.label = label;
  return f;
}

Trace trace_of(const std::vector<std::uint32_t>& ids) {
  Trace t;
  double ts = 0;
  for (auto id : ids) t.frames.push_back(frame_with(id, ts += 0.001));
  return t;
}

}  // namespace

TEST_CASE("push yields nothing during warm-up, then FIFO snapshots") {
  WindowBuffer buf(4, 16);
  CHECK(!buf.push(frame_with(0x0a, 0.0)));
  CHECK(!buf.push(frame_with(0x0b, 0.1)));
  CHECK(!buf.push(frame_with(0x0c, 0.2)));
  auto w = buf.push(frame_with(0x0d, 0.3));
  REQUIRE(w.has_value());
  REQUIRE(w->n() == 4);
  CHECK(decode_id(w->rows[0]) == 0x0au);
  CHECK(decode_id(w->rows[3]) == 0x0du);

  auto w2 = buf.push(frame_with(0x0e, 0.4));
  REQUIRE(w2.has_value());
  CHECK(decode_id(w2->rows[0]) == 0x0bu);
  CHECK(decode_id(w2->rows[3]) == 0x0eu);
  // the earlier snapshot is untouched
  CHECK(decode_id(w->rows[0]) == 0x0au);
}

TEST_CASE("window label follows the newest frame") {
  WindowBuffer buf(2, 16);
  buf.push(frame_with(0x1, 0.0, FrameLabel::Attack));
  auto w = buf.push(frame_with(0x2, 0.1, FrameLabel::Normal));
  REQUIRE(w.has_value());
  CHECK(w->label == FrameLabel::Normal);
  auto w2 = buf.push(frame_with(0x3, 0.2, FrameLabel::Attack));
  REQUIRE(w2.has_value());
  CHECK(w2->label == FrameLabel::Attack);
}

TEST_CASE("windows_from_trace counts and ordering") {
  const Trace t = trace_of({1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  const auto ws = windows_from_trace(t, 4, 16);
  REQUIRE(ws.size() == 7);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    CHECK(decode_id(ws[i].rows[0]) == i + 1);
    CHECK(decode_id(ws[i].rows[3]) == i + 4);
  }
  CHECK(windows_from_trace(trace_of({1, 2}), 4, 16).empty());
}

TEST_CASE("window count property over random trace lengths") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t len = rng() % 40;
    std::vector<std::uint32_t> ids(len);
    for (auto& id : ids) id = static_cast<std::uint32_t>(rng() % 2048);
    const std::size_t n = 1 + rng() % 8;
    const auto ws = windows_from_trace(trace_of(ids), n, 16);
    const std::size_t expect = len >= n ? len - n + 1 : 0;
    REQUIRE(ws.size() == expect);
  }
}

TEST_CASE("shift property between consecutive windows") {
  std::mt19937_64 rng(23);
  std::vector<std::uint32_t> ids(30);
  for (auto& id : ids) id = static_cast<std::uint32_t>(rng() % 2048);
  const auto ws = windows_from_trace(trace_of(ids), 5, 16);
  for (std::size_t i = 0; i + 1 < ws.size(); ++i) {
    for (std::size_t r = 0; r + 1 < 5; ++r) {
      REQUIRE(ws[i + 1].rows[r] == ws[i].rows[r + 1]);
    }
  }
}

TEST_CASE("single attack frame labels exactly one window") {
  // brute-force enumeration over a 20-frame toy trace, n=4
  const std::size_t len = 20, n = 4, k = 11;
  Trace t;
  for (std::size_t i = 0; i < len; ++i) {
    t.frames.push_back(frame_with(0x100 + static_cast<std::uint32_t>(i),
                                  static_cast<double>(i) * 0.01,
                                  i == k ? FrameLabel::Attack
                                         : FrameLabel::Normal));
  }
  const auto ws = windows_from_trace(t, n, 16);
  REQUIRE(ws.size() == len - n + 1);
  std::size_t attack_windows = 0;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const std::size_t newest_frame = i + n - 1;
    const bool expect_attack = newest_frame == k;
    CHECK((ws[i].label == FrameLabel::Attack) == expect_attack);
    if (ws[i].label == FrameLabel::Attack) ++attack_windows;
  }
  CHECK(attack_windows == 1);
}

TEST_CASE("all-Normal trace yields all-Normal windows") {
  const auto ws = windows_from_trace(trace_of({5, 6, 7, 8, 9}), 3, 16);
  for (const auto& w : ws) CHECK(w.label == FrameLabel::Normal);
}

TEST_CASE("to_tensor lays out bits row-major") {
  const Trace t = trace_of({0x316, 0x18f, 0x260, 0x000});
  const auto ws = windows_from_trace(t, 4, 16);
  REQUIRE(ws.size() == 1);
  const auto tensor = to_tensor<float>(ws[0]);
  CHECK(tensor.dims() == std::array<std::size_t, 4>{1, 4, 16, 1});

  // row 0 is encode(0x316) = 0000001100010110
  const std::vector<int> row0 = {0, 0, 0, 0, 0, 0, 1, 1,
                                 0, 0, 0, 1, 0, 1, 1, 0};
  for (std::size_t j = 0; j < 16; ++j) {
    CHECK(tensor(0, 0, j, 0) == static_cast<float>(row0[j]));
  }
  // row 3 is the all-zero id
  for (std::size_t j = 0; j < 16; ++j) CHECK(tensor(0, 3, j, 0) == 0.0f);

  // conservation: tensor sum equals total popcount
  double sum = 0;
  for (std::size_t i = 0; i < tensor.size(); ++i) sum += tensor.data()[i];
  double pops = 0;
  for (std::uint32_t id : {0x316u, 0x18fu, 0x260u, 0x000u}) {
    for (std::uint32_t v = id; v; v >>= 1) pops += v & 1;
  }
  CHECK(sum == pops);

  // binary values only
  for (std::size_t i = 0; i < tensor.size(); ++i) {
    const float v = tensor.data()[i];
    CHECK((v == 0.0f || v == 1.0f));
  }
}

TEST_CASE("all-zero window maps to the zero tensor") {
  const auto ws = windows_from_trace(trace_of({0, 0, 0, 0}), 4, 16);
  const auto tensor = to_tensor<float>(ws[0]);
  for (std::size_t i = 0; i < tensor.size(); ++i) {
    CHECK(tensor.data()[i] == 0.0f);
  }
}

TEST_CASE("stack_windows batches consistent shapes") {
  const auto ws = windows_from_trace(trace_of({1, 2, 3, 4, 5, 6}), 4, 16);
  const auto batch = stack_windows<float>(ws, {0, 1, 2});
  CHECK(batch.dims() == std::array<std::size_t, 4>{3, 4, 16, 1});
  const auto single = to_tensor<float>(ws[1]);
  for (std::size_t y = 0; y < 4; ++y) {
    for (std::size_t x = 0; x < 16; ++x) {
      CHECK(batch(1, y, x, 0) == single(0, y, x, 0));
    }
  }
}
