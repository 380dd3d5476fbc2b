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

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "canids/trace.hpp"

using namespace canids;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Trace random_trace(std::size_t n, std::uint64_t seed, bool labeled) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> uid(0, kMaxStandardId);
  std::uniform_int_distribution<int> udlc(0, 8);
  std::uniform_int_distribution<int> ubyte(0, 255);
  std::uniform_int_distribution<std::int64_t> ustep(0, 20000);
  Trace t;
  t.source = TraceSource::Synthetic;
  std::int64_t us = 1478198376000000;  // microsecond clock
  for (std::size_t i = 0; i < n; ++i) {
    CanFrame f;
    us += ustep(rng);
    f.timestamp = static_cast<double>(us) / 1e6;
    f.id = uid(rng);
    f.dlc = static_cast<std::uint8_t>(udlc(rng));
    for (int b = 0; b < f.dlc; ++b) {
      f.data.push_back(static_cast<std::uint8_t>(ubyte(rng)));
    }
    f.label = labeled ? ((rng() & 1) ? FrameLabel::Attack : FrameLabel::Normal)
                      : FrameLabel::Unlabeled;
    t.frames.push_back(std::move(f));
  }
  return t;
}

}  // namespace

TEST_CASE("parse_frame_row handles a dataset-style row") {
  const CanFrame f = parse_frame_row(
      "1478198376.389427,0316,8,05,21,68,09,21,21,00,6f", 1, false);
  CHECK(f.timestamp == Catch::Approx(1478198376.389427).epsilon(1e-12));
  CHECK(f.id == 0x316u);
  CHECK(f.dlc == 8);
  REQUIRE(f.data.size() == 8);
  CHECK(f.data[0] == 0x05);
  CHECK(f.data[7] == 0x6f);
  CHECK(f.label == FrameLabel::Unlabeled);
}

TEST_CASE("parse_frame_row label column") {
  const CanFrame f = parse_frame_row(
      "1478198376.389636,018f,8,fe,5b,00,00,00,3c,00,00,R", 1, true);
  CHECK(f.id == 0x18fu);
  CHECK(f.label == FrameLabel::Normal);
  const CanFrame g =
      parse_frame_row("1.000000,0000,8,00,00,00,00,00,00,00,00,T", 2, true);
  CHECK(g.label == FrameLabel::Attack);
}

TEST_CASE("parse_frame_row edge cases and errors") {
  const CanFrame f = parse_frame_row("0.000001,0100,0", 1, false);
  CHECK(f.dlc == 0);
  CHECK(f.data.empty());

  CHECK(parse_frame_row("1.0,01AB,0", 1, false).id == 0x1ABu);  // mixed case

  CHECK_THROWS_AS(parse_frame_row("nonsense", 3, false), ParseError);
  CHECK_THROWS_AS(parse_frame_row("1.0,zz,0", 4, false), ParseError);
  CHECK_THROWS_AS(parse_frame_row("1.0,0100,9", 5, false), ParseError);
  CHECK_THROWS_AS(parse_frame_row("1.0,0100,2,aa", 6, false), ParseError);
  CHECK_THROWS_AS(parse_frame_row("1.0,0100,0,X", 7, true), ParseError);
}

TEST_CASE("write then parse is the identity") {
  const auto path = temp_file("canids_trace_rt.csv");
  for (bool labeled : {true, false}) {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
      const Trace t = random_trace(200, seed, labeled);
      write_trace(t, path);
      const Trace back = parse_trace(path, labeled);
      REQUIRE(back.frames.size() == t.frames.size());
      for (std::size_t i = 0; i < t.frames.size(); ++i) {
        REQUIRE(back.frames[i] == t.frames[i]);
      }
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("write is a deterministic fixpoint") {
  const auto p1 = temp_file("canids_trace_fp1.csv");
  const auto p2 = temp_file("canids_trace_fp2.csv");
  GeneratorConfig cfg = GeneratorConfig::defaults(AttackKind::DoS);
  cfg.duration_s = 4.0;
  cfg.rng_seed = 11;
  const Trace t = generate_trace(cfg);
  REQUIRE(t.frames.size() > 9000);  // ~10k-frame synthetic trace
  write_trace(t, p1);
  const Trace back = parse_trace(p1, true);
  write_trace(back, p2);
  CHECK(slurp(p1) == slurp(p2));
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("empty trace writes an empty file") {
  const auto path = temp_file("canids_trace_empty.csv");
  write_trace(Trace{}, path);
  CHECK(slurp(path).empty());
  CHECK(parse_trace(path, false).frames.empty());
  std::filesystem::remove(path);
}

TEST_CASE("parse_trace_auto sniffs the label column") {
  const auto path = temp_file("canids_trace_auto.csv");
  Trace t = random_trace(50, 9, true);
  write_trace(t, path);
  CHECK(parse_trace_auto(path).frames[0].label != FrameLabel::Unlabeled);
  t = random_trace(50, 9, false);
  write_trace(t, path);
  CHECK(parse_trace_auto(path).frames[0].label == FrameLabel::Unlabeled);
  std::filesystem::remove(path);
}

TEST_CASE("parse rejects decreasing timestamps") {
  const auto path = temp_file("canids_trace_order.csv");
  {
    std::ofstream out(path);
    out << "2.000000,0316,0\n1.000000,0316,0\n";
  }
  CHECK_THROWS_AS(parse_trace(path, false), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("generator: duration zero yields an empty trace") {
  GeneratorConfig cfg = GeneratorConfig::defaults(AttackKind::DoS);
  cfg.duration_s = 0;
  CHECK(generate_trace(cfg).frames.empty());
}

TEST_CASE("generator: empty pool is a config error") {
  GeneratorConfig cfg;
  cfg.duration_s = 1.0;
  cfg.normal_id_pool.clear();
  CHECK_THROWS_AS(generate_trace(cfg), ConfigError);
}

TEST_CASE("generator: dos flood counts match the configured rates") {
  GeneratorConfig cfg;
  cfg.attack_kind = AttackKind::DoS;
  cfg.normal_id_pool = {{0x316, 0.010, 0.1}};
  cfg.dos.period_s = 0.0005;
  cfg.duration_s = 1.0;
  cfg.rng_seed = 7;
  const Trace t = generate_trace(cfg);

  std::size_t attack = 0, normal = 0;
  for (const auto& f : t.frames) {
    if (f.label == FrameLabel::Attack) {
      ++attack;
      CHECK(f.id == 0x000u);
    } else {
      ++normal;
      CHECK(f.id == 0x316u);
    }
  }
  // closed form: duration/period = 2000 and 100 messages
  CHECK(attack >= 1995);
  CHECK(attack <= 2005);
  CHECK(normal >= 90);
  CHECK(normal <= 110);

  const Trace again = generate_trace(cfg);
  REQUIRE(again.frames.size() == t.frames.size());
  for (std::size_t i = 0; i < t.frames.size(); ++i) {
    REQUIRE(again.frames[i] == t.frames[i]);
  }
}

TEST_CASE("generator: label soundness and monotonic timestamps") {
  for (AttackKind kind : {AttackKind::Fuzzy, AttackKind::RpmSpoof,
                          AttackKind::GearSpoof}) {
    GeneratorConfig cfg = GeneratorConfig::defaults(kind);
    cfg.duration_s = 1.0;
    cfg.rng_seed = 3;
    const Trace t = generate_trace(cfg);
    REQUIRE(!t.frames.empty());
    double prev = -1;
    bool saw_attack = false;
    for (const auto& f : t.frames) {
      REQUIRE(f.timestamp >= prev);
      prev = f.timestamp;
      REQUIRE(f.label != FrameLabel::Unlabeled);
      if (f.label == FrameLabel::Attack) {
        saw_attack = true;
        if (kind == AttackKind::RpmSpoof) CHECK(f.id == cfg.spoof.target_id);
      }
    }
    CHECK(saw_attack);
  }
}

TEST_CASE("generator: fuzzy ids stay in the configured range") {
  GeneratorConfig cfg = GeneratorConfig::defaults(AttackKind::Fuzzy);
  cfg.duration_s = 0.5;
  cfg.fuzzy.id_min = 0x100;
  cfg.fuzzy.id_max = 0x1ff;
  const Trace t = generate_trace(cfg);
  bool saw = false;
  for (const auto& f : t.frames) {
    if (f.label == FrameLabel::Attack) {
      saw = true;
      CHECK(f.id >= 0x100u);
      CHECK(f.id <= 0x1ffu);
    }
  }
  CHECK(saw);
}

TEST_CASE("split_trace follows the 80:15:5 frame rule") {
  Trace t = random_trace(100, 5, true);
  const TraceSplit s = split_trace(t);
  CHECK(s.train.frames.size() == 80);
  CHECK(s.val.frames.size() == 15);
  CHECK(s.test.frames.size() == 5);
  // contiguous and chronological
  CHECK(s.train.frames.back().timestamp <= s.val.frames.front().timestamp);
  CHECK(s.val.frames.back().timestamp <= s.test.frames.front().timestamp);

  const TraceSplit one = split_trace(random_trace(1, 6, false));
  CHECK(one.train.frames.size() == 1);
  CHECK(one.val.frames.empty());
  CHECK(one.test.frames.empty());
}

TEST_CASE("split_trace conserves frames on a large trace") {
  GeneratorConfig cfg = GeneratorConfig::defaults(AttackKind::Fuzzy);
  cfg.duration_s = 20.0;
  const Trace t = generate_trace(cfg);
  const TraceSplit s = split_trace(t);
  CHECK(s.train.frames.size() + s.val.frames.size() + s.test.frames.size() ==
        t.frames.size());
}

TEST_CASE("split_trace validates ratios") {
  const Trace t = random_trace(10, 8, false);
  CHECK_THROWS_AS(split_trace(t, {0.5, 0.4, 0.2}), ConfigError);
}
