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
#include <sstream>

#include "canids/model_io.hpp"
#include "canids/train.hpp"
#include "support/oracles.hpp"

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

Model trained_tiny(std::uint64_t seed) {
  auto m = build_model<float>(ModelSpec::tiny(4, 16), seed);
  m.attack = AttackKind::DoS;
  Hyperparams hp;
  hp.epochs = 2;
  hp.batch_size = 32;
  hp.lr = 1e-3;
  train(m, testing::toy_separable_windows(128, 3),
        testing::toy_separable_windows(32, 4), hp, seed);
  return m;
}

}  // namespace

TEST_CASE("model container round-trips exactly") {
  const auto path = temp_file("canids_model_rt.bin");
  Model m = trained_tiny(9);
  save_model(m, path);
  Model back = load_model(path);

  CHECK(back.spec.profile == "tiny");
  CHECK(back.spec.window == 4);
  CHECK(back.attack == AttackKind::DoS);
  CHECK(back.seed == m.seed);
  CHECK(back.hparams.lr == m.hparams.lr);

  auto pa = learnable_params(m), pb = learnable_params(back);
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    REQUIRE(*pa[i].data == *pb[i].data);  // bit-exact
  }
  auto sa = state_buffers(m), sb = state_buffers(back);
  for (std::size_t i = 0; i < sa.size(); ++i) {
    REQUIRE(*sa[i].data == *sb[i].data);
  }

  // identical predictions
  std::mt19937_64 rng(5);
  Tensor4<float> x(1, 4, 16, 1);
  for (std::size_t j = 0; j < x.size(); ++j) {
    x.data()[j] = (rng() & 1) ? 1.0f : 0.0f;
  }
  const auto p1 = predict(m, x), p2 = predict(back, x);
  CHECK(p1[0] == p2[0]);
  CHECK(p1[1] == p2[1]);
  std::filesystem::remove(path);
}

TEST_CASE("model files are byte-identical across saves") {
  const auto p1 = temp_file("canids_model_d1.bin");
  const auto p2 = temp_file("canids_model_d2.bin");
  Model m = trained_tiny(10);
  save_model(m, p1);
  save_model(m, p2);
  CHECK(slurp(p1) == slurp(p2));
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("load rejects a bad magic line") {
  const auto path = temp_file("canids_model_bad.bin");
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOT-A-MODEL 1\n";
  }
  CHECK_THROWS_AS(load_model(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("load rejects truncated and tampered files") {
  const auto path = temp_file("canids_model_trunc.bin");
  Model m = build_model<float>(ModelSpec::tiny(4, 16), 1);
  save_model(m, path);
  std::string bytes = slurp(path);

  {
    std::ofstream out(path, std::ios::binary);
    out << bytes.substr(0, bytes.size() / 2);
  }
  CHECK_THROWS_AS(load_model(path), ParseError);

  // tamper with a dimension in the first TENSOR line
  const auto pos = bytes.find("TENSOR conv0.kernel f32 4 3 3 1 8");
  REQUIRE(pos != std::string::npos);
  std::string tampered = bytes;
  tampered.replace(pos, 33, "TENSOR conv0.kernel f32 4 3 3 1 9");
  {
    std::ofstream out(path, std::ios::binary);
    out << tampered;
  }
  CHECK_THROWS_AS(load_model(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("missing file raises IoError") {
  CHECK_THROWS_AS(load_model("/nonexistent/canids.bin"), IoError);
}
