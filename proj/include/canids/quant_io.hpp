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

#ifndef CANIDS_QUANT_IO_HPP
#define CANIDS_QUANT_IO_HPP

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "canids/model_io.hpp"
#include "canids/quant.hpp"

namespace canids {

// Quantized container, same family as the float model file: int8 weight
// blobs, int32 biases, per-channel float scales and (mult, shift)
// requantization pairs; activation quantization params live in the metadata.

inline constexpr const char* kQModelMagic = "CANIDS-QMODEL 1";

namespace detail {

inline nlohmann::json qparams_to_json(const QuantParams& q) {
  return nlohmann::json{{"scale", q.scale}, {"zp", q.zero_point}};
}

inline QuantParams qparams_from_json(const nlohmann::json& j) {
  QuantParams q;
  q.scale = j.at("scale").get<double>();
  q.zero_point = j.at("zp").get<std::int32_t>();
  return q;
}

}  // namespace detail

inline void save_qmodel(const QuantizedModel& qm,
                        const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << kQModelMagic << '\n';

    nlohmann::json meta = detail::spec_to_json(qm.spec);
    meta["attack"] = to_string(qm.attack);
    meta["seed"] = qm.seed;
    meta["input_q"] = detail::qparams_to_json(qm.input_q);
    nlohmann::json acts = nlohmann::json::array();
    for (const auto& layer : qm.convs) {
      acts.push_back(detail::qparams_to_json(layer.out_q));
    }
    meta["act_q"] = acts;
    meta["logits_q"] = detail::qparams_to_json(qm.head.out_q);
    out << "META " << meta.dump() << '\n';

    for (std::size_t i = 0; i < qm.convs.size(); ++i) {
      const auto& l = qm.convs[i];
      const std::string base = "conv" + std::to_string(i);
      const std::vector<std::size_t> kdims(l.kdims.begin(), l.kdims.end());
      detail::write_blob(out, base + ".kernel", "i8", kdims, l.kernel);
      detail::write_blob(out, base + ".bias", "i32", {l.bias.size()}, l.bias);
      detail::write_blob(out, base + ".w_scale", "f32", {l.w_scale.size()},
                         l.w_scale);
      detail::write_blob(out, base + ".mult", "i32", {l.mult.size()}, l.mult);
      detail::write_blob(out, base + ".shift", "i32", {l.shift.size()},
                         l.shift);
    }
    detail::write_blob(out, "head.weight", "i8",
                       {qm.head.in, qm.head.out}, qm.head.weight);
    detail::write_blob(out, "head.bias", "i32", {qm.head.out}, qm.head.bias);
    detail::write_blob(out, "head.w_scale", "f32", {qm.head.out},
                       qm.head.w_scale);
    detail::write_blob(out, "head.mult", "i32", {qm.head.out}, qm.head.mult);
    detail::write_blob(out, "head.shift", "i32", {qm.head.out},
                       qm.head.shift);
    out << "END\n";
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename to " + path.string() + ": " + ec.message());
}

inline QuantizedModel load_qmodel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  detail::expect_line(in, kQModelMagic, path);

  std::string line;
  if (!std::getline(in, line) || line.rfind("META ", 0) != 0) {
    throw ParseError(path.string() + ": missing META line");
  }
  QuantizedModel qm;
  try {
    const nlohmann::json meta = nlohmann::json::parse(line.substr(5));
    qm.spec = detail::spec_from_json(meta);
    qm.attack = attack_kind_from_string(meta.at("attack").get<std::string>());
    qm.seed = meta.at("seed").get<std::uint64_t>();
    qm.input_q = detail::qparams_from_json(meta.at("input_q"));
    const auto& acts = meta.at("act_q");
    if (qm.spec.batchnorm || acts.size() != qm.spec.conv_filters.size()) {
      throw ParseError(path.string() + ": inconsistent quantized metadata");
    }
    std::size_t c_in = 1;
    for (std::size_t i = 0; i < qm.spec.conv_filters.size(); ++i) {
      QConvLayer l;
      const std::size_t f = qm.spec.conv_filters[i];
      l.kdims = {3, 3, c_in, f};
      l.in_q = i == 0 ? qm.input_q : qm.convs.back().out_q;
      l.out_q = detail::qparams_from_json(acts[i]);
      qm.convs.push_back(std::move(l));
      c_in = f;
    }
    qm.head.in = qm.spec.flat_dim();
    qm.head.out = qm.spec.classes;
    qm.head.in_q = qm.convs.back().out_q;
    qm.head.out_q = detail::qparams_from_json(meta.at("logits_q"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": bad metadata: " + e.what());
  }

  for (std::size_t i = 0; i < qm.convs.size(); ++i) {
    auto& l = qm.convs[i];
    const std::string base = "conv" + std::to_string(i);
    const std::vector<std::size_t> kdims(l.kdims.begin(), l.kdims.end());
    const std::size_t co = l.kdims[3];
    detail::read_blob(in, base + ".kernel", "i8", kdims, &l.kernel, path);
    detail::read_blob(in, base + ".bias", "i32", {co}, &l.bias, path);
    detail::read_blob(in, base + ".w_scale", "f32", {co}, &l.w_scale, path);
    detail::read_blob(in, base + ".mult", "i32", {co}, &l.mult, path);
    detail::read_blob(in, base + ".shift", "i32", {co}, &l.shift, path);
  }
  detail::read_blob(in, "head.weight", "i8", {qm.head.in, qm.head.out},
                    &qm.head.weight, path);
  detail::read_blob(in, "head.bias", "i32", {qm.head.out}, &qm.head.bias,
                    path);
  detail::read_blob(in, "head.w_scale", "f32", {qm.head.out},
                    &qm.head.w_scale, path);
  detail::read_blob(in, "head.mult", "i32", {qm.head.out}, &qm.head.mult,
                    path);
  detail::read_blob(in, "head.shift", "i32", {qm.head.out}, &qm.head.shift,
                    path);
  detail::expect_line(in, "END", path);
  return qm;
}

}  // namespace canids

#endif  // CANIDS_QUANT_IO_HPP
