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

#ifndef CANIDS_MODEL_IO_HPP
#define CANIDS_MODEL_IO_HPP

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "canids/model.hpp"

namespace canids {

// Model container: a magic line, one line of JSON metadata, then named
// little-endian parameter blobs in layer order, each prefixed by
// "TENSOR <name> <dtype> <ndims> <dims...>". Loading validates every name
// and dimension against the architecture rebuilt from the metadata.

inline constexpr const char* kModelMagic = "CANIDS-MODEL 1";

static_assert(std::endian::native == std::endian::little,
              "model containers are little-endian");

namespace detail {

inline nlohmann::json spec_to_json(const ModelSpec& s) {
  return nlohmann::json{{"n", s.window},
                        {"width", s.id_width},
                        {"filters", s.conv_filters},
                        {"batchnorm", s.batchnorm},
                        {"dropout_after", s.dropout_after},
                        {"dropout_p", s.dropout_p},
                        {"classes", s.classes},
                        {"bn_eps", s.bn_eps},
                        {"bn_momentum", s.bn_momentum},
                        {"profile", s.profile}};
}

inline ModelSpec spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  s.window = j.at("n").get<std::size_t>();
  s.id_width = j.at("width").get<unsigned>();
  s.conv_filters = j.at("filters").get<std::vector<std::size_t>>();
  s.batchnorm = j.at("batchnorm").get<bool>();
  s.dropout_after = j.at("dropout_after").get<std::vector<std::size_t>>();
  s.dropout_p = j.at("dropout_p").get<double>();
  s.classes = j.at("classes").get<std::size_t>();
  s.bn_eps = j.at("bn_eps").get<double>();
  s.bn_momentum = j.at("bn_momentum").get<double>();
  s.profile = j.at("profile").get<std::string>();
  return s;
}

inline nlohmann::json hparams_to_json(const Hyperparams& h) {
  return nlohmann::json{{"lr", h.lr},           {"beta1", h.beta1},
                        {"beta2", h.beta2},     {"epsilon", h.epsilon},
                        {"epochs", h.epochs},   {"batch_size", h.batch_size}};
}

inline Hyperparams hparams_from_json(const nlohmann::json& j) {
  Hyperparams h;
  h.lr = j.at("lr").get<double>();
  h.beta1 = j.at("beta1").get<double>();
  h.beta2 = j.at("beta2").get<double>();
  h.epsilon = j.at("epsilon").get<double>();
  h.epochs = j.at("epochs").get<std::size_t>();
  h.batch_size = j.at("batch_size").get<std::size_t>();
  return h;
}

template <typename T>
void write_blob(std::ostream& out, const std::string& name,
                const char* dtype, const std::vector<std::size_t>& dims,
                const std::vector<T>& data) {
  out << "TENSOR " << name << ' ' << dtype << ' ' << dims.size();
  std::size_t expect = 1;
  for (std::size_t d : dims) {
    out << ' ' << d;
    expect *= d;
  }
  out << '\n';
  if (expect != data.size()) {
    throw IoError("blob " + name + ": dims do not cover data");
  }
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(T)));
}

template <typename T>
void read_blob(std::istream& in, const std::string& want_name,
               const char* want_dtype,
               const std::vector<std::size_t>& want_dims,
               std::vector<T>* data, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(path.string() + ": unexpected end of file before " +
                     want_name);
  }
  std::istringstream ls(line);
  std::string tag, name, dtype;
  std::size_t ndims = 0;
  ls >> tag >> name >> dtype >> ndims;
  if (!ls || tag != "TENSOR" || name != want_name || dtype != want_dtype) {
    throw ParseError(path.string() + ": expected TENSOR " + want_name +
                     ", got '" + line + "'");
  }
  if (ndims != want_dims.size()) {
    throw ParseError(path.string() + ": " + name + ": rank mismatch");
  }
  std::size_t count = 1;
  for (std::size_t i = 0; i < ndims; ++i) {
    std::size_t d = 0;
    ls >> d;
    if (!ls || d != want_dims[i]) {
      throw ParseError(path.string() + ": " + name + ": dim " +
                       std::to_string(i) + " mismatch");
    }
    count *= d;
  }
  data->resize(count);
  in.read(reinterpret_cast<char*>(data->data()),
          static_cast<std::streamsize>(count * sizeof(T)));
  if (!in) {
    throw ParseError(path.string() + ": truncated blob " + name);
  }
}

inline void expect_line(std::istream& in, const std::string& want,
                        const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line) || line != want) {
    throw ParseError(path.string() + ": expected '" + want + "'");
  }
}

}  // namespace detail

inline void save_model(const Model& m, const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << kModelMagic << '\n';

    nlohmann::json meta = detail::spec_to_json(m.spec);
    meta["attack"] = to_string(m.attack);
    meta["seed"] = m.seed;
    meta["hyperparams"] = detail::hparams_to_json(m.hparams);
    bool stats_ready = m.spec.batchnorm;
    for (const auto& bn : m.bns) stats_ready = stats_ready && bn.stats_ready;
    meta["stats_ready"] = stats_ready;
    out << "META " << meta.dump() << '\n';

    auto& mut = const_cast<Model&>(m);  // params are only read
    for (const auto& p : learnable_params(mut)) {
      detail::write_blob(out, p.name, "f32", p.dims, *p.data);
    }
    for (const auto& p : state_buffers(mut)) {
      detail::write_blob(out, p.name, "f32", p.dims, *p.data);
    }
    out << "END\n";
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename to " + path.string() + ": " + ec.message());
}

inline Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  detail::expect_line(in, kModelMagic, path);

  std::string line;
  if (!std::getline(in, line) || line.rfind("META ", 0) != 0) {
    throw ParseError(path.string() + ": missing META line");
  }
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(line.substr(5));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": bad metadata: " + e.what());
  }

  Model m;
  try {
    m = build_model<float>(detail::spec_from_json(meta),
                           meta.at("seed").get<std::uint64_t>());
    m.attack = attack_kind_from_string(meta.at("attack").get<std::string>());
    m.hparams = detail::hparams_from_json(meta.at("hyperparams"));
    const bool stats_ready = meta.at("stats_ready").get<bool>();
    for (auto& bn : m.bns) bn.stats_ready = stats_ready;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": bad metadata: " + e.what());
  }

  for (const auto& p : learnable_params(m)) {
    detail::read_blob(in, p.name, "f32", p.dims, p.data, path);
  }
  for (const auto& p : state_buffers(m)) {
    detail::read_blob(in, p.name, "f32", p.dims, p.data, path);
  }
  detail::expect_line(in, "END", path);
  return m;
}

}  // namespace canids

#endif  // CANIDS_MODEL_IO_HPP
