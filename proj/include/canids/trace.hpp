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

#ifndef CANIDS_TRACE_HPP
#define CANIDS_TRACE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "canids/can.hpp"
#include "canids/error.hpp"
#include "canids/rng.hpp"

namespace canids {

enum class TraceSource : std::uint8_t { File, Synthetic };

/// An ordered CAN capture. Frames are non-decreasing in timestamp; when
/// attack_kind is None no frame carries an Attack label.
struct Trace {
  std::vector<CanFrame> frames;
  AttackKind attack_kind = AttackKind::None;
  TraceSource source = TraceSource::File;

  std::size_t size() const { return frames.size(); }
};

// ---------------------------------------------------------------------------
// CSV trace format:  timestamp,id_hex,dlc,b0,...,b{dlc-1}[,flag]
//   timestamp  decimal seconds, 6 fractional digits
//   id_hex     lowercase hex, no 0x, zero-padded to 4 chars (8 for extended)
//   bytes      2-char lowercase hex
//   flag       R = normal, T = attack; absent on unlabeled captures
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint32_t parse_hex_field(const std::string& s, std::size_t row,
                                     const char* what) {
  if (s.empty() || s.size() > 8) {
    throw ParseError("row " + std::to_string(row) + ": bad " + what + " '" +
                     s + "'");
  }
  std::uint32_t v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9') {
      v |= static_cast<std::uint32_t>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      v |= static_cast<std::uint32_t>(c - 'a' + 10);
    } else if (c >= 'A' && c <= 'F') {
      v |= static_cast<std::uint32_t>(c - 'A' + 10);
    } else {
      throw ParseError("row " + std::to_string(row) + ": bad " + what +
                       " '" + s + "'");
    }
  }
  return v;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline double quantize_us(double seconds) {
  return std::round(seconds * 1e6) / 1e6;
}

}  // namespace detail

/// Parses one CSV row (1-based `row` for diagnostics).
inline CanFrame parse_frame_row(const std::string& line, std::size_t row,
                                bool has_labels) {
  const auto fields = detail::split_csv(line);
  if (fields.size() < 3) {
    throw ParseError("row " + std::to_string(row) + ": expected at least "
                     "timestamp,id,dlc");
  }
  CanFrame f;
  try {
    std::size_t used = 0;
    f.timestamp = std::stod(fields[0], &used);
    if (used != fields[0].size()) throw std::invalid_argument(fields[0]);
  } catch (const std::exception&) {
    throw ParseError("row " + std::to_string(row) + ": bad timestamp '" +
                     fields[0] + "'");
  }
  f.id = detail::parse_hex_field(fields[1], row, "id");
  if (f.id > kMaxExtendedId) {
    throw IdOverflow("row " + std::to_string(row) + ": id exceeds 29 bits");
  }

  int dlc = -1;
  try {
    dlc = std::stoi(fields[2]);
  } catch (const std::exception&) {
    dlc = -1;
  }
  if (dlc < 0 || dlc > static_cast<int>(kMaxDlc)) {
    throw ParseError("row " + std::to_string(row) + ": bad dlc '" +
                     fields[2] + "'");
  }
  f.dlc = static_cast<std::uint8_t>(dlc);

  const std::size_t expected = 3 + f.dlc + (has_labels ? 1 : 0);
  if (fields.size() != expected) {
    throw ParseError("row " + std::to_string(row) + ": expected " +
                     std::to_string(expected) + " fields, got " +
                     std::to_string(fields.size()));
  }
  f.data.reserve(f.dlc);
  for (std::size_t i = 0; i < f.dlc; ++i) {
    const auto& b = fields[3 + i];
    if (b.size() != 2) {
      throw ParseError("row " + std::to_string(row) + ": bad data byte '" +
                       b + "'");
    }
    f.data.push_back(
        static_cast<std::uint8_t>(detail::parse_hex_field(b, row, "byte")));
  }
  if (has_labels) {
    const auto& flag = fields.back();
    if (flag == "R") {
      f.label = FrameLabel::Normal;
    } else if (flag == "T") {
      f.label = FrameLabel::Attack;
    } else {
      throw ParseError("row " + std::to_string(row) + ": bad flag '" + flag +
                       "' (want R or T)");
    }
  } else {
    f.label = FrameLabel::Unlabeled;
  }
  return f;
}

inline Trace parse_trace(const std::filesystem::path& path, bool has_labels) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Trace trace;
  trace.source = TraceSource::File;
  std::string line;
  std::size_t row = 0;
  double prev_t = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    CanFrame f = parse_frame_row(line, row, has_labels);
    if (f.timestamp < prev_t) {
      throw ParseError("row " + std::to_string(row) +
                       ": timestamp decreases");
    }
    prev_t = f.timestamp;
    trace.frames.push_back(std::move(f));
  }
  return trace;
}

/// Parses a trace, sniffing the label column from the first data row.
inline Trace parse_trace_auto(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  bool has_labels = false;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_csv(line);
    has_labels = !fields.empty() &&
                 (fields.back() == "R" || fields.back() == "T");
    break;
  }
  in.close();
  return parse_trace(path, has_labels);
}

inline std::string format_frame_row(const CanFrame& f) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", f.timestamp);
  std::string out(buf);
  std::snprintf(buf, sizeof(buf), f.id > kMaxStandardId ? ",%08x" : ",%04x",
                f.id);
  out += buf;
  std::snprintf(buf, sizeof(buf), ",%u", static_cast<unsigned>(f.dlc));
  out += buf;
  for (std::uint8_t b : f.data) {
    std::snprintf(buf, sizeof(buf), ",%02x", static_cast<unsigned>(b));
    out += buf;
  }
  if (f.label == FrameLabel::Normal) {
    out += ",R";
  } else if (f.label == FrameLabel::Attack) {
    out += ",T";
  }
  return out;
}

/// Writes the trace atomically (temp file + rename). Formatting is
/// deterministic, so writing the same trace twice is byte-identical.
inline void write_trace(const Trace& trace, const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    for (const auto& f : trace.frames) {
      out << format_frame_row(f) << '\n';
    }
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename to " + path.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// Synthetic traffic generator
// ---------------------------------------------------------------------------

/// One periodic broadcaster in the normal traffic pool.
struct NormalIdSpec {
  std::uint32_t id = 0;
  double period_s = 0.01;
  double jitter = 0.1;  // fraction of the period
};

struct DosParams {
  std::uint32_t flood_id = 0x000;  // highest-priority identifier
  double period_s = 0.0005;
};

struct FuzzyParams {
  double period_s = 0.001;
  std::uint32_t id_min = 0x000;
  std::uint32_t id_max = kMaxStandardId;
};

struct SpoofParams {
  std::uint32_t target_id = 0x316;
  double period_s = 0.001;
  std::vector<std::uint8_t> payload{0x00, 0x00, 0xff, 0xff, 0x00, 0x00,
                                    0x00, 0x00};
};

struct GeneratorConfig {
  std::vector<NormalIdSpec> normal_id_pool;
  double duration_s = 60.0;
  AttackKind attack_kind = AttackKind::None;
  DosParams dos;
  FuzzyParams fuzzy;
  SpoofParams spoof;
  std::uint64_t rng_seed = 1;

  /// Desk-scale defaults: a pool of periodic ids in the style of a
  /// passenger-car capture plus per-kind injection parameters.
  static GeneratorConfig defaults(AttackKind kind) {
    GeneratorConfig cfg;
    cfg.attack_kind = kind;
    cfg.normal_id_pool = {
        {0x316, 0.010, 0.1}, {0x18f, 0.010, 0.1}, {0x260, 0.010, 0.1},
        {0x2c0, 0.020, 0.1}, {0x329, 0.020, 0.1}, {0x43f, 0.050, 0.1},
        {0x4b1, 0.050, 0.1}, {0x545, 0.100, 0.1},
    };
    if (kind == AttackKind::GearSpoof) cfg.spoof.target_id = 0x43f;
    return cfg;
  }
};

/// Deterministic synthetic trace: per-id periodic normal traffic with
/// jitter, interleaved with the configured injection stream. Injected
/// frames are labeled Attack, pool frames Normal.
inline Trace generate_trace(const GeneratorConfig& cfg) {
  if (cfg.duration_s < 0) throw ConfigError("duration must be >= 0");
  Trace trace;
  trace.attack_kind = cfg.attack_kind;
  trace.source = TraceSource::Synthetic;
  if (cfg.duration_s == 0) return trace;
  if (cfg.normal_id_pool.empty()) {
    throw ConfigError("empty normal id pool with nonzero duration");
  }

  std::vector<CanFrame> frames;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> ubyte(0, 255);

  for (std::size_t i = 0; i < cfg.normal_id_pool.size(); ++i) {
    const auto& spec = cfg.normal_id_pool[i];
    if (spec.period_s <= 0) throw ConfigError("pool period must be > 0");
    if (spec.id > kMaxStandardId) {
      throw IdOverflow("pool id exceeds 11 bits");
    }
    auto rng = make_rng(cfg.rng_seed, 0x4E00 + i);
    double t = u01(rng) * spec.period_s;  // random phase
    while (t < cfg.duration_s) {
      CanFrame f;
      f.timestamp = detail::quantize_us(t);
      f.id = spec.id;
      f.dlc = 8;
      f.data.resize(8);
      for (auto& b : f.data) b = static_cast<std::uint8_t>(ubyte(rng));
      f.label = FrameLabel::Normal;
      frames.push_back(std::move(f));
      t += spec.period_s * (1.0 + spec.jitter * (2.0 * u01(rng) - 1.0));
    }
  }

  if (cfg.attack_kind != AttackKind::None) {
    auto rng = make_rng(cfg.rng_seed, 0xA7);
    double period = 0;
    switch (cfg.attack_kind) {
      case AttackKind::DoS: period = cfg.dos.period_s; break;
      case AttackKind::Fuzzy: period = cfg.fuzzy.period_s; break;
      default: period = cfg.spoof.period_s; break;
    }
    if (period <= 0) throw ConfigError("injection period must be > 0");
    if (cfg.fuzzy.id_max > kMaxStandardId ||
        cfg.fuzzy.id_min > cfg.fuzzy.id_max) {
      throw ConfigError("bad fuzzy id range");
    }
    std::uniform_int_distribution<std::uint32_t> uid(cfg.fuzzy.id_min,
                                                     cfg.fuzzy.id_max);
    double t = u01(rng) * period;
    while (t < cfg.duration_s) {
      CanFrame f;
      f.timestamp = detail::quantize_us(t);
      f.dlc = 8;
      f.label = FrameLabel::Attack;
      switch (cfg.attack_kind) {
        case AttackKind::DoS:
          f.id = cfg.dos.flood_id;
          f.data.assign(8, 0x00);
          break;
        case AttackKind::Fuzzy:
          f.id = uid(rng);
          f.data.resize(8);
          for (auto& b : f.data) b = static_cast<std::uint8_t>(ubyte(rng));
          break;
        default:  // RPM / gear spoof: fixed forged payload on the target id
          f.id = cfg.spoof.target_id;
          f.data = cfg.spoof.payload;
          f.dlc = static_cast<std::uint8_t>(cfg.spoof.payload.size());
          break;
      }
      frames.push_back(std::move(f));
      t += period;
    }
  }

  std::stable_sort(frames.begin(), frames.end(),
                   [](const CanFrame& a, const CanFrame& b) {
                     return a.timestamp < b.timestamp;
                   });
  trace.frames = std::move(frames);
  return trace;
}

// ---------------------------------------------------------------------------
// Chronological split
// ---------------------------------------------------------------------------

struct TraceSplit {
  Trace train, val, test;
};

/// Contiguous chronological 80:15:5 split (no shuffling, so sliding windows
/// never leak across the boundary). Val/test sizes are floored; the
/// remainder goes to train.
inline TraceSplit split_trace(const Trace& trace,
                              std::array<double, 3> ratios = {0.80, 0.15,
                                                              0.05}) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }
  if (ratios[0] < 0 || ratios[1] < 0 || ratios[2] < 0) {
    throw ConfigError("split ratios must be non-negative");
  }
  const std::size_t n = trace.frames.size();
  const std::size_t n_val = static_cast<std::size_t>(ratios[1] * n);
  const std::size_t n_test = static_cast<std::size_t>(ratios[2] * n);
  const std::size_t n_train = n - n_val - n_test;

  TraceSplit split;
  for (Trace* part : {&split.train, &split.val, &split.test}) {
    part->attack_kind = trace.attack_kind;
    part->source = trace.source;
  }
  split.train.frames.assign(trace.frames.begin(),
                            trace.frames.begin() + n_train);
  split.val.frames.assign(trace.frames.begin() + n_train,
                          trace.frames.begin() + n_train + n_val);
  split.test.frames.assign(trace.frames.begin() + n_train + n_val,
                           trace.frames.end());
  return split;
}

}  // namespace canids

#endif  // CANIDS_TRACE_HPP
