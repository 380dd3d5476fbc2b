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

#ifndef CANIDS_CAN_HPP
#define CANIDS_CAN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "canids/error.hpp"

namespace canids {

inline constexpr std::uint32_t kMaxStandardId = 0x7FF;       // 11-bit
inline constexpr std::uint32_t kMaxExtendedId = 0x1FFFFFFF;  // 29-bit
inline constexpr std::uint8_t kMaxDlc = 8;                   // classic CAN

enum class FrameLabel : std::uint8_t { Normal, Attack, Unlabeled };

enum class AttackKind : std::uint8_t { None, DoS, Fuzzy, RpmSpoof, GearSpoof };

inline std::string to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::None: return "none";
    case AttackKind::DoS: return "dos";
    case AttackKind::Fuzzy: return "fuzzy";
    case AttackKind::RpmSpoof: return "rpm";
    case AttackKind::GearSpoof: return "gear";
  }
  return "none";
}

inline AttackKind attack_kind_from_string(const std::string& s) {
  if (s == "none") return AttackKind::None;
  if (s == "dos") return AttackKind::DoS;
  if (s == "fuzzy") return AttackKind::Fuzzy;
  if (s == "rpm") return AttackKind::RpmSpoof;
  if (s == "gear") return AttackKind::GearSpoof;
  throw ConfigError("unknown attack kind: " + s);
}

/// Default window length: 4 for DoS/Fuzzy, 8 for the spoofing attacks.
inline std::size_t default_window_for(AttackKind kind) {
  return (kind == AttackKind::RpmSpoof || kind == AttackKind::GearSpoof) ? 8
                                                                         : 4;
}

/// One CAN message as it appears in a trace. `data` always holds exactly
/// `dlc` bytes.
struct CanFrame {
  double timestamp = 0.0;  // seconds, microsecond resolution
  std::uint32_t id = 0;
  std::uint8_t dlc = 0;
  std::vector<std::uint8_t> data;
  FrameLabel label = FrameLabel::Unlabeled;

  bool operator==(const CanFrame&) const = default;
};

/// Fixed-width binary expansion of an arbitration identifier. 16 entries for
/// standard frames, 32 for extended; MSB-first with the identifier
/// right-aligned, so the leading padding bits are always zero.
struct IdBits {
  std::vector<std::uint8_t> bits;

  std::size_t width() const { return bits.size(); }
  bool operator==(const IdBits&) const = default;
};

namespace detail {

inline std::uint32_t id_field_bits(unsigned width) {
  if (width == 16) return 11;
  if (width == 32) return 29;
  throw ConfigError("id encoding width must be 16 or 32, got " +
                    std::to_string(width));
}

}  // namespace detail

/// Expands `id` into a `width`-entry bit vector, MSB first, zero padded on
/// the left. Throws IdOverflow when the id does not fit the identifier field
/// (11 bits at width 16, 29 bits at width 32).
inline IdBits encode_id(std::uint32_t id, unsigned width) {
  const std::uint32_t field = detail::id_field_bits(width);
  if (id >= (1u << field)) {
    throw IdOverflow("id 0x" + std::to_string(id) + " exceeds " +
                     std::to_string(field) + "-bit identifier field");
  }
  IdBits out;
  out.bits.resize(width);
  for (unsigned j = 0; j < width; ++j) {
    out.bits[width - 1 - j] = static_cast<std::uint8_t>((id >> j) & 1u);
  }
  return out;
}

inline IdBits encode_id(const CanFrame& frame, unsigned width) {
  return encode_id(frame.id, width);
}

/// Inverse of encode_id: decode(encode(x)) == x for every in-range x.
inline std::uint32_t decode_id(const IdBits& bits) {
  std::uint32_t id = 0;
  for (std::uint8_t b : bits.bits) {
    id = (id << 1) | static_cast<std::uint32_t>(b & 1u);
  }
  return id;
}

}  // namespace canids

#endif  // CANIDS_CAN_HPP
