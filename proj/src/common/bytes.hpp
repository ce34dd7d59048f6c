#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pqchain {

using Bytes = std::vector<uint8_t>;
using BytesView = std::span<const uint8_t>;
using Digest256 = std::array<uint8_t, 32>;
using Address = std::array<uint8_t, 20>;

Bytes from_hex(std::string_view hex);
std::string to_hex(BytesView data);

inline std::string to_hex(const Digest256& d) { return to_hex(BytesView(d)); }
inline std::string to_hex(const Address& a) { return to_hex(BytesView(a)); }

inline Bytes to_bytes(std::string_view s)
{
  return Bytes(s.begin(), s.end());
}

inline void append(Bytes& out, BytesView more)
{
  out.insert(out.end(), more.begin(), more.end());
}

inline void append_u32be(Bytes& out, uint32_t v)
{
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

inline void append_u64be(Bytes& out, uint64_t v)
{
  for (int i = 7; i >= 0; i--) {
    out.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
}

inline uint32_t read_u32be(const uint8_t* p)
{
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

inline uint64_t read_u64be(const uint8_t* p)
{
  uint64_t v = 0;
  for (int i = 0; i < 8; i++) {
    v = (v << 8) | p[i];
  }
  return v;
}

// Constant-shape comparison; used for MACs and key-confirmation values.
bool ct_equal(BytesView a, BytesView b);

// Best-effort wipe for short-lived key material.
void secure_zero(uint8_t* p, size_t n);
inline void secure_zero(Bytes& b) { secure_zero(b.data(), b.size()); }

} // namespace pqchain
