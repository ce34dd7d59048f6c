#pragma once

#include "common/bytes.hpp"

#include <optional>
#include <vector>

namespace pqchain::rlp {

// Recursive-length-prefix item: either a byte string or a list.
struct Item {
  bool is_list = false;
  Bytes bytes;
  std::vector<Item> items;

  static Item str(BytesView b)
  {
    Item it;
    it.bytes.assign(b.begin(), b.end());
    return it;
  }

  static Item uint(uint64_t v)
  {
    Item it;
    while (v) {
      it.bytes.insert(it.bytes.begin(), static_cast<uint8_t>(v & 0xFF));
      v >>= 8;
    }
    return it; // zero encodes as the empty string
  }

  // minimal big-endian integer given as bytes (leading zeros stripped)
  static Item biguint(BytesView b)
  {
    size_t i = 0;
    while (i < b.size() && b[i] == 0) {
      i++;
    }
    return str(b.subspan(i));
  }

  static Item list(std::vector<Item> xs)
  {
    Item it;
    it.is_list = true;
    it.items = std::move(xs);
    return it;
  }

  bool operator==(const Item&) const = default;
};

Bytes encode(const Item& item);

// Strict decoder: enforces minimal-form prefixes and rejects trailing bytes.
std::optional<Item> decode(BytesView data);

} // namespace pqchain::rlp
