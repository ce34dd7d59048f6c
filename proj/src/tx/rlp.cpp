#include "tx/rlp.hpp"

namespace pqchain::rlp {

namespace {

void encode_length(size_t len, uint8_t offset, Bytes& out)
{
  if (len < 56) {
    out.push_back(static_cast<uint8_t>(offset + len));
    return;
  }
  Bytes len_bytes;
  size_t v = len;
  while (v) {
    len_bytes.insert(len_bytes.begin(), static_cast<uint8_t>(v & 0xFF));
    v >>= 8;
  }
  out.push_back(static_cast<uint8_t>(offset + 55 + len_bytes.size()));
  append(out, len_bytes);
}

void encode_into(const Item& item, Bytes& out)
{
  if (!item.is_list) {
    if (item.bytes.size() == 1 && item.bytes[0] < 0x80) {
      out.push_back(item.bytes[0]);
      return;
    }
    encode_length(item.bytes.size(), 0x80, out);
    append(out, item.bytes);
    return;
  }
  Bytes payload;
  for (const auto& child : item.items) {
    encode_into(child, payload);
  }
  encode_length(payload.size(), 0xC0, out);
  append(out, payload);
}

// returns false on malformed / non-canonical input
bool decode_one(BytesView data, size_t& pos, Item& out, int depth)
{
  if (depth > 64 || pos >= data.size()) {
    return false;
  }
  const uint8_t b = data[pos];
  auto read_long_length = [&](uint8_t n_len, size_t& len) {
    if (pos + 1 + n_len > data.size()) {
      return false;
    }
    if (data[pos + 1] == 0) {
      return false; // leading zero in length-of-length
    }
    len = 0;
    for (size_t i = 0; i < n_len; i++) {
      if (len > (SIZE_MAX >> 8)) {
        return false;
      }
      len = (len << 8) | data[pos + 1 + i];
    }
    if (len < 56) {
      return false; // must have used the short form
    }
    pos += 1 + n_len;
    return true;
  };

  if (b < 0x80) {
    out = Item::str(BytesView(&b, 1));
    pos++;
    return true;
  }
  if (b <= 0xB7) {
    const size_t len = b - 0x80;
    if (pos + 1 + len > data.size()) {
      return false;
    }
    if (len == 1 && data[pos + 1] < 0x80) {
      return false; // single low byte must encode as itself
    }
    out = Item::str(data.subspan(pos + 1, len));
    pos += 1 + len;
    return true;
  }
  if (b <= 0xBF) {
    size_t len = 0;
    if (!read_long_length(b - 0xB7, len) || pos + len > data.size()) {
      return false;
    }
    out = Item::str(data.subspan(pos, len));
    pos += len;
    return true;
  }
  // list forms
  size_t len = 0;
  if (b <= 0xF7) {
    len = b - 0xC0;
    pos++;
  } else if (!read_long_length(b - 0xF7, len)) {
    return false;
  }
  if (pos + len > data.size()) {
    return false;
  }
  const size_t end = pos + len;
  out = Item::list({});
  while (pos < end) {
    Item child;
    if (!decode_one(data, pos, child, depth + 1)) {
      return false;
    }
    out.items.push_back(std::move(child));
  }
  return pos == end;
}

} // namespace

Bytes encode(const Item& item)
{
  Bytes out;
  encode_into(item, out);
  return out;
}

std::optional<Item> decode(BytesView data)
{
  size_t pos = 0;
  Item out;
  if (!decode_one(data, pos, out, 0) || pos != data.size()) {
    return std::nullopt;
  }
  return out;
}

} // namespace pqchain::rlp
