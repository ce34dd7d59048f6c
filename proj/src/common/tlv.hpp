#pragma once

#include "common/bytes.hpp"
#include "common/errors.hpp"

namespace pqchain::tlv {

// Canonical tag-length-value codec used by the certificate and
// meta-transaction file formats: 4-byte magic, 1-byte version, then fields in
// a fixed order, each encoded as u8 tag || u32be length || value. Writers
// always emit the full field sequence; readers require exact order and no
// trailing bytes, so every value has a unique encoding.

class Writer {
public:
  Writer(std::string_view magic, uint8_t version)
  {
    if (magic.size() != 4) {
      throw Error(ErrorCode::InvalidArgument, "tlv magic must be 4 bytes");
    }
    append(out_, to_bytes(magic));
    out_.push_back(version);
  }

  void field(uint8_t tag, BytesView value)
  {
    out_.push_back(tag);
    append_u32be(out_, static_cast<uint32_t>(value.size()));
    append(out_, value);
  }

  void field_str(uint8_t tag, std::string_view value)
  {
    field(tag, to_bytes(value));
  }

  void field_u64(uint8_t tag, uint64_t value)
  {
    Bytes b;
    append_u64be(b, value);
    field(tag, b);
  }

  Bytes take() { return std::move(out_); }

private:
  Bytes out_;
};

class Reader {
public:
  Reader(BytesView data, std::string_view magic, uint8_t version)
    : data_(data)
  {
    if (data.size() < 5 || std::memcmp(data.data(), magic.data(), 4) != 0) {
      throw Error(ErrorCode::DecodeError, "bad magic");
    }
    if (data[4] != version) {
      throw Error(ErrorCode::DecodeError, "unknown version");
    }
    pos_ = 5;
  }

  Bytes field(uint8_t tag)
  {
    if (pos_ + 5 > data_.size()) {
      throw Error(ErrorCode::DecodeError, "truncated field header");
    }
    if (data_[pos_] != tag) {
      throw Error(ErrorCode::DecodeError, "unexpected field tag");
    }
    const uint32_t len = read_u32be(data_.data() + pos_ + 1);
    pos_ += 5;
    if (pos_ + len > data_.size()) {
      throw Error(ErrorCode::DecodeError, "truncated field value");
    }
    Bytes value(data_.begin() + pos_, data_.begin() + pos_ + len);
    pos_ += len;
    return value;
  }

  std::string field_str(uint8_t tag)
  {
    const Bytes b = field(tag);
    return std::string(b.begin(), b.end());
  }

  uint64_t field_u64(uint8_t tag)
  {
    const Bytes b = field(tag);
    if (b.size() != 8) {
      throw Error(ErrorCode::DecodeError, "u64 field with wrong length");
    }
    return read_u64be(b.data());
  }

  void finish() const
  {
    if (pos_ != data_.size()) {
      throw Error(ErrorCode::DecodeError, "trailing bytes");
    }
  }

private:
  BytesView data_;
  size_t pos_ = 0;
};

} // namespace pqchain::tlv
