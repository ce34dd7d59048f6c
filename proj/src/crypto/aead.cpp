#include "crypto/aead.hpp"

#include <bit>

namespace pqchain::aead {

namespace {

constexpr uint32_t kSigma[4] = { 0x61707865, 0x3320646e, 0x79622d32, 0x6b206574 };

uint32_t load_le32(const uint8_t* p)
{
  return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) | (uint32_t(p[3]) << 24);
}

void store_le32(uint8_t* p, uint32_t v)
{
  p[0] = static_cast<uint8_t>(v);
  p[1] = static_cast<uint8_t>(v >> 8);
  p[2] = static_cast<uint8_t>(v >> 16);
  p[3] = static_cast<uint8_t>(v >> 24);
}

inline void quarter_round(uint32_t& a, uint32_t& b, uint32_t& c, uint32_t& d)
{
  a += b; d ^= a; d = std::rotl(d, 16);
  c += d; b ^= c; b = std::rotl(b, 12);
  a += b; d ^= a; d = std::rotl(d, 8);
  c += d; b ^= c; b = std::rotl(b, 7);
}

void chacha_rounds(uint32_t s[16])
{
  for (int i = 0; i < 10; i++) {
    quarter_round(s[0], s[4], s[8], s[12]);
    quarter_round(s[1], s[5], s[9], s[13]);
    quarter_round(s[2], s[6], s[10], s[14]);
    quarter_round(s[3], s[7], s[11], s[15]);
    quarter_round(s[0], s[5], s[10], s[15]);
    quarter_round(s[1], s[6], s[11], s[12]);
    quarter_round(s[2], s[7], s[8], s[13]);
    quarter_round(s[3], s[4], s[9], s[14]);
  }
}

void chacha20_block(const Key& key, uint32_t counter, const uint8_t nonce12[12], uint8_t out[64])
{
  uint32_t s[16];
  for (int i = 0; i < 4; i++) {
    s[i] = kSigma[i];
  }
  for (int i = 0; i < 8; i++) {
    s[4 + i] = load_le32(key.data() + 4 * i);
  }
  s[12] = counter;
  for (int i = 0; i < 3; i++) {
    s[13 + i] = load_le32(nonce12 + 4 * i);
  }
  uint32_t w[16];
  std::memcpy(w, s, sizeof(w));
  chacha_rounds(w);
  for (int i = 0; i < 16; i++) {
    store_le32(out + 4 * i, w[i] + s[i]);
  }
}

void chacha20_xor(const Key& key, uint32_t counter, const uint8_t nonce12[12], BytesView in, uint8_t* out)
{
  uint8_t block[64];
  for (size_t off = 0; off < in.size(); off += 64) {
    chacha20_block(key, counter++, nonce12, block);
    const size_t n = std::min<size_t>(64, in.size() - off);
    for (size_t i = 0; i < n; i++) {
      out[off + i] = in[off + i] ^ block[i];
    }
  }
}

// Poly1305 over 130-bit limbs (5 x 26-bit).
struct Poly1305 {
  uint32_t r[5];
  uint32_t pad[4];
  uint64_t h[5] = { 0, 0, 0, 0, 0 };

  explicit Poly1305(const uint8_t key[32])
  {
    const uint32_t t0 = load_le32(key + 0);
    const uint32_t t1 = load_le32(key + 4);
    const uint32_t t2 = load_le32(key + 8);
    const uint32_t t3 = load_le32(key + 12);
    r[0] = t0 & 0x3ffffff;
    r[1] = ((t0 >> 26) | (t1 << 6)) & 0x3ffff03;
    r[2] = ((t1 >> 20) | (t2 << 12)) & 0x3ffc0ff;
    r[3] = ((t2 >> 14) | (t3 << 18)) & 0x3f03fff;
    r[4] = (t3 >> 8) & 0x00fffff;
    for (int i = 0; i < 4; i++) {
      pad[i] = load_le32(key + 16 + 4 * i);
    }
  }

  void block(const uint8_t m[16], uint32_t hibit)
  {
    const uint32_t t0 = load_le32(m + 0);
    const uint32_t t1 = load_le32(m + 4);
    const uint32_t t2 = load_le32(m + 8);
    const uint32_t t3 = load_le32(m + 12);
    h[0] += t0 & 0x3ffffff;
    h[1] += ((t0 >> 26) | (t1 << 6)) & 0x3ffffff;
    h[2] += ((t1 >> 20) | (t2 << 12)) & 0x3ffffff;
    h[3] += ((t2 >> 14) | (t3 << 18)) & 0x3ffffff;
    h[4] += (t3 >> 8) | (uint64_t(hibit) << 24);

    const uint64_t s1 = uint64_t(r[1]) * 5;
    const uint64_t s2 = uint64_t(r[2]) * 5;
    const uint64_t s3 = uint64_t(r[3]) * 5;
    const uint64_t s4 = uint64_t(r[4]) * 5;

    uint64_t d0 = h[0] * r[0] + h[1] * s4 + h[2] * s3 + h[3] * s2 + h[4] * s1;
    uint64_t d1 = h[0] * r[1] + h[1] * r[0] + h[2] * s4 + h[3] * s3 + h[4] * s2;
    uint64_t d2 = h[0] * r[2] + h[1] * r[1] + h[2] * r[0] + h[3] * s4 + h[4] * s3;
    uint64_t d3 = h[0] * r[3] + h[1] * r[2] + h[2] * r[1] + h[3] * r[0] + h[4] * s4;
    uint64_t d4 = h[0] * r[4] + h[1] * r[3] + h[2] * r[2] + h[3] * r[1] + h[4] * r[0];

    uint64_t c = d0 >> 26; h[0] = d0 & 0x3ffffff;
    d1 += c; c = d1 >> 26; h[1] = d1 & 0x3ffffff;
    d2 += c; c = d2 >> 26; h[2] = d2 & 0x3ffffff;
    d3 += c; c = d3 >> 26; h[3] = d3 & 0x3ffffff;
    d4 += c; c = d4 >> 26; h[4] = d4 & 0x3ffffff;
    h[0] += c * 5;
    c = h[0] >> 26; h[0] &= 0x3ffffff;
    h[1] += c;
  }

  void update(BytesView data)
  {
    size_t off = 0;
    for (; off + 16 <= data.size(); off += 16) {
      block(data.data() + off, 1);
    }
    if (off < data.size()) {
      uint8_t last[16] = { 0 };
      std::memcpy(last, data.data() + off, data.size() - off);
      last[data.size() - off] = 1;
      block(last, 0);
    }
  }

  std::array<uint8_t, 16> finish()
  {
    // full carry and reduction mod 2^130 - 5
    uint64_t c = h[1] >> 26; h[1] &= 0x3ffffff;
    h[2] += c; c = h[2] >> 26; h[2] &= 0x3ffffff;
    h[3] += c; c = h[3] >> 26; h[3] &= 0x3ffffff;
    h[4] += c; c = h[4] >> 26; h[4] &= 0x3ffffff;
    h[0] += c * 5; c = h[0] >> 26; h[0] &= 0x3ffffff;
    h[1] += c;

    uint64_t g[5];
    g[0] = h[0] + 5; c = g[0] >> 26; g[0] &= 0x3ffffff;
    g[1] = h[1] + c; c = g[1] >> 26; g[1] &= 0x3ffffff;
    g[2] = h[2] + c; c = g[2] >> 26; g[2] &= 0x3ffffff;
    g[3] = h[3] + c; c = g[3] >> 26; g[3] &= 0x3ffffff;
    g[4] = h[4] + c - (1ULL << 26);

    const uint64_t mask = (g[4] >> 63) - 1; // all-ones if g >= 2^130-5
    for (int i = 0; i < 5; i++) {
      h[i] = (h[i] & ~mask) | (g[i] & mask);
    }
    uint64_t f0 = (h[0] | (h[1] << 26)) & 0xffffffff;
    uint64_t f1 = ((h[1] >> 6) | (h[2] << 20)) & 0xffffffff;
    uint64_t f2 = ((h[2] >> 12) | (h[3] << 14)) & 0xffffffff;
    uint64_t f3 = ((h[3] >> 18) | (h[4] << 8)) & 0xffffffff;

    f0 += pad[0];
    f1 += pad[1] + (f0 >> 32);
    f2 += pad[2] + (f1 >> 32);
    f3 += pad[3] + (f2 >> 32);

    std::array<uint8_t, 16> tag;
    store_le32(tag.data() + 0, static_cast<uint32_t>(f0));
    store_le32(tag.data() + 4, static_cast<uint32_t>(f1));
    store_le32(tag.data() + 8, static_cast<uint32_t>(f2));
    store_le32(tag.data() + 12, static_cast<uint32_t>(f3));
    return tag;
  }
};

std::array<uint8_t, 16> compute_tag(const Key& otk, BytesView aad, BytesView ciphertext)
{
  Poly1305 mac(otk.data());
  Bytes mac_data;
  mac_data.reserve(aad.size() + ciphertext.size() + 32);
  append(mac_data, aad);
  mac_data.resize((mac_data.size() + 15) / 16 * 16, 0);
  append(mac_data, ciphertext);
  mac_data.resize((mac_data.size() + 15) / 16 * 16, 0);
  uint8_t lens[16];
  for (int i = 0; i < 8; i++) {
    lens[i] = static_cast<uint8_t>(uint64_t(aad.size()) >> (8 * i));
    lens[8 + i] = static_cast<uint8_t>(uint64_t(ciphertext.size()) >> (8 * i));
  }
  append(mac_data, BytesView(lens, 16));
  mac.update(mac_data);
  return mac.finish();
}

struct DerivedNonce {
  Key subkey;
  uint8_t nonce12[12];
};

DerivedNonce xchacha_derive(const Key& key, const Nonce& nonce24)
{
  std::array<uint8_t, 16> hin;
  std::copy(nonce24.begin(), nonce24.begin() + 16, hin.begin());
  DerivedNonce d;
  d.subkey = hchacha20(key, hin);
  std::memset(d.nonce12, 0, 4);
  std::memcpy(d.nonce12 + 4, nonce24.data() + 16, 8);
  return d;
}

} // namespace

Key hchacha20(const Key& key, const std::array<uint8_t, 16>& input)
{
  uint32_t s[16];
  for (int i = 0; i < 4; i++) {
    s[i] = kSigma[i];
  }
  for (int i = 0; i < 8; i++) {
    s[4 + i] = load_le32(key.data() + 4 * i);
  }
  for (int i = 0; i < 4; i++) {
    s[12 + i] = load_le32(input.data() + 4 * i);
  }
  chacha_rounds(s);
  Key out;
  for (int i = 0; i < 4; i++) {
    store_le32(out.data() + 4 * i, s[i]);
    store_le32(out.data() + 16 + 4 * i, s[12 + i]);
  }
  return out;
}

Bytes seal(const Key& key, const Nonce& nonce, BytesView aad, BytesView plaintext)
{
  const DerivedNonce d = xchacha_derive(key, nonce);

  uint8_t block0[64];
  chacha20_block(d.subkey, 0, d.nonce12, block0);
  Key otk;
  std::memcpy(otk.data(), block0, 32);

  Bytes out(plaintext.size() + kTagLen);
  chacha20_xor(d.subkey, 1, d.nonce12, plaintext, out.data());
  const auto tag = compute_tag(otk, aad, BytesView(out.data(), plaintext.size()));
  std::memcpy(out.data() + plaintext.size(), tag.data(), kTagLen);
  return out;
}

std::optional<Bytes> open(const Key& key, const Nonce& nonce, BytesView aad, BytesView boxed)
{
  if (boxed.size() < kTagLen) {
    return std::nullopt;
  }
  const DerivedNonce d = xchacha_derive(key, nonce);

  uint8_t block0[64];
  chacha20_block(d.subkey, 0, d.nonce12, block0);
  Key otk;
  std::memcpy(otk.data(), block0, 32);

  const BytesView ciphertext = boxed.subspan(0, boxed.size() - kTagLen);
  const auto tag = compute_tag(otk, aad, ciphertext);
  if (!ct_equal(BytesView(tag), boxed.subspan(boxed.size() - kTagLen))) {
    return std::nullopt;
  }
  Bytes plaintext(ciphertext.size());
  chacha20_xor(d.subkey, 1, d.nonce12, ciphertext, plaintext.data());
  return plaintext;
}

} // namespace pqchain::aead
