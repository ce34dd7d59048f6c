#include "crypto/keccak.hpp"

#include "common/errors.hpp"

#include <bit>

namespace pqchain::hash {

namespace {

constexpr uint64_t kRoundConstants[24] = {
  0x0000000000000001ULL, 0x0000000000008082ULL, 0x800000000000808AULL,
  0x8000000080008000ULL, 0x000000000000808BULL, 0x0000000080000001ULL,
  0x8000000080008081ULL, 0x8000000000008009ULL, 0x000000000000008AULL,
  0x0000000000000088ULL, 0x0000000080008009ULL, 0x000000008000000AULL,
  0x000000008000808BULL, 0x800000000000008BULL, 0x8000000000008089ULL,
  0x8000000000008003ULL, 0x8000000000008002ULL, 0x8000000000000080ULL,
  0x000000000000800AULL, 0x800000008000000AULL, 0x8000000080008081ULL,
  0x8000000000008080ULL, 0x0000000080000001ULL, 0x8000000080008008ULL,
};

// rho rotation offsets and pi lane permutation, flattened for the x + 5y
// lane order used below.
constexpr int kRho[25] = { 0,  1,  62, 28, 27, 36, 44, 6,  55, 20, 3,  10, 43,
                           25, 39, 41, 45, 15, 21, 8,  18, 2,  61, 56, 14 };

constexpr int kPi[25] = { 0,  10, 20, 5,  15, 16, 1,  11, 21, 6,  7,  17, 2,
                          12, 22, 23, 8,  18, 3,  13, 14, 24, 9,  19, 4 };

} // namespace

Sponge::Sponge(size_t rate_bytes, uint8_t domain)
  : rate_(rate_bytes)
  , domain_(domain)
{
  reset();
}

void Sponge::reset()
{
  for (auto& lane : lanes_) {
    lane = 0;
  }
  offset_ = 0;
  finalized_ = false;
  permutations_ = 0;
}

void Sponge::permute()
{
  uint64_t* a = lanes_;
  for (int round = 0; round < 24; round++) {
    // theta
    uint64_t c[5];
    for (int x = 0; x < 5; x++) {
      c[x] = a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20];
    }
    for (int x = 0; x < 5; x++) {
      const uint64_t d = c[(x + 4) % 5] ^ std::rotl(c[(x + 1) % 5], 1);
      for (int y = 0; y < 25; y += 5) {
        a[x + y] ^= d;
      }
    }
    // rho + pi
    uint64_t b[25];
    for (int i = 0; i < 25; i++) {
      b[kPi[i]] = std::rotl(a[i], kRho[i]);
    }
    // chi
    for (int y = 0; y < 25; y += 5) {
      for (int x = 0; x < 5; x++) {
        a[y + x] = b[y + x] ^ (~b[y + (x + 1) % 5] & b[y + (x + 2) % 5]);
      }
    }
    // iota
    a[0] ^= kRoundConstants[round];
  }
  permutations_++;
}

void Sponge::absorb(BytesView data)
{
  if (finalized_) {
    throw Error(ErrorCode::InvalidState, "absorb after finalize");
  }
  for (uint8_t byte : data) {
    lanes_[offset_ / 8] ^= uint64_t(byte) << (8 * (offset_ % 8));
    if (++offset_ == rate_) {
      permute();
      offset_ = 0;
    }
  }
}

void Sponge::finalize()
{
  if (finalized_) {
    return;
  }
  lanes_[offset_ / 8] ^= uint64_t(domain_) << (8 * (offset_ % 8));
  lanes_[(rate_ - 1) / 8] ^= 0x80ULL << (8 * ((rate_ - 1) % 8));
  permute();
  offset_ = 0;
  finalized_ = true;
}

void Sponge::squeeze(uint8_t* out, size_t n)
{
  if (!finalized_) {
    finalize();
  }
  for (size_t i = 0; i < n; i++) {
    if (offset_ == rate_) {
      permute();
      offset_ = 0;
    }
    out[i] = static_cast<uint8_t>(lanes_[offset_ / 8] >> (8 * (offset_ % 8)));
    offset_++;
  }
}

namespace {

template<size_t OutLen>
std::array<uint8_t, OutLen> fixed_digest(BytesView data, size_t rate, uint8_t domain)
{
  Sponge sponge(rate, domain);
  sponge.absorb(data);
  std::array<uint8_t, OutLen> out;
  sponge.squeeze(out.data(), out.size());
  return out;
}

} // namespace

Digest256 keccak256(BytesView data)
{
  return fixed_digest<32>(data, 136, 0x01);
}

Digest256 sha3_256(BytesView data)
{
  return fixed_digest<32>(data, 136, 0x06);
}

std::array<uint8_t, 64> sha3_512(BytesView data)
{
  return fixed_digest<64>(data, 72, 0x06);
}

Bytes shake256(BytesView data, size_t out_len)
{
  if (out_len == 0) {
    throw Error(ErrorCode::InvalidArgument, "shake256 output length must be >= 1");
  }
  Shake256 xof;
  xof.absorb(data);
  return xof.squeeze(out_len);
}

Bytes shake128(BytesView data, size_t out_len)
{
  if (out_len == 0) {
    throw Error(ErrorCode::InvalidArgument, "shake128 output length must be >= 1");
  }
  Shake128 xof;
  xof.absorb(data);
  return xof.squeeze(out_len);
}

} // namespace pqchain::hash
