#pragma once

#include "common/bytes.hpp"

namespace pqchain::hash {

// Keccak-f[1600] sponge. One struct backs all of the project's SHA-3 family
// needs: legacy Keccak-256 (Ethereum), FIPS-202 SHA3-256/512 and the
// SHAKE128/256 XOFs (Falcon hash-to-point, Kyber internals, key derivation).
class Sponge {
public:
  Sponge(size_t rate_bytes, uint8_t domain);

  void absorb(BytesView data);
  void finalize();
  void squeeze(uint8_t* out, size_t n);

  Bytes squeeze(size_t n)
  {
    Bytes out(n);
    squeeze(out.data(), n);
    return out;
  }

  // Number of Keccak-f applications so far; read by the metered verification
  // backend to charge per-permutation hash costs.
  uint64_t permutations() const { return permutations_; }

  void reset();

private:
  void permute();

  uint64_t lanes_[25];
  size_t rate_;
  uint8_t domain_;
  size_t offset_ = 0;
  bool finalized_ = false;
  uint64_t permutations_ = 0;
};

class Shake256 : public Sponge {
public:
  Shake256()
    : Sponge(136, 0x1F)
  {
  }
};

class Shake128 : public Sponge {
public:
  Shake128()
    : Sponge(168, 0x1F)
  {
  }
};

Digest256 keccak256(BytesView data);
Digest256 sha3_256(BytesView data);
std::array<uint8_t, 64> sha3_512(BytesView data);
Bytes shake256(BytesView data, size_t out_len);
Bytes shake128(BytesView data, size_t out_len);

} // namespace pqchain::hash
