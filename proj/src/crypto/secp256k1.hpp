#pragma once

#include "common/bytes.hpp"

#include <optional>

namespace pqchain::ecdsa {

using SecretKey = std::array<uint8_t, 32>;
using PublicKey = std::array<uint8_t, 64>; // uncompressed x||y, no 0x04 prefix

struct EcdsaKeyPair {
  SecretKey secret;
  PublicKey public_key;
};

struct EcdsaSignature {
  std::array<uint8_t, 32> r;
  std::array<uint8_t, 32> s; // always low half-order when produced by sign()
  int recovery_id = 0;       // 0 or 1
};

// Derives a keypair from caller-supplied entropy (SHAKE256-expanded until the
// scalar lands in [1, n-1]).
EcdsaKeyPair keygen(BytesView entropy);

// Rebuilds the public key for an existing secret scalar.
EcdsaKeyPair keypair_from_secret(const SecretKey& secret);

// ECDSA over secp256k1 with the RFC 6979 deterministic nonce and low-s
// normalization (Ethereum transaction validity rules).
EcdsaSignature sign(const Digest256& digest, const EcdsaKeyPair& key);

// Public-key recovery; empty on out-of-range r/s, bad recovery_id, or a
// signature that does not resolve to a curve point.
std::optional<PublicKey> recover(const Digest256& digest, const EcdsaSignature& sig);

bool verify(const Digest256& digest, const EcdsaSignature& sig, const PublicKey& expected);

// Ethereum address: last 20 bytes of keccak256(x||y).
Address derive_address(const PublicKey& public_key);

bool is_low_s(const std::array<uint8_t, 32>& s);

} // namespace pqchain::ecdsa
