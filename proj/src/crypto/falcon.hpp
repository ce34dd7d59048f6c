#pragma once

#include "common/bytes.hpp"

#include <optional>

namespace pqchain::falcon {

// Falcon-512 with the standard encodings: 897-byte public key, 1281-byte
// secret key, 666-byte padded signatures.
inline constexpr size_t kDegree = 512;
inline constexpr size_t kLogDegree = 9;
inline constexpr int32_t kModulus = 12289;
inline constexpr size_t kPublicKeyLen = 897;
inline constexpr size_t kSecretKeyLen = 1281;
inline constexpr size_t kSignatureLen = 666; // padded format, fixed size
inline constexpr size_t kNonceLen = 40;
inline constexpr int64_t kSigBoundSq = 34034726; // floor(beta^2) for n = 512

using PublicKey = std::array<uint8_t, kPublicKeyLen>;
using SecretKey = std::array<uint8_t, kSecretKeyLen>;

struct FalconKeyPair {
  SecretKey secret;
  PublicKey public_key;
};

struct FalconSignature {
  std::array<uint8_t, kSignatureLen> bytes;
};

enum class VerifyStatus {
  Accept,
  RejectInvalid,   // well-formed but fails the lattice relation / norm bound
  RejectMalformed, // encoding violation
};

// Instrumentation counters collected inside the verification code path.
struct VerifyMeter {
  uint64_t shake_permutations = 0;
  uint64_t ntt_butterflies = 0;
  uint64_t coeff_mults = 0;
  uint64_t memory_words = 0;
};

// Key generation is deterministic given the entropy buffer (the caller feeds
// certified entropy from the entropy service).
FalconKeyPair keygen(BytesView entropy);

// Signing consumes entropy for the 40-byte nonce and the Gaussian sampler;
// deterministic given (message, key, entropy).
FalconSignature sign(BytesView message, const SecretKey& secret, BytesView entropy);

VerifyStatus verify(BytesView message, BytesView signature, const PublicKey& public_key,
                    VerifyMeter* meter = nullptr);

inline bool verify_ok(BytesView message, BytesView signature, const PublicKey& public_key)
{
  return verify(message, signature, public_key) == VerifyStatus::Accept;
}

} // namespace pqchain::falcon
