#pragma once

#include "common/bytes.hpp"

#include <string>
#include <string_view>

namespace pqchain::kem {

// Round-3 CRYSTALS-Kyber, 768 parameter set. The KEM algorithm is carried as
// a configuration string so a different NIST round-3 scheme can slot in
// behind the same interface.
inline constexpr std::string_view kDefaultAlgorithm = "kyber768-r3";

inline constexpr size_t kPublicKeyLen = 1184;
inline constexpr size_t kSecretKeyLen = 2400;
inline constexpr size_t kCiphertextLen = 1088;
inline constexpr size_t kSharedSecretLen = 32;

using SharedSecret = std::array<uint8_t, kSharedSecretLen>;

struct KemKeyPair {
  std::string algorithm;
  Bytes public_key;
  Bytes secret_key;
};

struct Encapsulation {
  Bytes ciphertext;
  SharedSecret shared_secret;
};

KemKeyPair keygen(BytesView entropy, std::string_view algorithm = kDefaultAlgorithm);

Encapsulation encap(BytesView public_key, BytesView entropy,
                    std::string_view algorithm = kDefaultAlgorithm);

// Implicit rejection: a tampered ciphertext decapsulates to a pseudorandom
// secret rather than an error; protocols detect the mismatch by key
// confirmation.
SharedSecret decap(BytesView ciphertext, const KemKeyPair& key);

} // namespace pqchain::kem
