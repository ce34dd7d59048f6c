#pragma once

#include "common/bytes.hpp"

#include <optional>

namespace pqchain::aead {

inline constexpr size_t kKeyLen = 32;
inline constexpr size_t kNonceLen = 24; // XChaCha20-Poly1305 (IETF)
inline constexpr size_t kTagLen = 16;

using Key = std::array<uint8_t, kKeyLen>;
using Nonce = std::array<uint8_t, kNonceLen>;

// Returns ciphertext || 16-byte tag.
Bytes seal(const Key& key, const Nonce& nonce, BytesView aad, BytesView plaintext);

// Empty optional on tag mismatch or truncated input.
std::optional<Bytes> open(const Key& key, const Nonce& nonce, BytesView aad, BytesView boxed);

// Exposed for tests: the HChaCha20 subkey derivation used by XChaCha.
Key hchacha20(const Key& key, const std::array<uint8_t, 16>& input);

} // namespace pqchain::aead
