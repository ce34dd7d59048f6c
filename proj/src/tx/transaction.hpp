#pragma once

#include "common/bytes.hpp"
#include "crypto/falcon.hpp"
#include "crypto/secp256k1.hpp"

#include <optional>
#include <string>

namespace pqchain::tx {

// EIP-155 transaction body. Integer-like fields that may exceed 64 bits
// (gas price, value) are carried as minimal big-endian byte strings.
struct Transaction {
  uint64_t nonce = 0;
  Bytes gas_price;
  uint64_t start_gas = 0;
  std::optional<Address> to; // empty = contract creation
  Bytes value;
  Bytes data;
  uint64_t chain_id = 1;

  bool operator==(const Transaction&) const = default;
};

// The nine-element replay-protected signing payload:
// rlp([nonce, gasprice, startgas, to, value, data, chain_id, 0, 0])
Bytes signing_stream(const Transaction& tx);
Digest256 signing_hash(const Transaction& tx);

struct SignedTransaction {
  Transaction tx;
  uint64_t v = 0; // chain_id * 2 + 35 + recovery_id
  std::array<uint8_t, 32> r{};
  std::array<uint8_t, 32> s{};

  bool operator==(const SignedTransaction&) const = default;
};

SignedTransaction sign_inner(const Transaction& tx, const ecdsa::EcdsaKeyPair& key);

// Empty on v/chain-id mismatch, high s, or recovery failure.
std::optional<ecdsa::PublicKey> recover_sender(const SignedTransaction& stx);
std::optional<Address> sender_address(const SignedTransaction& stx);

Bytes encode_signed(const SignedTransaction& stx);
std::optional<SignedTransaction> decode_signed(BytesView data);

// Relay-hub wrapper: the writer node adds its DID and a Falcon-512 signature
// over the inner transaction's signing stream, then addresses the bundle to
// the relay hub under its own ECDSA key.
struct MetaTransaction {
  Address relay_hub{};
  SignedTransaction inner;
  std::string writer_did;
  Bytes falcon_signature;
  SignedTransaction wrapper;

  bool operator==(const MetaTransaction&) const = default;
};

struct WriterContext {
  std::string did;
  ecdsa::EcdsaKeyPair eth_key;
  falcon::SecretKey falcon_secret;
};

MetaTransaction sign_outer(const SignedTransaction& inner, const WriterContext& writer,
                           BytesView falcon_entropy, const Address& relay_hub,
                           uint64_t wrapper_nonce);

// Wraps an inner transaction with an existing Falcon signature (no fresh
// signing); used to model adversaries that hold a writer's ECDSA key but
// cannot produce post-quantum signatures.
MetaTransaction wrap_presigned(const SignedTransaction& inner, const std::string& writer_did,
                               BytesView falcon_signature, const Address& relay_hub,
                               uint64_t wrapper_nonce, const ecdsa::EcdsaKeyPair& wrapper_key);

// Canonical wrapper payload (magic "MTX1").
Bytes encode_payload(const SignedTransaction& inner, const std::string& writer_did,
                     BytesView falcon_signature);

Bytes encode_metatx(const MetaTransaction& mtx);
std::optional<MetaTransaction> decode_metatx(BytesView data);

// Pool/dedup identity of a meta-transaction.
Digest256 wrapper_hash(const MetaTransaction& mtx);

} // namespace pqchain::tx
