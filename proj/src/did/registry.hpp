#pragma once

#include "common/bytes.hpp"
#include "crypto/falcon.hpp"
#include "crypto/secp256k1.hpp"

#include <map>
#include <optional>
#include <string>

namespace pqchain::did {

// DIDs look like "did:lac:<40 lowercase hex>"; the method-specific id is the
// Ethereum address of the subject's ECDSA key.
inline constexpr std::string_view kMethod = "lac";

bool is_valid(const std::string& did);
std::string from_address(const Address& address);
std::optional<Address> to_address(const std::string& did);

struct DidRecord {
  std::string did;
  ecdsa::PublicKey eth_public_key{};
  falcon::PublicKey falcon_public_key{};
  Digest256 subject_proof{};
  std::string controller;
  uint64_t registered_at = 0;

  bool operator==(const DidRecord&) const = default;
};

Bytes encode_record(const DidRecord& record);
std::optional<DidRecord> decode_record(BytesView data);

enum class ControlsStatus {
  Controls,
  KeyMismatch, // address matches but the registered key differs
  NotFound,
  MalformedDid,
};

// Contract-like state machine: CA-gated registration, open resolution,
// append-only state.
class Registry {
public:
  explicit Registry(std::string ca_did)
    : ca_did_(std::move(ca_did))
  {
  }

  // Idempotent for identical records; Unauthorized / DuplicateDid otherwise.
  void register_record(const std::string& caller, const DidRecord& record);

  // nullptr = NotFound; throws MalformedDid on syntax errors.
  const DidRecord* resolve(const std::string& did) const;

  ControlsStatus controls(const ecdsa::PublicKey& eth_public_key, const std::string& did) const;

  const std::string& ca_did() const { return ca_did_; }
  size_t size() const { return records_.size(); }

  // Deterministic sorted key-value export (hex DID -> hex record encoding).
  std::string snapshot() const;
  Digest256 state_hash() const;

private:
  std::string ca_did_;
  std::map<std::string, DidRecord> records_;
  uint64_t height_ = 0;
};

} // namespace pqchain::did
