#include "did/registry.hpp"

#include "common/errors.hpp"
#include "common/tlv.hpp"
#include "crypto/keccak.hpp"

namespace pqchain::did {

bool is_valid(const std::string& s)
{
  const std::string prefix = "did:" + std::string(kMethod) + ":";
  if (s.size() != prefix.size() + 40 || s.compare(0, prefix.size(), prefix) != 0) {
    return false;
  }
  for (size_t i = prefix.size(); i < s.size(); i++) {
    const char c = s[i];
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) {
      return false;
    }
  }
  return true;
}

std::string from_address(const Address& address)
{
  return "did:" + std::string(kMethod) + ":" + to_hex(address);
}

std::optional<Address> to_address(const std::string& s)
{
  if (!is_valid(s)) {
    return std::nullopt;
  }
  const Bytes raw = from_hex(s.substr(s.size() - 40));
  Address a;
  std::copy(raw.begin(), raw.end(), a.begin());
  return a;
}

Bytes encode_record(const DidRecord& r)
{
  tlv::Writer w("DRC1", 1);
  w.field_str(1, r.did);
  w.field(2, BytesView(r.eth_public_key));
  w.field(3, BytesView(r.falcon_public_key));
  w.field(4, BytesView(r.subject_proof));
  w.field_str(5, r.controller);
  w.field_u64(6, r.registered_at);
  return w.take();
}

std::optional<DidRecord> decode_record(BytesView data)
{
  try {
    tlv::Reader rd(data, "DRC1", 1);
    DidRecord r;
    r.did = rd.field_str(1);
    const Bytes eth = rd.field(2);
    const Bytes fal = rd.field(3);
    const Bytes proof = rd.field(4);
    r.controller = rd.field_str(5);
    r.registered_at = rd.field_u64(6);
    rd.finish();
    if (eth.size() != r.eth_public_key.size() || fal.size() != r.falcon_public_key.size() ||
        proof.size() != r.subject_proof.size()) {
      return std::nullopt;
    }
    std::copy(eth.begin(), eth.end(), r.eth_public_key.begin());
    std::copy(fal.begin(), fal.end(), r.falcon_public_key.begin());
    std::copy(proof.begin(), proof.end(), r.subject_proof.begin());
    return r;
  } catch (const Error&) {
    return std::nullopt;
  }
}

void Registry::register_record(const std::string& caller, const DidRecord& record)
{
  if (caller != ca_did_) {
    throw Error(ErrorCode::Unauthorized, "only the CA may register records");
  }
  if (!is_valid(record.did)) {
    throw Error(ErrorCode::MalformedDid, record.did);
  }
  const auto it = records_.find(record.did);
  if (it != records_.end()) {
    DidRecord existing = it->second;
    DidRecord incoming = record;
    incoming.registered_at = existing.registered_at;
    if (existing == incoming) {
      return; // idempotent re-registration
    }
    throw Error(ErrorCode::DuplicateDid, record.did);
  }
  DidRecord stored = record;
  stored.registered_at = ++height_;
  records_.emplace(record.did, std::move(stored));
}

const DidRecord* Registry::resolve(const std::string& s) const
{
  if (!is_valid(s)) {
    throw Error(ErrorCode::MalformedDid, s);
  }
  const auto it = records_.find(s);
  return it == records_.end() ? nullptr : &it->second;
}

ControlsStatus Registry::controls(const ecdsa::PublicKey& eth_public_key,
                                  const std::string& s) const
{
  if (!is_valid(s)) {
    return ControlsStatus::MalformedDid;
  }
  const auto it = records_.find(s);
  if (it == records_.end()) {
    return ControlsStatus::NotFound;
  }
  const Address derived = ecdsa::derive_address(eth_public_key);
  if (from_address(derived) != s || it->second.eth_public_key != eth_public_key) {
    return ControlsStatus::KeyMismatch;
  }
  return ControlsStatus::Controls;
}

std::string Registry::snapshot() const
{
  std::string out;
  for (const auto& [key, record] : records_) {
    out += to_hex(to_bytes(key));
    out += ' ';
    out += to_hex(encode_record(record));
    out += '\n';
  }
  return out;
}

Digest256 Registry::state_hash() const
{
  return hash::keccak256(to_bytes(snapshot()));
}

} // namespace pqchain::did
