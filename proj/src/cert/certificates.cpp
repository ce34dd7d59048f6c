#include "cert/certificates.hpp"

#include "common/errors.hpp"
#include "common/tlv.hpp"
#include "crypto/keccak.hpp"
#include "crypto/sha256.hpp"

namespace pqchain::cert {

namespace {

Bytes csr_to_be_signed(const SubjectInfo& subject, const std::string& oid, BytesView public_key)
{
  tlv::Writer w("PQRT", 1);
  w.field(1, canonical_subject(subject));
  w.field_str(2, oid);
  w.field(3, public_key);
  return w.take();
}

} // namespace

Bytes canonical_subject(const SubjectInfo& s)
{
  tlv::Writer w("SUBJ", 1);
  w.field_str(1, s.common_name);
  w.field_str(2, s.organization);
  w.field_str(3, s.country);
  w.field_str(4, s.did);
  return w.take();
}

CertSigningRequest build_csr(const SubjectInfo& subject, const ecdsa::EcdsaKeyPair& key)
{
  if (subject.common_name.empty()) {
    throw Error(ErrorCode::InvalidArgument, "subject common_name must be non-empty");
  }
  CertSigningRequest csr;
  csr.subject = subject;
  csr.algorithm_oid = std::string(kEcdsaOid);
  csr.public_key.assign(key.public_key.begin(), key.public_key.end());
  const auto digest = hash::keccak256(csr_to_be_signed(subject, csr.algorithm_oid, csr.public_key));
  const auto sig = ecdsa::sign(digest, key);
  csr.self_signature.assign(sig.r.begin(), sig.r.end());
  csr.self_signature.insert(csr.self_signature.end(), sig.s.begin(), sig.s.end());
  csr.self_signature.push_back(static_cast<uint8_t>(sig.recovery_id));
  return csr;
}

CertSigningRequest build_csr(const SubjectInfo& subject, const falcon::FalconKeyPair& key,
                             BytesView sign_entropy)
{
  if (subject.common_name.empty()) {
    throw Error(ErrorCode::InvalidArgument, "subject common_name must be non-empty");
  }
  CertSigningRequest csr;
  csr.subject = subject;
  csr.algorithm_oid = std::string(kFalconOid);
  csr.public_key.assign(key.public_key.begin(), key.public_key.end());
  const auto sig = falcon::sign(csr_to_be_signed(subject, csr.algorithm_oid, csr.public_key),
                                key.secret, sign_entropy);
  csr.self_signature.assign(sig.bytes.begin(), sig.bytes.end());
  return csr;
}

CheckResult verify_csr(const CertSigningRequest& csr)
{
  const Bytes tbs = csr_to_be_signed(csr.subject, csr.algorithm_oid, csr.public_key);
  if (csr.algorithm_oid == kEcdsaOid) {
    if (csr.public_key.size() != 64 || csr.self_signature.size() != 65) {
      return CheckResult::RejectMalformed;
    }
    ecdsa::EcdsaSignature sig;
    std::copy(csr.self_signature.begin(), csr.self_signature.begin() + 32, sig.r.begin());
    std::copy(csr.self_signature.begin() + 32, csr.self_signature.begin() + 64, sig.s.begin());
    sig.recovery_id = csr.self_signature[64];
    ecdsa::PublicKey expected;
    std::copy(csr.public_key.begin(), csr.public_key.end(), expected.begin());
    return ecdsa::verify(hash::keccak256(tbs), sig, expected) ? CheckResult::Accept
                                                              : CheckResult::RejectInvalid;
  }
  if (csr.algorithm_oid == kFalconOid) {
    if (csr.public_key.size() != falcon::kPublicKeyLen) {
      return CheckResult::RejectMalformed;
    }
    if (csr.self_signature.size() != falcon::kSignatureLen) {
      return CheckResult::RejectMalformed;
    }
    falcon::PublicKey pk;
    std::copy(csr.public_key.begin(), csr.public_key.end(), pk.begin());
    switch (falcon::verify(tbs, csr.self_signature, pk)) {
      case falcon::VerifyStatus::Accept: return CheckResult::Accept;
      case falcon::VerifyStatus::RejectMalformed: return CheckResult::RejectMalformed;
      case falcon::VerifyStatus::RejectInvalid: return CheckResult::RejectInvalid;
    }
  }
  return CheckResult::RejectMalformed; // unknown algorithm
}

Bytes encode_csr(const CertSigningRequest& csr)
{
  tlv::Writer w("PQR1", 1);
  w.field(1, canonical_subject(csr.subject));
  w.field_str(2, csr.algorithm_oid);
  w.field(3, csr.public_key);
  w.field(4, csr.self_signature);
  return w.take();
}

std::optional<CertSigningRequest> decode_csr(BytesView data)
{
  try {
    tlv::Reader r(data, "PQR1", 1);
    CertSigningRequest csr;
    const Bytes subj = r.field(1);
    csr.algorithm_oid = r.field_str(2);
    csr.public_key = r.field(3);
    csr.self_signature = r.field(4);
    r.finish();
    tlv::Reader sr(subj, "SUBJ", 1);
    csr.subject.common_name = sr.field_str(1);
    csr.subject.organization = sr.field_str(2);
    csr.subject.country = sr.field_str(3);
    csr.subject.did = sr.field_str(4);
    sr.finish();
    return csr;
  } catch (const Error&) {
    return std::nullopt;
  }
}

Bytes legacy_to_be_signed(const LegacyCertificate& c)
{
  tlv::Writer w("LGCY", 1);
  w.field(1, canonical_subject(c.subject));
  w.field_str(2, c.issuer);
  w.field_u64(3, c.not_before);
  w.field_u64(4, c.not_after);
  w.field(5, BytesView(c.public_key));
  return w.take();
}

LegacyCertificate issue_legacy(const SubjectInfo& subject, const std::string& issuer,
                               uint64_t not_before, uint64_t not_after,
                               const ecdsa::PublicKey& subject_key,
                               const ecdsa::EcdsaKeyPair& root_key)
{
  LegacyCertificate c;
  c.subject = subject;
  c.issuer = issuer;
  c.not_before = not_before;
  c.not_after = not_after;
  c.public_key = subject_key;
  const auto sig = ecdsa::sign(hash::sha256(legacy_to_be_signed(c)), root_key);
  c.sig_r = sig.r;
  c.sig_s = sig.s;
  c.sig_recovery = sig.recovery_id;
  return c;
}

bool legacy_valid(const LegacyCertificate& c, const std::vector<ecdsa::PublicKey>& trusted_roots,
                  uint64_t now)
{
  if (now < c.not_before || now > c.not_after) {
    return false;
  }
  ecdsa::EcdsaSignature sig;
  sig.r = c.sig_r;
  sig.s = c.sig_s;
  sig.recovery_id = c.sig_recovery;
  const auto signer = ecdsa::recover(hash::sha256(legacy_to_be_signed(c)), sig);
  if (!signer) {
    return false;
  }
  for (const auto& root : trusted_roots) {
    if (root == *signer) {
      return true;
    }
  }
  return false;
}

Bytes certificate_to_be_signed(const PqCertificate& c)
{
  tlv::Writer w("PQTB", 1);
  w.field(1, BytesView(c.serial));
  w.field(2, canonical_subject(c.subject));
  w.field(3, BytesView(c.eth_public_key));
  w.field(4, BytesView(c.falcon_public_key));
  w.field_str(5, c.falcon_algorithm_oid);
  w.field_u64(6, c.not_before);
  w.field_u64(7, c.not_after);
  w.field_str(8, c.issuer_did);
  return w.take();
}

CheckResult verify_certificate(const PqCertificate& c, const falcon::PublicKey& ca_key,
                               uint64_t now)
{
  if (c.falcon_algorithm_oid != kFalconOid) {
    return CheckResult::RejectMalformed;
  }
  if (c.ca_falcon_signature.size() != falcon::kSignatureLen) {
    return CheckResult::RejectMalformed;
  }
  if (now < c.not_before || now > c.not_after) {
    return CheckResult::RejectInvalid;
  }
  switch (falcon::verify(certificate_to_be_signed(c), c.ca_falcon_signature, ca_key)) {
    case falcon::VerifyStatus::Accept: return CheckResult::Accept;
    case falcon::VerifyStatus::RejectMalformed: return CheckResult::RejectMalformed;
    case falcon::VerifyStatus::RejectInvalid: return CheckResult::RejectInvalid;
  }
  return CheckResult::RejectInvalid;
}

Bytes encode_certificate(const PqCertificate& c)
{
  tlv::Writer w("PQX1", 1);
  w.field(1, certificate_to_be_signed(c));
  w.field(2, c.ca_falcon_signature);
  return w.take();
}

std::optional<PqCertificate> decode_certificate(BytesView data)
{
  try {
    tlv::Reader r(data, "PQX1", 1);
    const Bytes tbs = r.field(1);
    const Bytes sig = r.field(2);
    r.finish();

    tlv::Reader tr(tbs, "PQTB", 1);
    PqCertificate c;
    const Bytes serial = tr.field(1);
    const Bytes subj = tr.field(2);
    const Bytes eth = tr.field(3);
    const Bytes fal = tr.field(4);
    c.falcon_algorithm_oid = tr.field_str(5);
    c.not_before = tr.field_u64(6);
    c.not_after = tr.field_u64(7);
    c.issuer_did = tr.field_str(8);
    tr.finish();
    if (serial.size() != c.serial.size() || eth.size() != c.eth_public_key.size() ||
        fal.size() != c.falcon_public_key.size()) {
      return std::nullopt;
    }
    std::copy(serial.begin(), serial.end(), c.serial.begin());
    std::copy(eth.begin(), eth.end(), c.eth_public_key.begin());
    std::copy(fal.begin(), fal.end(), c.falcon_public_key.begin());

    tlv::Reader sr(subj, "SUBJ", 1);
    c.subject.common_name = sr.field_str(1);
    c.subject.organization = sr.field_str(2);
    c.subject.country = sr.field_str(3);
    c.subject.did = sr.field_str(4);
    sr.finish();

    c.ca_falcon_signature = sig;
    return c;
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::string armor_certificate(const PqCertificate& c)
{
  const std::string hex = to_hex(encode_certificate(c));
  std::string out = "-----BEGIN PQ CERTIFICATE-----\n";
  for (size_t i = 0; i < hex.size(); i += 64) {
    out += hex.substr(i, 64);
    out += '\n';
  }
  out += "-----END PQ CERTIFICATE-----\n";
  return out;
}

std::optional<PqCertificate> dearmor_certificate(const std::string& text)
{
  const std::string begin = "-----BEGIN PQ CERTIFICATE-----";
  const std::string end = "-----END PQ CERTIFICATE-----";
  const size_t b = text.find(begin);
  const size_t e = text.find(end);
  if (b == std::string::npos || e == std::string::npos || e <= b) {
    return std::nullopt;
  }
  std::string hex;
  for (size_t i = b + begin.size(); i < e; i++) {
    const char ch = text[i];
    if (ch != '\n' && ch != '\r' && ch != ' ') {
      hex.push_back(ch);
    }
  }
  try {
    return decode_certificate(from_hex(hex));
  } catch (const Error&) {
    return std::nullopt;
  }
}

CertificateAuthority::CertificateAuthority(BytesView keygen_entropy,
                                           std::vector<ecdsa::PublicKey> trusted_roots)
  : CertificateAuthority(falcon::keygen(keygen_entropy), std::move(trusted_roots))
{
}

CertificateAuthority::CertificateAuthority(falcon::FalconKeyPair keys,
                                           std::vector<ecdsa::PublicKey> trusted_roots)
  : keys_(std::move(keys))
  , trusted_roots_(std::move(trusted_roots))
{
  const auto id = hash::keccak256(BytesView(keys_.public_key));
  Address a;
  std::copy(id.begin() + 12, id.end(), a.begin());
  did_ = did::from_address(a);
}

IssuanceResult CertificateAuthority::issue(const LegacyCertificate& legacy,
                                           const CertSigningRequest& csr_eth,
                                           const CertSigningRequest& csr_falcon,
                                           BytesView issue_entropy, uint64_t now,
                                           uint64_t validity_ticks, did::Registry& registry)
{
  // step (i): the traditional certificate must chain to a trusted root
  if (!legacy_valid(legacy, trusted_roots_, now)) {
    throw Error(ErrorCode::LegacyInvalid, "legacy certificate rejected");
  }
  // step (ii): subjects must match across the legacy certificate and both CSRs
  const auto same_subject = [](const SubjectInfo& a, const SubjectInfo& b) {
    return a.common_name == b.common_name && a.organization == b.organization &&
           a.country == b.country;
  };
  if (!same_subject(legacy.subject, csr_eth.subject) ||
      !same_subject(legacy.subject, csr_falcon.subject)) {
    throw Error(ErrorCode::SubjectMismatch, "subject fields differ");
  }
  // step (iii): both CSRs must be self-consistent
  if (csr_eth.algorithm_oid != kEcdsaOid || csr_falcon.algorithm_oid != kFalconOid ||
      verify_csr(csr_eth) != CheckResult::Accept ||
      verify_csr(csr_falcon) != CheckResult::Accept) {
    throw Error(ErrorCode::CsrInvalid, "certificate signing request rejected");
  }

  PqCertificate cert;
  {
    hash::Shake256 xof;
    xof.absorb(to_bytes("pqchain/cert-serial"));
    Bytes ctr;
    append_u64be(ctr, ++serial_counter_);
    xof.absorb(ctr);
    xof.absorb(issue_entropy);
    xof.squeeze(cert.serial.data(), cert.serial.size());
  }
  std::copy(csr_eth.public_key.begin(), csr_eth.public_key.end(), cert.eth_public_key.begin());
  std::copy(csr_falcon.public_key.begin(), csr_falcon.public_key.end(),
            cert.falcon_public_key.begin());

  const Address subject_address = ecdsa::derive_address(cert.eth_public_key);
  cert.subject = legacy.subject;
  cert.subject.did = did::from_address(subject_address);
  cert.not_before = now;
  cert.not_after = now + validity_ticks;
  cert.issuer_did = did_;

  Bytes sign_entropy = to_bytes("pqchain/cert-sign");
  append(sign_entropy, issue_entropy);
  append(sign_entropy, BytesView(cert.serial));
  const auto sig = falcon::sign(certificate_to_be_signed(cert), keys_.secret, sign_entropy);
  cert.ca_falcon_signature.assign(sig.bytes.begin(), sig.bytes.end());

  IssuanceResult result;
  result.certificate = cert;
  {
    hash::Shake256 xof;
    xof.absorb(to_bytes("pqchain/subject-salt"));
    xof.absorb(issue_entropy);
    xof.absorb(BytesView(cert.serial));
    xof.squeeze(result.subject_proof_salt.data(), result.subject_proof_salt.size());
  }
  Bytes proof_input = canonical_subject(cert.subject);
  append(proof_input, BytesView(result.subject_proof_salt));

  did::DidRecord record;
  record.did = cert.subject.did;
  record.eth_public_key = cert.eth_public_key;
  record.falcon_public_key = cert.falcon_public_key;
  record.subject_proof = hash::keccak256(proof_input);
  record.controller = did::from_address(subject_address);
  registry.register_record(did_, record);

  const auto* stored = registry.resolve(record.did);
  result.record = *stored;
  return result;
}

} // namespace pqchain::cert
