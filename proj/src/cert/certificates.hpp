#pragma once

#include "common/bytes.hpp"
#include "crypto/falcon.hpp"
#include "crypto/secp256k1.hpp"
#include "did/registry.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pqchain::cert {

inline constexpr std::string_view kFalconOid = "1.3.9999.3.1";
inline constexpr std::string_view kEcdsaOid = "1.2.840.10045.2.1";

struct SubjectInfo {
  std::string common_name;
  std::string organization;
  std::string country;
  std::string did; // empty until the CA assigns one

  bool operator==(const SubjectInfo&) const = default;
};

Bytes canonical_subject(const SubjectInfo& subject);

enum class CheckResult {
  Accept,
  RejectMalformed,
  RejectInvalid,
};

struct CertSigningRequest {
  SubjectInfo subject;
  std::string algorithm_oid;
  Bytes public_key;
  Bytes self_signature;

  bool operator==(const CertSigningRequest&) const = default;
};

CertSigningRequest build_csr(const SubjectInfo& subject, const ecdsa::EcdsaKeyPair& key);
CertSigningRequest build_csr(const SubjectInfo& subject, const falcon::FalconKeyPair& key,
                             BytesView sign_entropy);
CheckResult verify_csr(const CertSigningRequest& csr);

Bytes encode_csr(const CertSigningRequest& csr);
std::optional<CertSigningRequest> decode_csr(BytesView data);

// Stub of the classical PKI world: validity window plus an ECDSA signature
// (over SHA-256) checkable against a configured root list.
struct LegacyCertificate {
  SubjectInfo subject;
  std::string issuer;
  uint64_t not_before = 0;
  uint64_t not_after = 0;
  ecdsa::PublicKey public_key{};
  std::array<uint8_t, 32> sig_r{};
  std::array<uint8_t, 32> sig_s{};
  int sig_recovery = 0;
};

Bytes legacy_to_be_signed(const LegacyCertificate& cert);
LegacyCertificate issue_legacy(const SubjectInfo& subject, const std::string& issuer,
                               uint64_t not_before, uint64_t not_after,
                               const ecdsa::PublicKey& subject_key,
                               const ecdsa::EcdsaKeyPair& root_key);
bool legacy_valid(const LegacyCertificate& cert,
                  const std::vector<ecdsa::PublicKey>& trusted_roots, uint64_t now);

struct PqCertificate {
  std::array<uint8_t, 16> serial{};
  SubjectInfo subject;
  ecdsa::PublicKey eth_public_key{};
  falcon::PublicKey falcon_public_key{};
  std::string falcon_algorithm_oid{ kFalconOid };
  uint64_t not_before = 0;
  uint64_t not_after = 0;
  std::string issuer_did;
  Bytes ca_falcon_signature;

  bool operator==(const PqCertificate&) const = default;
};

Bytes certificate_to_be_signed(const PqCertificate& cert);
CheckResult verify_certificate(const PqCertificate& cert, const falcon::PublicKey& ca_key,
                               uint64_t now);

// Canonical binary form (magic "PQX1") and a hex-armored text form.
Bytes encode_certificate(const PqCertificate& cert);
std::optional<PqCertificate> decode_certificate(BytesView data);
std::string armor_certificate(const PqCertificate& cert);
std::optional<PqCertificate> dearmor_certificate(const std::string& text);

struct IssuanceResult {
  PqCertificate certificate;
  did::DidRecord record;
  std::array<uint8_t, 32> subject_proof_salt{};
};

// The CA: holds its own Falcon keypair, the trusted legacy roots, and the
// registry it writes to. Issuance runs the three checks in order and either
// issues + registers atomically or leaves the registry untouched.
class CertificateAuthority {
public:
  CertificateAuthority(BytesView keygen_entropy, std::vector<ecdsa::PublicKey> trusted_roots);
  CertificateAuthority(falcon::FalconKeyPair keys, std::vector<ecdsa::PublicKey> trusted_roots);

  IssuanceResult issue(const LegacyCertificate& legacy, const CertSigningRequest& csr_eth,
                       const CertSigningRequest& csr_falcon, BytesView issue_entropy,
                       uint64_t now, uint64_t validity_ticks, did::Registry& registry);

  const falcon::PublicKey& falcon_public() const { return keys_.public_key; }
  const std::string& did() const { return did_; }

private:
  falcon::FalconKeyPair keys_;
  std::string did_;
  std::vector<ecdsa::PublicKey> trusted_roots_;
  uint64_t serial_counter_ = 0;
};

} // namespace pqchain::cert
