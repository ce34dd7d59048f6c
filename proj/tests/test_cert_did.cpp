#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cert/certificates.hpp"
#include "common/errors.hpp"
#include "crypto/keccak.hpp"
#include "did/registry.hpp"

using namespace pqchain;

namespace {

struct Fixture {
  cert::CertificateAuthority ca{ to_bytes("fixture-ca-entropy"), {} };
  ecdsa::EcdsaKeyPair legacy_root = ecdsa::keygen(to_bytes("legacy-root"));
  did::Registry registry{ ca.did() };

  cert::SubjectInfo subject{ "node-0.example", "Org A", "UY", "" };
  ecdsa::EcdsaKeyPair eth = ecdsa::keygen(to_bytes("fixture-eth"));
  falcon::FalconKeyPair fal = falcon::keygen(to_bytes("fixture-falcon"));

  Fixture()
  {
    ca = cert::CertificateAuthority(to_bytes("fixture-ca-entropy"), { legacy_root.public_key });
    registry = did::Registry(ca.did());
  }

  cert::LegacyCertificate legacy(const cert::SubjectInfo& s, uint64_t nb = 0, uint64_t na = 1000)
  {
    return cert::issue_legacy(s, "Legacy Root CA", nb, na, eth.public_key, legacy_root);
  }

  cert::IssuanceResult issue(uint64_t now = 10)
  {
    const auto csr_eth = cert::build_csr(subject, eth);
    const auto csr_fal = cert::build_csr(subject, fal, to_bytes("csr-falcon-entropy"));
    return ca.issue(legacy(subject), csr_eth, csr_fal, to_bytes("issue-entropy"), now, 500,
                    registry);
  }
};

} // namespace

TEST_CASE("did syntax")
{
  CHECK(did::is_valid("did:lac:00112233445566778899aabbccddeeff00112233"));
  CHECK_FALSE(did::is_valid("did:lac"));
  CHECK_FALSE(did::is_valid("did:lac:0011"));
  CHECK_FALSE(did::is_valid("did:lac:00112233445566778899AABBCCDDEEFF00112233")); // uppercase
  CHECK_FALSE(did::is_valid("did:web:00112233445566778899aabbccddeeff00112233"));
  Address a{};
  a[0] = 0xAB;
  const auto s = did::from_address(a);
  CHECK(did::is_valid(s));
  CHECK(did::to_address(s) == a);
}

TEST_CASE("csr round trip and verification")
{
  Fixture fx;
  const auto csr_fal = cert::build_csr(fx.subject, fx.fal, to_bytes("e1"));
  CHECK(cert::verify_csr(csr_fal) == cert::CheckResult::Accept);
  const auto csr_eth = cert::build_csr(fx.subject, fx.eth);
  CHECK(cert::verify_csr(csr_eth) == cert::CheckResult::Accept);

  SUBCASE("mutated subject byte rejected")
  {
    auto bad = csr_eth;
    bad.subject.organization = "Org B";
    CHECK(cert::verify_csr(bad) == cert::CheckResult::RejectInvalid);
  }
  SUBCASE("truncated signature is malformed")
  {
    auto bad = csr_fal;
    bad.self_signature.pop_back();
    CHECK(cert::verify_csr(bad) == cert::CheckResult::RejectMalformed);
  }
  SUBCASE("signature from a different key is invalid")
  {
    const auto other = falcon::keygen(to_bytes("other-falcon"));
    auto bad = csr_fal;
    const auto other_csr = cert::build_csr(fx.subject, other, to_bytes("e2"));
    bad.self_signature = other_csr.self_signature;
    CHECK(cert::verify_csr(bad) == cert::CheckResult::RejectInvalid);
  }
  SUBCASE("falcon oid with an ecdsa-sized key is malformed")
  {
    auto bad = csr_eth;
    bad.algorithm_oid = std::string(cert::kFalconOid);
    CHECK(cert::verify_csr(bad) == cert::CheckResult::RejectMalformed);
  }
  SUBCASE("codec round trip")
  {
    const auto decoded = cert::decode_csr(cert::encode_csr(csr_fal));
    REQUIRE(decoded.has_value());
    CHECK(*decoded == csr_fal);
  }
}

TEST_CASE("issuance happy path registers the did atomically")
{
  Fixture fx;
  const auto result = fx.issue();
  CHECK(cert::verify_certificate(result.certificate, fx.ca.falcon_public(), 20) ==
        cert::CheckResult::Accept);
  CHECK(result.certificate.falcon_algorithm_oid == cert::kFalconOid);

  // registry resolves the did to exactly the embedded keys
  const auto* rec = fx.registry.resolve(result.certificate.subject.did);
  REQUIRE(rec != nullptr);
  CHECK(rec->eth_public_key == result.certificate.eth_public_key);
  CHECK(rec->falcon_public_key == result.certificate.falcon_public_key);
  CHECK(rec->controller == did::from_address(ecdsa::derive_address(fx.eth.public_key)));

  // subject proof reproducible from subject data + returned salt
  Bytes proof_input = cert::canonical_subject(result.certificate.subject);
  append(proof_input, BytesView(result.subject_proof_salt));
  CHECK(rec->subject_proof == hash::keccak256(proof_input));
}

TEST_CASE("issuance error paths leave the registry unchanged")
{
  Fixture fx;
  const auto csr_eth = cert::build_csr(fx.subject, fx.eth);
  const auto csr_fal = cert::build_csr(fx.subject, fx.fal, to_bytes("e3"));
  const auto before = fx.registry.state_hash();

  SUBCASE("subject mismatch")
  {
    cert::SubjectInfo other = fx.subject;
    other.organization = "Org B";
    CHECK_THROWS_WITH_AS(fx.ca.issue(fx.legacy(other), csr_eth, csr_fal, to_bytes("x"), 10, 500,
                                     fx.registry),
                         doctest::Contains("SubjectMismatch"), Error);
    CHECK(fx.registry.state_hash() == before);
  }
  SUBCASE("expired legacy certificate")
  {
    CHECK_THROWS_WITH_AS(fx.ca.issue(fx.legacy(fx.subject, 0, 5), csr_eth, csr_fal,
                                     to_bytes("x"), 10, 500, fx.registry),
                         doctest::Contains("LegacyInvalid"), Error);
    CHECK(fx.registry.state_hash() == before);
  }
  SUBCASE("legacy certificate from an untrusted root")
  {
    const auto rogue = ecdsa::keygen(to_bytes("rogue-root"));
    const auto bad_legacy = cert::issue_legacy(fx.subject, "Rogue CA", 0, 1000,
                                               fx.eth.public_key, rogue);
    CHECK_THROWS_WITH_AS(fx.ca.issue(bad_legacy, csr_eth, csr_fal, to_bytes("x"), 10, 500,
                                     fx.registry),
                         doctest::Contains("LegacyInvalid"), Error);
    CHECK(fx.registry.state_hash() == before);
  }
  SUBCASE("tampered csr")
  {
    auto bad = csr_fal;
    bad.subject.common_name = "node-0.example"; // same subject, broken signature
    bad.self_signature[100] ^= 1;
    CHECK_THROWS_WITH_AS(fx.ca.issue(fx.legacy(fx.subject), csr_eth, bad, to_bytes("x"), 10, 500,
                                     fx.registry),
                         doctest::Contains("CsrInvalid"), Error);
    CHECK(fx.registry.state_hash() == before);
  }
}

TEST_CASE("certificate verification edges")
{
  Fixture fx;
  const auto result = fx.issue();

  CHECK(cert::verify_certificate(result.certificate, fx.ca.falcon_public(), 511) ==
        cert::CheckResult::RejectInvalid); // past not_after = 10 + 500
  auto mutated = result.certificate;
  mutated.falcon_public_key[100] ^= 1;
  CHECK(cert::verify_certificate(mutated, fx.ca.falcon_public(), 20) ==
        cert::CheckResult::RejectInvalid);
  auto bad_oid = result.certificate;
  bad_oid.falcon_algorithm_oid = "1.3.9999.3.4";
  CHECK(cert::verify_certificate(bad_oid, fx.ca.falcon_public(), 20) ==
        cert::CheckResult::RejectMalformed);
}

TEST_CASE("certificate codec: canonical round trip and armor")
{
  Fixture fx;
  const auto result = fx.issue();
  const Bytes bin = cert::encode_certificate(result.certificate);

  const auto decoded = cert::decode_certificate(bin);
  REQUIRE(decoded.has_value());
  CHECK(*decoded == result.certificate);
  CHECK(cert::encode_certificate(*decoded) == bin);

  Bytes extra = bin;
  extra.push_back(0x00);
  CHECK_FALSE(cert::decode_certificate(extra).has_value());

  const auto dearmored = cert::dearmor_certificate(cert::armor_certificate(result.certificate));
  REQUIRE(dearmored.has_value());
  CHECK(*dearmored == result.certificate);
}

TEST_CASE("registry rules")
{
  Fixture fx;
  const auto result = fx.issue();
  const auto rec = result.record;

  SUBCASE("non-ca caller rejected")
  {
    const auto before = fx.registry.state_hash();
    did::DidRecord other = rec;
    other.did = "did:lac:0000000000000000000000000000000000000000";
    CHECK_THROWS_WITH_AS(fx.registry.register_record("did:lac:deadbeefdeadbeefdeadbeefdeadbeefdeadbeef", other),
                         doctest::Contains("Unauthorized"), Error);
    CHECK(fx.registry.state_hash() == before);
  }
  SUBCASE("idempotent identical re-registration")
  {
    const auto before = fx.registry.state_hash();
    fx.registry.register_record(fx.ca.did(), rec);
    CHECK(fx.registry.state_hash() == before);
  }
  SUBCASE("conflicting re-registration rejected")
  {
    auto conflicting = rec;
    conflicting.falcon_public_key[0] ^= 1;
    CHECK_THROWS_WITH_AS(fx.registry.register_record(fx.ca.did(), conflicting),
                         doctest::Contains("DuplicateDid"), Error);
  }
  SUBCASE("resolve semantics")
  {
    CHECK(fx.registry.resolve("did:lac:ffffffffffffffffffffffffffffffffffffffff") == nullptr);
    CHECK_THROWS_WITH_AS(fx.registry.resolve("did:lac"), doctest::Contains("MalformedDid"),
                         Error);
    const auto* r = fx.registry.resolve(rec.did);
    REQUIRE(r != nullptr);
    CHECK(*r == rec);
  }
  SUBCASE("controls")
  {
    CHECK(fx.registry.controls(fx.eth.public_key, rec.did) == did::ControlsStatus::Controls);
    const auto other = ecdsa::keygen(to_bytes("controls-other"));
    CHECK(fx.registry.controls(other.public_key, rec.did) == did::ControlsStatus::KeyMismatch);
    CHECK(fx.registry.controls(fx.eth.public_key,
                               "did:lac:ffffffffffffffffffffffffffffffffffffffff") ==
          did::ControlsStatus::NotFound);
    CHECK(fx.registry.controls(fx.eth.public_key, "nonsense") ==
          did::ControlsStatus::MalformedDid);
  }
  SUBCASE("reads do not mutate state")
  {
    const auto before = fx.registry.state_hash();
    (void)fx.registry.resolve(rec.did);
    (void)fx.registry.controls(fx.eth.public_key, rec.did);
    (void)fx.registry.snapshot();
    CHECK(fx.registry.state_hash() == before);
  }
  SUBCASE("record codec round trip")
  {
    const auto decoded = did::decode_record(did::encode_record(rec));
    REQUIRE(decoded.has_value());
    CHECK(*decoded == rec);
  }
}
