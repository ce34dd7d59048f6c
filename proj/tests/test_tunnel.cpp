#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common/errors.hpp"
#include "common/tlv.hpp"
#include "crypto/aead.hpp"
#include "crypto/keccak.hpp"
#include "tunnel/tunnel.hpp"

using namespace pqchain;

namespace {

// two certified endpoints sharing one CA
struct World {
  cert::CertificateAuthority ca{ to_bytes("tunnel-ca"), {} };
  ecdsa::EcdsaKeyPair legacy_root = ecdsa::keygen(to_bytes("tunnel-legacy-root"));
  did::Registry registry{ "" };

  struct Node {
    cert::PqCertificate certificate;
    falcon::FalconKeyPair falcon;
    ecdsa::EcdsaKeyPair eth;
    std::string did;
  };

  Node alice, bob;

  World()
  {
    ca = cert::CertificateAuthority(to_bytes("tunnel-ca"), { legacy_root.public_key });
    registry = did::Registry(ca.did());
    alice = make_node("alice");
    bob = make_node("bob");
  }

  Node make_node(const std::string& name)
  {
    Node n;
    n.eth = ecdsa::keygen(to_bytes("tunnel-eth-" + name));
    n.falcon = falcon::keygen(to_bytes("tunnel-falcon-" + name));
    cert::SubjectInfo subject{ name + ".example", "Tunnel Org", "UY", "" };
    const auto legacy = cert::issue_legacy(subject, "Legacy", 0, 1u << 20, n.eth.public_key,
                                           legacy_root);
    const auto result = ca.issue(legacy, cert::build_csr(subject, n.eth),
                                 cert::build_csr(subject, n.falcon, to_bytes("csr-" + name)),
                                 to_bytes("issue-" + name), 1, 1u << 20, registry);
    n.certificate = result.certificate;
    n.did = result.certificate.subject.did;
    return n;
  }

  tunnel::EndpointConfig config_for(const Node& n) const
  {
    tunnel::EndpointConfig cfg;
    cfg.certificate = n.certificate;
    cfg.falcon_secret = n.falcon.secret;
    cfg.ca_public = ca.falcon_public();
    cfg.allowed_peers = { alice.did, bob.did };
    cfg.now = 10;
    return cfg;
  }
};

World& world()
{
  static World w;
  return w;
}

} // namespace

TEST_CASE("honest handshake opens both sessions with working keys")
{
  auto& w = world();
  auto pair = tunnel::handshake(w.config_for(w.alice), to_bytes("hs-a"), w.config_for(w.bob),
                                to_bytes("hs-b"));
  CHECK(pair.initiator.state() == tunnel::TunnelState::Open);
  CHECK(pair.responder.state() == tunnel::TunnelState::Open);
  CHECK(pair.initiator.peer_certificate().subject.did == w.bob.did);
  CHECK(pair.responder.peer_certificate().subject.did == w.alice.did);

  const Bytes msg = to_bytes("first record through the tunnel");
  CHECK(pair.responder.open(pair.initiator.seal(msg)) == msg);
  const Bytes reply = to_bytes("and a reply");
  CHECK(pair.initiator.open(pair.responder.seal(reply)) == reply);
}

TEST_CASE("certificate from an untrusted ca is rejected at message 2")
{
  auto& w = world();
  // a parallel CA issuing an identical-looking certificate
  cert::CertificateAuthority rogue_ca(to_bytes("rogue-ca"), { w.legacy_root.public_key });
  did::Registry rogue_registry(rogue_ca.did());
  auto mallory = w.alice;
  {
    cert::SubjectInfo subject{ "mallory.example", "Rogue Org", "UY", "" };
    const auto eth = ecdsa::keygen(to_bytes("mallory-eth"));
    const auto fal = falcon::keygen(to_bytes("mallory-falcon"));
    const auto legacy =
      cert::issue_legacy(subject, "Legacy", 0, 1u << 20, eth.public_key, w.legacy_root);
    const auto result = rogue_ca.issue(legacy, cert::build_csr(subject, eth),
                                       cert::build_csr(subject, fal, to_bytes("csr-m")),
                                       to_bytes("issue-m"), 1, 1u << 20, rogue_registry);
    mallory.certificate = result.certificate;
    mallory.falcon = fal;
    mallory.eth = eth;
    mallory.did = result.certificate.subject.did;
  }
  auto mallory_cfg = w.config_for(mallory);
  mallory_cfg.certificate = mallory.certificate;
  mallory_cfg.falcon_secret = mallory.falcon.secret;

  tunnel::InitiatorHandshake ih(w.config_for(w.alice), to_bytes("hs-a2"));
  tunnel::ResponderHandshake rh(mallory_cfg, to_bytes("hs-m"));
  const Bytes hello = ih.hello();
  const Bytes resp = rh.respond(hello); // mallory accepts anyone in this test
  CHECK_THROWS_WITH_AS(ih.finish(resp), doctest::Contains("CertificateRejected"), Error);
}

TEST_CASE("peer outside the allow-list is rejected even with a valid certificate")
{
  auto& w = world();
  auto restrictive = w.config_for(w.bob);
  restrictive.allowed_peers = { w.bob.did }; // alice not welcome
  tunnel::InitiatorHandshake ih(w.config_for(w.alice), to_bytes("hs-a3"));
  tunnel::ResponderHandshake rh(restrictive, to_bytes("hs-b3"));
  CHECK_THROWS_WITH_AS(rh.respond(ih.hello()), doctest::Contains("CertificateRejected"), Error);
}

TEST_CASE("mitm swapping the kem public key breaks the transcript signature")
{
  auto& w = world();
  tunnel::InitiatorHandshake ih(w.config_for(w.alice), to_bytes("hs-a4"));
  tunnel::ResponderHandshake rh(w.config_for(w.bob), to_bytes("hs-b4"));
  const Bytes hello = ih.hello();
  Bytes resp = rh.respond(hello);

  // splice in the attacker's kem public key
  const auto frame = entropy::parse_frame(resp);
  REQUIRE(frame.has_value());
  tlv::Reader r(frame->payload, "TRSP", 1);
  const Bytes cert_bytes = r.field(1);
  const Bytes nonce_r = r.field(2);
  Bytes kem_pub = r.field(3);
  const Bytes sig = r.field(4);
  const auto attacker_kem = kem::keygen(to_bytes("attacker-kem"));
  tlv::Writer wtr("TRSP", 1);
  wtr.field(1, cert_bytes);
  wtr.field(2, nonce_r);
  wtr.field(3, attacker_kem.public_key);
  wtr.field(4, sig);
  const Bytes forged =
    entropy::make_frame(static_cast<entropy::FrameType>(tunnel::HsType::Response), wtr.take());

  CHECK_THROWS_WITH_AS(ih.finish(forged), doctest::Contains("SignatureInvalid"), Error);
}

TEST_CASE("record layer: in-order delivery, replay, reorder, corruption")
{
  auto& w = world();
  auto pair = tunnel::handshake(w.config_for(w.alice), to_bytes("hs-a5"), w.config_for(w.bob),
                                to_bytes("hs-b5"));

  SUBCASE("1000 records in order")
  {
    for (int i = 0; i < 1000; i++) {
      Bytes msg = to_bytes("msg-" + std::to_string(i));
      CHECK(pair.responder.open(pair.initiator.seal(msg)) == msg);
    }
    CHECK(pair.initiator.send_seq() == 1000);
    CHECK(pair.responder.recv_seq() == 1000);
  }
  SUBCASE("replayed record rejected, session survives")
  {
    const Bytes r5 = pair.initiator.seal(to_bytes("five"));
    const Bytes r6 = pair.initiator.seal(to_bytes("six"));
    CHECK(pair.responder.open(r5) == to_bytes("five"));
    CHECK(pair.responder.open(r6) == to_bytes("six"));
    CHECK_THROWS_WITH_AS(pair.responder.open(r5), doctest::Contains("ReplayOrReorder"), Error);
    // in-order traffic continues after a rejected replay
    const Bytes r7 = pair.initiator.seal(to_bytes("seven"));
    CHECK(pair.responder.open(r7) == to_bytes("seven"));
  }
  SUBCASE("reordered record rejected")
  {
    const Bytes a = pair.initiator.seal(to_bytes("a"));
    const Bytes b = pair.initiator.seal(to_bytes("b"));
    CHECK_THROWS_WITH_AS(pair.responder.open(b), doctest::Contains("ReplayOrReorder"), Error);
    CHECK(pair.responder.open(a) == to_bytes("a"));
  }
  SUBCASE("one flipped ciphertext bit closes the session")
  {
    Bytes rec = pair.initiator.seal(to_bytes("to be corrupted"));
    rec[13] ^= 0x40;
    CHECK_THROWS_WITH_AS(pair.responder.open(rec), doctest::Contains("TagInvalid"), Error);
    CHECK(pair.responder.state() == tunnel::TunnelState::Closed);
    CHECK_THROWS_AS(pair.responder.open(rec), Error); // closed for good
  }
}

TEST_CASE("tunnel carries arbitrary octets unmodified")
{
  auto& w = world();
  auto pair = tunnel::handshake(w.config_for(w.alice), to_bytes("hs-a6"), w.config_for(w.bob),
                                to_bytes("hs-b6"));
  hash::Shake256 gen;
  gen.absorb(to_bytes("opaque-payloads"));
  for (int i = 0; i < 50; i++) {
    const size_t len = 1 + (i * 37) % 2048;
    Bytes payload(len);
    gen.squeeze(payload.data(), len);
    // prepend bytes resembling an rlpx frame header; the tunnel must not care
    if (i % 3 == 0 && len > 4) {
      payload[0] = 0xC0;
      payload[1] = 0x80;
    }
    CHECK(pair.responder.open(pair.initiator.seal(payload)) == payload);
  }
}

TEST_CASE("ciphertexts do not leak plaintext substrings")
{
  auto& w = world();
  auto pair = tunnel::handshake(w.config_for(w.alice), to_bytes("hs-a7"), w.config_for(w.bob),
                                to_bytes("hs-b7"));
  hash::Shake256 gen;
  gen.absorb(to_bytes("leak-probe"));
  long trials = 0;
  long leaks = 0;
  for (int i = 0; i < 4030; i++) {
    Bytes payload(256);
    gen.squeeze(payload.data(), payload.size());
    const Bytes record = pair.initiator.seal(payload);
    for (size_t off = 0; off + 8 <= payload.size(); off++) {
      trials++;
      const auto needle = BytesView(payload).subspan(off, 8);
      if (std::search(record.begin(), record.end(), needle.begin(), needle.end()) !=
          record.end()) {
        leaks++;
      }
    }
    (void)pair.responder.open(record);
  }
  CHECK(trials >= 1'000'000);
  CHECK(leaks == 0);
}

TEST_CASE("eavesdropper with the transcript but no secrets cannot open records")
{
  auto& w = world();
  std::vector<Bytes> transcript;
  tunnel::InitiatorHandshake ih(w.config_for(w.alice), to_bytes("hs-a8"));
  tunnel::ResponderHandshake rh(w.config_for(w.bob), to_bytes("hs-b8"));
  const Bytes m1 = ih.hello();
  const Bytes m2 = rh.respond(m1);
  const Bytes m3 = ih.finish(m2);
  const Bytes m4 = rh.confirm(m3);
  const Bytes m5 = ih.complete(m4);
  rh.accept(m5);
  transcript = { m1, m2, m3, m4, m5 };

  auto initiator = ih.take_session();
  auto responder = rh.take_session();
  const Bytes record = initiator.seal(to_bytes("secret payload"));

  // adversary: derives keys from the public transcript alone (no kem secret)
  Bytes all;
  for (const auto& m : transcript) {
    append(all, m);
  }
  kem::SharedSecret guessed{};
  const Digest256 th = hash::keccak256(all);
  std::copy(th.begin(), th.end(), guessed.begin()); // best guess without decap
  hash::Shake256 xof;
  xof.absorb(BytesView(guessed));
  xof.absorb(BytesView(th));
  uint8_t keys[64];
  xof.squeeze(keys, sizeof(keys));

  aead::Key key;
  std::memcpy(key.data(), keys, 32);
  aead::Nonce nonce{};
  const char dir[3] = { 'i', '2', 'r' };
  std::memcpy(nonce.data(), dir, 3);
  CHECK_FALSE(aead::open(key, nonce, {}, BytesView(record).subspan(12)).has_value());

  // the honest peer still can
  CHECK(responder.open(record) == to_bytes("secret payload"));
}
