#pragma once

#include "cert/certificates.hpp"
#include "did/registry.hpp"
#include "tx/transaction.hpp"

#include <string>

namespace pqchain::test {

// A CA, a registry, and one certified writer: the minimum world in which a
// meta-transaction can be admitted.
struct TestWorld {
  cert::CertificateAuthority ca;
  ecdsa::EcdsaKeyPair legacy_root;
  did::Registry registry;
  Address relay_hub{};

  struct Writer {
    std::string did;
    ecdsa::EcdsaKeyPair eth;
    falcon::FalconKeyPair falcon;
    cert::PqCertificate certificate;
    uint64_t wrapper_nonce = 0;
  };
  Writer writer;

  explicit TestWorld(const std::string& tag = "default")
    : ca(to_bytes("tw-ca-" + tag), {})
    , legacy_root(ecdsa::keygen(to_bytes("tw-root-" + tag)))
    , registry("")
  {
    ca = cert::CertificateAuthority(to_bytes("tw-ca-" + tag), { legacy_root.public_key });
    registry = did::Registry(ca.did());
    relay_hub[19] = 0x11;
    writer = enroll("writer-" + tag);
  }

  Writer enroll(const std::string& name)
  {
    Writer w;
    w.eth = ecdsa::keygen(to_bytes("tw-eth-" + name));
    w.falcon = falcon::keygen(to_bytes("tw-falcon-" + name));
    cert::SubjectInfo subject{ name + ".example", "Test Org", "UY", "" };
    const auto legacy =
      cert::issue_legacy(subject, "Legacy", 0, 1u << 20, w.eth.public_key, legacy_root);
    const auto result = ca.issue(legacy, cert::build_csr(subject, w.eth),
                                 cert::build_csr(subject, w.falcon, to_bytes("tw-csr-" + name)),
                                 to_bytes("tw-issue-" + name), 1, 1u << 20, registry);
    w.certificate = result.certificate;
    w.did = result.certificate.subject.did;
    return w;
  }

  tx::SignedTransaction user_tx(uint64_t nonce, const std::string& tag)
  {
    const auto user = ecdsa::keygen(to_bytes("tw-user-" + tag));
    tx::Transaction t;
    t.nonce = nonce;
    t.gas_price = { 0x3B, 0x9A, 0xCA, 0x00 };
    t.start_gas = 90000;
    Address dest{};
    dest[0] = 0xD0;
    dest[19] = static_cast<uint8_t>(nonce & 0xFF);
    t.to = dest;
    t.value = { 0x01 };
    t.data = to_bytes("payload-" + tag);
    t.chain_id = 648529;
    return tx::sign_inner(t, user);
  }

  tx::MetaTransaction make_metatx(const std::string& tag, Writer& by)
  {
    const auto inner = user_tx(by.wrapper_nonce, tag);
    tx::WriterContext ctx{ by.did, by.eth, by.falcon.secret };
    return tx::sign_outer(inner, ctx, to_bytes("tw-outer-" + tag), relay_hub,
                          by.wrapper_nonce++);
  }

  tx::MetaTransaction make_metatx(const std::string& tag) { return make_metatx(tag, writer); }
};

} // namespace pqchain::test
