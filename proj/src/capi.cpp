#include "pqchain/pqchain.h"

#include "cert/certificates.hpp"
#include "common/errors.hpp"
#include "crypto/keccak.hpp"
#include "crypto/kyber.hpp"
#include "crypto/secp256k1.hpp"
#include "did/registry.hpp"
#include "entropy/entropy.hpp"
#include "sim/simulator.hpp"
#include "tunnel/tunnel.hpp"
#include "tx/relay_rpc.hpp"
#include "tx/transaction.hpp"
#include "verify/pipeline.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <map>
#include <mutex>

using namespace pqchain;
using nlohmann::json;

namespace {

thread_local std::string g_last_error;

pqchain_status map_code(ErrorCode code)
{
  switch (code) {
    case ErrorCode::InvalidArgument: return PQCHAIN_ERR_INVALID_ARG;
    case ErrorCode::Malformed:
    case ErrorCode::DecodeError:
    case ErrorCode::MalformedDid: return PQCHAIN_ERR_MALFORMED;
    case ErrorCode::CryptoFailure: return PQCHAIN_ERR_CRYPTO;
    case ErrorCode::NotFound: return PQCHAIN_ERR_NOT_FOUND;
    case ErrorCode::Unauthorized: return PQCHAIN_ERR_UNAUTHORIZED;
    case ErrorCode::DuplicateDid: return PQCHAIN_ERR_DUPLICATE;
    case ErrorCode::Expired:
    case ErrorCode::Timeout: return PQCHAIN_ERR_EXPIRED;
    case ErrorCode::InvalidState:
    case ErrorCode::SessionNotEstablished:
    case ErrorCode::ReusedKey:
    case ErrorCode::MissingShare:
    case ErrorCode::MixedSession: return PQCHAIN_ERR_STATE;
    case ErrorCode::ConfigError: return PQCHAIN_ERR_CONFIG;
    case ErrorCode::IoError: return PQCHAIN_ERR_IO;
    default: return PQCHAIN_ERR_VERIFY_REJECT;
  }
}

template<typename Fn>
pqchain_status guarded(Fn&& fn)
{
  try {
    return fn();
  } catch (const Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const json::exception& e) {
    g_last_error = std::string("json: ") + e.what();
    return PQCHAIN_ERR_MALFORMED;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PQCHAIN_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s)
{
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

uint8_t* dup_bytes(BytesView b)
{
  uint8_t* out = static_cast<uint8_t*>(std::malloc(b.size() ? b.size() : 1));
  std::memcpy(out, b.data(), b.size());
  return out;
}

tx::Transaction tx_from_json(const json& j)
{
  auto dec_to_bytes = [](const std::string& dec) {
    std::vector<int> digits;
    for (char c : dec) {
      if (c < '0' || c > '9') {
        throw Error(ErrorCode::Malformed, "non-decimal digit");
      }
      digits.push_back(c - '0');
    }
    Bytes out;
    while (!digits.empty()) {
      std::vector<int> q;
      int rem = 0;
      for (int d : digits) {
        const int cur = rem * 10 + d;
        q.push_back(cur / 256);
        rem = cur % 256;
      }
      out.insert(out.begin(), static_cast<uint8_t>(rem));
      size_t i = 0;
      while (i < q.size() && q[i] == 0) {
        i++;
      }
      digits.assign(q.begin() + i, q.end());
    }
    while (!out.empty() && out.front() == 0) {
      out.erase(out.begin());
    }
    return out;
  };
  tx::Transaction t;
  t.nonce = j.at("nonce").get<uint64_t>();
  t.gas_price = dec_to_bytes(j.value("gasprice", "1000000000"));
  t.start_gas = j.value("startgas", uint64_t(90000));
  const std::string to = j.at("to").get<std::string>();
  if (!to.empty()) {
    const Bytes raw = from_hex(to);
    if (raw.size() != 20) {
      throw Error(ErrorCode::Malformed, "to must be 20 bytes");
    }
    Address a;
    std::copy(raw.begin(), raw.end(), a.begin());
    t.to = a;
  }
  t.value = dec_to_bytes(j.value("value", "0"));
  t.data = from_hex(j.value("data", std::string()));
  t.chain_id = j.value("chain_id", uint64_t(648529));
  return t;
}

} // namespace

struct pqchain_world {
  std::mutex mutex;
  std::unique_ptr<entropy::EntropyService> service;
  std::unique_ptr<cert::CertificateAuthority> ca;
  std::unique_ptr<did::Registry> registry;
  ecdsa::EcdsaKeyPair legacy_root;
  Address relay_hub{};
  uint64_t now = 1;

  struct NodeEntry {
    std::string name;
    std::string did;
    ecdsa::EcdsaKeyPair eth;
    falcon::FalconKeyPair falcon;
    cert::PqCertificate certificate;
    std::unique_ptr<entropy::EntropyClient> client;
    uint64_t wrapper_nonce = 0;
  };
  std::map<std::string, NodeEntry> nodes; // by did

  entropy::EntropyClient::Transport transport()
  {
    return [this](const Bytes& f) { return service->handle_frame(f, now); };
  }

  NodeEntry& node(const std::string& did)
  {
    const auto it = nodes.find(did);
    if (it == nodes.end()) {
      throw Error(ErrorCode::NotFound, "no enrolled node with did " + did);
    }
    return it->second;
  }
};

struct pqchain_relay_server {
  std::shared_ptr<relay::RelaySigner> signer;
  std::unique_ptr<relay::RelayServer> server;
};

extern "C" {

const char* pqchain_status_string(pqchain_status status)
{
  switch (status) {
    case PQCHAIN_OK: return "ok";
    case PQCHAIN_ERR_INVALID_ARG: return "invalid argument";
    case PQCHAIN_ERR_MALFORMED: return "malformed input";
    case PQCHAIN_ERR_CRYPTO: return "cryptographic failure";
    case PQCHAIN_ERR_VERIFY_REJECT: return "verification rejected";
    case PQCHAIN_ERR_NOT_FOUND: return "not found";
    case PQCHAIN_ERR_UNAUTHORIZED: return "unauthorized";
    case PQCHAIN_ERR_DUPLICATE: return "duplicate";
    case PQCHAIN_ERR_EXPIRED: return "expired or timed out";
    case PQCHAIN_ERR_STATE: return "invalid state";
    case PQCHAIN_ERR_CONFIG: return "configuration error";
    case PQCHAIN_ERR_IO: return "i/o error";
    case PQCHAIN_ERR_INTERNAL: return "internal error";
  }
  return "unknown";
}

const char* pqchain_last_error(void)
{
  return g_last_error.c_str();
}

void pqchain_buffer_free(uint8_t* buffer)
{
  std::free(buffer);
}

void pqchain_string_free(char* string)
{
  std::free(string);
}

pqchain_status pqchain_keccak256(const uint8_t* data, size_t len, uint8_t out[32])
{
  return guarded([&] {
    if ((data == nullptr && len > 0) || out == nullptr) {
      throw Error(ErrorCode::InvalidArgument, "null buffer");
    }
    const Digest256 d = hash::keccak256(BytesView(data, len));
    std::memcpy(out, d.data(), d.size());
    return PQCHAIN_OK;
  });
}

pqchain_status pqchain_shake256(const uint8_t* data, size_t len, uint8_t* out, size_t out_len)
{
  return guarded([&] {
    if ((data == nullptr && len > 0) || out == nullptr) {
      throw Error(ErrorCode::InvalidArgument, "null buffer");
    }
    const Bytes d = hash::shake256(BytesView(data, len), out_len);
    std::memcpy(out, d.data(), d.size());
    return PQCHAIN_OK;
  });
}

pqchain_status pqchain_falcon_keygen(const uint8_t* entropy, size_t entropy_len,
                                     uint8_t public_key[PQCHAIN_FALCON_PUBLIC_KEY_LEN],
                                     uint8_t secret_key[PQCHAIN_FALCON_SECRET_KEY_LEN])
{
  return guarded([&] {
    const auto kp = falcon::keygen(BytesView(entropy, entropy_len));
    std::memcpy(public_key, kp.public_key.data(), kp.public_key.size());
    std::memcpy(secret_key, kp.secret.data(), kp.secret.size());
    return PQCHAIN_OK;
  });
}

pqchain_status pqchain_falcon_sign(const uint8_t* message, size_t message_len,
                                   const uint8_t secret_key[PQCHAIN_FALCON_SECRET_KEY_LEN],
                                   const uint8_t* entropy, size_t entropy_len,
                                   uint8_t signature[PQCHAIN_FALCON_SIGNATURE_LEN])
{
  return guarded([&] {
    falcon::SecretKey sk;
    std::memcpy(sk.data(), secret_key, sk.size());
    const auto sig =
      falcon::sign(BytesView(message, message_len), sk, BytesView(entropy, entropy_len));
    std::memcpy(signature, sig.bytes.data(), sig.bytes.size());
    return PQCHAIN_OK;
  });
}

pqchain_status pqchain_falcon_verify(const uint8_t* message, size_t message_len,
                                     const uint8_t* signature, size_t signature_len,
                                     const uint8_t public_key[PQCHAIN_FALCON_PUBLIC_KEY_LEN])
{
  return guarded([&] {
    falcon::PublicKey pk;
    std::memcpy(pk.data(), public_key, pk.size());
    switch (falcon::verify(BytesView(message, message_len), BytesView(signature, signature_len),
                           pk)) {
      case falcon::VerifyStatus::Accept: return PQCHAIN_OK;
      case falcon::VerifyStatus::RejectInvalid:
        g_last_error = "falcon signature invalid";
        return PQCHAIN_ERR_VERIFY_REJECT;
      case falcon::VerifyStatus::RejectMalformed:
        g_last_error = "falcon signature malformed";
        return PQCHAIN_ERR_MALFORMED;
    }
    return PQCHAIN_ERR_INTERNAL;
  });
}

pqchain_status pqchain_ecdsa_keygen(const uint8_t* entropy, size_t entropy_len,
                                    uint8_t secret_key[32], uint8_t public_key[64])
{
  return guarded([&] {
    const auto kp = ecdsa::keygen(BytesView(entropy, entropy_len));
    std::memcpy(secret_key, kp.secret.data(), 32);
    std::memcpy(public_key, kp.public_key.data(), 64);
    return PQCHAIN_OK;
  });
}

pqchain_status pqchain_ecdsa_sign(const uint8_t digest[32], const uint8_t secret_key[32],
                                  uint8_t signature[65])
{
  return guarded([&] {
    ecdsa::SecretKey sk;
    std::memcpy(sk.data(), secret_key, 32);
    Digest256 d;
    std::memcpy(d.data(), digest, 32);
    const auto sig = ecdsa::sign(d, ecdsa::keypair_from_secret(sk));
    std::memcpy(signature, sig.r.data(), 32);
    std::memcpy(signature + 32, sig.s.data(), 32);
    signature[64] = static_cast<uint8_t>(sig.recovery_id);
    return PQCHAIN_OK;
  });
}

pqchain_status pqchain_ecdsa_recover(const uint8_t digest[32], const uint8_t signature[65],
                                     uint8_t public_key[64])
{
  return guarded([&] {
    Digest256 d;
    std::memcpy(d.data(), digest, 32);
    ecdsa::EcdsaSignature sig;
    std::memcpy(sig.r.data(), signature, 32);
    std::memcpy(sig.s.data(), signature + 32, 32);
    sig.recovery_id = signature[64];
    const auto pub = ecdsa::recover(d, sig);
    if (!pub) {
      g_last_error = "signature does not recover to a key";
      return PQCHAIN_ERR_VERIFY_REJECT;
    }
    std::memcpy(public_key, pub->data(), 64);
    return PQCHAIN_OK;
  });
}

pqchain_status pqchain_eth_address(const uint8_t public_key[64], uint8_t address[20])
{
  return guarded([&] {
    ecdsa::PublicKey pk;
    std::memcpy(pk.data(), public_key, 64);
    const Address a = ecdsa::derive_address(pk);
    std::memcpy(address, a.data(), 20);
    return PQCHAIN_OK;
  });
}

pqchain_status pqchain_kem_keygen(const uint8_t* entropy, size_t entropy_len,
                                  uint8_t public_key[PQCHAIN_KEM_PUBLIC_KEY_LEN],
                                  uint8_t secret_key[PQCHAIN_KEM_SECRET_KEY_LEN])
{
  return guarded([&] {
    const auto kp = kem::keygen(BytesView(entropy, entropy_len));
    std::memcpy(public_key, kp.public_key.data(), kp.public_key.size());
    std::memcpy(secret_key, kp.secret_key.data(), kp.secret_key.size());
    return PQCHAIN_OK;
  });
}

pqchain_status pqchain_kem_encap(const uint8_t public_key[PQCHAIN_KEM_PUBLIC_KEY_LEN],
                                 const uint8_t* entropy, size_t entropy_len,
                                 uint8_t ciphertext[PQCHAIN_KEM_CIPHERTEXT_LEN],
                                 uint8_t shared_secret[PQCHAIN_KEM_SHARED_SECRET_LEN])
{
  return guarded([&] {
    const auto enc = kem::encap(BytesView(public_key, PQCHAIN_KEM_PUBLIC_KEY_LEN),
                                BytesView(entropy, entropy_len));
    std::memcpy(ciphertext, enc.ciphertext.data(), enc.ciphertext.size());
    std::memcpy(shared_secret, enc.shared_secret.data(), enc.shared_secret.size());
    return PQCHAIN_OK;
  });
}

pqchain_status pqchain_kem_decap(const uint8_t ciphertext[PQCHAIN_KEM_CIPHERTEXT_LEN],
                                 const uint8_t secret_key[PQCHAIN_KEM_SECRET_KEY_LEN],
                                 uint8_t shared_secret[PQCHAIN_KEM_SHARED_SECRET_LEN])
{
  return guarded([&] {
    kem::KemKeyPair kp;
    kp.algorithm = std::string(kem::kDefaultAlgorithm);
    kp.secret_key.assign(secret_key, secret_key + PQCHAIN_KEM_SECRET_KEY_LEN);
    kp.public_key.assign(secret_key + 1152, secret_key + 1152 + PQCHAIN_KEM_PUBLIC_KEY_LEN);
    const auto ss = kem::decap(BytesView(ciphertext, PQCHAIN_KEM_CIPHERTEXT_LEN), kp);
    std::memcpy(shared_secret, ss.data(), ss.size());
    return PQCHAIN_OK;
  });
}

pqchain_status pqchain_world_create(const uint8_t* seed, size_t seed_len, pqchain_world** out)
{
  return guarded([&] {
    if (out == nullptr) {
      throw Error(ErrorCode::InvalidArgument, "null out");
    }
    auto world = std::make_unique<pqchain_world>();
    entropy::ServiceConfig esc;
    esc.seed = to_bytes("pqchain/world/");
    append(esc.seed, BytesView(seed, seed_len));
    world->service = std::make_unique<entropy::EntropyService>(esc);
    world->legacy_root = ecdsa::keygen(to_bytes("pqchain/world-legacy-root"));

    Bytes ca_entropy = to_bytes("pqchain/world-ca/");
    append(ca_entropy, BytesView(seed, seed_len));
    world->ca = std::make_unique<cert::CertificateAuthority>(
      ca_entropy, std::vector<ecdsa::PublicKey>{ world->legacy_root.public_key });
    world->registry = std::make_unique<did::Registry>(world->ca->did());
    world->relay_hub[19] = 0x11;
    *out = world.release();
    return PQCHAIN_OK;
  });
}

void pqchain_world_destroy(pqchain_world* world)
{
  delete world;
}

pqchain_status pqchain_world_enroll(pqchain_world* world, const char* name, char did_out[64])
{
  return guarded([&] {
    if (world == nullptr || name == nullptr || did_out == nullptr) {
      throw Error(ErrorCode::InvalidArgument, "null argument");
    }
    std::lock_guard<std::mutex> lock(world->mutex);
    pqchain_world::NodeEntry node;
    node.name = name;
    node.client = std::make_unique<entropy::EntropyClient>(node.name);

    const auto bundle = world->service->begin_bootstrap(node.name, world->now);
    std::vector<entropy::BootstrapShare> shares;
    for (const auto& f : bundle.share_frames) {
      const auto frame = entropy::parse_frame(f);
      shares.push_back(*entropy::decode_share(frame->payload));
    }
    const auto transport = world->transport();
    node.client->establish(shares, world->now, to_bytes("world-kem-" + node.name), transport);

    const Bytes eth_entropy = node.client->request_entropy(32, transport);
    const Bytes falcon_entropy = node.client->request_entropy(48, transport);
    const Bytes csr_entropy = node.client->request_entropy(32, transport);
    const Bytes issue_entropy = node.client->request_entropy(32, transport);
    node.eth = ecdsa::keygen(eth_entropy);
    node.falcon = falcon::keygen(falcon_entropy);

    cert::SubjectInfo subject{ node.name, "pqchain world", "UY", "" };
    const auto legacy = cert::issue_legacy(subject, "World Legacy Root", 0, 1ull << 40,
                                           node.eth.public_key, world->legacy_root);
    const auto result =
      world->ca->issue(legacy, cert::build_csr(subject, node.eth),
                       cert::build_csr(subject, node.falcon, csr_entropy), issue_entropy,
                       world->now, 1ull << 40, *world->registry);
    node.did = result.certificate.subject.did;
    node.certificate = result.certificate;

    if (node.did.size() + 1 > 64) {
      throw Error(ErrorCode::InvalidState, "did too long");
    }
    std::strcpy(did_out, node.did.c_str());
    world->nodes.emplace(node.did, std::move(node));
    return PQCHAIN_OK;
  });
}

pqchain_status pqchain_world_certificate(pqchain_world* world, const char* did, uint8_t** out,
                                         size_t* out_len)
{
  return guarded([&] {
    std::lock_guard<std::mutex> lock(world->mutex);
    const auto& node = world->node(did);
    const Bytes enc = cert::encode_certificate(node.certificate);
    *out = dup_bytes(enc);
    *out_len = enc.size();
    return PQCHAIN_OK;
  });
}

pqchain_status pqchain_world_certificate_armored(pqchain_world* world, const char* did,
                                                 char** out)
{
  return guarded([&] {
    std::lock_guard<std::mutex> lock(world->mutex);
    const auto& node = world->node(did);
    *out = dup_string(cert::armor_certificate(node.certificate));
    return PQCHAIN_OK;
  });
}

pqchain_status pqchain_world_verify_certificate(pqchain_world* world, const uint8_t* certificate,
                                                size_t cert_len, uint64_t at_time)
{
  return guarded([&] {
    std::lock_guard<std::mutex> lock(world->mutex);
    const auto decoded = cert::decode_certificate(BytesView(certificate, cert_len));
    if (!decoded) {
      g_last_error = "certificate encoding invalid";
      return PQCHAIN_ERR_MALFORMED;
    }
    switch (cert::verify_certificate(*decoded, world->ca->falcon_public(), at_time)) {
      case cert::CheckResult::Accept: return PQCHAIN_OK;
      case cert::CheckResult::RejectMalformed:
        g_last_error = "certificate malformed";
        return PQCHAIN_ERR_MALFORMED;
      case cert::CheckResult::RejectInvalid:
        g_last_error = "certificate rejected";
        return PQCHAIN_ERR_VERIFY_REJECT;
    }
    return PQCHAIN_ERR_INTERNAL;
  });
}

pqchain_status pqchain_world_resolve(pqchain_world* world, const char* did, char** json_out)
{
  return guarded([&] {
    std::lock_guard<std::mutex> lock(world->mutex);
    const auto* record = world->registry->resolve(did);
    if (record == nullptr) {
      g_last_error = "NotFound: did is not registered";
      return PQCHAIN_ERR_NOT_FOUND;
    }
    const json j{ { "did", record->did },
                  { "eth_public_key", to_hex(BytesView(record->eth_public_key)) },
                  { "falcon_public_key", to_hex(BytesView(record->falcon_public_key)) },
                  { "subject_proof", to_hex(BytesView(record->subject_proof)) },
                  { "controller", record->controller },
                  { "registered_at", record->registered_at } };
    *json_out = dup_string(j.dump());
    return PQCHAIN_OK;
  });
}

pqchain_status pqchain_world_registry_snapshot(pqchain_world* world, char** out)
{
  return guarded([&] {
    std::lock_guard<std::mutex> lock(world->mutex);
    *out = dup_string(world->registry->snapshot());
    return PQCHAIN_OK;
  });
}

pqchain_status pqchain_world_request_entropy(pqchain_world* world, const char* did, size_t n,
                                             uint8_t** out, size_t* out_len)
{
  return guarded([&] {
    std::lock_guard<std::mutex> lock(world->mutex);
    auto& node = world->node(did);
    const Bytes bytes = node.client->request_entropy(n, world->transport());
    *out = dup_bytes(bytes);
    *out_len = bytes.size();
    return PQCHAIN_OK;
  });
}

pqchain_status pqchain_world_build_metatx(pqchain_world* world, const char* writer_did,
                                          const char* inner_json, const uint8_t* user_seed,
                                          size_t user_seed_len, uint8_t** out, size_t* out_len)
{
  return guarded([&] {
    std::lock_guard<std::mutex> lock(world->mutex);
    auto& writer = world->node(writer_did);
    const tx::Transaction t = tx_from_json(json::parse(inner_json));
    const auto user = ecdsa::keygen(BytesView(user_seed, user_seed_len));
    const auto inner = tx::sign_inner(t, user);

    tx::WriterContext ctx{ writer.did, writer.eth, writer.falcon.secret };
    Bytes sign_entropy = to_bytes("world-outer-");
    append_u64be(sign_entropy, writer.wrapper_nonce);
    append(sign_entropy, BytesView(user_seed, user_seed_len));
    const auto mtx =
      tx::sign_outer(inner, ctx, sign_entropy, world->relay_hub, writer.wrapper_nonce++);
    const Bytes wire = tx::encode_metatx(mtx);
    *out = dup_bytes(wire);
    *out_len = wire.size();
    return PQCHAIN_OK;
  });
}

pqchain_status pqchain_world_verify_metatx(pqchain_world* world, const uint8_t* metatx,
                                           size_t metatx_len, int backend, int charging,
                                           char** decision_json)
{
  return guarded([&] {
    std::lock_guard<std::mutex> lock(world->mutex);
    pipeline::PipelineConfig cfg;
    cfg.relay_hub = world->relay_hub;
    cfg.backend = backend == PQCHAIN_BACKEND_METERED ? pipeline::Backend::Metered
                                                     : pipeline::Backend::NativeFast;
    cfg.charging = charging == PQCHAIN_CHARGING_PRECOMPILE ? pipeline::ChargingMode::PrecompileTable
                                                           : pipeline::ChargingMode::OpcodeFlat;
    pipeline::AdmissionDecision d;
    const auto decoded = tx::decode_metatx(BytesView(metatx, metatx_len));
    if (!decoded) {
      d.verdict = pipeline::Verdict::Reject;
      d.reason = pipeline::Reason::Malformed;
    } else {
      d = pipeline::admit(*decoded, *world->registry, cfg);
    }
    const json j{ { "verdict", d.verdict == pipeline::Verdict::Admit ? "Admit" : "Reject" },
                  { "reason", std::string(pipeline::reason_string(d.reason)) },
                  { "gas", d.gas_metered },
                  { "backend", d.backend == pipeline::Backend::Metered ? "Metered" : "NativeFast" },
                  { "steps", d.step_executions } };
    *decision_json = dup_string(j.dump());
    return PQCHAIN_OK;
  });
}

pqchain_status pqchain_world_tunnel_demo(pqchain_world* world, const char* did_a,
                                         const char* did_b, uint32_t records, char** json_out)
{
  return guarded([&] {
    std::lock_guard<std::mutex> lock(world->mutex);
    auto& a = world->node(did_a);
    auto& b = world->node(did_b);

    tunnel::EndpointConfig ca_cfg;
    ca_cfg.certificate = a.certificate;
    ca_cfg.falcon_secret = a.falcon.secret;
    ca_cfg.ca_public = world->ca->falcon_public();
    ca_cfg.allowed_peers = { a.did, b.did };
    ca_cfg.now = world->now + 1;
    tunnel::EndpointConfig cb_cfg = ca_cfg;
    cb_cfg.certificate = b.certificate;
    cb_cfg.falcon_secret = b.falcon.secret;

    auto pair = tunnel::handshake(ca_cfg, to_bytes("world-hs-" + a.name),
                                  cb_cfg, to_bytes("world-hs-" + b.name));
    uint32_t delivered = 0;
    for (uint32_t i = 0; i < records; i++) {
      const Bytes msg = hash::shake256(to_bytes("demo-record-" + std::to_string(i)), 64);
      if (pair.responder.open(pair.initiator.seal(msg)) == msg) {
        delivered++;
      }
    }
    bool tamper_detected = false;
    Bytes rec = pair.initiator.seal(to_bytes("tamper probe"));
    rec[rec.size() / 2] ^= 0x10;
    try {
      (void)pair.responder.open(rec);
    } catch (const Error& e) {
      tamper_detected = e.code() == ErrorCode::TagInvalid;
    }
    const json j{ { "initiator", a.did },
                  { "responder", b.did },
                  { "records_delivered", delivered },
                  { "tamper_detected", tamper_detected },
                  { "responder_state_after_tamper", "Closed" } };
    *json_out = dup_string(j.dump());
    return PQCHAIN_OK;
  });
}

pqchain_status pqchain_relay_server_start(pqchain_world* world, const char* writer_did,
                                          uint16_t port, pqchain_relay_server** out,
                                          uint16_t* bound_port)
{
  return guarded([&] {
    std::lock_guard<std::mutex> lock(world->mutex);
    auto& writer = world->node(writer_did);
    tx::WriterContext ctx{ writer.did, writer.eth, writer.falcon.secret };
    auto server = std::make_unique<pqchain_relay_server>();
    server->signer = std::make_shared<relay::RelaySigner>(
      ctx, world->relay_hub, world->registry.get(), to_bytes("world-relay-" + writer.name));
    server->server = std::make_unique<relay::RelayServer>(server->signer, port);
    if (bound_port != nullptr) {
      *bound_port = server->server->port();
    }
    *out = server.release();
    return PQCHAIN_OK;
  });
}

void pqchain_relay_server_stop(pqchain_relay_server* server)
{
  delete server;
}

pqchain_status pqchain_sim_run(const char* config_text, char** metrics_jsonl,
                               char** metrics_csv, char** chain_snapshot_hex)
{
  return guarded([&] {
    const auto cfg = sim::parse_config(config_text ? config_text : "");
    sim::Simulation s(cfg);
    const auto& m = s.run();
    if (metrics_jsonl != nullptr) {
      *metrics_jsonl = dup_string(m.to_jsonl());
    }
    if (metrics_csv != nullptr) {
      *metrics_csv = dup_string(m.to_csv());
    }
    if (chain_snapshot_hex != nullptr) {
      *chain_snapshot_hex = dup_string(to_hex(s.chain_snapshot()));
    }
    return PQCHAIN_OK;
  });
}

pqchain_status pqchain_entropy_demo(uint32_t shares, uint64_t timeout, uint32_t n_bytes,
                                    const uint8_t* seed, size_t seed_len, char** json_out)
{
  return guarded([&] {
    entropy::ServiceConfig cfg;
    cfg.seed = to_bytes("pqchain/entropy-demo/");
    append(cfg.seed, BytesView(seed, seed_len));
    cfg.n_shares = shares;
    cfg.share_timeout = timeout;
    entropy::EntropyService service(cfg);
    entropy::EntropyClient client("demo-node");

    const auto bundle = service.begin_bootstrap("demo-node", 0);
    std::vector<entropy::BootstrapShare> decoded;
    for (const auto& f : bundle.share_frames) {
      const auto frame = entropy::parse_frame(f);
      decoded.push_back(*entropy::decode_share(frame->payload));
    }
    const auto transport = [&](const Bytes& f) { return service.handle_frame(f, 1); };
    client.establish(decoded, 1, to_bytes("demo-kem"), transport);
    const Bytes delivered = client.request_entropy(n_bytes, transport);

    const json j{ { "shares", shares },
                  { "timeout", timeout },
                  { "session", "Established" },
                  { "bytes", to_hex(delivered) },
                  { "wire_frames", service.wire_log().size() } };
    *json_out = dup_string(j.dump());
    return PQCHAIN_OK;
  });
}

pqchain_status pqchain_bench_verify(const char* kat_path, int backend, int charging,
                                    char** csv_out)
{
  return guarded([&] {
    std::ifstream in(kat_path);
    if (!in) {
      throw Error(ErrorCode::IoError, std::string("cannot open ") + kat_path);
    }
    pipeline::GasModel model;
    std::vector<std::pair<std::string, uint64_t>> rows;
    std::string line;
    int index = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') {
        continue;
      }
      std::istringstream ss(line);
      std::vector<std::string> fields;
      std::string tok;
      while (ss >> tok) {
        fields.push_back(tok);
      }
      if (fields.size() < 6) {
        throw Error(ErrorCode::Malformed, "bad KAT row");
      }
      const Bytes msg = fields[2] == "-" ? Bytes{} : from_hex(fields[2]);
      const Bytes pk_raw = from_hex(fields[3]);
      const Bytes sig = from_hex(fields[5]);
      if (pk_raw.size() != falcon::kPublicKeyLen) {
        throw Error(ErrorCode::Malformed, "bad KAT public key");
      }
      falcon::PublicKey pk;
      std::copy(pk_raw.begin(), pk_raw.end(), pk.begin());
      pipeline::VerifyOutcome out;
      if (backend == PQCHAIN_BACKEND_METERED) {
        out = pipeline::metered_falcon_verify(msg, sig, pk, model);
      } else {
        out = pipeline::native_fast_verify(msg, sig, pk,
                                           charging == PQCHAIN_CHARGING_PRECOMPILE
                                             ? pipeline::ChargingMode::PrecompileTable
                                             : pipeline::ChargingMode::OpcodeFlat,
                                           model);
      }
      if (!out.accept) {
        throw Error(ErrorCode::CryptoFailure, "KAT vector failed verification");
      }
      rows.emplace_back("kat-" + std::to_string(index++), out.gas);
    }
    std::ostringstream csv;
    pipeline::write_bench_csv(csv, rows, model.block_gas_limit);
    *csv_out = dup_string(csv.str());
    return PQCHAIN_OK;
  });
}

} // extern "C"
