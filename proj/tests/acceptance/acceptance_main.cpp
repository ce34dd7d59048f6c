// Acceptance suite: runs every criterion at its stated tolerance and prints
// one PASS/FAIL line per criterion. Exit code 0 only if all pass.
#include "cert/certificates.hpp"
#include "common/errors.hpp"
#include "crypto/keccak.hpp"
#include "entropy/entropy.hpp"
#include "sim/simulator.hpp"
#include "support/testworld.hpp"
#include "support/vectors.hpp"
#include "tx/rlp.hpp"
#include "tx/transaction.hpp"
#include "verify/pipeline.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

using namespace pqchain;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void criterion(int number, const std::string& name, const std::function<bool()>& body)
{
  const auto t0 = Clock::now();
  bool ok = false;
  std::string detail;
  try {
    ok = body();
  } catch (const std::exception& e) {
    detail = std::string(" (") + e.what() + ")";
  }
  const auto ms =
    std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count();
  printf("%s criterion-%d: %s [%lld ms]%s\n", ok ? "PASS" : "FAIL", number, name.c_str(),
         static_cast<long long>(ms), detail.c_str());
  fflush(stdout);
  if (!ok) {
    g_failures++;
  }
}

bool expect(bool condition, const char* what)
{
  if (!condition) {
    fprintf(stderr, "  expectation failed: %s\n", what);
  }
  return condition;
}

} // namespace

// --- criterion 1: Falcon-512 conformance over the committed KAT vectors ----
static bool falcon_conformance()
{
  const auto t0 = Clock::now();
  const auto rows = test::load_vectors(test::vector_path("falcon512_kat.txt"));
  if (!expect(rows.size() >= 8, "at least 8 KAT vectors")) {
    return false;
  }
  for (const auto& row : rows) {
    const Bytes kg_seed = from_hex(row[0]);
    const Bytes sign_seed = from_hex(row[1]);
    const Bytes msg = from_hex(row[2]);

    const auto kp = falcon::keygen(kg_seed);
    if (!expect(kp.public_key.size() == 897, "public key exactly 897 bytes") ||
        !expect(kp.secret.size() == 1281, "secret key exactly 1281 bytes") ||
        !expect(to_hex(BytesView(kp.public_key)) == row[3], "keygen reproduces the vector") ||
        !expect(to_hex(hash::sha3_256(BytesView(kp.secret))) == row[4], "secret key matches")) {
      return false;
    }
    const auto sig = falcon::sign(msg, kp.secret, sign_seed);
    if (!expect(sig.bytes.size() == 666, "padded signature fixed at 666 <= 666 bytes") ||
        !expect(to_hex(BytesView(sig.bytes)) == row[5], "deterministic signing reproduces") ||
        !expect(falcon::verify(msg, BytesView(sig.bytes), kp.public_key) ==
                  falcon::VerifyStatus::Accept,
                "signature verifies")) {
      return false;
    }
    auto tampered = sig.bytes;
    tampered[123] ^= 1;
    if (!expect(falcon::verify(msg, BytesView(tampered), kp.public_key) !=
                  falcon::VerifyStatus::Accept,
                "tampered signature rejected")) {
      return false;
    }
  }
  const auto seconds =
    std::chrono::duration_cast<std::chrono::seconds>(Clock::now() - t0).count();
  return expect(seconds < 30, "runtime under 30 s");
}

// --- criterion 2: paper constants as properties -----------------------------
static bool paper_constants()
{
  pipeline::GasModel model;
  if (!expect(model.block_gas_limit == 12'000'000, "block gas limit 12,000,000") ||
      !expect(model.code_size_limit == 24'576, "code size limit 24,576")) {
    return false;
  }
  const auto rows = test::load_vectors(test::vector_path("falcon512_kat.txt"));
  for (const auto& row : rows) {
    const Bytes msg = from_hex(row[2]);
    const Bytes pk_raw = from_hex(row[3]);
    const Bytes sig = from_hex(row[5]);
    falcon::PublicKey pk;
    std::copy(pk_raw.begin(), pk_raw.end(), pk.begin());

    const auto metered = pipeline::metered_falcon_verify(msg, sig, pk, model);
    const auto flat =
      pipeline::native_fast_verify(msg, sig, pk, pipeline::ChargingMode::OpcodeFlat, model);
    if (!expect(metered.accept && flat.accept, "both backends accept the KAT vector") ||
        !expect(metered.gas > model.block_gas_limit, "metered gas exceeds the block limit") ||
        !expect(double(metered.gas) / double(model.block_gas_limit) > 1.0,
                "gas/block-limit ratio above 1") ||
        !expect(flat.gas == 1, "opcode-flat charging reports exactly 1")) {
      return false;
    }
  }
  return true;
}

// --- criterion 3: end-to-end pipeline + tamper matrix ------------------------
static bool end_to_end()
{
  const auto t0 = Clock::now();
  sim::SimConfig cfg;
  cfg.seed = 2026;
  cfg.writers = 1;
  cfg.validators = 4;
  cfg.observers = 1;
  cfg.tx_count = 200;
  sim::Simulation s(cfg);
  const auto& m = s.run();
  if (!expect(!m.budget_exhausted, "200-tx run reaches quiescence within budget") ||
      !expect(m.txs_finalized == 200, "all 200 writer transactions finalized") ||
      !expect(s.chains_consistent(), "honest chains hash-equal")) {
    return false;
  }
  uint32_t honest = 0, tampered = 0, rejected = 0;
  for (uint64_t seed = 1; seed <= 1000; seed++) {
    const auto e = s.run_tamper_episode(seed);
    honest += e.honest_finalized;
    tampered += e.tampered_finalized;
    rejected += e.tampered_rejected;
  }
  const auto seconds =
    std::chrono::duration_cast<std::chrono::seconds>(Clock::now() - t0).count();
  return expect(honest == 1000, "honest transaction finalized in each episode") &&
         expect(tampered == 0, "0 tampered transactions finalized over 1000 seeded runs") &&
         expect(rejected == 7000, "all 7 field mutations rejected in every episode") &&
         expect(seconds < 120, "runtime under 2 min");
}

// --- criterion 4: three-step short-circuit ordering --------------------------
static bool short_circuit_order()
{
  test::TestWorld w("acceptance-order");
  pipeline::PipelineConfig cfg;
  cfg.relay_hub = w.relay_hub;

  struct Case {
    pipeline::Reason reason;
    std::array<uint32_t, 3> steps;
  };
  std::vector<Case> observed;

  { // NotRelayHub: rejected before step 1
    auto mtx = w.make_metatx("oc-hub");
    pipeline::PipelineConfig other = cfg;
    other.relay_hub[0] = 0xEE;
    const auto d = pipeline::admit(mtx, w.registry, other);
    observed.push_back({ d.reason, d.step_executions });
  }
  { // Malformed falcon field: rejected before step 1
    auto mtx = w.make_metatx("oc-malformed");
    mtx.falcon_signature.pop_back();
    const auto d = pipeline::admit(mtx, w.registry, cfg);
    observed.push_back({ d.reason, d.step_executions });
  }
  { // step 1 failure: control
    auto thief = ecdsa::keygen(to_bytes("oc-thief"));
    const auto inner = w.user_tx(0, "oc");
    tx::WriterContext forged{ w.writer.did, thief, w.writer.falcon.secret };
    const auto mtx = tx::sign_outer(inner, forged, to_bytes("oc-e"), w.relay_hub, 0);
    const auto d = pipeline::admit(mtx, w.registry, cfg);
    observed.push_back({ d.reason, d.step_executions });
  }
  { // step 1 failure: unresolvable did
    auto mtx = w.make_metatx("oc-did");
    mtx.writer_did = "did:lac:00000000000000000000000000000000000000aa";
    const auto d = pipeline::admit(mtx, w.registry, cfg);
    observed.push_back({ d.reason, d.step_executions });
  }
  { // step 3 failure: falcon over tampered inner
    auto mtx = w.make_metatx("oc-falcon");
    mtx.inner.tx.nonce ^= 1;
    const auto d = pipeline::admit(mtx, w.registry, cfg);
    observed.push_back({ d.reason, d.step_executions });
  }
  { // full pass
    const auto mtx = w.make_metatx("oc-ok");
    const auto d = pipeline::admit(mtx, w.registry, cfg);
    observed.push_back({ d.reason, d.step_executions });
  }

  const std::vector<Case> expected = {
    { pipeline::Reason::NotRelayHub, { 0, 0, 0 } },
    { pipeline::Reason::Malformed, { 0, 0, 0 } },
    { pipeline::Reason::SenderControlFailed, { 1, 0, 0 } },
    { pipeline::Reason::DidUnresolvable, { 1, 0, 0 } },
    { pipeline::Reason::PqSignatureInvalid, { 1, 1, 1 } },
    { pipeline::Reason::None, { 1, 1, 1 } },
  };
  for (size_t i = 0; i < expected.size(); i++) {
    if (!expect(observed[i].reason == expected[i].reason, "rejection reason matches matrix") ||
        !expect(observed[i].steps == expected[i].steps, "step-k failure stops step k+1")) {
      return false;
    }
  }
  return true;
}

// --- criterion 5: bootstrap protocol ----------------------------------------
static bool bootstrap_protocol()
{
  // all-or-nothing: exhaustive 1-byte key, 2-share enumeration
  entropy::SessionId sid{};
  for (int key = 0; key < 256; key++) {
    for (int r = 0; r < 256; r++) {
      const uint8_t rv = static_cast<uint8_t>(r);
      auto rng = [&](uint8_t* p, size_t n) { std::memset(p, rv, n); };
      const Bytes k = { static_cast<uint8_t>(key) };
      const auto shares = entropy::split_bootstrap_key(k, 2, sid, 100, rng);
      // observing either share alone pins the key to exactly one candidate per
      // randomizer value: over uniform r the posterior is uniform
      if (!expect((shares[0].share[0] ^ shares[1].share[0]) == key, "xor reconstructs")) {
        return false;
      }
    }
  }

  entropy::ServiceConfig cfg;
  cfg.seed = to_bytes("acceptance-entropy");
  entropy::EntropyService service(cfg);
  const auto bundle = service.begin_bootstrap("node", 0);
  std::vector<entropy::BootstrapShare> shares;
  for (const auto& f : bundle.share_frames) {
    shares.push_back(*entropy::decode_share(entropy::parse_frame(f)->payload));
  }
  {
    std::set<entropy::SessionId> used;
    std::vector<entropy::BootstrapShare> partial(shares.begin(), shares.end() - 1);
    bool missing = false, expired = false, reused = false;
    try {
      (void)entropy::recompose_bootstrap_key(partial, 5, used);
    } catch (const Error& e) {
      missing = e.code() == ErrorCode::MissingShare;
    }
    try {
      (void)entropy::recompose_bootstrap_key(shares, 35, used);
    } catch (const Error& e) {
      expired = e.code() == ErrorCode::Expired;
    }
    (void)entropy::recompose_bootstrap_key(shares, 5, used);
    try {
      (void)entropy::recompose_bootstrap_key(shares, 5, used);
    } catch (const Error& e) {
      reused = e.code() == ErrorCode::ReusedKey;
    }
    if (!expect(missing, "N-1 shares abort with MissingShare") ||
        !expect(expired, "expired share aborts with Expired") ||
        !expect(reused, "second recomposition aborts with ReusedKey")) {
      return false;
    }
  }

  // full session; then scan the wire log for secrets
  entropy::EntropyService live(cfg);
  entropy::EntropyClient client("node");
  const auto bundle2 = live.begin_bootstrap("node", 0);
  std::vector<entropy::BootstrapShare> shares2;
  for (const auto& f : bundle2.share_frames) {
    shares2.push_back(*entropy::decode_share(entropy::parse_frame(f)->payload));
  }
  Bytes bootstrap_key(shares2[0].share.size(), 0);
  for (const auto& s : shares2) {
    for (size_t i = 0; i < bootstrap_key.size(); i++) {
      bootstrap_key[i] ^= s.share[i];
    }
  }
  const auto transport = [&](const Bytes& f) { return live.handle_frame(f, 1); };
  client.establish(shares2, 1, to_bytes("acc-kem"), transport);
  const Bytes delivered = client.request_entropy(64, transport);

  Bytes all;
  for (const auto& f : live.wire_log()) {
    append(all, f);
  }
  auto leaked = [&](BytesView needle) {
    return std::search(all.begin(), all.end(), needle.begin(), needle.end()) != all.end();
  };
  return expect(!leaked(bootstrap_key), "bootstrap key absent from wire log") &&
         expect(!leaked(BytesView(client.shared_secret())), "shared secret absent") &&
         expect(!leaked(delivered), "delivered entropy absent");
}

// --- criterion 6: stolen-validator-keys adversary ----------------------------
static bool stolen_keys_sweep()
{
  sim::SimConfig cfg;
  cfg.seed = 0;
  cfg.writers = 1;
  cfg.validators = 4;
  cfg.observers = 1;
  cfg.tx_count = 2;
  cfg.scenarios = { sim::Scenario::StolenEcdsaKeys };
  sim::Simulation s(cfg);
  for (uint64_t seed = 1; seed <= 1000; seed++) {
    s.reset_ledger(seed);
    const auto& m = s.run();
    if (!expect(m.adversary_attempts > 0, "adversary active") ||
        !expect(m.adversary_successes == 0, "no adversarial block or tunnel success") ||
        !expect(m.forged_finalized == 0, "no forged transaction finalized") ||
        !expect(m.txs_finalized == 2, "honest traffic unaffected") ||
        !expect(s.chains_consistent(), "honest chains stay hash-equal")) {
      fprintf(stderr, "  failing seed: %llu\n", static_cast<unsigned long long>(seed));
      return false;
    }
  }
  return true;
}

// --- criterion 7: determinism & consistency ----------------------------------
static bool determinism()
{
  for (int round = 0; round < 2; round++) {
    sim::SimConfig cfg;
    cfg.seed = 404;
    cfg.tx_count = 5;
    cfg.scenarios = { sim::Scenario::TamperInFlight };
    static std::string first_metrics;
    static Bytes first_snapshot;
    sim::Simulation s(cfg);
    s.run();
    if (round == 0) {
      first_metrics = s.metrics().to_jsonl();
      first_snapshot = s.chain_snapshot();
    } else if (!expect(s.metrics().to_jsonl() == first_metrics, "byte-identical metrics") ||
               !expect(s.chain_snapshot() == first_snapshot, "byte-identical chain snapshot")) {
      return false;
    }
  }
  const std::vector<std::vector<sim::Scenario>> scenario_sets = {
    {},
    { sim::Scenario::TamperInFlight },
    { sim::Scenario::ForgeFalcon },
    { sim::Scenario::ReplayMetatx },
    { sim::Scenario::StolenEcdsaKeys },
    { sim::Scenario::RogueEntryPoint },
  };
  for (const auto& scenarios : scenario_sets) {
    sim::SimConfig cfg;
    cfg.seed = 99;
    cfg.tx_count = 3;
    cfg.scenarios = scenarios;
    sim::Simulation s(cfg);
    s.run();
    if (!expect(s.chains_consistent(), "hash-equal chains in every scenario")) {
      return false;
    }
  }
  return true;
}

// --- criterion 8: encoding oracles -------------------------------------------
static bool encoding_oracles()
{
  for (const auto& row : test::load_vectors(test::vector_path("keccak256.txt"))) {
    if (!expect(to_hex(hash::keccak256(from_hex(row[0]))) == row[1], "keccak256 oracle")) {
      return false;
    }
  }
  for (const auto& row : test::load_vectors(test::vector_path("shake256.txt"))) {
    if (!expect(to_hex(hash::shake256(from_hex(row[0]), std::stoul(row[1]))) == row[2],
                "shake256 oracle")) {
      return false;
    }
  }
  for (const auto& line : test::load_lines(test::vector_path("rlp.jsonl"))) {
    const json row = json::parse(line);
    std::function<rlp::Item(const json&)> to_item = [&](const json& node) -> rlp::Item {
      if (node.is_array()) {
        std::vector<rlp::Item> xs;
        for (const auto& child : node) {
          xs.push_back(to_item(child));
        }
        return rlp::Item::list(std::move(xs));
      }
      if (node.contains("b")) {
        return rlp::Item::str(from_hex(node["b"].get<std::string>()));
      }
      // decimal string to bytes
      std::vector<int> digits;
      for (char c : node["i"].get<std::string>()) {
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
      return rlp::Item::biguint(out);
    };
    if (!expect(to_hex(rlp::encode(to_item(row["in"]))) == row["out"].get<std::string>(),
                "rlp oracle")) {
      return false;
    }
  }
  for (const auto& line : test::load_lines(test::vector_path("eip155.jsonl"))) {
    const json v = json::parse(line);
    tx::Transaction t;
    t.nonce = v["nonce"].get<uint64_t>();
    auto dec = [&](const std::string& s) {
      Bytes out;
      std::vector<int> digits;
      for (char c : s) {
        digits.push_back(c - '0');
      }
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
    t.gas_price = dec(v["gasprice"].get<std::string>());
    t.start_gas = v["startgas"].get<uint64_t>();
    const Bytes to = from_hex(v["to"].get<std::string>());
    Address a;
    std::copy(to.begin(), to.end(), a.begin());
    t.to = a;
    t.value = dec(v["value"].get<std::string>());
    t.data = from_hex(v["data"].get<std::string>());
    t.chain_id = v["chain_id"].get<uint64_t>();

    const Bytes priv = from_hex(v["priv"].get<std::string>());
    ecdsa::SecretKey sk;
    std::copy(priv.begin(), priv.end(), sk.begin());
    const auto key = ecdsa::keypair_from_secret(sk);
    const auto stx = tx::sign_inner(t, key);
    if (!expect(to_hex(tx::signing_stream(t)) == v["signing_stream"].get<std::string>(),
                "eip155 signing stream") ||
        !expect(to_hex(tx::signing_hash(t)) == v["digest"].get<std::string>(),
                "eip155 digest") ||
        !expect(stx.v == v["v"].get<uint64_t>(), "eip155 v derivation") ||
        !expect(to_hex(BytesView(stx.r)) == v["r"].get<std::string>(), "eip155 r") ||
        !expect(to_hex(BytesView(stx.s)) == v["s"].get<std::string>(), "eip155 s")) {
      return false;
    }
  }
  return true;
}

int main()
{
  criterion(1, "Falcon-512 conformance (KAT vectors, sizes, runtime < 30 s)",
            falcon_conformance);
  criterion(2, "paper constants as properties (gas > 12M, opcode cost 1, ratio > 1)",
            paper_constants);
  criterion(3, "end-to-end pipeline (200 txs finalized; 1000-seed tamper matrix; < 2 min)",
            end_to_end);
  criterion(4, "three-step protocol short-circuit ordering", short_circuit_order);
  criterion(5, "bootstrap protocol (all-or-nothing, error cases, wire-log scan)",
            bootstrap_protocol);
  criterion(6, "stolen-ECDSA-keys adversary over 1000 seeds", stolen_keys_sweep);
  criterion(7, "determinism and honest-chain consistency", determinism);
  criterion(8, "encoding oracles (RLP, EIP-155, Keccak-256, SHAKE256)", encoding_oracles);

  if (g_failures == 0) {
    printf("acceptance: all criteria passed\n");
    return 0;
  }
  printf("acceptance: %d criteria FAILED\n", g_failures);
  return 1;
}
