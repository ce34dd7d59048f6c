#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/testworld.hpp"
#include "support/vectors.hpp"
#include "verify/pipeline.hpp"

#include <sstream>

using namespace pqchain;
using test::TestWorld;

namespace {

pipeline::PipelineConfig config_for(const TestWorld& w,
                                    pipeline::Backend backend = pipeline::Backend::NativeFast)
{
  pipeline::PipelineConfig cfg;
  cfg.relay_hub = w.relay_hub;
  cfg.backend = backend;
  return cfg;
}

} // namespace

TEST_CASE("entry point gate")
{
  TestWorld w("entry");
  auto mtx = w.make_metatx("ep");
  CHECK(pipeline::check_entry_point(mtx, w.relay_hub));

  Address elsewhere{};
  elsewhere[0] = 0xFF;
  CHECK_FALSE(pipeline::check_entry_point(mtx, elsewhere));

  Address zero{};
  CHECK_FALSE(pipeline::check_entry_point(mtx, zero));

  const auto d = pipeline::admit(mtx, w.registry,
                                 [&] {
                                   auto c = config_for(w);
                                   c.relay_hub = elsewhere;
                                   return c;
                                 }());
  CHECK(d.verdict == pipeline::Verdict::Reject);
  CHECK(d.reason == pipeline::Reason::NotRelayHub);
  CHECK(d.step_executions == std::array<uint32_t, 3>{ 0, 0, 0 });
}

TEST_CASE("honest meta-transaction admitted by both backends")
{
  TestWorld w("happy");
  const auto mtx = w.make_metatx("ok");
  for (auto backend : { pipeline::Backend::NativeFast, pipeline::Backend::Metered }) {
    const auto d = pipeline::admit(mtx, w.registry, config_for(w, backend));
    CHECK(d.verdict == pipeline::Verdict::Admit);
    CHECK(d.reason == pipeline::Reason::None);
    CHECK(d.step_executions == std::array<uint32_t, 3>{ 1, 1, 1 });
  }
}

TEST_CASE("step 1 failure short-circuits steps 2 and 3")
{
  TestWorld w("steps");

  SUBCASE("wrapper signed by a key that does not control the did")
  {
    auto thief = ecdsa::keygen(to_bytes("thief"));
    const auto inner = w.user_tx(0, "sc");
    tx::WriterContext forged{ w.writer.did, thief, w.writer.falcon.secret };
    const auto mtx = tx::sign_outer(inner, forged, to_bytes("sc-e"), w.relay_hub, 0);
    const auto d = pipeline::admit(mtx, w.registry, config_for(w));
    CHECK(d.reason == pipeline::Reason::SenderControlFailed);
    CHECK(d.step_executions == std::array<uint32_t, 3>{ 1, 0, 0 });
  }
  SUBCASE("unregistered did")
  {
    auto ghost = TestWorld::Writer{};
    ghost.eth = ecdsa::keygen(to_bytes("ghost-eth"));
    ghost.falcon = falcon::keygen(to_bytes("ghost-falcon"));
    ghost.did = did::from_address(ecdsa::derive_address(ghost.eth.public_key));
    const auto inner = w.user_tx(0, "ghost");
    tx::WriterContext ctx{ ghost.did, ghost.eth, ghost.falcon.secret };
    const auto mtx = tx::sign_outer(inner, ctx, to_bytes("ghost-e"), w.relay_hub, 0);
    const auto d = pipeline::admit(mtx, w.registry, config_for(w));
    CHECK(d.reason == pipeline::Reason::DidUnresolvable);
    CHECK(d.step_executions == std::array<uint32_t, 3>{ 1, 0, 0 });
  }
  SUBCASE("malformed writer did")
  {
    auto mtx = w.make_metatx("malformed-did");
    mtx.writer_did = "did:lac";
    const auto d = pipeline::admit(mtx, w.registry, config_for(w));
    CHECK(d.reason == pipeline::Reason::DidUnresolvable);
    CHECK(d.step_executions == std::array<uint32_t, 3>{ 1, 0, 0 });
  }
}

TEST_CASE("step 3 rejects falcon signatures over tampered inner transactions")
{
  TestWorld w("tamper");
  // tamper with each of the 7 inner fields after outer signing
  for (int field = 0; field < 7; field++) {
    auto mtx = w.make_metatx("t" + std::to_string(field));
    auto& t = mtx.inner.tx;
    switch (field) {
      case 0: t.nonce++; break;
      case 1: t.gas_price[0] ^= 1; break;
      case 2: t.start_gas++; break;
      case 3: (*t.to)[10] ^= 1; break;
      case 4: t.value[0] ^= 1; break;
      case 5: t.data.push_back(0x00); break;
      case 6: t.chain_id++; break;
    }
    const auto d = pipeline::admit(mtx, w.registry, config_for(w));
    CHECK(d.verdict == pipeline::Verdict::Reject);
    CHECK(d.reason == pipeline::Reason::PqSignatureInvalid);
    CHECK(d.step_executions == std::array<uint32_t, 3>{ 1, 1, 1 });
  }
}

TEST_CASE("malformed falcon signature field")
{
  TestWorld w("malf");
  auto mtx = w.make_metatx("short-sig");
  mtx.falcon_signature.pop_back();
  const auto d = pipeline::admit(mtx, w.registry, config_for(w));
  CHECK(d.reason == pipeline::Reason::Malformed);
  CHECK(d.step_executions == std::array<uint32_t, 3>{ 0, 0, 0 });
}

TEST_CASE("metered backend: verdict equivalence and gas properties")
{
  TestWorld w("gas");
  pipeline::GasModel model;

  const auto rows = test::load_vectors(test::vector_path("falcon512_kat.txt"));
  REQUIRE(rows.size() >= 8);
  for (const auto& row : rows) {
    const Bytes msg = from_hex(row[2]);
    const Bytes pk_raw = from_hex(row[3]);
    const Bytes sig = from_hex(row[5]);
    falcon::PublicKey pk;
    std::copy(pk_raw.begin(), pk_raw.end(), pk.begin());

    const auto metered = pipeline::metered_falcon_verify(msg, sig, pk, model);
    const auto native = pipeline::native_fast_verify(msg, sig, pk,
                                                     pipeline::ChargingMode::OpcodeFlat, model);
    CHECK(metered.accept == native.accept);
    CHECK(metered.accept);

    // the paper's conclusion as a property: cost exceeds the block limit
    CHECK(metered.gas > model.block_gas_limit);
    CHECK(double(metered.gas) / double(model.block_gas_limit) > 1.0);
    CHECK(native.gas == 1);

    // deterministic metering
    const auto again = pipeline::metered_falcon_verify(msg, sig, pk, model);
    CHECK(again.gas == metered.gas);
  }
}

TEST_CASE("metered and native verdicts agree on the tamper matrix")
{
  TestWorld w("equiv");
  pipeline::GasModel model;
  const auto mtx = w.make_metatx("equiv");
  const Bytes stream = tx::signing_stream(mtx.inner.tx);
  const auto* rec = w.registry.resolve(w.writer.did);
  REQUIRE(rec != nullptr);

  for (size_t i = 0; i < mtx.falcon_signature.size(); i += 53) {
    Bytes bad = mtx.falcon_signature;
    bad[i] ^= 0x01;
    const auto m = pipeline::metered_falcon_verify(stream, bad, rec->falcon_public_key, model);
    const auto n = pipeline::native_fast_verify(stream, bad, rec->falcon_public_key,
                                                pipeline::ChargingMode::OpcodeFlat, model);
    CHECK(m.accept == n.accept);
    CHECK_FALSE(m.accept);
  }
}

TEST_CASE("precompile charging grows linearly with input length")
{
  TestWorld w("precomp");
  pipeline::GasModel model;
  const auto kp = falcon::keygen(to_bytes("precomp-key"));
  uint64_t gas[3];
  const size_t lens[3] = { 64, 256, 1024 };
  for (int i = 0; i < 3; i++) {
    const Bytes msg(lens[i], 0x42);
    const auto sig = falcon::sign(msg, kp.secret, to_bytes("precomp-sign"));
    const auto out = pipeline::native_fast_verify(msg, BytesView(sig.bytes), kp.public_key,
                                                  pipeline::ChargingMode::PrecompileTable, model);
    CHECK(out.accept);
    gas[i] = out.gas;
  }
  // linear fit: equal per-byte slope between the sample points
  const double slope1 = double(gas[1] - gas[0]) / double(lens[1] - lens[0]);
  const double slope2 = double(gas[2] - gas[1]) / double(lens[2] - lens[1]);
  CHECK(slope1 == doctest::Approx(slope2).epsilon(0.01));
  CHECK(slope1 == doctest::Approx(double(model.precompile_per_word) / 32.0).epsilon(0.01));
}

TEST_CASE("admission decisions are deterministic")
{
  TestWorld w("det");
  const auto mtx = w.make_metatx("det");
  const auto cfg = config_for(w, pipeline::Backend::Metered);
  const auto d1 = pipeline::admit(mtx, w.registry, cfg);
  const auto d2 = pipeline::admit(mtx, w.registry, cfg);
  CHECK(d1.deterministic_equal(d2));
  CHECK(d1.gas_metered > 0);
}

TEST_CASE("pool dedup")
{
  TestWorld w("pool");
  pipeline::TransactionPool pool;
  const auto mtx = w.make_metatx("pool");
  CHECK(pool.insert(mtx));
  CHECK_FALSE(pool.insert(mtx));
  CHECK(pool.size() == 1);
  CHECK(pool.contains(tx::wrapper_hash(mtx)));
  pool.erase(tx::wrapper_hash(mtx));
  CHECK(pool.size() == 0);
}

TEST_CASE("decision log and bench csv formats")
{
  TestWorld w("log");
  const auto mtx = w.make_metatx("log");
  const auto d = pipeline::admit(mtx, w.registry, config_for(w));
  pipeline::DecisionRecord rec{ tx::wrapper_hash(mtx), d };
  const std::string line = pipeline::decision_to_jsonl(rec);
  CHECK(line.find("\"verdict\":\"Admit\"") != std::string::npos);
  CHECK(line.find("\"reason\":\"None\"") != std::string::npos);
  CHECK(line.find("\"tx_hash\":\"") != std::string::npos);

  std::ostringstream csv;
  pipeline::write_bench_csv(csv, { { "v0", 50'000'000 }, { "v1", 60'000'000 } }, 12'000'000);
  const std::string text = csv.str();
  CHECK(text.find("vector,gas,block_gas_limit,ratio") != std::string::npos);
  CHECK(text.find("v0,50000000,12000000,4.1") != std::string::npos);
}

TEST_CASE("gas model pins the paper's network constants")
{
  pipeline::GasModel model;
  CHECK(model.block_gas_limit == 12'000'000);
  CHECK(model.code_size_limit == 24'576);
}
