#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common/errors.hpp"
#include "crypto/falcon.hpp"
#include "crypto/keccak.hpp"
#include "support/vectors.hpp"

using namespace pqchain;

TEST_CASE("kat vectors regenerate bit-exactly and verify")
{
  const auto rows = test::load_vectors(test::vector_path("falcon512_kat.txt"));
  REQUIRE(rows.size() >= 8);
  for (const auto& row : rows) {
    const Bytes kg_seed = from_hex(row[0]);
    const Bytes sign_seed = from_hex(row[1]);
    const Bytes msg = from_hex(row[2]);

    const auto kp = falcon::keygen(kg_seed);
    CHECK(to_hex(BytesView(kp.public_key)) == row[3]);
    CHECK(to_hex(hash::sha3_256(BytesView(kp.secret))) == row[4]);

    const auto sig = falcon::sign(msg, kp.secret, sign_seed);
    CHECK(to_hex(BytesView(sig.bytes)) == row[5]);
    CHECK(falcon::verify(msg, BytesView(sig.bytes), kp.public_key) ==
          falcon::VerifyStatus::Accept);
  }
}

TEST_CASE("sign/verify round trip over 1000 randomized trials")
{
  const auto kp = falcon::keygen(to_bytes("falcon-roundtrip-key"));
  for (int i = 0; i < 1000; i++) {
    const Bytes msg = hash::shake256(to_bytes("falcon-msg-" + std::to_string(i)),
                                     1 + (i * 11) % 257);
    Bytes entropy = to_bytes("sig-entropy");
    entropy.push_back(static_cast<uint8_t>(i & 0xFF));
    entropy.push_back(static_cast<uint8_t>(i >> 8));
    const auto sig = falcon::sign(msg, kp.secret, entropy);
    CHECK(falcon::verify_ok(msg, BytesView(sig.bytes), kp.public_key));
    // signature must not verify under a different message
    Bytes other = msg;
    other.push_back(0x00);
    CHECK_FALSE(falcon::verify_ok(other, BytesView(sig.bytes), kp.public_key));
  }
}

TEST_CASE("exhaustive single-bit-flip sweep rejects on one triple")
{
  const auto kp = falcon::keygen(to_bytes("falcon-bitflip-key"));
  const Bytes msg = to_bytes("single bit flip target");
  const auto sig = falcon::sign(msg, kp.secret, to_bytes("bitflip-entropy"));
  REQUIRE(falcon::verify_ok(msg, BytesView(sig.bytes), kp.public_key));

  for (size_t bit = 0; bit < msg.size() * 8; bit++) {
    Bytes m = msg;
    m[bit / 8] ^= uint8_t(1u << (bit % 8));
    CHECK_FALSE(falcon::verify_ok(m, BytesView(sig.bytes), kp.public_key));
  }
  for (size_t bit = 0; bit < falcon::kSignatureLen * 8; bit++) {
    auto s = sig.bytes;
    s[bit / 8] ^= uint8_t(1u << (bit % 8));
    CHECK_FALSE(falcon::verify_ok(msg, BytesView(s), kp.public_key));
  }
  for (size_t bit = 0; bit < falcon::kPublicKeyLen * 8; bit++) {
    auto pk = kp.public_key;
    pk[bit / 8] ^= uint8_t(1u << (bit % 8));
    CHECK_FALSE(falcon::verify_ok(msg, BytesView(sig.bytes), pk));
  }
}

TEST_CASE("malformed encodings are distinguished from invalid signatures")
{
  const auto kp = falcon::keygen(to_bytes("falcon-malformed-key"));
  const Bytes msg = to_bytes("malformed probe");
  const auto sig = falcon::sign(msg, kp.secret, to_bytes("malformed-entropy"));

  SUBCASE("wrong length")
  {
    CHECK(falcon::verify(msg, BytesView(sig.bytes.data(), 100), kp.public_key) ==
          falcon::VerifyStatus::RejectMalformed);
  }
  SUBCASE("wrong header")
  {
    auto s = sig.bytes;
    s[0] = 0x3A; // falcon-1024 marker
    CHECK(falcon::verify(msg, BytesView(s), kp.public_key) ==
          falcon::VerifyStatus::RejectMalformed);
  }
  SUBCASE("nonzero padding tail")
  {
    auto s = sig.bytes;
    s[falcon::kSignatureLen - 1] |= 0x01;
    CHECK(falcon::verify(msg, BytesView(s), kp.public_key) ==
          falcon::VerifyStatus::RejectMalformed);
  }
  SUBCASE("valid encoding, wrong key is merely invalid")
  {
    const auto other = falcon::keygen(to_bytes("falcon-other-key"));
    CHECK(falcon::verify(msg, BytesView(sig.bytes), other.public_key) ==
          falcon::VerifyStatus::RejectInvalid);
  }
}

TEST_CASE("deterministic keygen and signing under fixed entropy")
{
  const auto a = falcon::keygen(to_bytes("det-seed"));
  const auto b = falcon::keygen(to_bytes("det-seed"));
  CHECK(a.public_key == b.public_key);
  CHECK(a.secret == b.secret);
  const Bytes msg = to_bytes("det message");
  const auto s1 = falcon::sign(msg, a.secret, to_bytes("det-sign"));
  const auto s2 = falcon::sign(msg, b.secret, to_bytes("det-sign"));
  CHECK(s1.bytes == s2.bytes);
}

TEST_CASE("metered verify agrees with the plain verdict and counts work")
{
  const auto kp = falcon::keygen(to_bytes("falcon-meter-key"));
  const Bytes msg = to_bytes("meter probe");
  const auto sig = falcon::sign(msg, kp.secret, to_bytes("meter-entropy"));

  falcon::VerifyMeter meter;
  CHECK(falcon::verify(msg, BytesView(sig.bytes), kp.public_key, &meter) ==
        falcon::VerifyStatus::Accept);
  CHECK(meter.shake_permutations > 0);
  CHECK(meter.ntt_butterflies == 3 * (falcon::kDegree / 2) * falcon::kLogDegree);
  CHECK(meter.coeff_mults > 0);
  CHECK(meter.memory_words > 0);

  falcon::VerifyMeter meter2;
  (void)falcon::verify(msg, BytesView(sig.bytes), kp.public_key, &meter2);
  CHECK(meter2.shake_permutations == meter.shake_permutations);
  CHECK(meter2.ntt_butterflies == meter.ntt_butterflies);
  CHECK(meter2.coeff_mults == meter.coeff_mults);
  CHECK(meter2.memory_words == meter.memory_words);
}

TEST_CASE("keygen requires entropy")
{
  CHECK_THROWS_AS(falcon::keygen(BytesView{}), Error);
}
