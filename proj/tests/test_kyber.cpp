#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common/errors.hpp"
#include "crypto/keccak.hpp"
#include "crypto/kyber.hpp"
#include "support/vectors.hpp"

using namespace pqchain;

TEST_CASE("kem round trip agrees on the shared secret")
{
  for (int i = 0; i < 25; i++) {
    Bytes seed = to_bytes("kem-roundtrip");
    seed.push_back(static_cast<uint8_t>(i));
    const auto kp = kem::keygen(seed);
    CHECK(kp.public_key.size() == kem::kPublicKeyLen);
    CHECK(kp.secret_key.size() == kem::kSecretKeyLen);

    seed.push_back(0xEE);
    const auto enc = kem::encap(kp.public_key, seed);
    CHECK(enc.ciphertext.size() == kem::kCiphertextLen);
    CHECK(kem::decap(enc.ciphertext, kp) == enc.shared_secret);
  }
}

TEST_CASE("tampered ciphertext decapsulates to a different secret (implicit rejection)")
{
  const auto kp = kem::keygen(to_bytes("kem-tamper"));
  const auto enc = kem::encap(kp.public_key, to_bytes("kem-tamper-e"));
  for (size_t pos = 0; pos < enc.ciphertext.size(); pos += 97) {
    Bytes mutated = enc.ciphertext;
    mutated[pos] ^= 0x01;
    CHECK(kem::decap(mutated, kp) != enc.shared_secret);
  }
}

TEST_CASE("deterministic given identical entropy")
{
  const auto a = kem::keygen(to_bytes("kem-det"));
  const auto b = kem::keygen(to_bytes("kem-det"));
  CHECK(a.public_key == b.public_key);
  CHECK(a.secret_key == b.secret_key);
  const auto e1 = kem::encap(a.public_key, to_bytes("coins"));
  const auto e2 = kem::encap(b.public_key, to_bytes("coins"));
  CHECK(e1.ciphertext == e2.ciphertext);
  CHECK(e1.shared_secret == e2.shared_secret);
}

TEST_CASE("unknown algorithm string rejected")
{
  CHECK_THROWS_AS(kem::keygen(to_bytes("x"), "mceliece348864"), Error);
}

TEST_CASE("kat vectors (cross-validated against the python oracle)")
{
  for (const auto& row : test::load_vectors(test::vector_path("kyber768_kat.txt"))) {
    const Bytes keygen_seed = from_hex(row[0]);
    const Bytes encap_seed = from_hex(row[1]);
    const auto kp = kem::keygen(keygen_seed);
    CHECK(to_hex(hash::sha3_256(kp.public_key)) == row[2]);
    CHECK(to_hex(hash::sha3_256(kp.secret_key)) == row[3]);
    const auto enc = kem::encap(kp.public_key, encap_seed);
    CHECK(to_hex(hash::sha3_256(enc.ciphertext)) == row[4]);
    CHECK(to_hex(BytesView(enc.shared_secret)) == row[5]);
    CHECK(kem::decap(enc.ciphertext, kp) == enc.shared_secret);
  }
}
