#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "crypto/aead.hpp"
#include "support/vectors.hpp"

using namespace pqchain;

namespace {

aead::Key key_from_hex(const std::string& h)
{
  const Bytes b = from_hex(h);
  REQUIRE(b.size() == 32);
  aead::Key k;
  std::copy(b.begin(), b.end(), k.begin());
  return k;
}

aead::Nonce nonce_from_hex(const std::string& h)
{
  const Bytes b = from_hex(h);
  REQUIRE(b.size() == 24);
  aead::Nonce n;
  std::copy(b.begin(), b.end(), n.begin());
  return n;
}

} // namespace

TEST_CASE("xchacha20-poly1305 matches the libsodium oracle vectors")
{
  for (const auto& row : test::load_vectors(test::vector_path("aead_xchacha20poly1305.txt"))) {
    const auto key = key_from_hex(row[0]);
    const auto nonce = nonce_from_hex(row[1]);
    const Bytes aad = from_hex(row[2]);
    const Bytes pt = from_hex(row[3]);
    const Bytes expected = from_hex(row[4]);
    CHECK(aead::seal(key, nonce, aad, pt) == expected);
    const auto opened = aead::open(key, nonce, aad, expected);
    REQUIRE(opened.has_value());
    CHECK(*opened == pt);
  }
}

TEST_CASE("open rejects any single corrupted bit")
{
  const auto key = key_from_hex("000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f");
  aead::Nonce nonce{};
  nonce[0] = 0x24;
  const Bytes aad = to_bytes("header");
  const Bytes pt = to_bytes("the record payload under test");
  Bytes boxed = aead::seal(key, nonce, aad, pt);
  for (size_t bit = 0; bit < boxed.size() * 8; bit += 13) {
    Bytes mutated = boxed;
    mutated[bit / 8] ^= uint8_t(1u << (bit % 8));
    CHECK_FALSE(aead::open(key, nonce, aad, mutated).has_value());
  }
  // and aad coverage
  CHECK_FALSE(aead::open(key, nonce, to_bytes("Header"), boxed).has_value());
  CHECK(aead::open(key, nonce, aad, boxed).has_value());
}

TEST_CASE("truncated box rejected")
{
  const auto key = key_from_hex("22000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e");
  aead::Nonce nonce{};
  const Bytes boxed = aead::seal(key, nonce, {}, to_bytes("x"));
  CHECK_FALSE(aead::open(key, nonce, {}, BytesView(boxed).subspan(0, 10)).has_value());
  CHECK_FALSE(aead::open(key, nonce, {}, BytesView(boxed).subspan(0, 0)).has_value());
}

TEST_CASE("distinct nonces give unrelated ciphertexts")
{
  const auto key = key_from_hex("aa000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e");
  const Bytes pt(128, 0x5A);
  aead::Nonce n1{}, n2{};
  n2[23] = 1;
  const Bytes c1 = aead::seal(key, n1, {}, pt);
  const Bytes c2 = aead::seal(key, n2, {}, pt);
  CHECK(c1 != c2);
  CHECK_FALSE(aead::open(key, n1, {}, c2).has_value());
}
