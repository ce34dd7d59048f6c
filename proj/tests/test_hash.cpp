#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common/errors.hpp"
#include "crypto/keccak.hpp"
#include "support/vectors.hpp"

using namespace pqchain;

TEST_CASE("keccak256 matches the reference oracle file")
{
  for (const auto& row : test::load_vectors(test::vector_path("keccak256.txt"))) {
    const Bytes input = from_hex(row[0]);
    CHECK(to_hex(hash::keccak256(input)) == row[1]);
  }
}

TEST_CASE("keccak256 pinned values")
{
  CHECK(to_hex(hash::keccak256(Bytes{})) ==
        "c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470");
  CHECK(to_hex(hash::keccak256(to_bytes("abc"))) ==
        "4e03657aea45a94fc7d47ba826c8d667c0d1e6e33a64a036ec44f58fa12d6c45");
}

TEST_CASE("shake256 matches the reference oracle file")
{
  for (const auto& row : test::load_vectors(test::vector_path("shake256.txt"))) {
    const Bytes input = from_hex(row[0]);
    const size_t n = std::stoul(row[1]);
    CHECK(to_hex(hash::shake256(input, n)) == row[2]);
  }
}

TEST_CASE("shake256 pinned empty-input value")
{
  CHECK(to_hex(hash::shake256(Bytes{}, 32)) ==
        "46b9dd2b0ba88d13233b3feb743eeb243fcd52ea62b81b82b50c27646ed5762f");
}

TEST_CASE("shake256 prefix property")
{
  const Bytes msg = to_bytes("prefix property probe");
  const Bytes short_out = hash::shake256(msg, 16);
  const Bytes long_out = hash::shake256(msg, 32);
  CHECK(Bytes(long_out.begin(), long_out.begin() + 16) == short_out);
}

TEST_CASE("shake256 rejects empty output request")
{
  CHECK_THROWS_AS(hash::shake256(Bytes{}, 0), Error);
}

TEST_CASE("shake128 / sha3-256 / sha3-512 match the oracle files")
{
  for (const auto& row : test::load_vectors(test::vector_path("shake128.txt"))) {
    CHECK(to_hex(hash::shake128(from_hex(row[0]), std::stoul(row[1]))) == row[2]);
  }
  for (const auto& row : test::load_vectors(test::vector_path("sha3_256.txt"))) {
    CHECK(to_hex(hash::sha3_256(from_hex(row[0]))) == row[1]);
  }
  for (const auto& row : test::load_vectors(test::vector_path("sha3_512.txt"))) {
    CHECK(to_hex(hash::sha3_512(from_hex(row[0]))) == row[1]);
  }
}

TEST_CASE("incremental absorb equals one-shot")
{
  const Bytes msg = from_hex("00112233445566778899aabbccddeeff00112233");
  hash::Shake256 xof;
  xof.absorb(BytesView(msg).subspan(0, 7));
  xof.absorb(BytesView(msg).subspan(7));
  Bytes a = xof.squeeze(48);
  CHECK(a == hash::shake256(msg, 48));
}

TEST_CASE("single-bit difference changes keccak digest")
{
  Bytes base = to_bytes("bit flip probe message 0123456789");
  const auto d0 = hash::keccak256(base);
  for (size_t bit = 0; bit < base.size() * 8; bit += 17) {
    Bytes mutated = base;
    mutated[bit / 8] ^= uint8_t(1u << (bit % 8));
    CHECK(hash::keccak256(mutated) != d0);
  }
}
