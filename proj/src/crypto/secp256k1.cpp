#include "crypto/secp256k1.hpp"

#include "common/errors.hpp"
#include "crypto/keccak.hpp"
#include "crypto/sha256.hpp"

#include <vector>

namespace pqchain::ecdsa {

namespace {

using u128 = unsigned __int128;

// 256-bit little-endian limbs.
struct U256 {
  uint64_t w[4] = { 0, 0, 0, 0 };

  bool operator==(const U256&) const = default;
};

constexpr U256 kZero{};

// p = 2^256 - 2^32 - 977
constexpr U256 P = { { 0xFFFFFFFEFFFFFC2FULL, 0xFFFFFFFFFFFFFFFFULL,
                       0xFFFFFFFFFFFFFFFFULL, 0xFFFFFFFFFFFFFFFFULL } };
// group order n
constexpr U256 N = { { 0xBFD25E8CD0364141ULL, 0xBAAEDCE6AF48A03BULL,
                       0xFFFFFFFFFFFFFFFEULL, 0xFFFFFFFFFFFFFFFFULL } };
// n / 2 (floor), the low-s boundary
constexpr U256 N_HALF = { { 0xDFE92F46681B20A0ULL, 0x5D576E7357A4501DULL,
                            0xFFFFFFFFFFFFFFFFULL, 0x7FFFFFFFFFFFFFFFULL } };

constexpr U256 GX = { { 0x59F2815B16F81798ULL, 0x029BFCDB2DCE28D9ULL,
                        0x55A06295CE870B07ULL, 0x79BE667EF9DCBBACULL } };
constexpr U256 GY = { { 0x9C47D08FFB10D4B8ULL, 0xFD17B448A6855419ULL,
                        0x5DA4FBFC0E1108A8ULL, 0x483ADA7726A3C465ULL } };

int cmp(const U256& a, const U256& b)
{
  for (int i = 3; i >= 0; i--) {
    if (a.w[i] != b.w[i]) {
      return a.w[i] < b.w[i] ? -1 : 1;
    }
  }
  return 0;
}

bool is_zero(const U256& a)
{
  return (a.w[0] | a.w[1] | a.w[2] | a.w[3]) == 0;
}

uint64_t add(U256& r, const U256& a, const U256& b)
{
  u128 carry = 0;
  for (int i = 0; i < 4; i++) {
    carry += u128(a.w[i]) + b.w[i];
    r.w[i] = static_cast<uint64_t>(carry);
    carry >>= 64;
  }
  return static_cast<uint64_t>(carry);
}

uint64_t sub(U256& r, const U256& a, const U256& b)
{
  u128 borrow = 0;
  for (int i = 0; i < 4; i++) {
    const u128 d = u128(a.w[i]) - b.w[i] - borrow;
    r.w[i] = static_cast<uint64_t>(d);
    borrow = (d >> 64) & 1;
  }
  return static_cast<uint64_t>(borrow);
}

struct U512 {
  uint64_t w[8] = { 0 };
};

U512 mul_wide(const U256& a, const U256& b)
{
  U512 r;
  for (int i = 0; i < 4; i++) {
    u128 carry = 0;
    for (int j = 0; j < 4; j++) {
      carry += u128(a.w[i]) * b.w[j] + r.w[i + j];
      r.w[i + j] = static_cast<uint64_t>(carry);
      carry >>= 64;
    }
    r.w[i + 4] = static_cast<uint64_t>(carry);
  }
  return r;
}

// Reduce mod p via 2^256 = 2^32 + 977 (mod p).
U256 reduce_p(const U512& x)
{
  constexpr uint64_t C = (1ULL << 32) + 977;
  // first fold: lo + hi * C, hi * C fits in 5 limbs
  uint64_t acc[5] = { x.w[0], x.w[1], x.w[2], x.w[3], 0 };
  u128 carry = 0;
  for (int i = 0; i < 4; i++) {
    carry += u128(x.w[4 + i]) * C + acc[i];
    acc[i] = static_cast<uint64_t>(carry);
    carry >>= 64;
  }
  acc[4] = static_cast<uint64_t>(carry);

  // second fold of the single overflow limb
  U256 r = { { acc[0], acc[1], acc[2], acc[3] } };
  if (acc[4] != 0) {
    U256 fold = { { 0, 0, 0, 0 } };
    u128 t = u128(acc[4]) * C;
    fold.w[0] = static_cast<uint64_t>(t);
    fold.w[1] = static_cast<uint64_t>(t >> 64);
    if (add(r, r, fold)) {
      const U256 c_small = { { C, 0, 0, 0 } };
      add(r, r, c_small);
    }
  }
  while (cmp(r, P) >= 0) {
    sub(r, r, P);
  }
  return r;
}

U256 mulmod_p(const U256& a, const U256& b)
{
  return reduce_p(mul_wide(a, b));
}

// Montgomery arithmetic mod n (n odd): nprime = -n^{-1} mod 2^64 via Newton.
constexpr uint64_t mont_nprime()
{
  uint64_t x = 1;
  for (int i = 0; i < 6; i++) {
    x *= 2 - N.w[0] * x;
  }
  return ~x + 1; // -x
}

// CIOS Montgomery product: returns a*b*2^-256 mod n.
U256 montmul_n(const U256& a, const U256& b)
{
  constexpr uint64_t nprime = mont_nprime();
  uint64_t t[6] = { 0 };
  for (int i = 0; i < 4; i++) {
    u128 carry = 0;
    for (int j = 0; j < 4; j++) {
      carry += u128(a.w[i]) * b.w[j] + t[j];
      t[j] = static_cast<uint64_t>(carry);
      carry >>= 64;
    }
    carry += t[4];
    t[4] = static_cast<uint64_t>(carry);
    t[5] = static_cast<uint64_t>(carry >> 64);

    const uint64_t m = t[0] * nprime;
    carry = u128(m) * N.w[0] + t[0];
    carry >>= 64;
    for (int j = 1; j < 4; j++) {
      carry += u128(m) * N.w[j] + t[j];
      t[j - 1] = static_cast<uint64_t>(carry);
      carry >>= 64;
    }
    carry += t[4];
    t[3] = static_cast<uint64_t>(carry);
    t[4] = t[5] + static_cast<uint64_t>(carry >> 64);
    t[5] = 0;
  }
  U256 r = { { t[0], t[1], t[2], t[3] } };
  if (t[4] || cmp(r, N) >= 0) {
    sub(r, r, N);
  }
  return r;
}

const U256& mont_r2_n()
{
  // 2^512 mod n, computed once with the slow generic reduction
  static const U256 r2 = [] {
    U512 x{};
    // represent 2^512 as a 513-bit value: run the generic reducer on
    // (2^512 - n * floor(...)) ... simpler: reduce 2^511 twice via doubling
    U256 acc = { { 1, 0, 0, 0 } };
    for (int i = 0; i < 512; i++) {
      const uint64_t carry = add(acc, acc, acc);
      if (carry || cmp(acc, N) >= 0) {
        sub(acc, acc, N);
      }
    }
    (void)x;
    return acc;
  }();
  return r2;
}

U256 mulmod_n(const U256& a, const U256& b)
{
  return montmul_n(montmul_n(a, b), mont_r2_n());
}

U256 addmod(const U256& a, const U256& b, const U256& m)
{
  U256 r;
  const uint64_t carry = add(r, a, b);
  if (carry || cmp(r, m) >= 0) {
    sub(r, r, m);
  }
  return r;
}

U256 submod(const U256& a, const U256& b, const U256& m)
{
  U256 r;
  if (sub(r, a, b)) {
    add(r, r, m);
  }
  return r;
}

U256 powmod(const U256& base, const U256& exp, bool mod_p)
{
  U256 result = { { 1, 0, 0, 0 } };
  U256 acc = base;
  for (int bit = 0; bit < 256; bit++) {
    if ((exp.w[bit / 64] >> (bit % 64)) & 1) {
      result = mod_p ? mulmod_p(result, acc) : mulmod_n(result, acc);
    }
    acc = mod_p ? mulmod_p(acc, acc) : mulmod_n(acc, acc);
  }
  return result;
}

U256 invmod_p(const U256& a)
{
  U256 pm2 = P;
  const U256 two = { { 2, 0, 0, 0 } };
  sub(pm2, pm2, two);
  return powmod(a, pm2, true);
}

U256 invmod_n(const U256& a)
{
  U256 nm2 = N;
  const U256 two = { { 2, 0, 0, 0 } };
  sub(nm2, nm2, two);
  return powmod(a, nm2, false);
}

U256 from_be(const uint8_t* p)
{
  U256 r;
  for (int i = 0; i < 4; i++) {
    r.w[3 - i] = read_u64be(p + 8 * i);
  }
  return r;
}

void to_be(const U256& v, uint8_t* out)
{
  for (int i = 0; i < 4; i++) {
    const uint64_t limb = v.w[3 - i];
    for (int j = 0; j < 8; j++) {
      out[8 * i + j] = static_cast<uint8_t>(limb >> (8 * (7 - j)));
    }
  }
}

// Jacobian point; infinity encoded as z == 0.
struct Point {
  U256 x, y, z;
};

const Point kInfinity = { kZero, kZero, kZero };

bool is_infinity(const Point& p)
{
  return is_zero(p.z);
}

Point dbl(const Point& p)
{
  if (is_infinity(p) || is_zero(p.y)) {
    return kInfinity;
  }
  const U256 a = mulmod_p(p.x, p.x);
  const U256 b = mulmod_p(p.y, p.y);
  const U256 c = mulmod_p(b, b);
  U256 t = addmod(p.x, b, P);
  t = mulmod_p(t, t);
  t = submod(t, a, P);
  t = submod(t, c, P);
  const U256 d = addmod(t, t, P);
  U256 e = addmod(a, a, P);
  e = addmod(e, a, P);
  const U256 f = mulmod_p(e, e);
  U256 x3 = submod(f, addmod(d, d, P), P);
  U256 c8 = addmod(c, c, P);
  c8 = addmod(c8, c8, P);
  c8 = addmod(c8, c8, P);
  U256 y3 = mulmod_p(e, submod(d, x3, P));
  y3 = submod(y3, c8, P);
  const U256 z3 = mulmod_p(addmod(p.y, p.y, P), p.z);
  return { x3, y3, z3 };
}

Point add_points(const Point& p, const Point& q)
{
  if (is_infinity(p)) return q;
  if (is_infinity(q)) return p;
  const U256 z1z1 = mulmod_p(p.z, p.z);
  const U256 z2z2 = mulmod_p(q.z, q.z);
  const U256 u1 = mulmod_p(p.x, z2z2);
  const U256 u2 = mulmod_p(q.x, z1z1);
  const U256 s1 = mulmod_p(p.y, mulmod_p(z2z2, q.z));
  const U256 s2 = mulmod_p(q.y, mulmod_p(z1z1, p.z));
  if (u1 == u2) {
    if (s1 == s2) {
      return dbl(p);
    }
    return kInfinity;
  }
  const U256 h = submod(u2, u1, P);
  U256 i = addmod(h, h, P);
  i = mulmod_p(i, i);
  const U256 j = mulmod_p(h, i);
  U256 rr = submod(s2, s1, P);
  rr = addmod(rr, rr, P);
  const U256 v = mulmod_p(u1, i);
  U256 x3 = mulmod_p(rr, rr);
  x3 = submod(x3, j, P);
  x3 = submod(x3, addmod(v, v, P), P);
  U256 y3 = mulmod_p(rr, submod(v, x3, P));
  U256 s1j = mulmod_p(s1, j);
  y3 = submod(y3, addmod(s1j, s1j, P), P);
  U256 z3 = addmod(p.z, q.z, P);
  z3 = mulmod_p(z3, z3);
  z3 = submod(z3, z1z1, P);
  z3 = submod(z3, z2z2, P);
  z3 = mulmod_p(z3, h);
  return { x3, y3, z3 };
}

Point scalar_mult(const U256& k, const Point& p)
{
  Point r = kInfinity;
  for (int bit = 255; bit >= 0; bit--) {
    r = dbl(r);
    if ((k.w[bit / 64] >> (bit % 64)) & 1) {
      r = add_points(r, p);
    }
  }
  return r;
}

// fixed-base 4-bit window table: table[w][d-1] = d * 16^w * G
const Point* base_table()
{
  static const std::vector<Point> table = [] {
    std::vector<Point> t;
    t.reserve(64 * 15);
    const U256 one = { { 1, 0, 0, 0 } };
    Point window_base = { GX, GY, one };
    for (int w = 0; w < 64; w++) {
      Point acc = kInfinity;
      for (int d = 1; d <= 15; d++) {
        acc = add_points(acc, window_base);
        t.push_back(acc);
      }
      window_base = dbl(dbl(dbl(dbl(window_base))));
    }
    return t;
  }();
  return table.data();
}

Point scalar_mult_base(const U256& k)
{
  const Point* table = base_table();
  Point r = kInfinity;
  for (int w = 0; w < 64; w++) {
    const unsigned digit = (k.w[w / 16] >> (4 * (w % 16))) & 0xF;
    if (digit != 0) {
      r = add_points(r, table[w * 15 + digit - 1]);
    }
  }
  return r;
}

struct Affine {
  U256 x, y;
  bool infinity = false;
};

Affine to_affine(const Point& p)
{
  if (is_infinity(p)) {
    return { kZero, kZero, true };
  }
  const U256 zinv = invmod_p(p.z);
  const U256 zinv2 = mulmod_p(zinv, zinv);
  return { mulmod_p(p.x, zinv2), mulmod_p(p.y, mulmod_p(zinv2, zinv)), false };
}

PublicKey encode_public(const Affine& a)
{
  PublicKey out;
  to_be(a.x, out.data());
  to_be(a.y, out.data() + 32);
  return out;
}

// RFC 6979 HMAC-SHA256 deterministic nonce, qlen = 256.
U256 rfc6979_nonce(const SecretKey& secret, const Digest256& digest)
{
  uint8_t h1_reduced[32];
  {
    U256 z = from_be(digest.data());
    if (cmp(z, N) >= 0) {
      sub(z, z, N);
    }
    to_be(z, h1_reduced);
  }
  Bytes v(32, 0x01);
  Bytes k(32, 0x00);
  auto hmac_cat = [&](uint8_t sep_or_none, bool with_material) {
    Bytes msg = v;
    if (with_material) {
      msg.push_back(sep_or_none);
      msg.insert(msg.end(), secret.begin(), secret.end());
      msg.insert(msg.end(), h1_reduced, h1_reduced + 32);
    }
    const Digest256 d = hash::hmac_sha256(k, msg);
    k.assign(d.begin(), d.end());
    const Digest256 d2 = hash::hmac_sha256(k, v);
    v.assign(d2.begin(), d2.end());
  };
  hmac_cat(0x00, true);
  hmac_cat(0x01, true);
  while (true) {
    const Digest256 t = hash::hmac_sha256(k, v);
    v.assign(t.begin(), t.end());
    const U256 cand = from_be(v.data());
    if (!is_zero(cand) && cmp(cand, N) < 0) {
      return cand;
    }
    Bytes msg = v;
    msg.push_back(0x00);
    const Digest256 d = hash::hmac_sha256(k, msg);
    k.assign(d.begin(), d.end());
    const Digest256 d2 = hash::hmac_sha256(k, v);
    v.assign(d2.begin(), d2.end());
  }
}

} // namespace

EcdsaKeyPair keypair_from_secret(const SecretKey& secret)
{
  const U256 d = from_be(secret.data());
  if (is_zero(d) || cmp(d, N) >= 0) {
    throw Error(ErrorCode::InvalidArgument, "secret scalar out of range");
  }
  const Affine pub = to_affine(scalar_mult_base(d));
  EcdsaKeyPair kp;
  kp.secret = secret;
  kp.public_key = encode_public(pub);
  return kp;
}

EcdsaKeyPair keygen(BytesView entropy)
{
  if (entropy.empty()) {
    throw Error(ErrorCode::InvalidArgument, "ecdsa keygen requires entropy");
  }
  hash::Shake256 xof;
  xof.absorb(to_bytes("pqchain/ecdsa-keygen"));
  xof.absorb(entropy);
  while (true) {
    SecretKey secret;
    xof.squeeze(secret.data(), secret.size());
    const U256 d = from_be(secret.data());
    if (!is_zero(d) && cmp(d, N) < 0) {
      return keypair_from_secret(secret);
    }
  }
}

EcdsaSignature sign(const Digest256& digest, const EcdsaKeyPair& key)
{
  const U256 d = from_be(key.secret.data());
  if (is_zero(d) || cmp(d, N) >= 0) {
    throw Error(ErrorCode::InvalidArgument, "secret scalar out of range");
  }
  U256 z = from_be(digest.data());
  if (cmp(z, N) >= 0) {
    sub(z, z, N);
  }
  U256 k = rfc6979_nonce(key.secret, digest);
  while (true) {
    const Affine rp = to_affine(scalar_mult_base(k));
    U256 r = rp.x;
    if (cmp(r, N) >= 0) {
      sub(r, r, N);
    }
    if (is_zero(r)) {
      const U256 one = { { 1, 0, 0, 0 } };
      k = addmod(k, one, N);
      continue;
    }
    U256 s = mulmod_n(invmod_n(k), addmod(z, mulmod_n(r, d), N));
    if (is_zero(s)) {
      const U256 one = { { 1, 0, 0, 0 } };
      k = addmod(k, one, N);
      continue;
    }
    int rec = static_cast<int>(rp.y.w[0] & 1);
    if (cmp(s, N_HALF) > 0) {
      sub(s, N, s);
      rec ^= 1;
    }
    EcdsaSignature sig;
    to_be(r, sig.r.data());
    to_be(s, sig.s.data());
    sig.recovery_id = rec;
    return sig;
  }
}

std::optional<PublicKey> recover(const Digest256& digest, const EcdsaSignature& sig)
{
  if (sig.recovery_id != 0 && sig.recovery_id != 1) {
    return std::nullopt;
  }
  const U256 r = from_be(sig.r.data());
  const U256 s = from_be(sig.s.data());
  if (is_zero(r) || is_zero(s) || cmp(r, N) >= 0 || cmp(s, N) >= 0) {
    return std::nullopt;
  }
  // lift x = r to a curve point with the requested y parity
  const U256 seven = { { 7, 0, 0, 0 } };
  const U256 alpha = addmod(mulmod_p(mulmod_p(r, r), r), seven, P);
  // sqrt via (p+1)/4
  U256 exp = P;
  const U256 one = { { 1, 0, 0, 0 } };
  add(exp, exp, one);
  // divide by 4 = shift right twice
  for (int shift = 0; shift < 2; shift++) {
    for (int i = 0; i < 3; i++) {
      exp.w[i] = (exp.w[i] >> 1) | (exp.w[i + 1] << 63);
    }
    exp.w[3] >>= 1;
  }
  U256 beta = powmod(alpha, exp, true);
  if (!(mulmod_p(beta, beta) == alpha)) {
    return std::nullopt; // x^3+7 is not a quadratic residue
  }
  U256 y = beta;
  if (static_cast<int>(y.w[0] & 1) != sig.recovery_id) {
    sub(y, P, y);
  }
  const Point rp = { r, y, one };
  const U256 rinv = invmod_n(r);
  U256 z = from_be(digest.data());
  if (cmp(z, N) >= 0) {
    sub(z, z, N);
  }
  const U256 u1 = mulmod_n(submod(N, z, N), rinv); // -z/r mod n
  const U256 u2 = mulmod_n(s, rinv);
  const Point q = add_points(scalar_mult_base(u1), scalar_mult(u2, rp));
  if (is_infinity(q)) {
    return std::nullopt;
  }
  return encode_public(to_affine(q));
}

bool verify(const Digest256& digest, const EcdsaSignature& sig, const PublicKey& expected)
{
  const auto recovered = recover(digest, sig);
  return recovered.has_value() && *recovered == expected;
}

Address derive_address(const PublicKey& public_key)
{
  const Digest256 h = hash::keccak256(BytesView(public_key));
  Address out;
  std::copy(h.begin() + 12, h.end(), out.begin());
  return out;
}

bool is_low_s(const std::array<uint8_t, 32>& s)
{
  return cmp(from_be(s.data()), N_HALF) <= 0;
}

} // namespace pqchain::ecdsa
