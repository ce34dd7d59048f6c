#include "crypto/kyber.hpp"

#include "common/errors.hpp"
#include "crypto/keccak.hpp"

namespace pqchain::kem {

namespace {

constexpr int kN = 256;
constexpr int kQ = 3329;
constexpr int kK = 3;  // kyber768
constexpr int kEta1 = 2;
constexpr int kEta2 = 2;
constexpr int kDu = 10;
constexpr int kDv = 4;
constexpr int kPolyBytes = 384;            // 12-bit packing
constexpr int kPolyVecBytes = kK * kPolyBytes;
constexpr int kInvN128 = 3303;             // 128^-1 mod q

using Poly = std::array<int16_t, kN>;
using PolyVec = std::array<Poly, kK>;

int16_t mod_q(int32_t v)
{
  v %= kQ;
  if (v < 0) {
    v += kQ;
  }
  return static_cast<int16_t>(v);
}

// zetas[i] = 17^bitrev7(i) mod q
const std::array<int16_t, 128>& zetas()
{
  static const std::array<int16_t, 128> table = [] {
    std::array<int16_t, 128> z{};
    auto brv7 = [](int i) {
      int r = 0;
      for (int b = 0; b < 7; b++) {
        r = (r << 1) | ((i >> b) & 1);
      }
      return r;
    };
    for (int i = 0; i < 128; i++) {
      int32_t acc = 1;
      for (int e = 0; e < brv7(i); e++) {
        acc = acc * 17 % kQ;
      }
      z[i] = static_cast<int16_t>(acc);
    }
    return z;
  }();
  return table;
}

void ntt(Poly& a)
{
  const auto& z = zetas();
  int k = 1;
  for (int len = 128; len >= 2; len >>= 1) {
    for (int start = 0; start < kN; start += 2 * len) {
      const int32_t zeta = z[k++];
      for (int j = start; j < start + len; j++) {
        const int16_t t = mod_q(zeta * a[j + len]);
        a[j + len] = mod_q(int32_t(a[j]) - t);
        a[j] = mod_q(int32_t(a[j]) + t);
      }
    }
  }
}

void intt(Poly& a)
{
  const auto& z = zetas();
  int k = 127;
  for (int len = 2; len <= 128; len <<= 1) {
    for (int start = 0; start < kN; start += 2 * len) {
      const int32_t zeta = z[k--];
      for (int j = start; j < start + len; j++) {
        const int16_t t = a[j];
        a[j] = mod_q(int32_t(t) + a[j + len]);
        a[j + len] = mod_q(zeta * mod_q(int32_t(a[j + len]) - t));
      }
    }
  }
  for (auto& c : a) {
    c = mod_q(int32_t(c) * kInvN128);
  }
}

// multiplication of two degree-one residues mod (x^2 - zeta)
void basemul(int16_t r[2], const int16_t a[2], const int16_t b[2], int32_t zeta)
{
  r[0] = mod_q(mod_q(int32_t(a[1]) * b[1]) * zeta + int32_t(a[0]) * b[0]);
  r[1] = mod_q(int32_t(a[0]) * b[1] + int32_t(a[1]) * b[0]);
}

Poly poly_basemul(const Poly& a, const Poly& b)
{
  const auto& z = zetas();
  Poly r;
  for (int i = 0; i < kN / 4; i++) {
    basemul(&r[4 * i], &a[4 * i], &b[4 * i], z[64 + i]);
    basemul(&r[4 * i + 2], &a[4 * i + 2], &b[4 * i + 2], kQ - z[64 + i]);
  }
  return r;
}

Poly poly_add(const Poly& a, const Poly& b)
{
  Poly r;
  for (int i = 0; i < kN; i++) {
    r[i] = mod_q(int32_t(a[i]) + b[i]);
  }
  return r;
}

Poly poly_sub(const Poly& a, const Poly& b)
{
  Poly r;
  for (int i = 0; i < kN; i++) {
    r[i] = mod_q(int32_t(a[i]) - b[i]);
  }
  return r;
}

// rejection sampling of a uniform NTT-domain polynomial from SHAKE128(seed||i||j)
Poly sample_uniform(const std::array<uint8_t, 32>& seed, uint8_t byte0, uint8_t byte1)
{
  hash::Shake128 xof;
  xof.absorb(BytesView(seed));
  const uint8_t idx[2] = { byte0, byte1 };
  xof.absorb(BytesView(idx, 2));
  Poly r;
  int count = 0;
  uint8_t buf[168];
  while (count < kN) {
    xof.squeeze(buf, sizeof(buf));
    for (size_t off = 0; off + 3 <= sizeof(buf) && count < kN; off += 3) {
      const int d1 = buf[off] | ((buf[off + 1] & 0x0F) << 8);
      const int d2 = (buf[off + 1] >> 4) | (buf[off + 2] << 4);
      if (d1 < kQ) {
        r[count++] = static_cast<int16_t>(d1);
      }
      if (d2 < kQ && count < kN) {
        r[count++] = static_cast<int16_t>(d2);
      }
    }
  }
  return r;
}

Poly cbd2(BytesView buf) // 128 bytes, eta = 2
{
  Poly r;
  for (int i = 0; i < kN / 8; i++) {
    uint32_t t = uint32_t(buf[4 * i]) | (uint32_t(buf[4 * i + 1]) << 8) |
                 (uint32_t(buf[4 * i + 2]) << 16) | (uint32_t(buf[4 * i + 3]) << 24);
    const uint32_t d = (t & 0x55555555u) + ((t >> 1) & 0x55555555u);
    for (int j = 0; j < 8; j++) {
      const int a = (d >> (4 * j)) & 0x3;
      const int b = (d >> (4 * j + 2)) & 0x3;
      r[8 * i + j] = mod_q(a - b);
    }
  }
  return r;
}

Poly sample_noise(const std::array<uint8_t, 32>& seed, uint8_t nonce, int eta)
{
  hash::Shake256 prf;
  prf.absorb(BytesView(seed));
  prf.absorb(BytesView(&nonce, 1));
  const Bytes buf = prf.squeeze(64 * static_cast<size_t>(eta));
  return cbd2(buf); // eta1 == eta2 == 2 for kyber768
}

void pack_poly(const Poly& a, uint8_t* out) // 12-bit
{
  for (int i = 0; i < kN / 2; i++) {
    const uint16_t c0 = static_cast<uint16_t>(a[2 * i]);
    const uint16_t c1 = static_cast<uint16_t>(a[2 * i + 1]);
    out[3 * i] = static_cast<uint8_t>(c0);
    out[3 * i + 1] = static_cast<uint8_t>((c0 >> 8) | (c1 << 4));
    out[3 * i + 2] = static_cast<uint8_t>(c1 >> 4);
  }
}

Poly unpack_poly(const uint8_t* in)
{
  Poly r;
  for (int i = 0; i < kN / 2; i++) {
    r[2 * i] = static_cast<int16_t>((in[3 * i] | (uint16_t(in[3 * i + 1]) << 8)) & 0xFFF);
    r[2 * i + 1] = static_cast<int16_t>((in[3 * i + 1] >> 4) | (uint16_t(in[3 * i + 2]) << 4));
  }
  return r;
}

int16_t compress(int32_t x, int d)
{
  return static_cast<int16_t>((((x << d) + kQ / 2) / kQ) & ((1 << d) - 1));
}

int16_t decompress(int32_t x, int d)
{
  return static_cast<int16_t>((x * kQ + (1 << (d - 1))) >> d);
}

void compress_polyvec(const PolyVec& v, uint8_t* out) // du = 10
{
  size_t pos = 0;
  for (const auto& p : v) {
    for (int i = 0; i < kN / 4; i++) {
      uint16_t t[4];
      for (int j = 0; j < 4; j++) {
        t[j] = static_cast<uint16_t>(compress(p[4 * i + j], kDu));
      }
      out[pos++] = static_cast<uint8_t>(t[0]);
      out[pos++] = static_cast<uint8_t>((t[0] >> 8) | (t[1] << 2));
      out[pos++] = static_cast<uint8_t>((t[1] >> 6) | (t[2] << 4));
      out[pos++] = static_cast<uint8_t>((t[2] >> 4) | (t[3] << 6));
      out[pos++] = static_cast<uint8_t>(t[3] >> 2);
    }
  }
}

PolyVec decompress_polyvec(const uint8_t* in)
{
  PolyVec v;
  size_t pos = 0;
  for (auto& p : v) {
    for (int i = 0; i < kN / 4; i++) {
      const uint16_t t0 = static_cast<uint16_t>(in[pos] | (uint16_t(in[pos + 1] & 0x03) << 8));
      const uint16_t t1 = static_cast<uint16_t>((in[pos + 1] >> 2) | (uint16_t(in[pos + 2] & 0x0F) << 6));
      const uint16_t t2 = static_cast<uint16_t>((in[pos + 2] >> 4) | (uint16_t(in[pos + 3] & 0x3F) << 4));
      const uint16_t t3 = static_cast<uint16_t>((in[pos + 3] >> 6) | (uint16_t(in[pos + 4]) << 2));
      pos += 5;
      p[4 * i] = decompress(t0, kDu);
      p[4 * i + 1] = decompress(t1, kDu);
      p[4 * i + 2] = decompress(t2, kDu);
      p[4 * i + 3] = decompress(t3, kDu);
    }
  }
  return v;
}

void compress_poly_v(const Poly& p, uint8_t* out) // dv = 4
{
  for (int i = 0; i < kN / 2; i++) {
    const uint8_t a = static_cast<uint8_t>(compress(p[2 * i], kDv));
    const uint8_t b = static_cast<uint8_t>(compress(p[2 * i + 1], kDv));
    out[i] = static_cast<uint8_t>(a | (b << 4));
  }
}

Poly decompress_poly_v(const uint8_t* in)
{
  Poly p;
  for (int i = 0; i < kN / 2; i++) {
    p[2 * i] = decompress(in[i] & 0x0F, kDv);
    p[2 * i + 1] = decompress(in[i] >> 4, kDv);
  }
  return p;
}

Poly msg_to_poly(const uint8_t m[32])
{
  Poly p;
  for (int i = 0; i < 32; i++) {
    for (int j = 0; j < 8; j++) {
      p[8 * i + j] = static_cast<int16_t>(((m[i] >> j) & 1) ? (kQ + 1) / 2 : 0);
    }
  }
  return p;
}

void poly_to_msg(const Poly& p, uint8_t m[32])
{
  std::memset(m, 0, 32);
  for (int i = 0; i < kN; i++) {
    // distance-to-q/2 decision bit
    const int16_t t = compress(p[i], 1);
    m[i / 8] |= static_cast<uint8_t>(t << (i % 8));
  }
}

struct IndcpaPublic {
  PolyVec t_hat;
  std::array<uint8_t, 32> rho;
};

void gen_matrix_row_times(const std::array<uint8_t, 32>& rho, bool transposed,
                          const PolyVec& v_hat, PolyVec& out)
{
  for (int i = 0; i < kK; i++) {
    Poly acc{};
    for (int j = 0; j < kK; j++) {
      const Poly a = transposed ? sample_uniform(rho, static_cast<uint8_t>(i), static_cast<uint8_t>(j))
                                : sample_uniform(rho, static_cast<uint8_t>(j), static_cast<uint8_t>(i));
      acc = poly_add(acc, poly_basemul(a, v_hat[j]));
    }
    out[i] = acc;
  }
}

struct IndcpaKeyPair {
  Bytes public_key; // t_hat || rho
  Bytes secret_key; // s_hat
};

IndcpaKeyPair indcpa_keygen(const std::array<uint8_t, 32>& d)
{
  const auto g = hash::sha3_512(BytesView(d));
  std::array<uint8_t, 32> rho, sigma;
  std::memcpy(rho.data(), g.data(), 32);
  std::memcpy(sigma.data(), g.data() + 32, 32);

  PolyVec s, e;
  uint8_t nonce = 0;
  for (auto& p : s) {
    p = sample_noise(sigma, nonce++, kEta1);
  }
  for (auto& p : e) {
    p = sample_noise(sigma, nonce++, kEta1);
  }
  for (auto& p : s) {
    ntt(p);
  }
  for (auto& p : e) {
    ntt(p);
  }
  PolyVec t;
  gen_matrix_row_times(rho, false, s, t);
  for (int i = 0; i < kK; i++) {
    t[i] = poly_add(t[i], e[i]);
  }

  IndcpaKeyPair kp;
  kp.public_key.resize(kPolyVecBytes + 32);
  for (int i = 0; i < kK; i++) {
    pack_poly(t[i], kp.public_key.data() + i * kPolyBytes);
  }
  std::memcpy(kp.public_key.data() + kPolyVecBytes, rho.data(), 32);
  kp.secret_key.resize(kPolyVecBytes);
  for (int i = 0; i < kK; i++) {
    pack_poly(s[i], kp.secret_key.data() + i * kPolyBytes);
  }
  return kp;
}

Bytes indcpa_enc(BytesView pk, const uint8_t m[32], const std::array<uint8_t, 32>& coins)
{
  PolyVec t_hat;
  for (int i = 0; i < kK; i++) {
    t_hat[i] = unpack_poly(pk.data() + i * kPolyBytes);
  }
  std::array<uint8_t, 32> rho;
  std::memcpy(rho.data(), pk.data() + kPolyVecBytes, 32);

  PolyVec r;
  uint8_t nonce = 0;
  for (auto& p : r) {
    p = sample_noise(coins, nonce++, kEta1);
  }
  PolyVec e1;
  for (auto& p : e1) {
    p = sample_noise(coins, nonce++, kEta2);
  }
  const Poly e2 = sample_noise(coins, nonce++, kEta2);

  PolyVec r_hat = r;
  for (auto& p : r_hat) {
    ntt(p);
  }

  PolyVec u;
  gen_matrix_row_times(rho, true, r_hat, u);
  for (auto& p : u) {
    intt(p);
  }
  for (int i = 0; i < kK; i++) {
    u[i] = poly_add(u[i], e1[i]);
  }

  Poly v{};
  for (int i = 0; i < kK; i++) {
    v = poly_add(v, poly_basemul(t_hat[i], r_hat[i]));
  }
  intt(v);
  v = poly_add(v, e2);
  v = poly_add(v, msg_to_poly(m));

  Bytes ct(kCiphertextLen);
  compress_polyvec(u, ct.data());
  compress_poly_v(v, ct.data() + kK * 320);
  return ct;
}

void indcpa_dec(BytesView sk, BytesView ct, uint8_t m[32])
{
  PolyVec u = decompress_polyvec(ct.data());
  const Poly v = decompress_poly_v(ct.data() + kK * 320);
  PolyVec s_hat;
  for (int i = 0; i < kK; i++) {
    s_hat[i] = unpack_poly(sk.data() + i * kPolyBytes);
  }
  for (auto& p : u) {
    ntt(p);
  }
  Poly su{};
  for (int i = 0; i < kK; i++) {
    su = poly_add(su, poly_basemul(s_hat[i], u[i]));
  }
  intt(su);
  poly_to_msg(poly_sub(v, su), m);
}

void require_algorithm(std::string_view algorithm)
{
  if (algorithm != kDefaultAlgorithm) {
    throw Error(ErrorCode::ConfigError,
                "unsupported KEM algorithm: " + std::string(algorithm));
  }
}

std::array<uint8_t, 32> expand(BytesView entropy, std::string_view label)
{
  hash::Shake256 xof;
  xof.absorb(to_bytes(label));
  xof.absorb(entropy);
  std::array<uint8_t, 32> out;
  xof.squeeze(out.data(), out.size());
  return out;
}

SharedSecret kdf(BytesView kbar, const Digest256& ct_hash)
{
  hash::Shake256 xof;
  xof.absorb(kbar);
  xof.absorb(BytesView(ct_hash));
  SharedSecret out;
  xof.squeeze(out.data(), out.size());
  return out;
}

} // namespace

KemKeyPair keygen(BytesView entropy, std::string_view algorithm)
{
  require_algorithm(algorithm);
  if (entropy.empty()) {
    throw Error(ErrorCode::InvalidArgument, "kem keygen requires entropy");
  }
  const auto d = expand(entropy, "pqchain/kyber-d");
  const auto z = expand(entropy, "pqchain/kyber-z");

  const IndcpaKeyPair inner = indcpa_keygen(d);
  KemKeyPair kp;
  kp.algorithm = std::string(algorithm);
  kp.public_key = inner.public_key;
  kp.secret_key = inner.secret_key;
  append(kp.secret_key, inner.public_key);
  const Digest256 h = hash::sha3_256(inner.public_key);
  append(kp.secret_key, BytesView(h));
  append(kp.secret_key, BytesView(z));
  if (kp.public_key.size() != kPublicKeyLen || kp.secret_key.size() != kSecretKeyLen) {
    throw Error(ErrorCode::CryptoFailure, "kyber size mismatch");
  }
  return kp;
}

Encapsulation encap(BytesView public_key, BytesView entropy, std::string_view algorithm)
{
  require_algorithm(algorithm);
  if (public_key.size() != kPublicKeyLen) {
    throw Error(ErrorCode::InvalidArgument, "kyber public key must be 1184 bytes");
  }
  const auto m0 = expand(entropy, "pqchain/kyber-m");
  const Digest256 m = hash::sha3_256(BytesView(m0));
  const Digest256 hpk = hash::sha3_256(public_key);

  Bytes g_in(m.begin(), m.end());
  append(g_in, BytesView(hpk));
  const auto g = hash::sha3_512(g_in);
  std::array<uint8_t, 32> coins;
  std::memcpy(coins.data(), g.data() + 32, 32);

  Encapsulation out;
  out.ciphertext = indcpa_enc(public_key, m.data(), coins);
  out.shared_secret = kdf(BytesView(g.data(), 32), hash::sha3_256(out.ciphertext));
  return out;
}

SharedSecret decap(BytesView ciphertext, const KemKeyPair& key)
{
  require_algorithm(key.algorithm);
  if (key.secret_key.size() != kSecretKeyLen || ciphertext.size() != kCiphertextLen) {
    throw Error(ErrorCode::InvalidArgument, "kyber input size mismatch");
  }
  const BytesView sk(key.secret_key);
  const BytesView indcpa_sk = sk.subspan(0, kPolyVecBytes);
  const BytesView pk = sk.subspan(kPolyVecBytes, kPublicKeyLen);
  const BytesView hpk = sk.subspan(kPolyVecBytes + kPublicKeyLen, 32);
  const BytesView z = sk.subspan(kPolyVecBytes + kPublicKeyLen + 32, 32);

  uint8_t m_prime[32];
  indcpa_dec(indcpa_sk, ciphertext, m_prime);

  Bytes g_in(m_prime, m_prime + 32);
  append(g_in, hpk);
  const auto g = hash::sha3_512(g_in);
  std::array<uint8_t, 32> coins;
  std::memcpy(coins.data(), g.data() + 32, 32);

  const Bytes ct_prime = indcpa_enc(pk, m_prime, coins);
  const Digest256 ct_hash = hash::sha3_256(ciphertext);
  if (ct_equal(ct_prime, ciphertext)) {
    return kdf(BytesView(g.data(), 32), ct_hash);
  }
  return kdf(z, ct_hash); // implicit rejection
}

} // namespace pqchain::kem
