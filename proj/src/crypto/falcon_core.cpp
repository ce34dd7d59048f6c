#include "crypto/falcon_internal.hpp"

#include "common/errors.hpp"

namespace pqchain::falcon::detail {

namespace {

struct ZqTables {
  uint16_t psi[N];      // psi^j, psi of order 2N
  uint16_t psi_inv[N];
  uint16_t omega_pow[N]; // omega = psi^2 powers
  uint16_t omega_inv_pow[N];
  uint16_t n_inv;
  uint16_t bitrev[N];
};

uint32_t powmod_q(uint32_t base, uint32_t exp)
{
  uint64_t acc = 1;
  uint64_t b = base % Q;
  while (exp) {
    if (exp & 1) {
      acc = acc * b % Q;
    }
    b = b * b % Q;
    exp >>= 1;
  }
  return static_cast<uint32_t>(acc);
}

const ZqTables& tables()
{
  static const ZqTables t = [] {
    ZqTables tb{};
    // generator of Z_q^*, q - 1 = 2^12 * 3
    uint32_t gen = 2;
    for (;; gen++) {
      if (powmod_q(gen, (Q - 1) / 2) != 1 && powmod_q(gen, (Q - 1) / 3) != 1) {
        break;
      }
    }
    const uint32_t psi = powmod_q(gen, (Q - 1) / (2 * N)); // order 2N
    const uint32_t psi_inv = powmod_q(psi, 2 * N - 1);
    const uint32_t omega = static_cast<uint32_t>(uint64_t(psi) * psi % Q);
    const uint32_t omega_inv = powmod_q(omega, N - 1);
    uint64_t p = 1, pi = 1, o = 1, oi = 1;
    for (size_t i = 0; i < N; i++) {
      tb.psi[i] = static_cast<uint16_t>(p);
      tb.psi_inv[i] = static_cast<uint16_t>(pi);
      tb.omega_pow[i] = static_cast<uint16_t>(o);
      tb.omega_inv_pow[i] = static_cast<uint16_t>(oi);
      p = p * psi % Q;
      pi = pi * psi_inv % Q;
      o = o * omega % Q;
      oi = oi * omega_inv % Q;
    }
    tb.n_inv = static_cast<uint16_t>(powmod_q(N, Q - 2));
    for (size_t i = 0; i < N; i++) {
      size_t r = 0;
      for (size_t b = 0; b < kLogDegree; b++) {
        r = (r << 1) | ((i >> b) & 1);
      }
      tb.bitrev[i] = static_cast<uint16_t>(r);
    }
    return tb;
  }();
  return t;
}

void cyclic_transform(ZqPoly& a, const uint16_t* omega_pow, VerifyMeter* meter)
{
  const auto& tb = tables();
  for (size_t i = 0; i < N; i++) {
    const size_t r = tb.bitrev[i];
    if (i < r) {
      std::swap(a[i], a[r]);
    }
  }
  uint64_t butterflies = 0;
  for (size_t len = 2; len <= N; len <<= 1) {
    const size_t step = N / len;
    for (size_t i = 0; i < N; i += len) {
      for (size_t j = 0; j < len / 2; j++) {
        const uint32_t w = omega_pow[j * step];
        const uint32_t u = a[i + j];
        const uint32_t v = static_cast<uint32_t>(uint64_t(a[i + j + len / 2]) * w % Q);
        a[i + j] = static_cast<uint16_t>((u + v) % Q);
        a[i + j + len / 2] = static_cast<uint16_t>((u + Q - v) % Q);
        butterflies++;
      }
    }
  }
  if (meter) {
    meter->ntt_butterflies += butterflies;
    meter->coeff_mults += butterflies;
    meter->memory_words += butterflies * 4;
  }
}

} // namespace

void ntt(ZqPoly& a, VerifyMeter* meter)
{
  const auto& tb = tables();
  for (size_t i = 0; i < N; i++) {
    a[i] = static_cast<uint16_t>(uint64_t(a[i]) * tb.psi[i] % Q);
  }
  if (meter) {
    meter->coeff_mults += N;
    meter->memory_words += 2 * N;
  }
  cyclic_transform(a, tb.omega_pow, meter);
}

void intt(ZqPoly& a, VerifyMeter* meter)
{
  const auto& tb = tables();
  cyclic_transform(a, tb.omega_inv_pow, meter);
  for (size_t i = 0; i < N; i++) {
    uint64_t v = uint64_t(a[i]) * tb.n_inv % Q;
    a[i] = static_cast<uint16_t>(v * tb.psi_inv[i] % Q);
  }
  if (meter) {
    meter->coeff_mults += 2 * N;
    meter->memory_words += 2 * N;
  }
}

void pointwise_mul(ZqPoly& a, const ZqPoly& b, VerifyMeter* meter)
{
  for (size_t i = 0; i < N; i++) {
    a[i] = static_cast<uint16_t>(uint64_t(a[i]) * b[i] % Q);
  }
  if (meter) {
    meter->coeff_mults += N;
    meter->memory_words += 3 * N;
  }
}

uint16_t zq_inverse(uint16_t a)
{
  return static_cast<uint16_t>(powmod_q(a, Q - 2));
}

void hash_to_point(BytesView nonce, BytesView message, ZqPoly& out, VerifyMeter* meter)
{
  hash::Shake256 xof;
  xof.absorb(nonce);
  xof.absorb(message);
  xof.finalize();
  constexpr uint32_t kq = 5 * Q; // floor(2^16 / q) * q
  size_t idx = 0;
  uint64_t squeezed_words = 0;
  while (idx < N) {
    uint8_t b[2];
    xof.squeeze(b, 2);
    squeezed_words++;
    const uint32_t t = (uint32_t(b[0]) << 8) | b[1];
    if (t < kq) {
      out[idx++] = static_cast<uint16_t>(t % Q);
    }
  }
  if (meter) {
    meter->shake_permutations += xof.permutations();
    meter->memory_words += squeezed_words + N;
  }
}

void encode_public(const ZqPoly& h, PublicKey& out)
{
  out[0] = 0x00 | uint8_t(kLogDegree);
  uint32_t acc = 0;
  int acc_bits = 0;
  size_t pos = 1;
  for (size_t i = 0; i < N; i++) {
    acc = (acc << 14) | h[i];
    acc_bits += 14;
    while (acc_bits >= 8) {
      acc_bits -= 8;
      out[pos++] = static_cast<uint8_t>(acc >> acc_bits);
    }
  }
}

bool decode_public(const PublicKey& in, ZqPoly& h)
{
  if (in[0] != (0x00 | uint8_t(kLogDegree))) {
    return false;
  }
  uint32_t acc = 0;
  int acc_bits = 0;
  size_t pos = 1;
  for (size_t i = 0; i < N; i++) {
    while (acc_bits < 14) {
      acc = (acc << 8) | in[pos++];
      acc_bits += 8;
    }
    acc_bits -= 14;
    const uint32_t v = (acc >> acc_bits) & 0x3FFF;
    if (v >= uint32_t(Q)) {
      return false;
    }
    h[i] = static_cast<uint16_t>(v);
  }
  return true;
}

namespace {

// two's-complement packing of small signed coefficients; the minimum value of
// the range is reserved as invalid, matching the standard Falcon key codec
bool pack_signed(const IntPoly& p, int bits, uint8_t* out, size_t& pos)
{
  const int lim = (1 << (bits - 1)) - 1;
  uint32_t acc = 0;
  int acc_bits = 0;
  for (size_t i = 0; i < N; i++) {
    if (p[i] < -lim || p[i] > lim) {
      return false;
    }
    acc = (acc << bits) | (uint32_t(p[i]) & ((1u << bits) - 1));
    acc_bits += bits;
    while (acc_bits >= 8) {
      acc_bits -= 8;
      out[pos++] = static_cast<uint8_t>(acc >> acc_bits);
    }
  }
  return true;
}

bool unpack_signed(const uint8_t* in, int bits, IntPoly& p, size_t& pos)
{
  const int lim = (1 << (bits - 1)) - 1;
  uint32_t acc = 0;
  int acc_bits = 0;
  for (size_t i = 0; i < N; i++) {
    while (acc_bits < bits) {
      acc = (acc << 8) | in[pos++];
      acc_bits += 8;
    }
    acc_bits -= bits;
    uint32_t v = (acc >> acc_bits) & ((1u << bits) - 1);
    int32_t sv = static_cast<int32_t>(v);
    if (sv > lim) {
      sv -= (1 << bits);
    }
    if (sv < -lim) {
      return false; // reserved minimum encoding
    }
    p[i] = static_cast<int16_t>(sv);
  }
  return true;
}

} // namespace

void encode_secret(const IntPoly& f, const IntPoly& g, const IntPoly& big_f, SecretKey& out)
{
  out[0] = 0x50 | uint8_t(kLogDegree);
  size_t pos = 1;
  if (!pack_signed(f, 6, out.data(), pos) || !pack_signed(g, 6, out.data(), pos) ||
      !pack_signed(big_f, 8, out.data(), pos)) {
    throw Error(ErrorCode::CryptoFailure, "falcon secret coefficients out of range");
  }
}

bool decode_secret(const SecretKey& in, IntPoly& f, IntPoly& g, IntPoly& big_f)
{
  if (in[0] != (0x50 | uint8_t(kLogDegree))) {
    return false;
  }
  size_t pos = 1;
  return unpack_signed(in.data(), 6, f, pos) && unpack_signed(in.data(), 6, g, pos) &&
         unpack_signed(in.data(), 8, big_f, pos);
}

bool compress_signature(const IntPoly& s2, uint8_t* out, size_t out_len)
{
  std::memset(out, 0, out_len);
  size_t bit_pos = 0;
  auto put_bit = [&](int b) {
    if (bit_pos >= out_len * 8) {
      return false;
    }
    if (b) {
      out[bit_pos / 8] |= uint8_t(0x80 >> (bit_pos % 8));
    }
    bit_pos++;
    return true;
  };
  for (size_t i = 0; i < N; i++) {
    const int32_t v = s2[i];
    const uint32_t mag = static_cast<uint32_t>(v < 0 ? -v : v);
    if (mag > 2047) {
      return false;
    }
    if (!put_bit(v < 0 ? 1 : 0)) {
      return false;
    }
    for (int b = 6; b >= 0; b--) {
      if (!put_bit((mag >> b) & 1)) {
        return false;
      }
    }
    for (uint32_t z = 0; z < (mag >> 7); z++) {
      if (!put_bit(0)) {
        return false;
      }
    }
    if (!put_bit(1)) {
      return false;
    }
  }
  return true; // remaining bits stay zero padding
}

bool decompress_signature(const uint8_t* in, size_t in_len, IntPoly& s2)
{
  size_t bit_pos = 0;
  const size_t total_bits = in_len * 8;
  auto get_bit = [&](int& b) {
    if (bit_pos >= total_bits) {
      return false;
    }
    b = (in[bit_pos / 8] >> (7 - bit_pos % 8)) & 1;
    bit_pos++;
    return true;
  };
  for (size_t i = 0; i < N; i++) {
    int sign = 0;
    if (!get_bit(sign)) {
      return false;
    }
    uint32_t mag = 0;
    for (int b = 0; b < 7; b++) {
      int bit = 0;
      if (!get_bit(bit)) {
        return false;
      }
      mag = (mag << 1) | uint32_t(bit);
    }
    uint32_t high = 0;
    while (true) {
      int bit = 0;
      if (!get_bit(bit)) {
        return false;
      }
      if (bit) {
        break;
      }
      if (++high > 15) {
        return false;
      }
    }
    mag |= high << 7;
    if (sign && mag == 0) {
      return false; // minus zero is non-canonical
    }
    s2[i] = static_cast<int16_t>(sign ? -int32_t(mag) : int32_t(mag));
  }
  while (bit_pos < total_bits) {
    int bit = 0;
    get_bit(bit);
    if (bit) {
      return false; // padding must be zero
    }
  }
  return true;
}

std::optional<IntPoly> complete_secret(const IntPoly& f, const IntPoly& g, const IntPoly& big_f)
{
  ZqPoly fq, gq, bfq;
  for (size_t i = 0; i < N; i++) {
    fq[i] = static_cast<uint16_t>((f[i] + Q) % Q);
    gq[i] = static_cast<uint16_t>((g[i] + Q) % Q);
    bfq[i] = static_cast<uint16_t>((big_f[i] + Q) % Q);
  }
  ntt(fq);
  ntt(gq);
  ntt(bfq);
  ZqPoly res;
  for (size_t i = 0; i < N; i++) {
    if (fq[i] == 0) {
      return std::nullopt;
    }
    res[i] = static_cast<uint16_t>(uint64_t(gq[i]) * bfq[i] % Q * zq_inverse(fq[i]) % Q);
  }
  intt(res);
  IntPoly big_g;
  for (size_t i = 0; i < N; i++) {
    int32_t v = res[i];
    if (v > Q / 2) {
      v -= Q;
    }
    if (v < -127 || v > 127) {
      return std::nullopt;
    }
    big_g[i] = static_cast<int16_t>(v);
  }
  return big_g;
}

} // namespace pqchain::falcon::detail

namespace pqchain::falcon {

VerifyStatus verify(BytesView message, BytesView signature, const PublicKey& public_key,
                    VerifyMeter* meter)
{
  using namespace detail;
  if (signature.size() != kSignatureLen) {
    return VerifyStatus::RejectMalformed;
  }
  if (signature[0] != (0x30 | uint8_t(kLogDegree))) {
    return VerifyStatus::RejectMalformed;
  }
  ZqPoly h;
  if (!decode_public(public_key, h)) {
    return VerifyStatus::RejectMalformed;
  }
  IntPoly s2;
  if (!decompress_signature(signature.data() + 1 + kNonceLen,
                            kSignatureLen - 1 - kNonceLen, s2)) {
    return VerifyStatus::RejectMalformed;
  }
  if (meter) {
    meter->memory_words += kSignatureLen / 8 + kPublicKeyLen / 8 + 2 * N;
  }

  ZqPoly c;
  hash_to_point(signature.subspan(1, kNonceLen), message, c, meter);

  ZqPoly s2q;
  for (size_t i = 0; i < N; i++) {
    s2q[i] = static_cast<uint16_t>((int32_t(s2[i]) + Q) % Q);
  }
  ntt(s2q, meter);
  ntt(h, meter);
  pointwise_mul(s2q, h, meter); // s2 * h in NTT domain
  intt(s2q, meter);

  int64_t norm = 0;
  for (size_t i = 0; i < N; i++) {
    int32_t s1 = (int32_t(c[i]) - int32_t(s2q[i])) % Q;
    if (s1 < 0) {
      s1 += Q;
    }
    if (s1 > Q / 2) {
      s1 -= Q;
    }
    norm += int64_t(s1) * s1 + int64_t(s2[i]) * s2[i];
  }
  if (meter) {
    meter->memory_words += 2 * N;
  }
  return norm <= kSigBoundSq ? VerifyStatus::Accept : VerifyStatus::RejectInvalid;
}

} // namespace pqchain::falcon
