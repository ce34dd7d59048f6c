#include "common/errors.hpp"
#include "crypto/falcon_internal.hpp"

#include <gmpxx.h>

#include <climits>
#include <cmath>

namespace pqchain::falcon {

namespace {

using namespace detail;

using ZPoly = std::vector<mpz_class>;

// negacyclic schoolbook multiply in Z[x]/(x^m + 1)
ZPoly mul_ring(const ZPoly& a, const ZPoly& b)
{
  const size_t m = a.size();
  ZPoly c(m, mpz_class(0));
  for (size_t i = 0; i < m; i++) {
    if (a[i] == 0) {
      continue;
    }
    for (size_t j = 0; j < m; j++) {
      const size_t k = i + j;
      if (k < m) {
        c[k] += a[i] * b[j];
      } else {
        c[k - m] -= a[i] * b[j];
      }
    }
  }
  return c;
}

ZPoly galois_conjugate(const ZPoly& a) // a(-x)
{
  ZPoly r = a;
  for (size_t i = 1; i < r.size(); i += 2) {
    r[i] = -r[i];
  }
  return r;
}

ZPoly field_norm(const ZPoly& a) // N(a)(y) with y = x^2
{
  const size_t half = a.size() / 2;
  ZPoly a0(half), a1(half);
  for (size_t i = 0; i < half; i++) {
    a0[i] = a[2 * i];
    a1[i] = a[2 * i + 1];
  }
  ZPoly e = mul_ring(a0, a0);
  const ZPoly o = mul_ring(a1, a1);
  // e -= y * o  (negacyclic shift by one)
  e[0] += o[half - 1];
  for (size_t i = 1; i < half; i++) {
    e[i] -= o[i - 1];
  }
  return e;
}

ZPoly expand_even(const ZPoly& a) // a(y) -> a(x^2)
{
  ZPoly r(2 * a.size(), mpz_class(0));
  for (size_t i = 0; i < a.size(); i++) {
    r[2 * i] = a[i];
  }
  return r;
}

size_t max_bitlen(const ZPoly& a, const ZPoly& b)
{
  size_t bits = 1;
  for (const auto* poly : { &a, &b }) {
    for (const auto& c : *poly) {
      if (c != 0) {
        bits = std::max(bits, mpz_sizeinbase(c.get_mpz_t(), 2));
      }
    }
  }
  return bits;
}

double scaled_double(const mpz_class& v, long scale_bits)
{
  long exp = 0;
  const double d = mpz_get_d_2exp(&exp, v.get_mpz_t());
  const long e = exp - scale_bits;
  if (e < -1000) {
    return 0.0;
  }
  return std::ldexp(d, static_cast<int>(e));
}

// Babai reduction of (F, G) against (f, g) using scaled double-precision FFT
// quotients; exactness comes from the integer updates, the floats only steer.
bool reduce_pair(const ZPoly& f, const ZPoly& g, ZPoly& F, ZPoly& G)
{
  const size_t m = f.size();
  const long sf = static_cast<long>(max_bitlen(f, g));

  std::vector<double> fd(m), gd(m);
  for (size_t i = 0; i < m; i++) {
    fd[i] = scaled_double(f[i], sf);
    gd[i] = scaled_double(g[i], sf);
  }
  const FftPoly ff = fft(fd);
  const FftPoly gf = fft(gd);
  std::vector<double> den(m);
  for (size_t i = 0; i < m; i++) {
    den[i] = std::norm(ff[i]) + std::norm(gf[i]);
    if (den[i] == 0.0) {
      return false;
    }
  }

  long best = LONG_MAX;
  int stall = 0;
  for (int iter = 0; iter < 4096; iter++) {
    const long sF = static_cast<long>(max_bitlen(F, G));
    // Babai residual reached: quotients of +-1 start ping-ponging once the
    // pair is irreducible, so stop when the bit size stops improving
    if (sF < best) {
      best = sF;
      stall = 0;
    } else if (++stall >= 4) {
      return true;
    }
    const long shift = std::max(0L, sF - sf);

    std::vector<double> Fd(m), Gd(m);
    for (size_t i = 0; i < m; i++) {
      Fd[i] = scaled_double(F[i], sF);
      Gd[i] = scaled_double(G[i], sF);
    }
    const FftPoly Ff = fft(Fd);
    const FftPoly Gf = fft(Gd);
    FftPoly ratio(m);
    for (size_t i = 0; i < m; i++) {
      ratio[i] = (Ff[i] * std::conj(ff[i]) + Gf[i] * std::conj(gf[i])) / den[i];
    }
    const std::vector<double> kd = ifft(ratio);

    // true quotient ~ kd[i] * 2^shift; take up to 48 bits of it per pass and
    // shift the remainder, so each iteration strips a large power of two
    const long head = std::min(shift, 48L);
    ZPoly k(m);
    bool all_zero = true;
    for (size_t i = 0; i < m; i++) {
      const long long k_int = llround(std::ldexp(kd[i], static_cast<int>(head)));
      if (k_int != 0) {
        all_zero = false;
      }
      k[i] = mpz_class(static_cast<long>(k_int));
      if (shift > head) {
        mpz_mul_2exp(k[i].get_mpz_t(), k[i].get_mpz_t(), static_cast<mp_bitcnt_t>(shift - head));
      }
    }
    if (all_zero) {
      return true;
    }
    const ZPoly kf = mul_ring(k, f);
    const ZPoly kg = mul_ring(k, g);
    for (size_t i = 0; i < m; i++) {
      F[i] -= kf[i];
      G[i] -= kg[i];
    }
  }
  return false;
}

bool ntru_solve(const ZPoly& f, const ZPoly& g, ZPoly& F, ZPoly& G)
{
  const size_t m = f.size();
  if (m == 1) {
    mpz_class d, u, v;
    mpz_gcdext(d.get_mpz_t(), u.get_mpz_t(), v.get_mpz_t(), f[0].get_mpz_t(), g[0].get_mpz_t());
    if (d != 1) {
      return false;
    }
    F = { mpz_class(-v * Q) };
    G = { mpz_class(u * Q) };
    return true;
  }
  const ZPoly fn = field_norm(f);
  const ZPoly gn = field_norm(g);
  ZPoly Fh, Gh;
  if (!ntru_solve(fn, gn, Fh, Gh)) {
    return false;
  }
  F = mul_ring(expand_even(Fh), galois_conjugate(g));
  G = mul_ring(expand_even(Gh), galois_conjugate(f));
  return reduce_pair(f, g, F, G);
}

// discrete Gaussian for the key polynomials, sigma = 1.17 * sqrt(q / (2n))
int32_t sample_fg_coefficient(XofRng& rng)
{
  static const auto table = [] {
    const long double sigma = 1.17L * sqrtl((long double)Q / (2.0L * N));
    std::array<uint64_t, 64> cdf{};
    long double weights[64];
    long double total = 0.0L;
    // symmetric support [-31, 31] mapped to indices 0..62
    for (int k = -31; k <= 31; k++) {
      const long double w = expl(-(long double)k * k / (2.0L * sigma * sigma));
      weights[k + 31] = w;
      total += w;
    }
    long double cum = 0.0L;
    for (int i = 0; i < 63; i++) {
      cum += weights[i] / total;
      cdf[i] = (cum >= 1.0L) ? UINT64_MAX : (uint64_t)(cum * 18446744073709551615.0L);
    }
    cdf[62] = UINT64_MAX;
    return cdf;
  }();
  const uint64_t u = rng.next_u64();
  int idx = 0;
  while (u >= table[idx]) {
    idx++;
  }
  return idx - 31;
}

void sample_small_poly(XofRng& rng, IntPoly& p)
{
  while (true) {
    int parity = 0;
    for (size_t i = 0; i < N; i++) {
      const int32_t c = sample_fg_coefficient(rng);
      p[i] = static_cast<int16_t>(c);
      parity ^= (c & 1);
    }
    if (parity == 1) { // odd resultant parity improves solvability
      return;
    }
  }
}

bool gram_norms_acceptable(const IntPoly& f, const IntPoly& g)
{
  // first condition: ||(g, -f)||^2 <= (1.17)^2 * q
  const double limit = 1.17 * 1.17 * double(Q);
  double norm1 = 0;
  for (size_t i = 0; i < N; i++) {
    norm1 += double(f[i]) * f[i] + double(g[i]) * g[i];
  }
  if (norm1 > limit) {
    return false;
  }
  // second condition via FFT: || q * (adj f, adj g) / (f adj f + g adj g) ||^2
  std::vector<double> fd(N), gd(N);
  for (size_t i = 0; i < N; i++) {
    fd[i] = double(f[i]);
    gd[i] = double(g[i]);
  }
  const FftPoly ff = fft(fd);
  const FftPoly gf = fft(gd);
  double norm2 = 0;
  for (size_t i = 0; i < N; i++) {
    const double den = std::norm(ff[i]) + std::norm(gf[i]);
    if (den < 1e-9) {
      return false;
    }
    norm2 += double(Q) * double(Q) / den;
  }
  norm2 /= double(N);
  return norm2 <= limit;
}

bool poly_invertible_mod_q(const IntPoly& f, ZqPoly& f_ntt)
{
  for (size_t i = 0; i < N; i++) {
    f_ntt[i] = static_cast<uint16_t>((int32_t(f[i]) + Q) % Q);
  }
  ntt(f_ntt);
  for (size_t i = 0; i < N; i++) {
    if (f_ntt[i] == 0) {
      return false;
    }
  }
  return true;
}

} // namespace

FalconKeyPair keygen(BytesView entropy)
{
  if (entropy.empty()) {
    throw Error(ErrorCode::InvalidArgument, "falcon keygen requires entropy");
  }
  XofRng rng(entropy, "pqchain/falcon-keygen");

  for (int attempt = 0; attempt < 512; attempt++) {
    IntPoly f, g;
    sample_small_poly(rng, f);
    sample_small_poly(rng, g);

    if (!gram_norms_acceptable(f, g)) {
      continue;
    }
    ZqPoly f_ntt;
    if (!poly_invertible_mod_q(f, f_ntt)) {
      continue;
    }

    ZPoly fz(detail::N), gz(detail::N);
    for (size_t i = 0; i < detail::N; i++) {
      fz[i] = int(f[i]);
      gz[i] = int(g[i]);
    }
    ZPoly Fz, Gz;
    if (!ntru_solve(fz, gz, Fz, Gz)) {
      continue;
    }

    // exactness: f*G - g*F == q in the ring
    {
      const ZPoly lhs1 = mul_ring(fz, Gz);
      const ZPoly lhs2 = mul_ring(gz, Fz);
      bool ok = (lhs1[0] - lhs2[0]) == Q;
      for (size_t i = 1; ok && i < detail::N; i++) {
        ok = (lhs1[i] - lhs2[i]) == 0;
      }
      if (!ok) {
        continue;
      }
    }

    IntPoly big_f, big_g;
    bool fits = true;
    for (size_t i = 0; i < detail::N; i++) {
      if (Fz[i] < -127 || Fz[i] > 127 || Gz[i] < -127 || Gz[i] > 127) {
        fits = false;
        break;
      }
      big_f[i] = static_cast<int16_t>(Fz[i].get_si());
      big_g[i] = static_cast<int16_t>(Gz[i].get_si());
    }
    if (!fits) {
      continue;
    }

    // h = g * f^-1 mod q
    ZqPoly g_ntt;
    for (size_t i = 0; i < detail::N; i++) {
      g_ntt[i] = static_cast<uint16_t>((int32_t(g[i]) + Q) % Q);
    }
    ntt(g_ntt);
    ZqPoly h;
    for (size_t i = 0; i < detail::N; i++) {
      h[i] = static_cast<uint16_t>(uint64_t(g_ntt[i]) * zq_inverse(f_ntt[i]) % Q);
    }
    intt(h);

    FalconKeyPair kp;
    encode_secret(f, g, big_f, kp.secret);
    encode_public(h, kp.public_key);

    // sanity: the stored key must round-trip through complete_secret
    if (!complete_secret(f, g, big_f)) {
      continue;
    }
    return kp;
  }
  throw Error(ErrorCode::CryptoFailure, "falcon keygen did not converge");
}

} // namespace pqchain::falcon
