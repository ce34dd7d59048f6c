#include "common/errors.hpp"
#include "crypto/falcon_internal.hpp"

#include <cmath>

namespace pqchain::falcon::detail {

namespace {

Cplx root_of(size_t ring_size, size_t k)
{
  const double angle = M_PI * double(2 * k + 1) / double(ring_size);
  return Cplx(std::cos(angle), std::sin(angle));
}

void fft_work(const double* coeffs, size_t m, size_t stride, Cplx* out)
{
  if (m == 1) {
    out[0] = Cplx(coeffs[0], 0.0);
    return;
  }
  std::vector<Cplx> even(m / 2), odd(m / 2);
  fft_work(coeffs, m / 2, 2 * stride, even.data());
  fft_work(coeffs + stride, m / 2, 2 * stride, odd.data());
  for (size_t k = 0; k < m / 2; k++) {
    const Cplx t = root_of(m, k) * odd[k];
    out[k] = even[k] + t;
    out[k + m / 2] = even[k] - t;
  }
}

void ifft_work(const Cplx* values, size_t m, double* out, size_t stride)
{
  if (m == 1) {
    out[0] = values[0].real();
    return;
  }
  std::vector<Cplx> even(m / 2), odd(m / 2);
  for (size_t k = 0; k < m / 2; k++) {
    even[k] = (values[k] + values[k + m / 2]) * 0.5;
    odd[k] = (values[k] - values[k + m / 2]) * 0.5 / root_of(m, k);
  }
  ifft_work(even.data(), m / 2, out, 2 * stride);
  ifft_work(odd.data(), m / 2, out + stride, 2 * stride);
}

} // namespace

FftPoly fft(const std::vector<double>& coeffs)
{
  FftPoly out(coeffs.size());
  fft_work(coeffs.data(), coeffs.size(), 1, out.data());
  return out;
}

std::vector<double> ifft(const FftPoly& values)
{
  std::vector<double> out(values.size());
  ifft_work(values.data(), values.size(), out.data(), 1);
  return out;
}

void fft_split(const FftPoly& f, FftPoly& f0, FftPoly& f1)
{
  const size_t m = f.size();
  f0.resize(m / 2);
  f1.resize(m / 2);
  for (size_t k = 0; k < m / 2; k++) {
    f0[k] = (f[k] + f[k + m / 2]) * 0.5;
    f1[k] = (f[k] - f[k + m / 2]) * 0.5 / root_of(m, k);
  }
}

void fft_merge(const FftPoly& f0, const FftPoly& f1, FftPoly& f)
{
  const size_t m = 2 * f0.size();
  f.resize(m);
  for (size_t k = 0; k < m / 2; k++) {
    const Cplx t = root_of(m, k) * f1[k];
    f[k] = f0[k] + t;
    f[k + m / 2] = f0[k] - t;
  }
}

namespace {

FftPoly hadamard(const FftPoly& a, const FftPoly& b)
{
  FftPoly r(a.size());
  for (size_t i = 0; i < a.size(); i++) {
    r[i] = a[i] * b[i];
  }
  return r;
}


FftPoly vec_add(const FftPoly& a, const FftPoly& b)
{
  FftPoly r(a.size());
  for (size_t i = 0; i < a.size(); i++) {
    r[i] = a[i] + b[i];
  }
  return r;
}

FftPoly vec_sub(const FftPoly& a, const FftPoly& b)
{
  FftPoly r(a.size());
  for (size_t i = 0; i < a.size(); i++) {
    r[i] = a[i] - b[i];
  }
  return r;
}

std::unique_ptr<LdlNode> build_node(const FftPoly& g00, const FftPoly& g01, const FftPoly& g11)
{
  const size_t m = g00.size();
  auto node = std::make_unique<LdlNode>();
  node->l10.resize(m);
  FftPoly d11(m);
  for (size_t k = 0; k < m; k++) {
    // L*D*L^adj decomposition of the 2x2 self-adjoint gram slice
    node->l10[k] = std::conj(g01[k]) / g00[k];
    d11[k] = g11[k] - std::norm(g01[k]) / g00[k].real();
  }
  if (m == 1) {
    node->leaf_sigma0 = kSigma / std::sqrt(g00[0].real());
    node->leaf_sigma1 = kSigma / std::sqrt(d11[0].real());
    return node;
  }
  FftPoly a0, a1, b0, b1;
  fft_split(g00, a0, a1);
  fft_split(d11, b0, b1);
  node->child0 = build_node(a0, a1, a0);
  node->child1 = build_node(b0, b1, b0);
  return node;
}

struct HalfGaussianTable {
  std::array<uint64_t, 32> cdf;
  size_t entries;
};

const HalfGaussianTable& base_table()
{
  static const HalfGaussianTable t = [] {
    HalfGaussianTable tb{};
    long double weights[32];
    long double total = 0.0L;
    size_t count = 0;
    for (size_t k = 0; k < 32; k++) {
      const long double w = expl(-(long double)(k) * k / (2.0L * kSigmaMax * kSigmaMax));
      weights[k] = w;
      total += w;
      count = k + 1;
      if (w / total < 1e-22L) {
        break;
      }
    }
    long double cum = 0.0L;
    for (size_t k = 0; k < count; k++) {
      cum += weights[k] / total;
      long double scaled = cum * 18446744073709551615.0L;
      tb.cdf[k] = (cum >= 1.0L) ? UINT64_MAX : (uint64_t)scaled;
    }
    for (size_t k = count; k < 32; k++) {
      tb.cdf[k] = UINT64_MAX;
    }
    tb.entries = count;
    return tb;
  }();
  return t;
}

int32_t base_sampler(XofRng& rng)
{
  const auto& tb = base_table();
  const uint64_t u = rng.next_u64();
  int32_t z0 = 0;
  for (size_t k = 0; k < tb.entries; k++) {
    if (u < tb.cdf[k]) {
      break;
    }
    z0++;
  }
  return z0;
}

} // namespace

int32_t sampler_z(XofRng& rng, double mu, double sigma_prime)
{
  const double s = std::floor(mu);
  const double r = mu - s;
  const double ccs = kSigmaMin / sigma_prime;
  const double inv2s2 = 1.0 / (2.0 * sigma_prime * sigma_prime);
  const double inv2smax2 = 1.0 / (2.0 * kSigmaMax * kSigmaMax);
  while (true) {
    const int32_t z0 = base_sampler(rng);
    const int b = rng.next_bit();
    const int32_t z = b + (2 * b - 1) * z0;
    const double x = (double(z) - r) * (double(z) - r) * inv2s2 - double(z0) * z0 * inv2smax2;
    const double p = ccs * std::exp(-x);
    const double u = double(rng.next_u64() >> 11) * 0x1.0p-53;
    if (u < p) {
      return z + int32_t(s);
    }
  }
}

std::unique_ptr<LdlNode> build_ldl_tree(const FftPoly& g00, const FftPoly& g01,
                                        const FftPoly& g11)
{
  return build_node(g00, g01, g11);
}

namespace {

// Fast Fourier sampling over the LDL tree; returns FFT-domain images of the
// two sampled integer polynomials.
void ff_sampling(XofRng& rng, const FftPoly& t0, const FftPoly& t1, const LdlNode& node,
                 FftPoly& z0, FftPoly& z1)
{
  const size_t m = t0.size();
  if (m == 1) {
    const int32_t zi1 = sampler_z(rng, t1[0].real(), node.leaf_sigma1);
    const Cplx t0b = t0[0] + (t1[0] - double(zi1)) * node.l10[0];
    const int32_t zi0 = sampler_z(rng, t0b.real(), node.leaf_sigma0);
    z0.assign(1, Cplx(double(zi0), 0.0));
    z1.assign(1, Cplx(double(zi1), 0.0));
    return;
  }
  FftPoly t1a, t1b, z1a, z1b;
  fft_split(t1, t1a, t1b);
  ff_sampling(rng, t1a, t1b, *node.child1, z1a, z1b);
  fft_merge(z1a, z1b, z1);

  FftPoly tb0 = vec_add(t0, hadamard(vec_sub(t1, z1), node.l10));
  FftPoly t0a, t0b, z0a, z0b;
  fft_split(tb0, t0a, t0b);
  ff_sampling(rng, t0a, t0b, *node.child0, z0a, z0b);
  fft_merge(z0a, z0b, z0);
}

std::vector<double> int_poly_to_doubles(const IntPoly& p)
{
  std::vector<double> d(N);
  for (size_t i = 0; i < N; i++) {
    d[i] = double(p[i]);
  }
  return d;
}

} // namespace

} // namespace pqchain::falcon::detail

namespace pqchain::falcon {

FalconSignature sign(BytesView message, const SecretKey& secret, BytesView entropy)
{
  using namespace detail;
  if (entropy.empty()) {
    throw Error(ErrorCode::InvalidArgument, "falcon sign requires entropy");
  }
  IntPoly f, g, big_f;
  if (!decode_secret(secret, f, g, big_f)) {
    throw Error(ErrorCode::Malformed, "falcon secret key encoding invalid");
  }
  const auto big_g = complete_secret(f, g, big_f);
  if (!big_g) {
    throw Error(ErrorCode::Malformed, "falcon secret key is not a valid NTRU trapdoor");
  }

  std::vector<double> fd = int_poly_to_doubles(f);
  std::vector<double> gd = int_poly_to_doubles(g);
  std::vector<double> Fd = int_poly_to_doubles(big_f);
  std::vector<double> Gd = int_poly_to_doubles(*big_g);
  for (auto& v : fd) {
    v = -v; // b01 = -f
  }
  for (auto& v : Fd) {
    v = -v; // b11 = -F
  }
  const FftPoly b00 = fft(gd);
  const FftPoly b01 = fft(fd);
  const FftPoly b10 = fft(Gd);
  const FftPoly b11 = fft(Fd);

  auto self_gram = [](const FftPoly& a, const FftPoly& b) {
    FftPoly r(a.size());
    for (size_t i = 0; i < a.size(); i++) {
      r[i] = Cplx(std::norm(a[i]) + std::norm(b[i]), 0.0);
    }
    return r;
  };
  FftPoly g00 = self_gram(b00, b01);
  FftPoly g01(N), g11 = self_gram(b10, b11);
  for (size_t i = 0; i < N; i++) {
    g01[i] = b00[i] * std::conj(b10[i]) + b01[i] * std::conj(b11[i]);
  }
  const auto tree = build_ldl_tree(g00, g01, g11);

  XofRng rng(entropy, "pqchain/falcon-sign");
  FalconSignature sig;
  sig.bytes[0] = 0x30 | uint8_t(kLogDegree);
  rng.fill(sig.bytes.data() + 1, kNonceLen);

  ZqPoly c;
  hash_to_point(BytesView(sig.bytes.data() + 1, kNonceLen), message, c);
  std::vector<double> cd(N);
  for (size_t i = 0; i < N; i++) {
    cd[i] = double(c[i]);
  }
  const FftPoly cf = fft(cd);
  FftPoly t0(N), t1(N);
  const double inv_q = 1.0 / double(Q);
  for (size_t i = 0; i < N; i++) {
    t0[i] = cf[i] * b11[i] * inv_q;
    t1[i] = -(cf[i] * b01[i]) * inv_q;
  }

  for (int attempt = 0; attempt < 64; attempt++) {
    FftPoly z0, z1;
    detail::ff_sampling(rng, t0, t1, *tree, z0, z1);

    FftPoly s1f(N), s2f(N);
    for (size_t i = 0; i < N; i++) {
      s1f[i] = cf[i] - (z0[i] * b00[i] + z1[i] * b10[i]);
      s2f[i] = -(z0[i] * b01[i] + z1[i] * b11[i]);
    }
    const std::vector<double> s1d = ifft(s1f);
    const std::vector<double> s2d = ifft(s2f);
    IntPoly s2;
    int64_t norm = 0;
    for (size_t i = 0; i < N; i++) {
      const int64_t v1 = llround(s1d[i]);
      const int64_t v2 = llround(s2d[i]);
      norm += v1 * v1 + v2 * v2;
      if (v2 < -2047 || v2 > 2047) {
        norm = kSigBoundSq + 1;
        break;
      }
      s2[i] = static_cast<int16_t>(v2);
    }
    if (norm > kSigBoundSq) {
      continue;
    }
    if (!compress_signature(s2, sig.bytes.data() + 1 + kNonceLen,
                            kSignatureLen - 1 - kNonceLen)) {
      continue;
    }
    return sig;
  }
  throw Error(ErrorCode::CryptoFailure, "falcon sampling failed to converge");
}

} // namespace pqchain::falcon
