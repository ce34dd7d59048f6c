#pragma once

#include "crypto/falcon.hpp"
#include "crypto/keccak.hpp"

#include <complex>
#include <memory>
#include <vector>

// Internal Falcon machinery shared by the keygen / sign / verify units and
// exercised directly by unit tests.
namespace pqchain::falcon::detail {

inline constexpr size_t N = kDegree;
inline constexpr int32_t Q = kModulus;

using ZqPoly = std::array<uint16_t, N>;  // coefficients in [0, q)
using IntPoly = std::array<int16_t, N>;  // small signed coefficients

// --- Z_q[x]/(x^512 + 1) -----------------------------------------------------

// Negacyclic NTT via psi-twist + cyclic transform. Counters are optional
// instrumentation sinks for the metered verification backend.
void ntt(ZqPoly& a, VerifyMeter* meter = nullptr);
void intt(ZqPoly& a, VerifyMeter* meter = nullptr);
void pointwise_mul(ZqPoly& a, const ZqPoly& b, VerifyMeter* meter = nullptr);
uint16_t zq_inverse(uint16_t a);

// --- hashing ----------------------------------------------------------------

// Hash-to-point: SHAKE256(nonce || message) squeezed as big-endian 16-bit
// words, rejection-sampled below 5q, reduced mod q.
void hash_to_point(BytesView nonce, BytesView message, ZqPoly& out,
                   VerifyMeter* meter = nullptr);

// --- encodings --------------------------------------------------------------

void encode_public(const ZqPoly& h, PublicKey& out);
bool decode_public(const PublicKey& in, ZqPoly& h);

void encode_secret(const IntPoly& f, const IntPoly& g, const IntPoly& big_f, SecretKey& out);
bool decode_secret(const SecretKey& in, IntPoly& f, IntPoly& g, IntPoly& big_f);

// Compressed signature body; returns false if s2 does not fit the padded
// budget. Decoder enforces canonical padding and rejects minus-zero.
bool compress_signature(const IntPoly& s2, uint8_t* out, size_t out_len);
bool decompress_signature(const uint8_t* in, size_t in_len, IntPoly& s2);

// --- floating-point lattice side (sign path) --------------------------------

using Cplx = std::complex<double>;
using FftPoly = std::vector<Cplx>; // length = ring degree, values at exp(i*pi*(2k+1)/m)

FftPoly fft(const std::vector<double>& coeffs);
std::vector<double> ifft(const FftPoly& values);

void fft_split(const FftPoly& f, FftPoly& f0, FftPoly& f1);
void fft_merge(const FftPoly& f0, const FftPoly& f1, FftPoly& f);

struct LdlNode {
  FftPoly l10;
  std::unique_ptr<LdlNode> child0;
  std::unique_ptr<LdlNode> child1;
  double leaf_sigma0 = 0.0;
  double leaf_sigma1 = 0.0;
};

// Gaussian parameters for Falcon-512.
inline constexpr double kSigma = 165.7366171829776;
inline constexpr double kSigmaMin = 1.2778336969128337;
inline constexpr double kSigmaMax = 1.8205;

// Deterministic SHAKE256-backed randomness for nonce, sampler and keygen.
class XofRng {
public:
  explicit XofRng(BytesView seed, std::string_view label)
  {
    xof_.absorb(to_bytes(label));
    xof_.absorb(seed);
  }

  uint64_t next_u64()
  {
    uint8_t b[8];
    xof_.squeeze(b, 8);
    return read_u64be(b);
  }

  uint8_t next_bit() { return static_cast<uint8_t>(next_u64() & 1); }

  void fill(uint8_t* out, size_t n) { xof_.squeeze(out, n); }

private:
  hash::Shake256 xof_;
};

// Discrete Gaussian over Z centered at mu with parameter sigma_prime
// (sigma_min <= sigma_prime <= sigma_max).
int32_t sampler_z(XofRng& rng, double mu, double sigma_prime);

std::unique_ptr<LdlNode> build_ldl_tree(const FftPoly& g00, const FftPoly& g01,
                                        const FftPoly& g11);

// Recovers G from (f, g, F) via the NTRU equation mod q; empty if the lifted
// coefficients leave the expected small range.
std::optional<IntPoly> complete_secret(const IntPoly& f, const IntPoly& g, const IntPoly& big_f);

} // namespace pqchain::falcon::detail
