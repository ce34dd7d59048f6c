"""Independent secp256k1 / ECDSA-with-recovery oracle (pure integer math)."""

import hashlib
import hmac

P = 2**256 - 2**32 - 977
N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
GX = 0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798
GY = 0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8
G = (GX, GY)


def inv(a, m):
    return pow(a, -1, m)


def add(p1, p2):
    if p1 is None:
        return p2
    if p2 is None:
        return p1
    x1, y1 = p1
    x2, y2 = p2
    if x1 == x2 and (y1 + y2) % P == 0:
        return None
    if p1 == p2:
        lam = (3 * x1 * x1) * inv(2 * y1, P) % P
    else:
        lam = (y2 - y1) * inv(x2 - x1, P) % P
    x3 = (lam * lam - x1 - x2) % P
    y3 = (lam * (x1 - x3) - y1) % P
    return (x3, y3)


def mul(k, p):
    r = None
    while k:
        if k & 1:
            r = add(r, p)
        p = add(p, p)
        k >>= 1
    return r


def pubkey(d):
    return mul(d, G)


def rfc6979_k(x, h1):
    """RFC 6979 with HMAC-SHA256, qlen = 256."""
    def bits2int(b):
        v = int.from_bytes(b, "big")
        return v
    def int2octets(v):
        return v.to_bytes(32, "big")
    def bits2octets(b):
        z = bits2int(b) % N
        return int2octets(z)
    v = b"\x01" * 32
    k = b"\x00" * 32
    k = hmac.new(k, v + b"\x00" + int2octets(x) + bits2octets(h1), hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    k = hmac.new(k, v + b"\x01" + int2octets(x) + bits2octets(h1), hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    while True:
        v = hmac.new(k, v, hashlib.sha256).digest()
        cand = bits2int(v)
        if 1 <= cand < N:
            return cand
        k = hmac.new(k, v + b"\x00", hashlib.sha256).digest()
        v = hmac.new(k, v, hashlib.sha256).digest()


def simple_hmac_k(x, h1):
    """pybitcointools-style deterministic nonce: HMAC-SHA256(priv, digest)."""
    return int.from_bytes(hmac.new(x.to_bytes(32, "big"), h1, hashlib.sha256).digest(), "big")


def sign(d, z, k):
    x, _y = mul(k, G)
    r = x % N
    s = inv(k, N) * (z + r * d) % N
    rec = (_y & 1) ^ (1 if s > N // 2 else 0)
    # low-s normalization flips the recovery bit
    recovery_id = _y & 1
    if s > N // 2:
        s = N - s
        recovery_id ^= 1
    return r, s, recovery_id


def recover(z, r, s, recovery_id):
    x = r
    # candidate point with given x and parity
    alpha = (pow(x, 3, P) + 7) % P
    beta = pow(alpha, (P + 1) // 4, P)
    y = beta if beta % 2 == recovery_id else P - beta
    rp = (x, y)
    rinv = inv(r, N)
    q = add(mul(s * rinv % N, rp), mul((-z * rinv) % N, G))
    return q


def _selfcheck():
    assert (GY * GY - (GX ** 3 + 7)) % P == 0
    assert mul(N, G) is None
    # sign/recover identity on a couple of keys
    for d, z in [(1, 0xAA55AA55), (0xDEADBEEF, 123456789), (N - 2, P - 99)]:
        r, s, rec = sign(d, z, rfc6979_k(d, z.to_bytes(32, "big")))
        assert recover(z, r, s, rec) == pubkey(d)


_selfcheck()

if __name__ == "__main__":
    print("secp256k1 oracle self-check ok")
