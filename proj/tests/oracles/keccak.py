"""Independent Keccak-f[1600] sponge, used to freeze hash vectors.

Validated against hashlib's FIPS-202 functions (sha3_256, shake_256) before
any vector is emitted; keccak256 is the same sponge with the legacy 0x01
domain padding that Ethereum uses.
"""

ROT = [
    [0, 36, 3, 41, 18],
    [1, 44, 10, 45, 2],
    [62, 6, 43, 15, 61],
    [28, 55, 25, 21, 56],
    [27, 20, 39, 8, 14],
]

RC = [
    0x0000000000000001, 0x0000000000008082, 0x800000000000808A,
    0x8000000080008000, 0x000000000000808B, 0x0000000080000001,
    0x8000000080008081, 0x8000000000008009, 0x000000000000008A,
    0x0000000000000088, 0x0000000080008009, 0x000000008000000A,
    0x000000008000808B, 0x800000000000008B, 0x8000000000008089,
    0x8000000000008003, 0x8000000000008002, 0x8000000000000080,
    0x000000000000800A, 0x800000008000000A, 0x8000000080008081,
    0x8000000000008080, 0x0000000080000001, 0x8000000080008008,
]

MASK = (1 << 64) - 1


def _rotl(v, n):
    n %= 64
    return ((v << n) | (v >> (64 - n))) & MASK


def keccak_f(a):
    for rnd in range(24):
        c = [a[x][0] ^ a[x][1] ^ a[x][2] ^ a[x][3] ^ a[x][4] for x in range(5)]
        d = [c[(x - 1) % 5] ^ _rotl(c[(x + 1) % 5], 1) for x in range(5)]
        for x in range(5):
            for y in range(5):
                a[x][y] ^= d[x]
        b = [[0] * 5 for _ in range(5)]
        for x in range(5):
            for y in range(5):
                b[y][(2 * x + 3 * y) % 5] = _rotl(a[x][y], ROT[x][y])
        for x in range(5):
            for y in range(5):
                a[x][y] = b[x][y] ^ ((~b[(x + 1) % 5][y]) & b[(x + 2) % 5][y])
        a[0][0] ^= RC[rnd]
    return a


def sponge(data, rate_bytes, domain, out_len):
    a = [[0] * 5 for _ in range(5)]
    padded = bytearray(data)
    padded.append(domain)
    while len(padded) % rate_bytes != 0:
        padded.append(0)
    padded[-1] |= 0x80

    for off in range(0, len(padded), rate_bytes):
        block = padded[off:off + rate_bytes]
        for i in range(rate_bytes // 8):
            lane = int.from_bytes(block[i * 8:i * 8 + 8], "little")
            a[i % 5][i // 5] ^= lane
        keccak_f(a)

    out = bytearray()
    while len(out) < out_len:
        for i in range(rate_bytes // 8):
            out += a[i % 5][i // 5].to_bytes(8, "little")
            if len(out) >= rate_bytes:
                break
        if len(out) < out_len:
            keccak_f(a)
    return bytes(out[:out_len])


def keccak256(data):
    return sponge(data, 136, 0x01, 32)


def sha3_256(data):
    return sponge(data, 136, 0x06, 32)


def sha3_512(data):
    return sponge(data, 72, 0x06, 64)


def shake128(data, n):
    return sponge(data, 168, 0x1F, n)


def shake256(data, n):
    return sponge(data, 136, 0x1F, n)


def _selfcheck():
    import hashlib
    for msg in [b"", b"abc", b"x" * 135, b"y" * 136, b"z" * 137, bytes(range(256))]:
        assert sha3_256(msg) == hashlib.sha3_256(msg).digest()
        assert sha3_512(msg) == hashlib.sha3_512(msg).digest()
        assert shake256(msg, 64) == hashlib.shake_256(msg).digest(64)
        assert shake128(msg, 64) == hashlib.shake_128(msg).digest(64)
    # pinned legacy-padding values
    assert keccak256(b"").hex() == "c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470"
    assert keccak256(b"abc").hex() == "4e03657aea45a94fc7d47ba826c8d667c0d1e6e33a64a036ec44f58fa12d6c45"


_selfcheck()

if __name__ == "__main__":
    print("keccak oracle self-check ok")
