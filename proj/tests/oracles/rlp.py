"""Independent RLP encoder (recursive length prefix, Ethereum yellow-paper rules)."""


def encode(item):
    if isinstance(item, (bytes, bytearray)):
        b = bytes(item)
        if len(b) == 1 and b[0] < 0x80:
            return b
        return _len_prefix(len(b), 0x80) + b
    if isinstance(item, int):
        if item < 0:
            raise ValueError("rlp: negative integer")
        if item == 0:
            return b"\x80"
        nbytes = (item.bit_length() + 7) // 8
        return encode(item.to_bytes(nbytes, "big"))
    if isinstance(item, (list, tuple)):
        payload = b"".join(encode(x) for x in item)
        return _len_prefix(len(payload), 0xC0) + payload
    raise TypeError(f"rlp: unsupported {type(item)}")


def _len_prefix(length, offset):
    if length < 56:
        return bytes([offset + length])
    lb = length.to_bytes((length.bit_length() + 7) // 8, "big")
    return bytes([offset + 55 + len(lb)]) + lb


def _selfcheck():
    # ethereum wiki reference vectors
    assert encode(b"dog") == bytes.fromhex("83646f67")
    assert encode([b"cat", b"dog"]) == bytes.fromhex("c88363617483646f67")
    assert encode(b"") == b"\x80"
    assert encode(0) == b"\x80"
    assert encode([]) == b"\xc0"
    assert encode(15) == b"\x0f"
    assert encode(1024) == bytes.fromhex("820400")
    assert encode([[], [[]], [[], [[]]]]) == bytes.fromhex("c7c0c1c0c3c0c1c0")
    lorem = b"Lorem ipsum dolor sit amet, consectetur adipisicing elit"
    assert encode(lorem) == bytes.fromhex("b838") + lorem


_selfcheck()

if __name__ == "__main__":
    print("rlp oracle self-check ok")
