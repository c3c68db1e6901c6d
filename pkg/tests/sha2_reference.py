"""Slow, dependency-free SHA-256 and SHA-512 used only as a test oracle.

Round constants and initial hash values are derived here from the first
primes with integer root extraction instead of being copied in as tables.
"""


def _primes(n):
    out, k = [], 2
    while len(out) < n:
        if all(k % p for p in out if p * p <= k):
            out.append(k)
        k += 1
    return out


def _iroot(x, r):
    """floor(x ** (1/r)) for non-negative integers."""
    if x < 2:
        return x
    y = 1 << ((x.bit_length() + r - 1) // r)
    while True:
        z = ((r - 1) * y + x // y ** (r - 1)) // r
        if z >= y:
            break
        y = z
    while y**r > x:
        y -= 1
    while (y + 1) ** r <= x:
        y += 1
    return y


def _frac_bits(p, root, bits):
    return _iroot(p << (root * bits), root) & ((1 << bits) - 1)


class _Sha2:
    def __init__(self, word, rounds, sigmas, digest_words):
        self.word = word
        self.mask = (1 << word) - 1
        primes = _primes(rounds)
        self.k = [_frac_bits(p, 3, word) for p in primes]
        self.h0 = [_frac_bits(p, 2, word) for p in primes[:8]]
        self.rounds = rounds
        self.sigmas = sigmas
        self.digest_words = digest_words

    def _rotr(self, x, n):
        return ((x >> n) | (x << (self.word - n))) & self.mask

    def _big(self, x, rots):
        return self._rotr(x, rots[0]) ^ self._rotr(x, rots[1]) ^ self._rotr(x, rots[2])

    def _small(self, x, spec):
        return self._rotr(x, spec[0]) ^ self._rotr(x, spec[1]) ^ (x >> spec[2])

    def digest(self, message: bytes) -> str:
        wb = self.word // 8
        block = 16 * wb
        length_bytes = 2 * wb
        ml = len(message) * 8
        padded = message + b"\x80"
        padded += b"\x00" * ((block - length_bytes - len(padded)) % block)
        padded += ml.to_bytes(length_bytes, "big")
        S0, S1, s0, s1 = self.sigmas
        h = list(self.h0)
        m = self.mask
        for off in range(0, len(padded), block):
            w = [int.from_bytes(padded[off + i * wb:off + (i + 1) * wb], "big") for i in range(16)]
            for t in range(16, self.rounds):
                w.append((self._small(w[t - 2], s1) + w[t - 7] + self._small(w[t - 15], s0) + w[t - 16]) & m)
            a, b, c, d, e, f, g, hh = h
            for t in range(self.rounds):
                ch = (e & f) ^ (~e & g)
                t1 = (hh + self._big(e, S1) + ch + self.k[t] + w[t]) & m
                maj = (a & b) ^ (a & c) ^ (b & c)
                t2 = (self._big(a, S0) + maj) & m
                hh, g, f, e, d, c, b, a = g, f, e, (d + t1) & m, c, b, a, (t1 + t2) & m
            h = [(x + y) & m for x, y in zip(h, (a, b, c, d, e, f, g, hh))]
        return "".join(f"{x:0{wb * 2}x}" for x in h[:self.digest_words])


_SHA256 = _Sha2(32, 64, ((2, 13, 22), (6, 11, 25), (7, 18, 3), (17, 19, 10)), 8)
_SHA512 = _Sha2(64, 80, ((28, 34, 39), (14, 18, 41), (1, 8, 7), (19, 61, 6)), 8)


def sha256_hex(message: bytes) -> str:
    return _SHA256.digest(message)


def sha512_hex(message: bytes) -> str:
    return _SHA512.digest(message)
