"""Seedable, splittable pseudo-random streams.

Datasets must be bit-identical across runs and machines, so stimulus
generation draws from xoshiro256** seeded through splitmix64 rather than
numpy's generators. Bulk draws (background noise) go through a numba kernel
that advances the same state as the scalar methods.
"""
import math

import numba
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX_INIT = 0x243F6A8885A308D3


def _splitmix_finalize(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64(state):
    """Advance a splitmix64 state. Returns ``(new_state, output)``."""
    state = (state + GOLDEN_GAMMA) & MASK64
    return state, _splitmix_finalize(state)


def mix_seed(*parts):
    """Fold integers into one 64-bit seed.

    ``mix_seed(seed, index)`` is how per-example and per-repetition streams are
    derived; any part may be an arbitrary (possibly negative) Python int.
    """
    h = _MIX_INIT
    for p in parts:
        h = _splitmix_finalize(((h ^ (int(p) & MASK64)) + GOLDEN_GAMMA) & MASK64)
    return h


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK64


@numba.njit(cache=True)
def _fill_doubles(state, out):
    s0, s1, s2, s3 = state[0], state[1], state[2], state[3]
    for i in range(out.shape[0]):
        t = s1 * np.uint64(5)
        r = (t << np.uint64(7)) | (t >> np.uint64(57))
        r = r * np.uint64(9)
        t = s1 << np.uint64(17)
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = (s3 << np.uint64(45)) | (s3 >> np.uint64(19))
        out[i] = np.float64(r >> np.uint64(11)) * (1.0 / 9007199254740992.0)
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3


class Xoshiro256:
    """xoshiro256** generator.

    The four state words are seeded from consecutive splitmix64 outputs of
    ``seed``, which rules out the all-zero state.
    """

    def __init__(self, seed):
        self.seed = int(seed) & MASK64
        sm = self.seed
        words = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            words.append(out)
        self._s = words

    @classmethod
    def derive(cls, *parts):
        return cls(mix_seed(*parts))

    def next_u64(self):
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def random(self):
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def uniform(self, low, high):
        return low + (high - low) * self.random()

    def below(self, n):
        """Unbiased integer in ``[0, n)`` by bitmask rejection."""
        if n <= 0:
            raise ValueError("n must be positive")
        if n == 1:
            return 0
        mask = (1 << (n - 1).bit_length()) - 1
        while True:
            r = self.next_u64() & mask
            if r < n:
                return r

    def angle(self):
        return 2.0 * math.pi * self.random()

    def random_array(self, n):
        """``n`` uniform doubles, bit-identical to ``n`` calls of :meth:`random`."""
        state = np.array(self._s, dtype=np.uint64)
        out = np.empty(n, dtype=np.float64)
        _fill_doubles(state, out)
        self._s = [int(w) for w in state]
        return out

    def permutation(self, n):
        """Fisher-Yates shuffle of ``range(n)``."""
        perm = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return np.array(perm, dtype=np.int64)
