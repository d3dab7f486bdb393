# Copyright (C) 2026 The OpenXOR Workbench authors
#
# OpenXOR Workbench is free software: you can redistribute it and/or modify
# it under the terms of the GNU Lesser General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# OpenXOR Workbench is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Lesser General Public License for more details.
#
# You should have received a copy of the GNU Lesser General Public License
# along with OpenXOR Workbench. If not, see <https://www.gnu.org/licenses/>.

"""
Portable pseudo-random streams.

Datasets must come out byte-identical from any implementation, so the
generators are fixed: SplitMix64 derives per-stream seeds and xoshiro256**
does the sampling. Both are the published reference algorithms on unsigned
64-bit words.
"""

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


def mix64(z: int) -> int:
    """SplitMix64 output function applied to one word."""
    z = (z + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed: int) -> None:
        self.state = seed & MASK64

    def next_u64(self) -> int:
        result = mix64(self.state)
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return result


class Xoshiro256:
    """xoshiro256** with helpers for the sampling the generator needs."""

    def __init__(self, seed: int) -> None:
        sm = SplitMix64(seed)
        self.s = [sm.next_u64() for _ in range(4)]
        if not any(self.s):
            self.s[0] = GOLDEN_GAMMA

    @classmethod
    def stream(cls, seed: int, index: int) -> "Xoshiro256":
        """Independent stream number `index` of `seed`."""
        return cls(mix64(seed & MASK64) ^ mix64((index + 1) & MASK64))

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self.s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s = [s0, s1, s2, s3]
        return result

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()

    def below(self, bound: int) -> int:
        """Unbiased integer in [0, bound) by rejection."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        threshold = ((1 << 64) - bound) % bound
        while True:
            r = self.next_u64()
            if r >= threshold:
                return r % bound

    def bits(self, n: int) -> list[int]:
        """`n` fair bits, taken 64 per draw, least significant bit first."""
        out: list[int] = []
        while len(out) < n:
            word = self.next_u64()
            take = min(64, n - len(out))
            out.extend((word >> i) & 1 for i in range(take))
        return out

    def sample_positions(self, k: int, n: int) -> list[int]:
        """`k` distinct positions from 1..n, sorted (Floyd's algorithm)."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} positions from {n}")
        chosen: set[int] = set()
        for j in range(n - k + 1, n + 1):
            t = self.below(j) + 1
            chosen.add(j if t in chosen else t)
        return sorted(chosen)
