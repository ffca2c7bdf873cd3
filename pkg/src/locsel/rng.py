"""Seedable random number generation with a fixed, portable algorithm.

All randomized pieces of this package (scenario generation, shadowing,
perturbations, random restarts, random baselines) draw from SplitMix64, a
64-bit counter-based generator: the state advances by the golden-gamma
constant and each output is a finalizer hash of the state.  The algorithm is
frozen here so that a seed reproduces the same stream on any platform or
library version.  Normal variates use the Box-Muller transform.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    """Deterministic stream of uniforms and normals for a 64-bit seed."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64
        self._spare_normal: float | None = None

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform_in(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform()

    def normal(self) -> float:
        """Standard normal via Box-Muller (pairs cached)."""
        if self._spare_normal is not None:
            z = self._spare_normal
            self._spare_normal = None
            return z
        # u1 in (0, 1] so the log is finite
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._spare_normal = r * math.sin(theta)
        return r * math.cos(theta)

    def lognormal(self, mean: float, var: float) -> float:
        """exp(mean + sqrt(var) * N(0,1)); var = 0 degenerates to exp(mean)."""
        if var == 0.0:
            return math.exp(mean)
        return math.exp(mean + math.sqrt(var) * self.normal())

    def integers_without_replacement(self, n: int, m: int) -> list[int]:
        """m distinct indices drawn uniformly from range(n) (partial Fisher-Yates)."""
        if not 0 <= m <= n:
            raise ValueError(f"cannot draw {m} of {n} indices")
        pool = list(range(n))
        for i in range(m):
            j = i + int(self.uniform() * (n - i))
            j = min(j, n - 1)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:m]
