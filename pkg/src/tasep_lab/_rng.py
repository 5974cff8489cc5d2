"""Counter-based random streams for reproducible Monte Carlo.

The generator is the splitmix64 output function applied to
``key + counter * GOLDEN``: stream value i is a pure function of
(key, i), so replica r's stream, derived from (master seed, r), is
identical no matter how replicas are scheduled across workers.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

U64 = np.uint64
GOLDEN = U64(0x9E3779B97F4A7C15)
_REPLICA_SALT = U64(0xD1B54A32D192ED03)
_MASK = (1 << 64) - 1


@njit(inline="always", cache=True)
def mix64(z):
    z = (z ^ (z >> U64(30))) * U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> U64(27))) * U64(0x94D049BB133111EB)
    return z ^ (z >> U64(31))


@njit(inline="always", cache=True)
def stream_u64(key, ctr):
    return mix64(key + (ctr + U64(1)) * GOLDEN)


@njit(inline="always", cache=True)
def next_uniform(key, ctr):
    """Uniform on (0, 1); consumes one counter step."""
    ctr += U64(1)
    u = (float(stream_u64(key, ctr - U64(1)) >> U64(11)) + 0.5) * (1.0 / 9007199254740992.0)
    return u, ctr


@njit(inline="always", cache=True)
def replica_key(master, r):
    return mix64(master ^ mix64((r + U64(1)) * _REPLICA_SALT))


def _mix_py(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def replica_key_py(master: int, r: int) -> int:
    """Python mirror of :func:`replica_key` for seed bookkeeping."""
    salt = ((r + 1) * int(_REPLICA_SALT)) & _MASK
    return _mix_py((master & _MASK) ^ _mix_py(salt))


def uniform_py(key: int, i: int) -> float:
    """Python mirror of the i-th uniform of stream ``key`` (0-based)."""
    v = _mix_py((key + (i + 1) * int(GOLDEN)) & _MASK)
    return ((v >> 11) + 0.5) / 9007199254740992.0


@njit(cache=True)
def poisson_draw(lam, key, ctr):
    """Exact Poisson(lam) sample from the counter stream.

    Product-of-uniforms for small lam, Hormann's PTRS transformed
    rejection for lam >= 10 (exact, a few uniforms per draw).
    """
    if lam <= 0.0:
        return 0, ctr
    if lam < 10.0:
        target = math.exp(-lam)
        k = 0
        p = 1.0
        while True:
            u, ctr = next_uniform(key, ctr)
            p *= u
            if p <= target:
                return k, ctr
            k += 1
    b = 0.931 + 2.53 * math.sqrt(lam)
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    log_lam = math.log(lam)
    while True:
        u, ctr = next_uniform(key, ctr)
        v, ctr = next_uniform(key, ctr)
        u -= 0.5
        us = 0.5 - abs(u)
        k = int(math.floor((2.0 * a / us + b) * u + lam + 0.43))
        if us >= 0.07 and v <= vr:
            return k, ctr
        if k < 0 or (us < 0.013 and v > us):
            continue
        if math.log(v) + math.log(inv_alpha) - math.log(a / (us * us) + b) <= (
            k * log_lam - lam - math.lgamma(k + 1.0)
        ):
            return k, ctr
