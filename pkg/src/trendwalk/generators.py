"""Candidate generators q(y|x) and the classical Metropolis-Hastings kernel.

Every generator maps its internal state to an index into the current trend
list. Randomness comes from numpy's PCG64 bit generator (O'Neill 2014),
seeded with a 64-bit integer, so sequences are portable across platforms
and numpy versions that keep the PCG64 stream stable.
"""
from __future__ import annotations

import math
from typing import Callable, Hashable, Optional, Sequence

import numpy as np

from ._validation import InvalidInputError, check_positive_int, check_seed

GENERATORS = ("brownian", "illusion", "reservoir")

ILLUSION_A = complex(0.6, 0.8)
ILLUSION_B = complex(0.65, 0.7599)
ILLUSION_Z0 = complex(1.0, 0.0)
_DEGENERATE_MODULUS = 1e-12


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(check_seed(seed)))


class BrownianGenerator:
    """Discretised uniform pick: ``idx = floor(u * list_len)`` with ``u ~ U[0, 1)``."""

    name = "brownian"

    def __init__(self, seed: int = 0):
        self.rng = make_rng(seed)

    def next(self, list_len: int) -> int:
        list_len = check_positive_int(list_len, "list_len")
        u = self.rng.random()
        # u * list_len can round up to list_len when u is within one ulp of 1
        return min(int(u * list_len), list_len - 1)


class IllusionGenerator:
    """Illusion spiral ``z <- a*z + b*z/|z|``; the real part picks the candidate.

    The spiral is deterministic, so ``seed`` is accepted for interface
    symmetry only. ``idx = floor(|Re z|) mod list_len``.
    """

    name = "illusion"
    a = ILLUSION_A
    b = ILLUSION_B

    def __init__(self, seed: int = 0, z0: complex = ILLUSION_Z0):
        check_seed(seed)
        if abs(z0) < _DEGENERATE_MODULUS:
            raise InvalidInputError("initial spiral point must be non-zero")
        self.z0 = complex(z0)
        self.z = self.z0
        self.degenerate_steps = 0

    def step(self) -> complex:
        z = self.a * self.z + self.b * self.z / abs(self.z)
        if abs(z) < _DEGENERATE_MODULUS:
            self.degenerate_steps += 1
            z = self.z0
        self.z = z
        return z

    def next(self, list_len: int) -> int:
        list_len = check_positive_int(list_len, "list_len")
        z = self.step()
        return math.floor(abs(z.real)) % list_len


class ReservoirGenerator:
    """Non-conditional reservoir draw: ``j ~ U{1..i}``, ``idx = (j - 1) mod list_len``.

    ``i`` starts at 1 and grows by one per draw, so early candidates favour
    the head of the list.
    """

    name = "reservoir"

    def __init__(self, seed: int = 0):
        self.rng = make_rng(seed)
        self.i = 1

    def next(self, list_len: int) -> int:
        list_len = check_positive_int(list_len, "list_len")
        j = int(self.rng.integers(1, self.i, endpoint=True))
        self.i += 1
        return (j - 1) % list_len


_GENERATOR_CLASSES = {
    "brownian": BrownianGenerator,
    "illusion": IllusionGenerator,
    "reservoir": ReservoirGenerator,
}


def make_generator(name: str, seed: int = 0):
    try:
        cls = _GENERATOR_CLASSES[name.lower()]
    except (KeyError, AttributeError):
        raise InvalidInputError(
            f"unknown generator {name!r}; expected one of {GENERATORS}") from None
    return cls(seed)


def brownian_next(state: BrownianGenerator, list_len: int) -> int:
    return state.next(list_len)


def illusion_next(state: IllusionGenerator, list_len: int) -> int:
    return state.next(list_len)


def reservoir_next(state: ReservoirGenerator, list_len: int) -> int:
    return state.next(list_len)


def reservoir_sample(source: Sequence, k: int, seed: int = 0,
                     randint: Optional[Callable[[int, int], int]] = None) -> list:
    """Classic reservoir sampling of ``k`` items from ``source``.

    Fills the reservoir with the first ``k`` items, then for the ``i``-th item
    (1-based, ``i > k``) draws ``j`` uniformly from ``1..i`` and overwrites
    slot ``j`` when ``j <= k``. Each item ends up in the result with
    probability ``k / N``.

    ``randint(lo, hi)`` may be supplied to replace the PRNG (inclusive
    bounds); it is used by exhaustive-enumeration tests.
    """
    k = check_positive_int(k, "k")
    items = source if isinstance(source, (Sequence, np.ndarray)) else list(source)
    if len(items) < k:
        raise InvalidInputError(f"source has {len(items)} items, fewer than k={k}")
    reservoir = [items[i] for i in range(k)]
    n = len(items)
    if randint is None:
        if n == k:
            return reservoir
        # All draws at once: j_i = floor(u_i * i) + 1 for i = k+1..N, bias below
        # i * 2**-53. Only draws with j <= k touch the reservoir.
        u = make_rng(seed).random(n - k)
        u *= np.arange(k + 1, n + 1)
        hits = np.flatnonzero(u < k)
        for offset, slot in zip(hits.tolist(), u[hits].astype(np.int64).tolist()):
            reservoir[slot] = items[k + offset]
        return reservoir
    for i in range(k + 1, n + 1):
        j = randint(1, i)
        if j <= k:
            reservoir[j - 1] = items[i - 1]
    return reservoir


def mh_acceptance(f_y: float, f_x: float, q_xy: float, q_yx: float) -> float:
    """Metropolis-Hastings acceptance probability.

    ``q_xy`` is the density of proposing ``x`` from ``y`` and ``q_yx`` that of
    proposing ``y`` from ``x``; returns ``min(f_y*q_xy / (f_x*q_yx), 1)``.
    """
    for name, value in (("f_y", f_y), ("f_x", f_x), ("q_xy", q_xy), ("q_yx", q_yx)):
        if not value > 0:
            raise InvalidInputError(f"{name} must be strictly positive, got {value!r}")
    return min((f_y * q_xy) / (f_x * q_yx), 1.0)


def mh_step(x: Hashable, target: Callable[[Hashable], float],
            propose: Callable[[Hashable, np.random.Generator], Hashable],
            rng: np.random.Generator,
            proposal_density: Optional[Callable[[Hashable, Hashable], float]] = None):
    """One transition of the Metropolis-Hastings chain.

    Proposes ``y = propose(x, rng)``, draws ``U ~ U(0, 1)`` and moves to ``y``
    iff ``U <= rho(x, y)``. ``proposal_density(y, x)`` is ``q(y|x)``; leave it
    as None for a symmetric proposal. A candidate with zero target density is
    never accepted.
    """
    y = propose(x, rng)
    u = rng.random()
    f_y = target(y)
    if f_y <= 0:
        return x
    if proposal_density is None:
        q_xy = q_yx = 1.0
    else:
        q_xy, q_yx = proposal_density(x, y), proposal_density(y, x)
    rho = mh_acceptance(f_y, target(x), q_xy, q_yx)
    return y if u <= rho else x
