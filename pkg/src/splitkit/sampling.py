"""Seeded stochastic oracles over a :class:`~splitkit.operators.FiniteSumOperator`.

Two schemes are supported. With uniform sampling each index has probability
``1/N`` and the oracle is ``N B_i``; with importance sampling index ``i`` is
drawn with probability ``L_i / sum_j L_j`` and the oracle is ``B_i / P(i)``.
Both are unbiased estimators of ``B``.

Indices are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import FiniteSumOperator

__all__ = [
    "OracleScheme",
    "RngStream",
    "derive_seed",
    "draw_index",
    "oracle_apply",
    "bernoulli",
    "uniform_scheme",
    "importance_scheme",
    "make_scheme",
]


@dataclass(frozen=True)
class OracleScheme:
    """Sampling distribution over components and its mean-square constant.

    Attributes
    ----------
    kind : str
        ``"uniform"`` or ``"importance"``.
    probabilities : ndarray
        ``P(i)`` for each component, summing to one.
    mean_lipschitz : float
        ``L`` with ``E ||B_xi(u) - B_xi(v)||^2 <= L^2 ||u - v||^2``.
    """

    kind: str
    probabilities: np.ndarray
    mean_lipschitz: float

    def __post_init__(self):
        probs = np.asarray(self.probabilities, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probabilities must be a nonempty vector")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        if self.kind not in ("uniform", "importance"):
            raise ValueError(f"unknown oracle scheme {self.kind!r}")
        cdf = np.cumsum(probs)
        cdf[-1] = 1.0
        object.__setattr__(self, "probabilities", probs)
        object.__setattr__(self, "_cdf", cdf)
        if self.kind == "uniform":
            weights = np.full(probs.size, float(probs.size))
        else:
            with np.errstate(divide="ignore"):
                weights = 1.0 / probs
        object.__setattr__(self, "_weights", weights)

    @property
    def n(self) -> int:
        return self.probabilities.size

    @property
    def cdf(self) -> np.ndarray:
        return self._cdf

    @property
    def weights(self) -> np.ndarray:
        """Oracle scale factors ``1 / P(i)`` (exactly ``N`` when uniform)."""
        return self._weights


def uniform_scheme(component_lipschitz) -> OracleScheme:
    lips = np.asarray(component_lipschitz, dtype=np.float64)
    n = lips.size
    L = float(np.sqrt(n * np.sum(lips**2)))
    return OracleScheme("uniform", np.full(n, 1.0 / n), L)


def importance_scheme(component_lipschitz) -> OracleScheme:
    lips = np.asarray(component_lipschitz, dtype=np.float64)
    if np.any(lips <= 0):
        raise ValueError("importance sampling requires every L_i > 0")
    total = float(lips.sum())
    scheme = OracleScheme("importance", lips / total, total)
    # Cauchy-Schwarz: sum L_i <= sqrt(N sum L_i^2)
    uniform_L = np.sqrt(lips.size * np.sum(lips**2))
    assert scheme.mean_lipschitz <= uniform_L * (1 + 1e-12), (scheme.mean_lipschitz, uniform_L)
    return scheme


def make_scheme(kind: str, op: FiniteSumOperator) -> OracleScheme:
    if kind == "uniform":
        return uniform_scheme(op.component_lipschitz)
    if kind == "importance":
        return importance_scheme(op.component_lipschitz)
    raise ValueError(f"unknown oracle scheme {kind!r}")


def derive_seed(master: int, *key: int) -> int:
    """Deterministic 64-bit child seed of ``master`` for the given spawn key."""
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class RngStream:
    """Single-owner PCG64 stream; equal seeds give equal draw sequences."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self) -> float:
        return float(self._gen.random())


def draw_index(rng: RngStream, scheme: OracleScheme) -> int:
    """Draw ``i`` with probability ``P(i)`` by inverse CDF (one uniform draw)."""
    u = rng.uniform()
    return int(np.searchsorted(scheme.cdf, u, side="right"))


def oracle_apply(scheme: OracleScheme, op: FiniteSumOperator, i: int, v: np.ndarray) -> np.ndarray:
    """Unbiased oracle ``B_i(v) / P(i)``."""
    if not 0 <= i < scheme.n:
        raise IndexError(f"index {i} out of range [0, {scheme.n})")
    return scheme.weights[i] * op.component(i, v)


def bernoulli(rng: RngStream, p: float) -> bool:
    """True with probability ``p`` (one uniform draw, consumed even if ``p=1``)."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"probability must lie in (0, 1], got {p}")
    return rng.uniform() < p
