"""Operators for structured monotone inclusions ``0 in (A + B + C) x``.

Points are flat ``float64`` arrays. Primal-dual points ``(x, u)`` are stored
as the concatenation ``[x, u]``; :class:`PrimalDualPoint` converts between
the two views.

Three operator roles appear in the solvers:

* resolvents ``J_{gamma A}`` of a maximally monotone ``A`` (callables
  ``J(gamma, v)``),
* monotone, Lipschitz point-valued operators ``B``, possibly given as a
  finite sum ``B = sum_i B_i`` (:class:`FiniteSumOperator`),
* cocoercive operators ``C`` with modulus ``beta``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "PrimalDualPoint",
    "box_resolvent",
    "nonneg_resolvent",
    "product_resolvent",
    "skew_apply",
    "least_squares_gradient",
    "spectral_norm",
    "IdentityResolvent",
    "BoxResolvent",
    "ProductResolvent",
    "LinearOperator",
    "ZeroOperator",
    "SkewCoupling",
    "LeastSquaresGradient",
    "ScaledIdentity",
    "FiniteSumOperator",
    "RowSplitOperator",
    "save_matrix_csv",
    "load_matrix_csv",
]


def _as_vector(v) -> np.ndarray:
    return np.asarray(v, dtype=np.float64).reshape(-1)


@dataclass(frozen=True)
class PrimalDualPoint:
    """A pair ``(x, u)`` behaving as the single vector ``[x, u]``."""

    x: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _as_vector(self.x))
        object.__setattr__(self, "u", _as_vector(self.u))

    @property
    def d(self) -> int:
        return self.x.size

    @property
    def q(self) -> int:
        return self.u.size

    def flat(self) -> np.ndarray:
        return np.concatenate([self.x, self.u])

    @classmethod
    def from_flat(cls, z, d: int) -> "PrimalDualPoint":
        z = _as_vector(z)
        if not 0 <= d <= z.size:
            raise ValueError(f"cannot split a vector of size {z.size} at d={d}")
        return cls(z[:d].copy(), z[d:].copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.flat()))

    def dot(self, other: "PrimalDualPoint") -> float:
        return float(self.flat() @ other.flat())

    def __add__(self, other: "PrimalDualPoint") -> "PrimalDualPoint":
        return PrimalDualPoint(self.x + other.x, self.u + other.u)

    def __sub__(self, other: "PrimalDualPoint") -> "PrimalDualPoint":
        return PrimalDualPoint(self.x - other.x, self.u - other.u)

    def __mul__(self, scalar: float) -> "PrimalDualPoint":
        return PrimalDualPoint(scalar * self.x, scalar * self.u)

    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# Resolvents
# ---------------------------------------------------------------------------


def box_resolvent(gamma: float, v, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Resolvent of the normal cone of ``[lo, hi]^d``: the box projection.

    The result does not depend on ``gamma``.
    """
    if not lo < hi:
        raise ValueError(f"empty box: lo={lo} must be smaller than hi={hi}")
    return np.clip(_as_vector(v), lo, hi)


def nonneg_resolvent(gamma: float, v) -> np.ndarray:
    """Projection onto the nonnegative orthant (normal cone resolvent)."""
    return np.maximum(_as_vector(v), 0.0)


def product_resolvent(gamma: float, z: PrimalDualPoint, d: int | None = None,
                      q: int | None = None) -> PrimalDualPoint:
    """Blockwise resolvent: box ``[0, 1]`` on ``x``, orthant on ``u``."""
    if (d is not None and z.d != d) or (q is not None and z.q != q):
        raise ValueError(f"point has blocks ({z.d}, {z.q}), expected ({d}, {q})")
    return PrimalDualPoint(box_resolvent(gamma, z.x), nonneg_resolvent(gamma, z.u))


class IdentityResolvent:
    """Resolvent of ``A = 0``."""

    def __call__(self, gamma: float, v: np.ndarray) -> np.ndarray:
        return np.array(v, dtype=np.float64)


class BoxResolvent:
    def __init__(self, lo: float = 0.0, hi: float = 1.0):
        if not lo < hi:
            raise ValueError(f"empty box: lo={lo} must be smaller than hi={hi}")
        self.lo = lo
        self.hi = hi

    def __call__(self, gamma: float, v: np.ndarray) -> np.ndarray:
        return np.clip(v, self.lo, self.hi)


class ProductResolvent:
    """Flat-vector version of :func:`product_resolvent` for solvers."""

    def __init__(self, d: int, q: int):
        self.d = d
        self.q = q

    def __call__(self, gamma: float, v: np.ndarray) -> np.ndarray:
        if v.size != self.d + self.q:
            raise ValueError(f"expected a vector of size {self.d + self.q}, got {v.size}")
        out = np.empty_like(v)
        np.clip(v[: self.d], 0.0, 1.0, out=out[: self.d])
        np.maximum(v[self.d:], 0.0, out=out[self.d:])
        return out


# ---------------------------------------------------------------------------
# Point-valued operators
# ---------------------------------------------------------------------------


def skew_apply(D, z: PrimalDualPoint) -> PrimalDualPoint:
    """Return ``(D^T u, -D x)``."""
    D = np.asarray(D, dtype=np.float64)
    if D.shape != (z.q, z.d):
        raise ValueError(f"D has shape {D.shape}, point needs ({z.q}, {z.d})")
    return PrimalDualPoint(D.T @ z.u, -(D @ z.x))


def least_squares_gradient(G, b, z: PrimalDualPoint) -> PrimalDualPoint:
    """Return ``(G^T (G x - b), 0)``, the gradient of ``0.5 ||G x - b||^2``."""
    G = np.asarray(G, dtype=np.float64)
    b = _as_vector(b)
    if G.shape != (b.size, z.d):
        raise ValueError(f"G has shape {G.shape}, expected ({b.size}, {z.d})")
    return PrimalDualPoint(G.T @ (G @ z.x - b), np.zeros(z.q))


def spectral_norm(M, tol: float = 1e-8, max_iter: int = 10000, seed: int = 0,
                  return_info: bool = False):
    """Largest singular value of ``M`` by power iteration on ``M^T M``.

    Iteration starts from the normalized all-ones vector and stops once the
    eigen-residual ``||M^T M v - s v||`` falls below ``tol * s``, which bounds
    the relative error of the returned norm by ``tol``. If the start vector is
    annihilated by ``M`` or the iteration stagnates, it restarts once from a
    random vector drawn with ``seed``.

    With ``return_info=True`` a second value is returned: a dict with keys
    ``degenerate`` (zero matrix), ``converged`` and ``iterations``.
    """
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    info = {"degenerate": False, "converged": False, "iterations": 0}
    if not np.any(M):
        info.update(degenerate=True, converged=True)
        logger.warning("spectral_norm called on a zero matrix")
        return (0.0, info) if return_info else 0.0

    n = M.shape[1]
    starts = [np.full(n, 1.0 / np.sqrt(n)), None]
    sigma = 0.0
    for attempt, v in enumerate(starts):
        if v is None:
            v = np.random.default_rng(seed).standard_normal(n)
            v /= np.linalg.norm(v)
        for it in range(1, max_iter + 1):
            w = M.T @ (M @ v)
            s = float(v @ w)  # Rayleigh quotient, estimates sigma^2
            info["iterations"] += 1
            if s <= 0.0:
                break
            sigma = np.sqrt(s)
            if np.linalg.norm(w - s * v) <= tol * s:
                info["converged"] = True
                break
            v = w / np.linalg.norm(w)
        if info["converged"]:
            break
        logger.info("power iteration stalled (attempt %d), restarting", attempt)

    if not info["converged"]:
        logger.warning("spectral_norm did not reach tol=%g in %d iterations",
                       tol, info["iterations"])
    return (sigma, info) if return_info else sigma


class LinearOperator:
    """``v -> M v`` for a dense matrix, with Lipschitz bound ``||M||``."""

    def __init__(self, M):
        self.M = np.asarray(M, dtype=np.float64)
        self._lipschitz = None

    @property
    def lipschitz_bound(self) -> float:
        if self._lipschitz is None:
            self._lipschitz = spectral_norm(self.M)
        return self._lipschitz

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return self.M @ v


class ZeroOperator:
    """The zero map; cocoercive for every ``beta``, reported as ``beta=inf``."""

    lipschitz_bound = 0.0
    beta = np.inf

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return np.zeros_like(v, dtype=np.float64)


class SkewCoupling:
    """Flat-vector ``B(x, u) = (D^T u, -D x)``; monotone and ``||D||``-Lipschitz."""

    def __init__(self, D):
        self.D = np.asarray(D, dtype=np.float64)
        self.q, self.d = self.D.shape
        self.lipschitz_bound = spectral_norm(self.D)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        d = self.d
        return np.concatenate([self.D.T @ z[d:], -(self.D @ z[:d])])

    def matrix(self) -> np.ndarray:
        """The block matrix ``[[0, D^T], [-D, 0]]``."""
        n = self.d + self.q
        M = np.zeros((n, n))
        M[: self.d, self.d:] = self.D.T
        M[self.d:, : self.d] = -self.D
        return M


class LeastSquaresGradient:
    """Flat-vector ``C(x, u) = (G^T (G x - b), 0)`` with ``beta = ||G||^-2``."""

    def __init__(self, G, b, q: int):
        self.G = np.asarray(G, dtype=np.float64)
        self.b = _as_vector(b)
        self.d = self.G.shape[1]
        self.q = q
        self.beta = 1.0 / spectral_norm(self.G) ** 2

    def __call__(self, z: np.ndarray) -> np.ndarray:
        out = np.zeros(self.d + self.q)
        out[: self.d] = self.G.T @ (self.G @ z[: self.d] - self.b)
        return out


class ScaledIdentity:
    """``C(z) = c z``, which is ``1/c``-cocoercive."""

    def __init__(self, c: float):
        if c <= 0:
            raise ValueError("scale must be positive")
        self.c = float(c)
        self.beta = 1.0 / self.c

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return self.c * z


# ---------------------------------------------------------------------------
# Finite sums
# ---------------------------------------------------------------------------


class FiniteSumOperator:
    """``B = sum_i B_i`` with per-component Lipschitz constants ``L_i``.

    Parameters
    ----------
    components : sequence of callables
        ``B_i(v) -> ndarray``.
    component_lipschitz : sequence of float
        Lipschitz constant of each component.
    """

    def __init__(self, components: Sequence[Callable[[np.ndarray], np.ndarray]],
                 component_lipschitz: Sequence[float]):
        if len(components) == 0:
            raise ValueError("a finite sum needs at least one component")
        if len(components) != len(component_lipschitz):
            raise ValueError("one Lipschitz constant per component is required")
        lips = np.asarray(component_lipschitz, dtype=np.float64)
        if np.any(lips < 0) or not np.all(np.isfinite(lips)):
            raise ValueError("Lipschitz constants must be finite and nonnegative")
        self.components = list(components)
        self.component_lipschitz = lips

    @property
    def n_components(self) -> int:
        return len(self.components)

    def component(self, i: int, v: np.ndarray) -> np.ndarray:
        if not 0 <= i < self.n_components:
            raise IndexError(f"component index {i} out of range [0, {self.n_components})")
        return self.components[i](v)

    def full_apply(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros_like(v, dtype=np.float64)
        for B_i in self.components:
            out += B_i(v)
        return out

    __call__ = full_apply


class RowSplitOperator(FiniteSumOperator):
    """Linear ``B(v) = M v`` split by rows: ``B_i(v) = (m_i . v) e_i``.

    Each component is rank one with exact Lipschitz constant ``||m_i||``.
    """

    def __init__(self, M):
        self.M = np.asarray(M, dtype=np.float64)
        if self.M.ndim != 2 or self.M.shape[0] != self.M.shape[1]:
            raise ValueError("row splitting needs a square matrix")
        self.component_lipschitz = np.linalg.norm(self.M, axis=1)

    @property
    def components(self):
        return [lambda v, i=i: self.component(i, v) for i in range(self.n_components)]

    @property
    def n_components(self) -> int:
        return self.M.shape[0]

    def component(self, i: int, v: np.ndarray) -> np.ndarray:
        if not 0 <= i < self.n_components:
            raise IndexError(f"component index {i} out of range [0, {self.n_components})")
        out = np.zeros(self.M.shape[1])
        out[i] = self.M[i] @ v
        return out

    def full_apply(self, v: np.ndarray) -> np.ndarray:
        return self.M @ v

    __call__ = full_apply


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------


def save_matrix_csv(path, M) -> None:
    """Write a matrix one row per line, comma separated, 17 significant digits.

    Vectors are written as a single column.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, None]
    np.savetxt(path, M, delimiter=",", fmt="%.17g")


def load_matrix_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
