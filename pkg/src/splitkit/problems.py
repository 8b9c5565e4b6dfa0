"""Problem gallery.

:class:`SaddleInstance` is the constrained least-squares problem

    min 0.5 ||G x - b||^2  s.t.  x in [0, 1]^d,  D x <= 0,

written as the primal-dual inclusion ``0 in (A + B + C)(x, u)`` with
``A = N_[0,1]^d x N_R+^q``, ``B(x, u) = (D^T u, -D x)`` and
``C(x, u) = (G^T (G x - b), 0)``.

:class:`StrongInstance` is a synthetic affine problem with ``A = 0``,
``B(z) = (mu I + S) z`` (``S`` skew) and ``C(z) = c0 z`` whose unique
solution is ``z = 0``.

Both expose the attributes the solvers read: ``resolvent``, ``B`` (a
:class:`~splitkit.operators.FiniteSumOperator`), ``C``, ``beta``,
``lipschitz_B``, ``dim``, ``x0``, ``x_star`` and ``objective``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .operators import (
    FiniteSumOperator,
    IdentityResolvent,
    LeastSquaresGradient,
    ProductResolvent,
    RowSplitOperator,
    ScaledIdentity,
    SkewCoupling,
    load_matrix_csv,
    save_matrix_csv,
    spectral_norm,
)
from .sampling import uniform_scheme

__all__ = [
    "SaddleInstance",
    "StrongInstance",
    "generate_saddle",
    "generate_strong",
    "objective_h",
    "kkt_residual",
    "dump_instance",
    "load_instance",
]

SPLITS = ("rows", "single")


@dataclass
class SaddleInstance:
    G: np.ndarray
    b: np.ndarray
    D: np.ndarray
    x0: np.ndarray
    seed: int | None = None
    split: str = "rows"
    beta: float = field(init=False)
    lipschitz_B: float = field(init=False)

    def __post_init__(self):
        self.G = np.atleast_2d(np.asarray(self.G, dtype=np.float64))
        self.D = np.atleast_2d(np.asarray(self.D, dtype=np.float64))
        self.b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        self.x0 = np.asarray(self.x0, dtype=np.float64).reshape(-1)
        t, d = self.G.shape
        q = self.D.shape[0]
        if self.D.shape[1] != d or self.b.size != t or self.x0.size != d + q:
            raise ValueError(
                f"inconsistent shapes: G {self.G.shape}, D {self.D.shape}, "
                f"b {self.b.shape}, x0 {self.x0.shape}"
            )
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")
        self.d, self.q, self.t = d, q, t
        self.resolvent = ProductResolvent(d, q)
        self.C = LeastSquaresGradient(self.G, self.b, q)
        self.beta = self.C.beta
        self.coupling = SkewCoupling(self.D)
        self.lipschitz_B = self.coupling.lipschitz_bound
        if self.split == "rows":
            self.B = RowSplitOperator(self.coupling.matrix())
        else:
            self.B = FiniteSumOperator([self.coupling], [self.lipschitz_B])
        self.x_star = None

    @property
    def dim(self) -> int:
        return self.d + self.q

    def objective(self, z: np.ndarray) -> float:
        return objective_h(self, z)

    def with_split(self, split: str) -> "SaddleInstance":
        return SaddleInstance(self.G, self.b, self.D, self.x0, seed=self.seed, split=split)


@dataclass
class StrongInstance:
    S: np.ndarray
    mu: float
    c0: float
    x0: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        self.S = np.atleast_2d(np.asarray(self.S, dtype=np.float64))
        self.x0 = np.asarray(self.x0, dtype=np.float64).reshape(-1)
        if self.mu <= 0 or self.c0 <= 0:
            raise ValueError("mu and c0 must be positive")
        if not np.allclose(self.S, -self.S.T, rtol=0, atol=1e-14 * max(1.0, np.abs(self.S).max())):
            raise ValueError("S must be skew-symmetric")
        n = self.S.shape[0]
        self.matrix = self.mu * np.eye(n) + self.S
        self.B = RowSplitOperator(self.matrix)
        self.C = ScaledIdentity(self.c0)
        self.beta = self.C.beta
        self.resolvent = IdentityResolvent()
        self.lipschitz_B = spectral_norm(self.matrix)
        self.x_star = np.zeros(n)

    @property
    def dim(self) -> int:
        return self.S.shape[0]

    def objective(self, z: np.ndarray) -> float:
        """Squared distance to the solution."""
        return float(z @ z)


def generate_saddle(d: int, q: int, t: int | None = None, seed: int = 0,
                    strict_ratio: bool = True, split: str = "rows") -> SaddleInstance:
    """Random constrained least-squares instance.

    ``G``, ``D``, ``b`` and the start point are standard normal draws from one
    seeded stream, in that order; the dual start is projected onto ``R+^q``.
    Rows or columns of ``D`` that are exactly zero are redrawn.
    """
    if t is None:
        t = d // 2
    if min(d, q, t) <= 0:
        raise ValueError("d, q and t must be positive")
    if strict_ratio and d != 2 * t:
        raise ValueError(f"expected d = 2t, got d={d}, t={t} (pass strict_ratio=False)")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((t, d))
    D = rng.standard_normal((q, d))
    while not (np.all(np.any(D, axis=0)) and np.all(np.any(D, axis=1))):
        D = rng.standard_normal((q, d))
    b = rng.standard_normal(t)
    x0 = rng.standard_normal(d)
    u0 = np.maximum(rng.standard_normal(q), 0.0)
    return SaddleInstance(G, b, D, np.concatenate([x0, u0]), seed=seed, split=split)


def generate_strong(dim: int, mu: float, c0: float, seed: int = 0,
                    target_ratio: float | None = None) -> StrongInstance:
    """Random strongly monotone affine instance with solution ``0``.

    ``S = (R - R^T) / 2`` for a standard normal ``R``. If ``target_ratio`` is
    given, ``S`` is rescaled so that ``mu / ||mu I + S|| = target_ratio``
    (``mu I + S`` is normal, so its norm is ``sqrt(mu^2 + ||S||^2)``).
    """
    if mu <= 0 or c0 <= 0:
        raise ValueError("mu and c0 must be positive")
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((dim, dim))
    S = 0.5 * (R - R.T)
    if target_ratio is not None:
        if not 0 < target_ratio <= 1:
            raise ValueError("target_ratio must lie in (0, 1]")
        s = np.linalg.norm(S, 2)
        want = mu * np.sqrt(1.0 / target_ratio**2 - 1.0)
        S = S * (want / s) if s > 0 else S
    x0 = rng.standard_normal(dim)
    return StrongInstance(S, mu, c0, x0, seed=seed)


def objective_h(inst: SaddleInstance, x) -> float:
    """``0.5 ||G x - b||^2``; accepts the primal block or the full point."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size == inst.d + inst.q:
        x = x[: inst.d]
    if x.size != inst.d:
        raise ValueError(f"expected a vector of size {inst.d}, got {x.size}")
    r = inst.G @ x - inst.b
    return 0.5 * float(r @ r)


def kkt_residual(inst, z, gamma: float) -> float:
    """Fixed-point residual ``||z - J_{gamma A}(z - gamma (B + C) z)||``."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    z = np.asarray(z, dtype=np.float64)
    forward = z - gamma * (inst.B.full_apply(z) + inst.C(z))
    return float(np.linalg.norm(z - inst.resolvent(gamma, forward)))


def _write_manifest(path, items: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in items.items():
            if isinstance(value, float):
                value = f"{value:.17g}"
            fh.write(f"{key}={value}\n")


def _read_manifest(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                key, _, value = line.partition("=")
                out[key.strip()] = value.strip()
    return out


def dump_instance(inst, directory) -> None:
    """Write an instance as CSV matrices plus ``manifest.txt``."""
    os.makedirs(directory, exist_ok=True)
    join = lambda name: os.path.join(directory, name)  # noqa: E731
    L_uniform = uniform_scheme(inst.B.component_lipschitz).mean_lipschitz
    if isinstance(inst, SaddleInstance):
        save_matrix_csv(join("G.csv"), inst.G)
        save_matrix_csv(join("D.csv"), inst.D)
        save_matrix_csv(join("b.csv"), inst.b)
        save_matrix_csv(join("x0.csv"), inst.x0)
        _write_manifest(join("manifest.txt"), {
            "kind": "saddle", "d": inst.d, "q": inst.q, "t": inst.t,
            "seed": inst.seed, "split": inst.split, "beta": inst.beta,
            "L_B": inst.lipschitz_B, "L_uniform": L_uniform,
        })
    elif isinstance(inst, StrongInstance):
        save_matrix_csv(join("S.csv"), inst.S)
        save_matrix_csv(join("x0.csv"), inst.x0)
        _write_manifest(join("manifest.txt"), {
            "kind": "strong", "dim": inst.dim, "mu": float(inst.mu),
            "c0": float(inst.c0), "seed": inst.seed, "beta": inst.beta,
            "L_B": inst.lipschitz_B, "L_uniform": L_uniform,
        })
    else:
        raise TypeError(f"cannot dump {type(inst).__name__}")


def load_instance(directory):
    join = lambda name: os.path.join(directory, name)  # noqa: E731
    meta = _read_manifest(join("manifest.txt"))
    seed = None if meta.get("seed") in (None, "None") else int(meta["seed"])
    x0 = load_matrix_csv(join("x0.csv")).reshape(-1)
    if meta.get("kind") == "saddle":
        return SaddleInstance(
            load_matrix_csv(join("G.csv")), load_matrix_csv(join("b.csv")).reshape(-1),
            load_matrix_csv(join("D.csv")), x0, seed=seed, split=meta.get("split", "rows"),
        )
    if meta.get("kind") == "strong":
        return StrongInstance(load_matrix_csv(join("S.csv")), float(meta["mu"]),
                              float(meta["c0"]), x0, seed=seed)
    raise ValueError(f"unknown instance kind {meta.get('kind')!r} in {directory}")
