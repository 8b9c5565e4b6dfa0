"""Forward-backward-half-forward splitting, deterministic and variance reduced.

Both solvers target ``0 in (A + B + C) x`` where ``A`` is reached through its
resolvent, ``B`` is monotone and Lipschitz (a finite sum for the stochastic
method) and ``C`` is ``beta``-cocoercive.

Cost accounting uses component evaluations of ``B``: a full evaluation costs
``N`` units and one oracle call costs 1. One epoch is ``N`` units. Evaluations
of ``C`` are counted separately.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .sampling import OracleScheme, RngStream, bernoulli, draw_index, make_scheme
from .trace import IterationTrace

logger = logging.getLogger(__name__)

__all__ = [
    "DivergenceError",
    "gamma_max",
    "validate_gamma",
    "fbhf_chi",
    "experimental_gamma",
    "experimental_gamma_fbhf",
    "VrfbhfConfig",
    "VrfbhfParams",
    "FbhfConfig",
    "FbhfParams",
    "StrongMonotoneConfig",
    "strong_preset",
    "SolverState",
    "init_vrfbhf",
    "init_fbhf",
    "vrfbhf_step",
    "fbhf_step",
    "lyapunov",
    "expected_lyapunov",
    "expected_rate_potential",
    "rate_bound",
    "RunResult",
    "run",
]

DIVERGENCE_NORM = 1e150
TINY_NORM = 1e-300


class DivergenceError(ArithmeticError):
    """Raised when an iterate becomes non-finite or exceeds ``1e150`` in norm."""

    def __init__(self, iteration: int, message: str = ""):
        self.iteration = iteration
        super().__init__(message or f"iterate diverged at iteration {iteration}")


# ---------------------------------------------------------------------------
# Step-size rules
# ---------------------------------------------------------------------------


def gamma_max(lam: float, beta: float, L: float) -> float:
    """Upper end of the admissible open interval ``(0, gamma_max)``.

    ``gamma_max = 4 beta (1 - lam) / (1 + sqrt(1 + 16 beta^2 L^2 (1 - lam)))``.
    """
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"lambda must lie in [0, 1), got {lam}: the step-size interval is empty")
    if beta <= 0:
        raise ValueError("beta must be positive")
    if L < 0:
        raise ValueError("L must be nonnegative")
    if math.isinf(beta):
        # C = 0: the bound tends to sqrt(1 - lam) / L
        return math.inf if L == 0 else math.sqrt(1.0 - lam) / L
    r = 1.0 - lam
    return 4.0 * beta * r / (1.0 + math.sqrt(1.0 + 16.0 * beta**2 * L**2 * r))


def validate_gamma(lam: float, p: float, beta: float, L: float, gamma: float | None = None) -> float:
    """Return ``gamma_max`` and, if ``gamma`` is given, check ``0 < gamma < gamma_max``."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    gmax = gamma_max(lam, beta, L)
    if gamma is not None and not 0.0 < gamma < gmax:
        raise ValueError(f"step size {gamma!r} outside the admissible interval (0, {gmax!r})")
    return gmax


def fbhf_chi(beta: float, L_B: float) -> float:
    """``chi = 4 beta / (1 + sqrt(1 + 16 beta^2 L_B^2))``."""
    return gamma_max(0.0, beta, L_B)


def experimental_gamma(lam: float, beta: float, L: float) -> float:
    """Default stochastic step ``beta (1 - lam) / (1 + sqrt(1 + 16 beta^2 L^2 (1 - lam)))``."""
    return gamma_max(lam, beta, L) / 4.0


def experimental_gamma_fbhf(beta: float, L_B: float) -> float:
    """Default deterministic step ``beta / (1 + sqrt(1 + 16 beta^2 L_B^2))``, i.e. ``chi / 4``."""
    return fbhf_chi(beta, L_B) / 4.0


# ---------------------------------------------------------------------------
# Configurations
# ---------------------------------------------------------------------------


@dataclass
class VrfbhfConfig:
    """User-facing settings of the variance-reduced solver.

    ``p=None`` selects ``1 / (4N)``. The step size is ``gamma`` if given,
    otherwise ``gamma_fraction * gamma_max`` if given, otherwise the
    experimental default :func:`experimental_gamma`.
    """

    lam: float = 0.1
    p: float | None = None
    gamma: float | None = None
    gamma_fraction: float | None = None
    scheme: str = "uniform"
    max_epochs: float = 100.0
    tol: float | None = 1e-8
    seed: int = 0

    name = "vrfbhf"

    def resolve(self, problem) -> "VrfbhfParams":
        scheme = make_scheme(self.scheme, problem.B)
        N = scheme.n
        p = 1.0 / (4 * N) if self.p is None else float(self.p)
        L = scheme.mean_lipschitz
        gmax = validate_gamma(self.lam, p, problem.beta, L)
        if self.gamma is not None:
            gamma = float(self.gamma)
        elif self.gamma_fraction is not None:
            if not 0.0 < self.gamma_fraction <= 1.0:
                raise ValueError("gamma_fraction must lie in (0, 1]")
            gamma = self.gamma_fraction * gmax
        else:
            gamma = experimental_gamma(self.lam, problem.beta, L)
        validate_gamma(self.lam, p, problem.beta, L, gamma)
        return VrfbhfParams(lam=float(self.lam), p=p, gamma=gamma, scheme=scheme,
                            beta=problem.beta, L=L, gamma_max=gmax)


@dataclass(frozen=True)
class VrfbhfParams:
    lam: float
    p: float
    gamma: float
    scheme: OracleScheme
    beta: float
    L: float
    gamma_max: float


@dataclass
class FbhfConfig:
    """Settings of the deterministic solver.

    ``gamma`` must lie in ``[eta, chi - eta]`` for some ``eta in (0, chi/2)``;
    when ``eta`` is omitted the largest feasible one, ``min(gamma, chi -
    gamma)``, is used. ``projection`` is ``P_X`` (identity when ``None``).
    """

    gamma: float | None = None
    eta: float | None = None
    projection: Callable[[np.ndarray], np.ndarray] | None = None
    max_epochs: float = 100.0
    tol: float | None = 1e-8

    name = "fbhf"
    seed = None

    def resolve(self, problem) -> "FbhfParams":
        chi = fbhf_chi(problem.beta, problem.lipschitz_B)
        gamma = experimental_gamma_fbhf(problem.beta, problem.lipschitz_B) if self.gamma is None else float(self.gamma)
        eta = min(gamma, chi - gamma) if self.eta is None else float(self.eta)
        if not 0.0 < eta < chi / 2 or not eta <= gamma <= chi - eta:
            raise ValueError(f"step size {gamma!r} not in [eta, chi - eta] with eta={eta!r}, chi={chi!r}")
        return FbhfParams(gamma=gamma, eta=eta, chi=chi, beta=problem.beta,
                          L_B=problem.lipschitz_B, projection=self.projection)


@dataclass(frozen=True)
class FbhfParams:
    gamma: float
    eta: float
    chi: float
    beta: float
    L_B: float
    projection: Callable | None = None


@dataclass(frozen=True)
class StrongMonotoneConfig:
    """Parameters giving a linear rate when ``B`` is ``mu``-strongly monotone."""

    p: float
    mu: float
    beta: float
    L: float
    lam: float
    gamma: float
    c: float
    rho: float

    def to_config(self, **kwargs) -> VrfbhfConfig:
        return VrfbhfConfig(lam=self.lam, p=self.p, gamma=self.gamma, **kwargs)


def strong_preset(p: float, mu: float, beta: float, L: float) -> StrongMonotoneConfig:
    """``lam = 1 - p``, ``gamma = min(sqrt(p)/(2L), beta p)``,
    ``c = min(gamma mu, p / ((1 + sqrt(p)) (4 + p)))`` and ``rho = 1 / (1 + c/4)``.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    if beta <= 0:
        raise ValueError("beta must be positive")
    if not 0.0 < mu <= L:
        raise ValueError(f"need 0 < mu <= L, got mu={mu}, L={L}")
    gamma = min(math.sqrt(p) / (2.0 * L), beta * p)
    c = min(gamma * mu, p / ((1.0 + math.sqrt(p)) * (4.0 + p)))
    return StrongMonotoneConfig(p=p, mu=mu, beta=beta, L=L, lam=1.0 - p,
                                gamma=gamma, c=c, rho=1.0 / (1.0 + c / 4.0))


def rate_bound(preset: StrongMonotoneConfig, k, initial_dist_sq: float):
    """``rho^k * 2 / (1 - p) * ||x^0 - x*||^2``; infinite when ``p = 1``."""
    k = np.asarray(k, dtype=np.float64)
    if preset.p >= 1.0:
        return np.full_like(k, np.inf)
    return preset.rho**k * (2.0 / (1.0 - preset.p)) * initial_dist_sq


# ---------------------------------------------------------------------------
# Iterations
# ---------------------------------------------------------------------------


@dataclass
class SolverState:
    """Iterate and bookkeeping. For FBHF ``w`` and the caches are unused."""

    x: np.ndarray
    w: np.ndarray | None = None
    Bw: np.ndarray | None = None
    Cw: np.ndarray | None = None
    k: int = 0
    calls_B: int = 0
    calls_C: int = 0
    updates: int = 0
    w_updated: bool = False
    rng: RngStream | None = None

    def replace(self, **changes) -> "SolverState":
        return dataclasses.replace(self, **changes)


def _check_finite(v: np.ndarray, k: int) -> None:
    if not np.all(np.isfinite(v)):
        raise DivergenceError(k, f"non-finite iterate at iteration {k}")
    if np.linalg.norm(v) > DIVERGENCE_NORM:
        raise DivergenceError(k, f"iterate norm exceeded {DIVERGENCE_NORM:g} at iteration {k}")


def init_vrfbhf(problem, x0=None, seed: int = 0) -> SolverState:
    """``w^0 = x^0`` with ``B w^0`` and ``C w^0`` cached (costs ``N`` units)."""
    x = np.array(problem.x0 if x0 is None else x0, dtype=np.float64)
    return SolverState(x=x, w=x.copy(), Bw=problem.B.full_apply(x), Cw=problem.C(x),
                       calls_B=problem.B.n_components, calls_C=1, rng=RngStream(seed))


def init_fbhf(problem, x0=None) -> SolverState:
    x = np.array(problem.x0 if x0 is None else x0, dtype=np.float64)
    return SolverState(x=x)


def vrfbhf_step(state: SolverState, params: VrfbhfParams, problem,
                index: int | None = None, refresh: bool | None = None) -> SolverState:
    """One iteration of the variance-reduced method.

    The index and the reference-point coin are drawn from ``state.rng`` in
    that order unless supplied, in which case no draw is consumed. Returns a
    new state; the input is not modified.
    """
    lam, gamma = params.lam, params.gamma
    B = problem.B
    x_bar = lam * state.x + (1.0 - lam) * state.w
    y = problem.resolvent(gamma, x_bar - gamma * (state.Bw + state.Cw))
    i = draw_index(state.rng, params.scheme) if index is None else index
    scale = gamma * params.scheme.weights[i]
    x_next = y + scale * (B.component(i, state.w) - B.component(i, y))
    if refresh is None:
        refresh = bernoulli(state.rng, params.p)
    k = state.k + 1
    _check_finite(x_next, k)

    if refresh:
        return state.replace(x=x_next, w=x_next, Bw=B.full_apply(x_next), Cw=problem.C(x_next),
                             k=k, calls_B=state.calls_B + 2 + B.n_components,
                             calls_C=state.calls_C + 1, updates=state.updates + 1,
                             w_updated=True)
    return state.replace(x=x_next, k=k, calls_B=state.calls_B + 2, w_updated=False)


def fbhf_step(state: SolverState, params: FbhfParams, problem) -> SolverState:
    """One deterministic forward-backward-half-forward iteration."""
    gamma = params.gamma
    x = state.x
    Bx = problem.B.full_apply(x)
    p = problem.resolvent(gamma, x - gamma * (Bx + problem.C(x)))
    x_next = p + gamma * (Bx - problem.B.full_apply(p))
    if params.projection is not None:
        x_next = params.projection(x_next)
    k = state.k + 1
    _check_finite(x_next, k)
    N = problem.B.n_components
    return state.replace(x=x_next, k=k, calls_B=state.calls_B + 2 * N, calls_C=state.calls_C + 1)


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------


def lyapunov(x, w, x_star, lam: float, p: float) -> float:
    """``lam ||x - x*||^2 + (1 - lam) / p ||w - x*||^2``."""
    dx = np.asarray(x) - x_star
    dw = np.asarray(w) - x_star
    return lam * float(dx @ dx) + (1.0 - lam) / p * float(dw @ dw)


def _enumerate_next(state, params, problem):
    """Yield ``(probability, next_state)`` over every index and coin outcome."""
    probs = params.scheme.probabilities
    for i in range(params.scheme.n):
        if probs[i] == 0.0:
            continue
        for refresh, pr in ((True, params.p), (False, 1.0 - params.p)):
            if pr > 0.0:
                yield probs[i] * pr, vrfbhf_step(state, params, problem, index=i, refresh=refresh)


def expected_lyapunov(state: SolverState, params: VrfbhfParams, problem, x_star) -> tuple[float, float]:
    """Return ``(Phi_k, E_k[Phi_{k+1}])`` by exact enumeration of the draws."""
    phi = lyapunov(state.x, state.w, x_star, params.lam, params.p)
    expected = sum(pr * lyapunov(s.x, s.w, x_star, params.lam, params.p)
                   for pr, s in _enumerate_next(state, params, problem))
    return phi, float(expected)


def expected_rate_potential(state: SolverState, params: VrfbhfParams, problem, x_star) -> tuple[float, float]:
    """Return ``(V_k, E_k[V_{k+1}])`` for ``V = (1 - p)||x - x*||^2 + ||w - x*||^2``."""
    def potential(s):
        dx, dw = s.x - x_star, s.w - x_star
        return (1.0 - params.p) * float(dx @ dx) + float(dw @ dw)

    expected = sum(pr * potential(s) for pr, s in _enumerate_next(state, params, problem))
    return potential(state), float(expected)


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    trace: IterationTrace
    state: SolverState
    reason: str
    params: object

    @property
    def x(self) -> np.ndarray:
        return self.state.x


def _relative_change(new: np.ndarray, old: np.ndarray) -> tuple[float, bool]:
    step = float(np.linalg.norm(new - old))
    base = float(np.linalg.norm(old))
    if base < TINY_NORM:
        return step, True
    return step / base, False


def run(problem, config, x0=None, x_star=None, objective: Callable | None = None,
        record_every: int = 1, timing: bool = True) -> RunResult:
    """Iterate until ``E_k <= tol`` or the epoch budget is spent.

    Parameters
    ----------
    problem
        Any object with ``resolvent``, ``B``, ``C``, ``beta``, ``lipschitz_B``
        and ``x0`` attributes (see :mod:`splitkit.problems`).
    config : VrfbhfConfig or FbhfConfig
    x0 : ndarray, optional
        Start point; defaults to ``problem.x0``.
    x_star : ndarray, optional
        Reference solution for the ``phi`` and ``dist_sq`` columns. Defaults
        to ``problem.x_star`` when the problem has one.
    objective : callable, optional
        Evaluated on recorded iterates for the ``h`` column.
    record_every : int
        Record every n-th iteration; the initial and final states are always
        recorded.
    timing : bool
        Record cumulative wall time of the solver steps. Disable for
        byte-reproducible traces.

    Returns
    -------
    RunResult
        ``reason`` is ``"converged"``, ``"epoch_budget"`` or ``"diverged"``.
    """
    if record_every < 1:
        raise ValueError("record_every must be at least 1")
    if x_star is None:
        x_star = getattr(problem, "x_star", None)
    params = config.resolve(problem)
    stochastic = isinstance(config, VrfbhfConfig)
    N = problem.B.n_components
    if stochastic:
        state = init_vrfbhf(problem, x0, seed=config.seed)
        step = lambda s: vrfbhf_step(s, params, problem)  # noqa: E731
    else:
        state = init_fbhf(problem, x0)
        step = lambda s: fbhf_step(s, params, problem)  # noqa: E731

    tol = config.tol
    use_tol = tol is not None and math.isfinite(tol)
    trace = IterationTrace()
    elapsed = 0.0

    def record(s, E=None, E_abs=None):
        row = dict(k=s.k, epochs=s.calls_B / N, oracle_calls_B=s.calls_B, calls_C=s.calls_C,
                   E_k=E, E_abs=E_abs, w_updated=int(s.w_updated) if s.k > 0 else None,
                   wall_time_s=elapsed if timing else None)
        if objective is not None:
            row["h"] = objective(s.x)
        if x_star is not None:
            d = s.x - x_star
            row["dist_sq"] = float(d @ d)
            if stochastic:
                row["phi"] = lyapunov(s.x, s.w, x_star, params.lam, params.p)
        trace.append(**row)

    record(state)
    reason = "epoch_budget"
    while True:
        t0 = time.perf_counter()
        try:
            new = step(state)
        except DivergenceError as exc:
            logger.warning("%s", exc)
            reason = "diverged"
            break
        elapsed += time.perf_counter() - t0
        E, guarded = _relative_change(new.x, state.x)
        state = new
        converged = use_tol and E <= tol
        done = converged or state.calls_B / N >= config.max_epochs
        if done or state.k % record_every == 0:
            record(state, E, int(guarded))
        if converged:
            reason = "converged"
            break
        if done:
            break

    trace.meta = _trace_meta(config, params, problem, reason)
    return RunResult(trace=trace, state=state, reason=reason, params=params)


def _trace_meta(config, params, problem, reason: str) -> dict:
    meta = {"solver": config.name}
    if isinstance(params, VrfbhfParams):
        meta.update({"lambda": params.lam, "p": params.p, "gamma": params.gamma,
                     "seed": config.seed, "scheme": params.scheme.kind,
                     "beta": params.beta, "L": params.L})
    else:
        meta.update({"lambda": None, "p": None, "gamma": params.gamma, "seed": None,
                     "scheme": None, "beta": params.beta, "L": params.L_B})
    meta["N"] = problem.B.n_components
    meta["termination"] = reason
    return meta
