"""Forward-backward-half-forward splitting with variance reduction.

Solvers for monotone inclusions ``0 in (A + B + C) x`` with ``A`` maximally
monotone (via its resolvent), ``B`` monotone and Lipschitz with a finite-sum
structure, and ``C`` cocoercive.
"""

from .operators import FiniteSumOperator, RowSplitOperator, spectral_norm
from .problems import (
    SaddleInstance,
    StrongInstance,
    generate_saddle,
    generate_strong,
    kkt_residual,
    objective_h,
)
from .sampling import OracleScheme, RngStream, importance_scheme, uniform_scheme
from .solvers import (
    DivergenceError,
    FbhfConfig,
    VrfbhfConfig,
    gamma_max,
    run,
    strong_preset,
    validate_gamma,
)
from .trace import IterationTrace

__version__ = "0.1.0"
