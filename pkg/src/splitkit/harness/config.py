"""Experiment configuration: a YAML document with ``problem``, ``solvers``,
``run`` and ``output`` sections.

Example::

    problem:
      kind: saddle
      d: 100
      q: 50
    solvers:
      - solver: fbhf
      - solver: vrfbhf
        lambda: 0.1
        p: auto          # 1 / (4 N)
    run:
      seed: 0
      num_seeds: 20
      max_epochs: 200
      tol: 1.0e-8
    output: out
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import yaml

SOLVER_NAMES = ("fbhf", "vrfbhf")
PROBLEM_KINDS = ("saddle", "strong")
METRICS = ("h", "E_k", "phi", "dist_sq")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field and line."""


@dataclass
class ProblemSpec:
    kind: str = "saddle"
    d: int | None = 100
    q: int | None = 50
    t: int | None = None
    dim: int | None = None
    mu: float | None = None
    c0: float | None = None
    target_ratio: float | None = None
    split: str = "rows"
    seed: int | None = None


@dataclass
class SolverSpec:
    solver: str
    label: str | None = None
    lam: float = 0.1
    p: float | None = None
    gamma: float | None = None
    gamma_fraction: float | None = None
    scheme: str = "uniform"

    @property
    def name(self) -> str:
        return self.label or self.solver


@dataclass
class RunControls:
    seed: int = 0
    num_seeds: int = 1
    max_epochs: float = 100.0
    tol: float | None = 1e-8
    record_every: int = 1
    workers: int = 1
    timing: bool = False


@dataclass
class ExperimentConfig:
    problem: ProblemSpec = field(default_factory=ProblemSpec)
    solvers: list = field(default_factory=list)
    run: RunControls = field(default_factory=RunControls)
    output: str = "out"

    def to_dict(self) -> dict:
        out = asdict(self)
        for s in out["solvers"]:
            s["lambda"] = s.pop("lam")
        return out

    def to_text(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        try:
            root = yaml.compose(text)
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f"line {mark.line + 1}: " if mark is not None else ""
            raise ConfigError(f"{where}malformed YAML: {exc}") from None
        lines = _key_lines(root) if root is not None else {}
        return cls.from_dict(data or {}, lines)

    @classmethod
    def from_dict(cls, data: dict, lines: dict | None = None) -> "ExperimentConfig":
        lines = lines or {}

        def fail(path, msg):
            line = lines.get(path)
            where = f" (line {line})" if line is not None else ""
            raise ConfigError(f"{'.'.join(map(str, path))}{where}: {msg}")

        if not isinstance(data, dict):
            fail(("<root>",), "expected a mapping")
        unknown = set(data) - {"problem", "solvers", "run", "output"}
        if unknown:
            key = sorted(unknown)[0]
            fail((key,), "unknown section")

        problem = _build(ProblemSpec, data.get("problem") or {}, ("problem",), fail)
        run = _build(RunControls, data.get("run") or {}, ("run",), fail)
        raw_solvers = data.get("solvers")
        if not isinstance(raw_solvers, list):
            fail(("solvers",), "expected a list of solver entries")
        solvers = []
        for j, entry in enumerate(raw_solvers):
            if not isinstance(entry, dict):
                fail(("solvers", j), "expected a mapping")
            entry = dict(entry)
            if "lambda" in entry:
                entry["lam"] = entry.pop("lambda")
            if entry.get("p") == "auto":
                entry["p"] = None
            solvers.append(_build(SolverSpec, entry, ("solvers", j), fail))
        cfg = cls(problem=problem, solvers=solvers, run=run, output=str(data.get("output", "out")))
        cfg.validate(fail)
        return cfg

    def validate(self, fail=None) -> None:
        if fail is None:
            def fail(path, msg):
                raise ConfigError(f"{'.'.join(map(str, path))}: {msg}")

        pb = self.problem
        if pb.kind not in PROBLEM_KINDS:
            fail(("problem", "kind"), f"must be one of {PROBLEM_KINDS}")
        if pb.kind == "saddle":
            for key in ("d", "q"):
                value = getattr(pb, key)
                if not isinstance(value, int) or value <= 0:
                    fail(("problem", key), "must be a positive integer")
            if pb.split not in ("rows", "single"):
                fail(("problem", "split"), "must be 'rows' or 'single'")
        else:
            if not isinstance(pb.dim, int) or pb.dim <= 0:
                fail(("problem", "dim"), "must be a positive integer")
            for key in ("mu", "c0"):
                value = getattr(pb, key)
                if value is None or value <= 0:
                    fail(("problem", key), "must be positive")
        if not self.solvers:
            fail(("solvers",), "at least one solver is required")
        names = set()
        for j, s in enumerate(self.solvers):
            if s.solver not in SOLVER_NAMES:
                fail(("solvers", j, "solver"), f"must be one of {SOLVER_NAMES}")
            if s.name in names:
                fail(("solvers", j, "label"), f"duplicate label {s.name!r}")
            names.add(s.name)
            if not 0.0 <= s.lam < 1.0:
                fail(("solvers", j, "lambda"), "must lie in [0, 1)")
            if s.p is not None and not 0.0 < s.p <= 1.0:
                fail(("solvers", j, "p"), "must lie in (0, 1]")
            if s.gamma is not None and s.gamma <= 0:
                fail(("solvers", j, "gamma"), "must be positive")
            if s.scheme not in ("uniform", "importance"):
                fail(("solvers", j, "scheme"), "must be 'uniform' or 'importance'")
        r = self.run
        if r.num_seeds < 1:
            fail(("run", "num_seeds"), "must be at least 1")
        if not r.max_epochs > 0:
            fail(("run", "max_epochs"), "must be positive")
        if r.tol is not None and not r.tol > 0:
            fail(("run", "tol"), "must be positive (or omitted to disable)")
        if r.record_every < 1:
            fail(("run", "record_every"), "must be at least 1")
        if r.workers < 1:
            fail(("run", "workers"), "must be at least 1")


_INT_FIELDS = {"d", "q", "t", "dim", "seed", "num_seeds", "record_every", "workers"}
_STR_FIELDS = {"kind", "split", "solver", "label", "scheme"}
_BOOL_FIELDS = {"timing"}


def _build(cls, raw: dict, path: tuple, fail):
    if not isinstance(raw, dict):
        fail(path, "expected a mapping")
    known = {f.name: f.default for f in fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        where = path + ("lambda" if key == "lam" else key,)
        if key not in known:
            fail(where, "unknown field")
        if value is None:
            if known[key] is not None and key != "tol":
                fail(where, "may not be null")
        elif key in _INT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, int):
                fail(where, f"expected an integer, got {value!r}")
        elif key in _STR_FIELDS:
            if not isinstance(value, str):
                fail(where, f"expected a string, got {value!r}")
        elif key in _BOOL_FIELDS:
            if not isinstance(value, bool):
                fail(where, f"expected true or false, got {value!r}")
        else:
            # PyYAML reads exponents without a dot (1e-8) as strings
            try:
                if isinstance(value, bool):
                    raise ValueError
                value = float(value)
            except (TypeError, ValueError):
                fail(where, f"expected a number, got {value!r}")
        kwargs[key] = value
    if cls is SolverSpec and "solver" not in kwargs:
        fail(path + ("solver",), "missing solver name")
    return cls(**kwargs)


def _key_lines(node, path=()) -> dict:
    """Map key paths to 1-based line numbers in the YAML source."""
    out = {}
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            key = key_node.value
            sub = path + (key,)
            out[sub] = key_node.start_mark.line + 1
            out.update(_key_lines(value_node, sub))
    elif isinstance(node, yaml.SequenceNode):
        for j, item in enumerate(node.value):
            sub = path + (j,)
            out[sub] = item.start_mark.line + 1
            out.update(_key_lines(item, sub))
    return out
