"""Experiment configuration: a single JSON document."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from ..calculus import AnalyticFunction, CalculusError
from ..linalg import LinalgError, matrix_from_literal, matrix_to_literal
from ..quadrature import QuadratureSpec

MODES = (
    "normal_shared_basis",
    "selfadjoint_shared_basis",
    "normal_coupled",
    "selfadjoint_coupled",
    "single_contraction",
    "counterexample",
    "custom",
    "full",
)

# relative to the instance scale unless noted
DEFAULT_TOLERANCES = {
    "chain": 1e-10,
    "ftc": 1e-10,
    "remr2": 1e-10,
    "tf": 1e-9,
    "mutau": 1e-10,
    "min": 1e-8,  # absolute pad
    "tf2": 1e-8,
    "nutau": 1e-10,
    "nin": 1e-8,  # absolute pad
    "connection1": 1e-9,
    "connection2": 1e-9,
    "realweights": 1e-10,
    "support": 1e-8,  # absolute
    "pdest": 1e-9,
    "pd2est": 1e-9,
    "pathperturb": 0.0,
    "hij1": 1e-11,  # absolute
    "m2v-i": 1e-9,  # absolute
    "m2v-ii": 1e-9,  # absolute
    "arem1": 1e-8,
    "arem2": 1e-8,
    "con": 1e-9,
    "con2": 1e-9,
    "dilfla": 1e-12,  # absolute
    "vNineq": 1e-8,  # absolute
    "counterexample": 1e-10,  # absolute
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 42
    n: int = 2
    dim: int = 5
    mode: str = "normal_shared_basis"
    functions: tuple[AnalyticFunction, ...] = ()
    degree: int = 4
    random_functions: int = 2
    quadrature: QuadratureSpec = QuadratureSpec()
    tolerances: dict = field(default_factory=dict)
    trials: int = 20
    grid: int = 0
    dilation_degree: int = 4
    connection_tests: int = 5
    checks: tuple[str, ...] | None = None
    A: tuple | None = None
    B: tuple | None = None
    outputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        if self.n < 1 or self.dim < 1:
            raise ConfigError("n and dim must be positive")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        if self.degree < 0 or self.random_functions < 0:
            raise ConfigError("degree and random_functions must be nonnegative")
        if self.dilation_degree < 1:
            raise ConfigError("dilation_degree must be positive")
        if self.grid and self.grid < 8:
            raise ConfigError("grid must be 0 (automatic) or at least 8")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerance names: {sorted(unknown)}")
        if self.checks is not None:
            bad = set(self.checks) - set(DEFAULT_TOLERANCES)
            if bad:
                raise ConfigError(f"unknown check anchors: {sorted(bad)}")
        if self.mode == "custom":
            if self.A is None or self.B is None:
                raise ConfigError("custom mode needs matrix literals A and B")
            if len(self.A) != len(self.B) or not self.A:
                raise ConfigError("A and B must list the same positive number of matrices")
        for f in self.functions:
            if self.mode not in ("custom", "full", "single_contraction", "counterexample") and f.arity != self.n:
                raise ConfigError(f"function arity {f.arity} does not match n = {self.n}")

    def tolerance(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    def wants(self, anchor: str) -> bool:
        return self.checks is None or anchor in self.checks

    def grid_for(self, n: int) -> int:
        if self.grid:
            return self.grid
        return 128 if n <= 2 else 32

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "functions":
                v = [g.to_literal() for g in v]
            elif f.name == "quadrature":
                v = {"nodes": v.nodes}
            elif f.name in ("A", "B"):
                v = None if v is None else [matrix_to_literal(m) for m in v]
            elif f.name == "checks":
                v = None if v is None else list(v)
            elif f.name == "tolerances":
                v = dict(sorted(v.items()))
            out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        extra = set(obj) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        kw = dict(obj)
        try:
            if "functions" in kw:
                kw["functions"] = tuple(AnalyticFunction.from_literal(g) for g in kw["functions"])
            if "quadrature" in kw:
                kw["quadrature"] = QuadratureSpec.from_config(kw["quadrature"])
            for key in ("A", "B"):
                if kw.get(key) is not None:
                    kw[key] = tuple(matrix_from_literal(m) for m in kw[key])
            if kw.get("checks") is not None:
                kw["checks"] = tuple(kw["checks"])
            for key in ("seed", "n", "dim", "degree", "random_functions", "trials", "grid", "dilation_degree", "connection_tests"):
                if key in kw and not isinstance(kw[key], int):
                    raise ConfigError(f"{key} must be an integer")
            if "tolerances" in kw:
                kw["tolerances"] = {str(k): float(v) for k, v in dict(kw["tolerances"]).items()}
            if kw.get("mode") == "custom" and kw.get("A") is not None:
                kw.setdefault("n", len(kw["A"]))
                kw.setdefault("dim", kw["A"][0].shape[0])
            return cls(**kw)
        except (CalculusError, LinalgError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(obj)
