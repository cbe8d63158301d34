"""Run configuration: YAML schema, validation and defaults.

A config file is a YAML mapping; every key is optional::

    family: ghz              # ghz | product | tensors
    state: {zeta: 0.0, theta: 0.0, phi: 0.0}
    demon:
      epsilon: 0.01          # or beta_c; not both
      beta_h: 1.0
      delta: 1.0
      tau: 0.3
      gamma_h: 2.0
      gamma_c: 2.0
    grid:
      zeta:    {start: -0.5, stop: 0.5, num: 201}
      epsilon: [0.0, 0.5, 201]
      phi:     {start: 0.0, stop: 6.283185307179586, num: 60, endpoint: false}
    numerics: {window: 4, tol: 1.0e-12, n_max: 10000, method: mpdo}
    workers: 1
    out: results

The ``tensors`` family takes a raw translation-invariant tape instead of
``zeta``/``theta``/``phi``: four ``chi x chi`` matrices for the operator
labels ``0, 1, +, -`` (entries real or ``[re, im]``), plus an optional
``boundary`` matrix::

    family: tensors
    state:
      tensors:
        - [[0.5, 0], [0, 0]]
        - [[0, 0], [0, 0.5]]
        - [[0, 0], [0, 0]]
        - [[0, 0], [0, 0]]

Errors carry the line and column of the offending node.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import opalg
from .lindblad import DEFAULT_RATE_SCALE, DemonParams
from .mpdo import MpdoState

Matrix = tuple[tuple[complex, ...], ...]

FAMILIES = ("ghz", "product", "tensors")
METHODS = ("mpdo", "analytic")


class ConfigError(ValueError):
    """Invalid configuration, optionally located in the source file."""

    def __init__(self, message: str, source: str | None = None, line: int | None = None, column: int | None = None):
        self.message, self.source, self.line, self.column = message, source, line, column
        where = source or "<config>"
        if line is not None:
            where += f":{line}:{column}"
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class Axis:
    """Evenly spaced grid axis; ``endpoint=False`` drops ``stop``."""

    start: float
    stop: float
    num: int
    endpoint: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ValueError("axis bounds must be finite")
        if self.num < 2:
            raise ValueError("axis resolution must be >= 2")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.num, endpoint=self.endpoint)


@dataclass(frozen=True)
class DemonConfig:
    epsilon: float | None = 0.01
    beta_h: float = 1.0
    beta_c: float | None = None
    delta: float = 1.0
    tau: float = 0.3
    gamma_h: float = DEFAULT_RATE_SCALE
    gamma_c: float = DEFAULT_RATE_SCALE

    def __post_init__(self):
        if (self.epsilon is None) == (self.beta_c is None):
            raise ValueError("give exactly one of demon.epsilon and demon.beta_c")

    def params(self, epsilon: float | None = None, tau: float | None = None) -> DemonParams:
        """Resolve to :class:`DemonParams`; ``epsilon`` overrides the temperature pair."""
        tau = self.tau if tau is None else tau
        common = dict(tau=tau, gamma_h=self.gamma_h, gamma_c=self.gamma_c)
        eps = self.epsilon if epsilon is None else epsilon
        if eps is not None:
            return DemonParams.from_epsilon(eps, beta_h=self.beta_h, delta=self.delta, **common)
        return DemonParams(delta=self.delta, beta_h=self.beta_h, beta_c=self.beta_c, **common)


def _default_grid() -> dict[str, Axis]:
    return {
        "zeta": Axis(-0.5, 0.5, 201),
        "epsilon": Axis(0.0, 0.5, 201),
        "tau": Axis(0.05, 5.0, 100),
        "theta": Axis(0.0, math.pi, 61),
        "phi": Axis(0.0, 2 * math.pi, 60, endpoint=False),
        "zeta_n": Axis(-0.1, 0.1, 21),
    }


@dataclass(frozen=True)
class SweepConfig:
    family: str = "ghz"
    zeta: float = 0.0
    theta: float = 0.0
    phi: float = 0.0
    demon: DemonConfig = field(default_factory=DemonConfig)
    grid: dict[str, Axis] = field(default_factory=_default_grid)
    window: int = 4
    tol: float = 1e-12
    n_max: int = 10_000
    method: str = "mpdo"
    workers: int = 1
    out: str = "results"
    tensors: tuple[Matrix, ...] | None = None
    boundary: Matrix | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {', '.join(FAMILIES)}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {', '.join(METHODS)}")
        if (self.family == "tensors") != (self.tensors is not None):
            raise ValueError("state.tensors is required for, and only for, family tensors")
        if self.boundary is not None and self.tensors is None:
            raise ValueError("state.boundary needs state.tensors")
        if self.tensors is not None:
            try:
                opalg.check_density(self.tape().marginal(2))
            except ValueError as exc:
                raise ValueError(f"state.tensors do not describe a valid tape: {exc}") from None
        if not -1 <= self.zeta <= 1:
            raise ValueError("state.zeta must lie in [-1, 1]")
        if not 0 <= self.theta <= math.pi:
            raise ValueError("state.theta must lie in [0, pi]")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        object.__setattr__(self, "grid", {**_default_grid(), **self.grid})
        unknown = set(self.grid) - set(_default_grid())
        if unknown:
            raise ValueError(f"unknown grid axes: {', '.join(sorted(unknown))}")
        eps = self.grid["epsilon"]
        if min(eps.start, eps.stop) < 0 or max(eps.start, eps.stop) >= 1:
            raise ValueError("grid.epsilon must lie in [0, 1)")
        for name in ("zeta", "zeta_n"):
            ax = self.grid[name]
            if min(ax.start, ax.stop) < -1 or max(ax.start, ax.stop) > 1:
                raise ValueError(f"grid.{name} must lie in [-1, 1]")
        if min(self.grid["tau"].start, self.grid["tau"].stop) < 0:
            raise ValueError("grid.tau must be non-negative")
        th = self.grid["theta"]
        if min(th.start, th.stop) < 0 or max(th.start, th.stop) > math.pi:
            raise ValueError("grid.theta must lie in [0, pi]")
        self.demon.params()  # surface parameter errors at load time

    def tape(self) -> MpdoState:
        """The raw tape of the ``tensors`` family."""
        if self.tensors is None:
            raise ValueError("no state.tensors configured")
        return MpdoState(np.array(self.tensors, dtype=complex), None if self.boundary is None else np.array(self.boundary, dtype=complex))

    def with_overrides(self, **kw) -> "SweepConfig":
        """Replace top-level fields, ignoring ``None`` values."""
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        return {
            "family": d["family"],
            "state": {"zeta": self.zeta, "theta": self.theta, "phi": self.phi, **self._tensor_dict()},
            "demon": d["demon"],
            "grid": d["grid"],
            "numerics": {"window": self.window, "tol": self.tol, "n_max": self.n_max, "method": self.method},
            "workers": self.workers,
            "out": self.out,
        }

    def _tensor_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        if self.tensors is not None:
            out["tensors"] = [_pairs(m) for m in self.tensors]
        if self.boundary is not None:
            out["boundary"] = _pairs(self.boundary)
        return out


def _pairs(m: Matrix) -> list[list[list[float]]]:
    return [[[z.real, z.imag] for z in row] for row in m]


_TOP = {"family", "state", "demon", "grid", "numerics", "workers", "out"}
_STATE = {"zeta", "theta", "phi", "tensors", "boundary"}
_NUMERICS = {"window", "tol", "n_max", "method"}
_DEMON = {f.name for f in fields(DemonConfig)}
_AXIS = {"start", "stop", "num", "endpoint"}
_NULLABLE = {"epsilon", "beta_c"}


class _Reader:
    """Walks a composed YAML node tree, reporting errors with source marks."""

    def __init__(self, source: str):
        self.source = source

    def fail(self, node: yaml.Node | None, msg: str) -> ConfigError:
        if node is None:
            return ConfigError(msg, self.source)
        return ConfigError(msg, self.source, node.start_mark.line + 1, node.start_mark.column + 1)

    def mapping(self, node: yaml.Node, allowed: set[str], where: str) -> dict[str, yaml.Node]:
        if not isinstance(node, yaml.MappingNode):
            raise self.fail(node, f"{where} must be a mapping")
        out: dict[str, yaml.Node] = {}
        for k, v in node.value:
            key = self.scalar(k, str, f"key in {where}")
            if key not in allowed:
                raise self.fail(k, f"unknown key {key!r} in {where}; expected one of {', '.join(sorted(allowed))}")
            if key in out:
                raise self.fail(k, f"duplicate key {key!r} in {where}")
            out[key] = v
        return out

    def scalar(self, node: yaml.Node, kind: type, where: str):
        if not isinstance(node, yaml.ScalarNode):
            raise self.fail(node, f"{where} must be a scalar")
        value = yaml.safe_load(yaml.serialize(node))
        if kind is float:
            # accept ints and YAML 1.1-ish floats such as 1e-12
            if isinstance(value, str):
                try:
                    value = float(value)
                except ValueError:
                    raise self.fail(node, f"{where} must be a number, got {value!r}") from None
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise self.fail(node, f"{where} must be a number")
            value = float(value)
            if not math.isfinite(value):
                raise self.fail(node, f"{where} must be finite")
            return value
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise self.fail(node, f"{where} must be an integer")
            return value
        if kind is bool:
            if not isinstance(value, bool):
                raise self.fail(node, f"{where} must be true or false")
            return value
        if not isinstance(value, str):
            value = str(value)
        return value

    def entry(self, node: yaml.Node, where: str) -> complex:
        if isinstance(node, yaml.SequenceNode):
            if len(node.value) != 2:
                raise self.fail(node, f"{where} must be a number or [re, im]")
            re, im = (self.scalar(n, float, where) for n in node.value)
            return complex(re, im)
        return complex(self.scalar(node, float, where))

    def matrix(self, node: yaml.Node, where: str) -> Matrix:
        if not isinstance(node, yaml.SequenceNode) or not all(isinstance(r, yaml.SequenceNode) for r in node.value):
            raise self.fail(node, f"{where} must be a list of rows")
        rows = tuple(tuple(self.entry(e, where) for e in row.value) for row in node.value)
        if not rows or any(len(row) != len(rows) for row in rows):
            raise self.fail(node, f"{where} must be a square matrix")
        return rows

    def tensor_list(self, node: yaml.Node, where: str) -> tuple[Matrix, ...]:
        if not isinstance(node, yaml.SequenceNode) or len(node.value) != 4:
            raise self.fail(node, f"{where} must list four matrices, for labels 0, 1, +, -")
        mats = tuple(self.matrix(m, f"{where}[{i}]") for i, m in enumerate(node.value))
        if len({len(m) for m in mats}) != 1:
            raise self.fail(node, f"{where}: matrices differ in size")
        return mats

    def axis(self, node: yaml.Node, where: str) -> Axis:
        if isinstance(node, yaml.SequenceNode):
            if len(node.value) != 3:
                raise self.fail(node, f"{where} must be [start, stop, num]")
            s, e, n = node.value
            parts = dict(start=self.scalar(s, float, where), stop=self.scalar(e, float, where), num=self.scalar(n, int, where))
        else:
            m = self.mapping(node, _AXIS, where)
            for req in ("start", "stop", "num"):
                if req not in m:
                    raise self.fail(node, f"{where} is missing {req!r}")
            parts = dict(
                start=self.scalar(m["start"], float, f"{where}.start"),
                stop=self.scalar(m["stop"], float, f"{where}.stop"),
                num=self.scalar(m["num"], int, f"{where}.num"),
            )
            if "endpoint" in m:
                parts["endpoint"] = self.scalar(m["endpoint"], bool, f"{where}.endpoint")
        try:
            return Axis(**parts)
        except ValueError as exc:
            raise self.fail(node, f"{where}: {exc}") from None


def parse_config(text: str, source: str = "<config>") -> SweepConfig:
    """Parse YAML text into a validated :class:`SweepConfig`."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line, col = (mark.line + 1, mark.column + 1) if mark else (None, None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}", source, line, col) from None
    if root is None:
        return SweepConfig()
    r = _Reader(source)
    top = r.mapping(root, _TOP, "config")
    kw: dict[str, Any] = {}
    if "family" in top:
        kw["family"] = r.scalar(top["family"], str, "family")
    if "state" in top:
        for k, v in r.mapping(top["state"], _STATE, "state").items():
            if k == "tensors":
                kw[k] = r.tensor_list(v, "state.tensors")
            elif k == "boundary":
                kw[k] = r.matrix(v, "state.boundary")
            else:
                kw[k] = r.scalar(v, float, f"state.{k}")
    if "workers" in top:
        kw["workers"] = r.scalar(top["workers"], int, "workers")
    if "out" in top:
        kw["out"] = r.scalar(top["out"], str, "out")
    if "numerics" in top:
        for k, v in r.mapping(top["numerics"], _NUMERICS, "numerics").items():
            kind = {"window": int, "n_max": int, "tol": float, "method": str}[k]
            kw[k] = r.scalar(v, kind, f"numerics.{k}")
    if "demon" in top:
        dnode = top["demon"]
        dm = r.mapping(dnode, _DEMON, "demon")
        dkw: dict[str, Any] = {
            k: None if k in _NULLABLE and v.tag == "tag:yaml.org,2002:null" else r.scalar(v, float, f"demon.{k}")
            for k, v in dm.items()
        }
        if "beta_c" in dkw and "epsilon" not in dkw:
            dkw["epsilon"] = None
        try:
            kw["demon"] = DemonConfig(**dkw)
        except ValueError as exc:
            raise r.fail(dnode, str(exc)) from None
    if "grid" in top:
        grid = _default_grid()
        for k, v in r.mapping(top["grid"], set(grid), "grid").items():
            grid[k] = r.axis(v, f"grid.{k}")
        kw["grid"] = grid
    try:
        return SweepConfig(**kw)
    except ValueError as exc:
        raise r.fail(_blame(top, str(exc)), str(exc)) from None


def _blame(top: dict[str, yaml.Node], message: str) -> yaml.Node | None:
    # point at the section the message names, if any
    for key in ("grid", "state", "demon", "numerics", "family", "workers"):
        if key in message and key in top:
            return top[key]
    for key in ("zeta", "theta", "window", "tol", "method", "n_max"):
        if key in message:
            for sect in ("state", "numerics"):
                if sect in top:
                    return top[sect]
    return None


def load_config(path: str | Path) -> SweepConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    return parse_config(text, str(path))
