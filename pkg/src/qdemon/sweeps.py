"""Parameter sweeps behind the command-line tool.

Each sweep turns a :class:`~qdemon.config.SweepConfig` into a :class:`Table`.
Grid points are independent; they run on a bounded process pool and come
back in grid order.  A point that fails keeps its row, with the message in
the ``error`` column and NaN numbers.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from . import lindblad, mpdo, states, thermo
from .config import SweepConfig
from .lindblad import DemonParams
from .thermo import ClausiusReport

LN2 = math.log(2)
CLAUSIUS_TOL = 1e-8

REPORT_COLUMNS = (
    "q_hc",
    "q_beta",
    "ds_m",
    "ds_m_bits",
    "ds_mmt",
    "ds_mmt_bits",
    "di_m_mt",
    "di_m_mt_bits",
    "di_d_m",
    "di_d_m_bits",
    "di_d_mmt",
    "ds_d",
    "zeta_in",
    "zeta_out",
    "residual_local",
    "residual_generalized",
    "residual_global",
    "phase",
    "window",
)


@dataclass
class Table:
    """Column-ordered result rows plus run statistics."""

    columns: tuple[str, ...]
    rows: list[dict[str, Any]] = field(default_factory=list)

    @property
    def n_errors(self) -> int:
        return sum(1 for r in self.rows if r.get("error"))

    def column(self, name: str) -> list[Any]:
        return [r[name] for r in self.rows]

    def stats(self) -> dict[str, Any]:
        conv = [r[k] for r in self.rows for k in r if k.startswith("converged_n") and r[k] is not None]
        wins = [r[k] for r in self.rows for k in r if k.startswith("window") and isinstance(r[k], int)]
        return {
            "points": len(self.rows),
            "errors": self.n_errors,
            "max_interactions": max(conv, default=0),
            "max_window": max(wins, default=0),
        }


def report_fields(rep: ClausiusReport | None, suffix: str = "") -> dict[str, Any]:
    """Flatten a report into CSV fields, with bit-valued copies of entropies."""
    if rep is None:
        out = {c + suffix: math.nan for c in REPORT_COLUMNS}
        out["phase" + suffix] = ""
        out["window" + suffix] = 0
        return out
    d = {
        "q_hc": rep.q_hc,
        "q_beta": rep.q_beta,
        "ds_m": rep.ds_m,
        "ds_mmt": rep.ds_mmt,
        "di_m_mt": rep.di_m_mt,
        "di_d_m": rep.di_d_m,
        "di_d_mmt": rep.di_d_mmt,
        "ds_d": rep.ds_d,
        "zeta_in": rep.zeta_in,
        "zeta_out": rep.zeta_out,
        "residual_local": rep.residual_local,
        "residual_generalized": rep.residual_generalized,
        "residual_global": rep.residual_global,
        "phase": rep.phase,
        "window": rep.window,
    }
    for k in ("ds_m", "ds_mmt", "di_m_mt", "di_d_m"):
        d[k + "_bits"] = d[k] / LN2
    return {c + suffix: d[c] for c in REPORT_COLUMNS}


def _violation(rep: ClausiusReport) -> str:
    if rep.residual_global < -CLAUSIUS_TOL:
        return f"global Clausius residual {rep.residual_global:.3e} below -{CLAUSIUS_TOL:g}"
    return ""


def family_state(family: str, zeta: float, theta: float = 0.0, phi: float = 0.0) -> mpdo.MpdoState:
    if family == "ghz":
        return states.ghz(states.GhzSpec(zeta, theta, phi))
    if family == "product":
        return states.product(zeta)
    raise ValueError(f"unknown family {family!r}")


def solve(
    tape: mpdo.MpdoState,
    p: DemonParams,
    cfg: SweepConfig,
    strict: bool = True,
    window_terms: bool = True,
) -> tuple[ClausiusReport, int]:
    """Steady state and report for one tape; returns the interaction count too."""
    mpo = mpdo.compile_mpo(lindblad.interaction_channel(p), lindblad.fixed_point(p)[0])
    bundle = mpdo.steady_state(tape, mpo, window=cfg.window, tol=cfg.tol, n_max=cfg.n_max)
    return thermo.clausius_report(bundle, p, strict=strict, window_terms=window_terms), bundle.converged_n


def config_state(cfg: SweepConfig) -> mpdo.MpdoState:
    """The tape a config describes: a named family or raw tensors."""
    if cfg.family == "tensors":
        return cfg.tape()
    return family_state(cfg.family, cfg.zeta, cfg.theta, cfg.phi)


def simulate(cfg: SweepConfig) -> tuple[ClausiusReport, int]:
    """Single point at the configured state and demon parameters.

    A window that does not settle leaves NaN window terms rather than failing.
    """
    p = cfg.demon.params()
    if cfg.method == "analytic":
        if cfg.family != "ghz" or cfg.theta != 0:
            raise ValueError("the analytic method covers only the z-basis GHZ family")
        return thermo.ghz_analytic(cfg.zeta, p), 0
    return solve(config_state(cfg), p, cfg, strict=False)


def _guard(fn: Callable[..., dict[str, Any]], blank: Callable[[], dict[str, Any]], *args) -> dict[str, Any]:
    try:
        return fn(*args)
    except Exception as exc:  # noqa: BLE001 - a failing point must not stop the sweep
        row = blank()
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row


def _run(fn: Callable, points: Sequence[tuple], workers: int) -> list[dict[str, Any]]:
    if workers <= 1 or len(points) < 2:
        return [fn(*pt) for pt in points]
    chunk = max(1, len(points) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order
        return list(pool.map(_star, itertools.repeat(fn), points, chunksize=chunk))


def _star(fn: Callable, pt: tuple) -> dict[str, Any]:
    return fn(*pt)


# phase diagram -----------------------------------------------------------

PHASE_COLUMNS = ("zeta", "epsilon", "tau", *REPORT_COLUMNS, "converged_n", "error")


def _phase_point(cfg: SweepConfig, zeta: float, eps: float) -> dict[str, Any]:
    def work():
        p = cfg.demon.params(epsilon=eps)
        if cfg.method == "analytic" and cfg.family == "ghz":
            rep, n = thermo.ghz_analytic(zeta, p), 0
        else:
            rep, n = solve(family_state(cfg.family, zeta), p, cfg)
        return {"zeta": zeta, "epsilon": eps, "tau": p.tau, **report_fields(rep), "converged_n": n, "error": _violation(rep)}

    def blank():
        return {"zeta": zeta, "epsilon": eps, "tau": cfg.demon.tau, **report_fields(None), "converged_n": 0}

    return _guard(work, blank)


def phase_diagram(cfg: SweepConfig) -> Table:
    """Clausius terms over the (zeta, epsilon) grid for the configured family."""
    if cfg.family == "ghz" and cfg.theta != 0:
        raise ValueError("phase diagrams use the z-basis GHZ family (theta = 0)")
    if cfg.family == "tensors":
        raise ValueError("phase diagrams need a family with a zeta axis")
    pts = [(cfg, float(z), float(e)) for e in cfg.grid["epsilon"].values() for z in cfg.grid["zeta"].values()]
    return Table(PHASE_COLUMNS, _run(_phase_point, pts, cfg.workers))


# tau sweep ---------------------------------------------------------------

_TAU_FIELDS = ("q_hc", "q_beta", "ds_m", "ds_mmt", "di_m_mt", "residual_global", "phase")
TAU_COLUMNS = (
    "tau",
    *(f"{c}_corr" for c in _TAU_FIELDS),
    *(f"{c}_unc" for c in _TAU_FIELDS),
    "converged_n_corr",
    "converged_n_unc",
    "error",
)


def _pick(rep: ClausiusReport | None, suffix: str) -> dict[str, Any]:
    full = report_fields(rep)
    return {c + suffix: full[c] for c in _TAU_FIELDS}


def _tau_point(cfg: SweepConfig, tau: float) -> dict[str, Any]:
    def work():
        p = cfg.demon.params(tau=tau)
        tape = config_state(cfg)
        if cfg.method == "analytic" and cfg.family == "ghz" and cfg.theta == 0:
            corr, n_corr = thermo.ghz_analytic(cfg.zeta, p), 0
        else:
            corr, n_corr = solve(tape, p, cfg)
        # same single-site state on every qubit, correlations removed
        unc, n_unc = solve(states.product_state(tape.marginal(1)), p, cfg)
        err = "; ".join(e for e in (_violation(corr), _violation(unc)) if e)
        return {
            "tau": tau,
            **_pick(corr, "_corr"),
            **_pick(unc, "_unc"),
            "converged_n_corr": n_corr,
            "converged_n_unc": n_unc,
            "error": err,
        }

    def blank():
        return {"tau": tau, **_pick(None, "_corr"), **_pick(None, "_unc"), "converged_n_corr": 0, "converged_n_unc": 0}

    return _guard(work, blank)


def tau_sweep(cfg: SweepConfig) -> Table:
    """Configured tape against the uncorrelated tape with the same one-site state."""
    pts = [(cfg, float(t)) for t in cfg.grid["tau"].values()]
    return Table(TAU_COLUMNS, _run(_tau_point, pts, cfg.workers))


# quantum advantage -------------------------------------------------------

ADVANTAGE_FIELDS = ("ds_q", "ds_c", "diff", "flag", "q_q", "q_c", "residual_global_q", "converged_n_q", "converged_n_c")
REGION_COLUMNS = ("theta", "phi", "zeta_n", "bloch_x", "bloch_y", "bloch_z", "tau", "epsilon", *ADVANTAGE_FIELDS, "error")
ADV_TAU_COLUMNS = ("tau", "theta", "phi", "zeta_n", *ADVANTAGE_FIELDS, "error")


def advantage_point(spec: states.GhzSpec, p: DemonParams, cfg: SweepConfig) -> dict[str, Any]:
    """Coherent GHZ tape in the ``n`` basis against its z-dephased counterpart."""
    q = states.ghz(spec)
    rq, nq = solve(q, p, cfg, strict=False)
    # the dephased tape's M~ terms converge slowly in the window and are not needed
    rc, nc = solve(states.dephase_z(q), p, cfg, window_terms=False)
    diff, flag = thermo.advantage(rq, rc)
    err = _violation(rq) if rq.window_converged else ""
    return {
        "ds_q": rq.ds_m,
        "ds_c": rc.ds_m,
        "diff": diff,
        "flag": flag,
        "q_q": rq.q_hc,
        "q_c": rc.q_hc,
        "residual_global_q": rq.residual_global,
        "converged_n_q": nq,
        "converged_n_c": nc,
        "error": err,
    }


def _blank_advantage() -> dict[str, Any]:
    row: dict[str, Any] = {k: math.nan for k in ADVANTAGE_FIELDS}
    row.update(flag=False, converged_n_q=0, converged_n_c=0)
    return row


def _region_point(cfg: SweepConfig, theta: float, phi: float, zeta_n: float) -> dict[str, Any]:
    spec = states.GhzSpec(zeta_n, theta, phi)
    x, y, z = spec.bloch
    p = cfg.demon.params()
    head = {"theta": theta, "phi": phi, "zeta_n": zeta_n, "bloch_x": x, "bloch_y": y, "bloch_z": z}
    head.update(tau=p.tau, epsilon=lindblad.epsilon(p))
    return _guard(lambda: {**head, **advantage_point(spec, p, cfg)}, lambda: {**head, **_blank_advantage()})


def _need_ghz(cfg: SweepConfig) -> None:
    if cfg.family != "ghz":
        raise ValueError("advantage sweeps compare GHZ tapes; set family: ghz")


def advantage_region(cfg: SweepConfig) -> Table:
    """Advantage flag over the (theta, phi, zeta_n) grid at fixed demon parameters."""
    _need_ghz(cfg)
    ax = cfg.grid
    pts = [
        (cfg, float(t), float(f), float(z))
        for t in ax["theta"].values()
        for f in ax["phi"].values()
        for z in ax["zeta_n"].values()
    ]
    return Table(REGION_COLUMNS, _run(_region_point, pts, cfg.workers))


def _adv_tau_point(cfg: SweepConfig, tau: float) -> dict[str, Any]:
    spec = states.GhzSpec(cfg.zeta, cfg.theta, cfg.phi)
    head = {"tau": tau, "theta": cfg.theta, "phi": cfg.phi, "zeta_n": cfg.zeta}
    return _guard(
        lambda: {**head, **advantage_point(spec, cfg.demon.params(tau=tau), cfg)},
        lambda: {**head, **_blank_advantage()},
    )


def advantage_tau_sweep(cfg: SweepConfig) -> Table:
    """Advantage along the tau grid for the configured ``(theta, phi, zeta)``."""
    _need_ghz(cfg)
    pts = [(cfg, float(t)) for t in cfg.grid["tau"].values()]
    return Table(ADV_TAU_COLUMNS, _run(_adv_tau_point, pts, cfg.workers))


SWEEPS: dict[str, Callable[[SweepConfig], Table]] = {
    "phase-diagram": phase_diagram,
    "tau-sweep": tau_sweep,
    "advantage-region": advantage_region,
    "advantage-tau": advantage_tau_sweep,
}
