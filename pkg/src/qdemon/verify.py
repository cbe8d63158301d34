"""Self-checks run by ``qdemon verify``: invariants and the dense oracle.

Random inputs come from a fixed seed, so the suite is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import lindblad, mpdo, opalg, states, thermo
from .config import SweepConfig
from .lindblad import DemonParams

SEED = 20240611


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def random_params(rng: np.random.Generator) -> DemonParams:
    beta_h = rng.uniform(0.0, 2.0)
    return DemonParams(
        delta=rng.uniform(0.5, 2.0),
        beta_h=beta_h,
        beta_c=beta_h + rng.uniform(0.0, 2.0),
        tau=rng.uniform(0.05, 2.0),
        gamma_h=rng.uniform(0.5, 3.0),
        gamma_c=rng.uniform(0.5, 3.0),
    )


def fixed_point_residual(p: DemonParams) -> float:
    rho_d, rho_m = lindblad.fixed_point(p)
    out = lindblad.build_lindbladian(p) @ opalg.vectorize(np.kron(rho_d, rho_m))
    return float(np.max(np.abs(out)))


def oracle_gap(tape: mpdo.MpdoState, p: DemonParams, n_sites: int) -> dict[str, float]:
    """Trace distances between the MPDO pipeline and dense evolution.

    The dense state holds the demon and ``n_sites`` tape qubits; the demon
    has met the first ``n_sites - 1`` of them, and the last one is ``M``.
    """
    phi = lindblad.interaction_channel(p)
    rho_d0 = lindblad.fixed_point(p)[0]
    mpo = mpdo.compile_mpo(phi, rho_d0)
    bundle = mpdo.propagate(tape, mpo, n_sites - 1, window=1)
    dense = mpdo.dense_input(tape, n_sites, rho_d0)
    pre = mpdo.brute_force(dense, phi, n_sites - 1)
    post = mpdo.brute_force(dense, phi, n_sites)
    dims = [2] * (n_sites + 1)
    dm, dm_post = (opalg.partial_trace(r, dims, [0, n_sites]) for r in (pre, post))
    return {
        "rho_dm": opalg.trace_distance(bundle.rho_dm, dm),
        "rho_dm_post": opalg.trace_distance(bundle.rho_dm_post, dm_post),
        "rho_m": opalg.trace_distance(bundle.rho_m, opalg.partial_trace(dm, [2, 2], [1])),
        "rho_m_post": opalg.trace_distance(bundle.rho_m_post, opalg.partial_trace(dm_post, [2, 2], [1])),
    }


def history_gap(tape: mpdo.MpdoState, p: DemonParams, n: int) -> tuple[float, float]:
    """Reassembly error against the MPDO joint state, and the largest demon coherence."""
    hist = mpdo.classical_histories(tape, p, n, window=1)
    mpo = mpdo.compile_mpo(lindblad.interaction_channel(p), lindblad.fixed_point(p)[0])
    bundle = mpdo.propagate(tape, mpo, n, window=1)
    gap = float(np.max(np.abs(mpdo.reassemble(hist) - bundle.rho_dmw)))
    coh = max(abs(h.rho_d[0, 1]) for h in hist)
    return gap, float(coh)


def random_dense_state(rng: np.random.Generator, n_qubits: int) -> np.ndarray:
    return states.random_density(rng, 2**n_qubits)


def _check(name: str, ok: bool, detail: str) -> CheckResult:
    return CheckResult(name, bool(ok), detail)


def run_all(cfg: SweepConfig | None = None) -> list[CheckResult]:
    cfg = cfg or SweepConfig()
    p = cfg.demon.params()
    rng = np.random.default_rng(SEED)
    out: list[CheckResult] = []

    worst = max(fixed_point_residual(random_params(rng)) for _ in range(20))
    out.append(_check("fixed point", worst < 1e-10, f"max |L rho_fp| = {worst:.2e} over 20 parameter sets"))

    phi = lindblad.interaction_channel(p)
    neg, tp = opalg.choi_min_eigenvalue(phi), opalg.trace_preservation_error(phi)
    out.append(_check("CPTP", neg >= -1e-10 and tp < 1e-12, f"min Choi eigenvalue {neg:.2e}, trace error {tp:.2e}"))
    ok, leak = lindblad.classicality_check(phi)
    out.append(_check("classicality", ok, f"population/coherence coupling {leak:.2e}"))

    tapes = {"ghz(0.5)": states.ghz(0.5), "random chi=2": states.random_tape(rng)}
    gap = max(max(oracle_gap(t, p, 6).values()) for t in tapes.values())
    out.append(_check("dense oracle", gap < 1e-8, f"max trace distance {gap:.2e} at 6 sites"))

    resid = math.inf
    for fam in ("ghz", "product"):
        for eps in np.linspace(0, 0.5, 6):
            q = cfg.demon.params(epsilon=float(eps))
            for z in np.linspace(-0.5, 0.5, 6):
                tape = states.ghz(float(z)) if fam == "ghz" else states.product(float(z))
                mpo = mpdo.compile_mpo(lindblad.interaction_channel(q), lindblad.fixed_point(q)[0])
                rep = thermo.clausius_report(mpdo.steady_state(tape, mpo, window=cfg.window, tol=cfg.tol), q)
                resid = min(resid, rep.residual_global)
    out.append(_check("global Clausius", resid >= -1e-8, f"min residual {resid:.2e} on 2x6x6 points"))

    g, coh = history_gap(tapes["random chi=2"], p, 6)
    out.append(_check("classical histories", g < 1e-9 and coh <= 1e-10, f"reassembly {g:.2e}, demon coherence {coh:.2e}"))

    mono = min(thermo.monotonicity_gap(random_dense_state(rng, 4), p) for _ in range(10))
    out.append(_check("relative-entropy monotonicity", mono >= -1e-9, f"min decrease {mono:.2e} over 10 inputs"))

    an = max(
        abs(thermo.ghz_analytic(z, p).ds_m - thermo.clausius_report(
            mpdo.steady_state(states.ghz(z), mpdo.compile_mpo(phi, lindblad.fixed_point(p)[0])), p).ds_m)
        for z in (-0.5, 0.0, 0.5)
    )
    out.append(_check("analytic GHZ path", an < 1e-9, f"max |ds_m difference| {an:.2e}"))
    return out
