"""Demon-memory interaction: rates, Lindbladian, channel, fixed points.

The demon ``D`` is a qubit with ``|g> = |0>`` and ``|e> = |1>``; the memory
qubit ``M`` is written in its classical basis.  Operators on the pair are
ordered ``D (x) M``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace

import numpy as np

from . import opalg
from .opalg import pauli

# default pair sum of each detailed-balance rate pair, in units of Delta
DEFAULT_RATE_SCALE = 2.0


@dataclass(frozen=True)
class DemonParams:
    """Physical parameters of one interaction (hbar = k_B = 1).

    ``gamma_h`` and ``gamma_c`` are the pair sums ``Gamma_{g->e} +
    Gamma_{g<-e}`` and ``Gamma_{g0->e1} + Gamma_{g0<-e1}``.
    """

    delta: float = 1.0
    beta_h: float = 1.0
    beta_c: float = 1.0
    tau: float = 0.3
    gamma_h: float = DEFAULT_RATE_SCALE
    gamma_c: float = DEFAULT_RATE_SCALE

    def __post_init__(self):
        for name in ("delta", "beta_h", "beta_c", "tau", "gamma_h", "gamma_c"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.beta_h < 0:
            raise ValueError("beta_h must be non-negative")
        if self.beta_c < self.beta_h:
            raise ValueError("beta_c must be >= beta_h (T_c <= T_h)")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if self.gamma_h <= 0 or self.gamma_c <= 0:
            raise ValueError("rate scales must be positive")

    @classmethod
    def from_epsilon(cls, epsilon: float, beta_h: float = 1.0, delta: float = 1.0, **kw) -> "DemonParams":
        """Resolve ``beta_c = beta_h + (2/delta) atanh(epsilon)``."""
        if not 0 <= epsilon < 1:
            raise ValueError("epsilon must lie in [0, 1)")
        return cls(delta=delta, beta_h=beta_h, beta_c=beta_h + 2 * math.atanh(epsilon) / delta, **kw)

    def with_tau(self, tau: float) -> "DemonParams":
        return replace(self, tau=tau)

    @property
    def beta_gap(self) -> float:
        return self.beta_c - self.beta_h


@dataclass(frozen=True)
class RateSet:
    g_to_e: float
    e_to_g: float
    g0_to_e1: float
    e1_to_g0: float


def epsilon(p: DemonParams) -> float:
    return math.tanh(p.beta_gap * p.delta / 2)


def _pair(scale: float, beta_delta: float) -> tuple[float, float]:
    # up = scale / (1 + e^{beta Delta}); written with a logistic that cannot overflow
    up = scale * 0.5 * (1 - math.tanh(beta_delta / 2))
    down = scale * 0.5 * (1 + math.tanh(beta_delta / 2))
    return up, down


def transition_rates(p: DemonParams) -> RateSet:
    """Rates with ``up/down = exp(-beta Delta)`` and pair sums ``gamma``."""
    ge, eg = _pair(p.gamma_h, p.beta_h * p.delta)
    c_up, c_down = _pair(p.gamma_c, p.beta_c * p.delta)
    return RateSet(g_to_e=ge, e_to_g=eg, g0_to_e1=c_up, e1_to_g0=c_down)


def demon_hamiltonian(p: DemonParams) -> np.ndarray:
    return p.delta / 2 * (np.eye(2) - pauli("z"))


def jump_operators(p: DemonParams) -> dict[str, np.ndarray]:
    r = transition_rates(p)
    one = np.eye(2)
    sp, sm = pauli("+"), pauli("-")
    return {
        "g_to_e": math.sqrt(r.g_to_e) * np.kron(sm, one),
        "e_to_g": math.sqrt(r.e_to_g) * np.kron(sp, one),
        "g0_to_e1": math.sqrt(r.g0_to_e1) * np.kron(sm, sm),
        "e1_to_g0": math.sqrt(r.e1_to_g0) * np.kron(sp, sp),
    }


def dissipator(jump: np.ndarray) -> np.ndarray:
    """Superoperator of ``L rho L^dag - {L^dag L, rho}/2``."""
    jj = jump.conj().T @ jump
    return opalg.sandwich(jump) - 0.5 * (opalg.left_mul(jj) + opalg.right_mul(jj))


def hamiltonian_term(h: np.ndarray) -> np.ndarray:
    """Superoperator of ``-i[h, rho]``."""
    return -1j * (opalg.left_mul(h) - opalg.right_mul(h))


def lindbladian_terms(p: DemonParams) -> dict[str, np.ndarray]:
    terms = {"hamiltonian": hamiltonian_term(np.kron(demon_hamiltonian(p), np.eye(2)))}
    for name, op in jump_operators(p).items():
        terms[name] = dissipator(op)
    return terms


def build_lindbladian(p: DemonParams) -> np.ndarray:
    """16x16 generator on vectorized ``D (x) M`` operators."""
    return sum(lindbladian_terms(p).values())


@functools.lru_cache(maxsize=256)
def _channel(p: DemonParams) -> np.ndarray:
    phi = opalg.matexp(build_lindbladian(p), p.tau)
    phi.setflags(write=False)
    return phi


def interaction_channel(p: DemonParams) -> np.ndarray:
    """``phi_tau = exp(L tau)``; cached per parameter set, returned read-only."""
    return _channel(p)


def fixed_point(p: DemonParams) -> tuple[np.ndarray, np.ndarray]:
    """Product fixed point ``(rho_D, rho_M)`` of the generator.

    The demon is thermal at the hot temperature, ``p_e / p_g =
    exp(-beta_h Delta)``; the memory has bias ``epsilon``.
    """
    x = p.beta_h * p.delta
    rho_d = np.diag([0.5 * (1 + math.tanh(x / 2)), 0.5 * (1 - math.tanh(x / 2))]).astype(complex)
    eps = epsilon(p)
    rho_m = np.diag([(1 + eps) / 2, (1 - eps) / 2]).astype(complex)
    return rho_d, rho_m


def classicality_check(phi: np.ndarray, tol: float = 1e-12) -> tuple[bool, float]:
    """Does a two-qubit channel keep populations and coherences apart?

    Works in the ``sigma^i (x) sigma^j`` basis and returns the flag together
    with the largest matrix element coupling the classical block
    ``{0,1}^2`` to the coherent labels.
    """
    s = opalg.superop_to_labels(phi, 2).reshape(16, 16)
    pop = np.array([i < 2 and j < 2 for i in range(4) for j in range(4)])
    leak = max(np.max(np.abs(s[np.ix_(pop, ~pop)])), np.max(np.abs(s[np.ix_(~pop, pop)])))
    return bool(leak <= tol), float(leak)


def transfer_channel(p: DemonParams, k: int) -> np.ndarray:
    """4x4 superoperator ``rho_D -> tr_M phi(rho_D (x) sigma^k)``."""
    if k not in (0, 1):
        raise ValueError("tape symbol must be 0 or 1")
    phi = interaction_channel(p).reshape(2, 2, 2, 2, 2, 2, 2, 2)
    sk = pauli(k)
    # out (d, m, d', m'), in (a, n, b, n'); trace over m = m'
    return np.einsum("dmemanbo,no->deab", phi, sk).reshape(4, 4)


def channel_fixed_point(s: np.ndarray) -> np.ndarray:
    """Unique fixed point of a CPTP superoperator, normalized to unit trace."""
    s = np.asarray(s)
    d = math.isqrt(s.shape[0])
    tr_row = opalg.vectorize(np.eye(d))
    lhs = np.vstack([s - np.eye(d * d), tr_row[None, :]])
    rhs = np.zeros(d * d + 1, dtype=complex)
    rhs[-1] = 1
    v, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    if np.max(np.abs(s @ v - v)) > 1e-10:
        raise RuntimeError("channel has no unique fixed point")
    return opalg.hermitize(opalg.devectorize(v))
