"""Input tape families as :class:`~qdemon.mpdo.MpdoState` objects."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import opalg
from .mpdo import MpdoState


@dataclass(frozen=True)
class GhzSpec:
    """GHZ-correlated tape ``sqrt(1+zeta)|+n>^N + sqrt(1-zeta)|-n>^N`` (normalized).

    ``theta = 0`` is the z basis.  ``zeta`` is the bias along ``n``; the
    local Bloch vector is ``zeta * (sin t cos f, sin t sin f, cos t)``.
    """

    zeta: float
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if not -1 <= self.zeta <= 1:
            raise ValueError("zeta must lie in [-1, 1]")
        if not 0 <= self.theta <= math.pi:
            raise ValueError("theta must lie in [0, pi]")

    @property
    def bloch(self) -> tuple[float, float, float]:
        st = math.sin(self.theta)
        return (
            self.zeta * st * math.cos(self.phi),
            self.zeta * st * math.sin(self.phi),
            self.zeta * math.cos(self.theta),
        )

    @classmethod
    def from_bloch(cls, x: float, y: float, z: float) -> "GhzSpec":
        r = math.sqrt(x * x + y * y + z * z)
        if r == 0:
            return cls(0.0)
        return cls(zeta=r, theta=math.acos(max(-1.0, min(1.0, z / r))), phi=math.atan2(y, x) % (2 * math.pi))


def n_basis(theta: float, phi: float) -> tuple[np.ndarray, np.ndarray]:
    """``|+n>`` and ``|-n>``; phases chosen so that ``theta = 0`` gives ``|0>, |1>``."""
    c, s, ph = math.cos(theta / 2), math.sin(theta / 2), np.exp(1j * phi)
    return np.array([c, ph * s]), np.array([-s / ph, c])


def ghz(spec: GhzSpec | float, exact_ring: bool = False) -> MpdoState:
    """GHZ-correlated tape.

    By default a bond-2 tensor carrying the two branches ``|+n><+n|`` and
    ``|-n><-n|`` with branch weights in the boundary.  The cross terms
    ``|+n><-n|^{(x)N}`` are traceless on every site, so they never reach a
    finite block of the infinite chain.  ``exact_ring=True`` keeps them as two
    more bond states, so that :meth:`MpdoState.ring` reproduces the pure state
    for any ring length.
    """
    if not isinstance(spec, GhzSpec):
        spec = GhzSpec(float(spec))
    plus, minus = n_basis(spec.theta, spec.phi)
    blocks = [np.outer(plus, plus.conj()), np.outer(minus, minus.conj())]
    w_plus, w_minus = (1 + spec.zeta) / 2, (1 - spec.zeta) / 2
    weights = [w_plus, w_minus]
    if exact_ring:
        blocks += [np.outer(plus, minus.conj()), np.outer(minus, plus.conj())]
        cross = math.sqrt(w_plus * w_minus)
        weights += [cross, cross]
    chi = len(blocks)
    a = np.zeros((4, chi, chi), dtype=complex)
    for b, blk in enumerate(blocks):
        a[:, b, b] = opalg.to_labels(blk)
    return MpdoState(a, np.diag(weights))


def dephase_z(m: MpdoState) -> MpdoState:
    """Drop the coherent labels on every site."""
    a = np.array(m.tensors)
    a[2:] = 0
    return MpdoState(a, m.boundary)


def product(zeta: float) -> MpdoState:
    """Uncorrelated classical tape with bias ``zeta`` on every site."""
    if not -1 <= zeta <= 1:
        raise ValueError("zeta must lie in [-1, 1]")
    return product_state(np.diag([(1 + zeta) / 2, (1 - zeta) / 2]))


def product_state(rho: np.ndarray) -> MpdoState:
    """Uncorrelated tape with the qubit state ``rho`` on every site."""
    opalg.check_density(rho)
    return MpdoState(opalg.to_labels(np.asarray(rho, dtype=complex))[:, None, None])


def rotate_z(m: MpdoState, phi: float) -> MpdoState:
    """Conjugate every site by ``exp(-i phi sigma^z / 2)``."""
    a = np.array(m.tensors)
    a[2] *= np.exp(-1j * phi)
    a[3] *= np.exp(1j * phi)
    return MpdoState(a, m.boundary)


def hidden_markov(transition: np.ndarray, emissions) -> MpdoState:
    """Separable correlated tape driven by a hidden Markov chain.

    ``transition[t, s]`` is the probability of hidden state ``t`` following
    ``s``; ``emissions[s][t]`` is the qubit state emitted on that step.
    """
    transition = np.asarray(transition, dtype=float)
    chi = transition.shape[0]
    if transition.shape != (chi, chi) or np.any(transition < 0) or not np.allclose(transition.sum(0), 1):
        raise ValueError("transition must be a column-stochastic matrix")
    a = np.zeros((4, chi, chi), dtype=complex)
    for s in range(chi):
        for t in range(chi):
            opalg.check_density(emissions[s][t])
            a[:, t, s] = transition[t, s] * opalg.to_labels(np.asarray(emissions[s][t], dtype=complex))
    return MpdoState(a)


def from_mps(b: np.ndarray) -> MpdoState:
    """Tape obtained from a pure translationally invariant MPS.

    ``b`` has shape ``(2, D, D)`` (physical, left, right); the resulting MPDO
    has bond dimension ``D**2``.
    """
    b = np.asarray(b, dtype=complex)
    if b.ndim != 3 or b.shape[0] != 2 or b.shape[1] != b.shape[2]:
        raise ValueError("MPS tensor must have shape (2, D, D)")
    d = b.shape[1]
    a = np.zeros((4, d * d, d * d), dtype=complex)
    for r in range(2):
        for c in range(2):
            unit = np.zeros((2, 2))
            unit[r, c] = 1
            a += opalg.to_labels(unit)[:, None, None] * np.kron(b[r], b[c].conj())[None]
    return MpdoState(a)


def random_density(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    """Full-rank random density matrix (Ginibre ensemble)."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_tape(rng: np.random.Generator, chi: int = 2, floor: float = 0.2) -> MpdoState:
    """Random hidden-Markov tape with coherent emissions and bond dimension ``chi``.

    ``floor`` is added to every uniform transition weight; larger values mix
    faster.  Coherent emissions make windowed entropies settle slowly whatever
    the floor, often past the maximum ``M~`` window.
    """
    t = rng.random((chi, chi)) + floor
    t /= t.sum(axis=0, keepdims=True)
    emissions = [[random_density(rng) for _ in range(chi)] for _ in range(chi)]
    return hidden_markov(t, emissions)
