"""Translationally invariant MPDO tape and the sequential-interaction engine.

A tape state is ``rho = sum_i tr(W A^{i_N} ... A^{i_1}) sigma^{i_1} (x) ... (x)
sigma^{i_N}`` with one site tensor ``A^i`` (``i`` over ``opalg.LABELS``) and a
bond-space boundary matrix ``W`` closing the ring (identity by default).
Site 1 is the leftmost tensor factor and the rightmost bond matrix.

Local quantities are taken in the infinite-chain limit: the transfer matrix
``E = A^0 + A^1`` is rescaled to unit spectral radius and the far parts of
the ring are replaced by the limit ``Pi = lim E^m``, giving the bulk
environment ``Pi W Pi``.

The demon sweeps the tape from site 1 upwards.  After ``n`` interactions and
tracing the interacted sites, the demon and the bond are carried by
``G_n = sum_k (D^k (x) A^k) G_{n-1}`` with ``G_0 = rho_D(0) (x) 1``; ``D^k``
is the demon map of one interaction with a traced-out tape symbol ``k``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import lindblad, opalg

MAX_BRUTE_QUBITS = 12


class ConvergenceError(RuntimeError):
    """The transfer iteration did not settle within the allowed steps."""


@dataclass(frozen=True, eq=False)
class MpdoState:
    tensors: np.ndarray
    boundary: np.ndarray | None = None

    def __post_init__(self):
        a = np.array(self.tensors, dtype=complex)
        if a.ndim != 3 or a.shape[0] != 4 or a.shape[1] != a.shape[2]:
            raise ValueError(f"site tensor must have shape (4, chi, chi), got {a.shape}")
        chi = a.shape[1]
        w = np.eye(chi, dtype=complex) if self.boundary is None else np.array(self.boundary, dtype=complex)
        if w.shape != (chi, chi):
            raise ValueError(f"boundary must be {chi}x{chi}")
        a.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "tensors", a)
        object.__setattr__(self, "boundary", w)

    @property
    def bond_dim(self) -> int:
        return self.tensors.shape[1]

    def transfer(self) -> np.ndarray:
        return self.tensors[0] + self.tensors[1]

    @functools.cached_property
    def _normalized(self) -> tuple[np.ndarray, np.ndarray]:
        e = self.transfer()
        ev = np.linalg.eigvals(e)
        lam = ev[np.argmax(np.abs(ev))]
        if abs(lam) < 1e-300 or abs(lam.imag) > 1e-10 * abs(lam) or lam.real <= 0:
            raise ValueError(f"transfer matrix has no positive dominant eigenvalue ({lam})")
        a = self.tensors / lam.real
        proj = _peripheral_projector(e / lam.real)
        env = proj @ self.boundary @ proj
        norm = np.trace(env)
        if abs(norm) < 1e-14:
            raise ValueError("boundary has no weight on the dominant sector")
        return a, env / norm

    @property
    def normalized_tensors(self) -> np.ndarray:
        return self._normalized[0]

    @property
    def environment(self) -> np.ndarray:
        return self._normalized[1]

    def block_labels(self, length: int) -> np.ndarray:
        """Label coefficients of the infinite-chain marginal on ``length`` sites."""
        a, env = self._normalized
        r = extend(np.eye(self.bond_dim, dtype=complex)[None], a, length)[0]
        return np.einsum("...xy,yx->...", r, env)

    def marginal(self, length: int) -> np.ndarray:
        """Dense state of ``length`` consecutive sites of the infinite chain."""
        if length < 1:
            raise ValueError("block length must be positive")
        return opalg.from_labels(self.block_labels(length))

    def ring(self, n_sites: int) -> np.ndarray:
        """Dense state of the finite periodic ring with ``n_sites`` sites."""
        if n_sites < 1:
            raise ValueError("ring needs at least one site")
        r = extend(np.eye(self.bond_dim, dtype=complex)[None], self.tensors, n_sites)[0]
        coeffs = np.einsum("...xy,yx->...", r, self.boundary)
        norm = np.trace(self.boundary @ np.linalg.matrix_power(self.transfer(), n_sites))
        return opalg.from_labels(coeffs / norm)


def _peripheral_projector(e: np.ndarray, max_squarings: int = 80) -> np.ndarray:
    p = e.copy()
    for _ in range(max_squarings):
        nxt = p @ p
        if np.max(np.abs(nxt - p)) <= 1e-13 * max(1.0, np.max(np.abs(p))):
            return nxt
        p = nxt
    raise ValueError("transfer matrix powers do not converge (peripheral spectrum is not {1})")


def extend(r: np.ndarray, a: np.ndarray, length: int) -> np.ndarray:
    """Left-multiply the bond matrices in ``r`` by ``length`` further sites.

    ``r`` has shape ``(K..., chi, chi)``; each new site appends a label axis
    just before the bond axes.
    """
    for _ in range(length):
        r = np.einsum("sxy,...yz->...sxz", a, r)
    return r


@dataclass(frozen=True, eq=False)
class SequentialMpo:
    """Tensors of the sequential interaction in the label basis.

    ``c[i_out, i_in, alpha, beta] = <sigma^alpha (x) sigma^i_out,
    phi(sigma^beta (x) sigma^i_in)>`` and ``b[i_D, alpha, beta] =
    <sigma^alpha, rho_D(0)> delta(i_D, beta)``.
    """

    c: np.ndarray
    b: np.ndarray

    @property
    def demon_initial(self) -> np.ndarray:
        """Label coefficients of ``rho_D(0)``."""
        return self.b[0, :, 0]

    @functools.cached_property
    def traced(self) -> np.ndarray:
        """Stack of ``D^k`` for ``k`` over the four labels."""
        return np.stack([traced_interaction(self, k) for k in range(4)])


def compile_mpo(phi: np.ndarray, rho_d0: np.ndarray) -> SequentialMpo:
    opalg.check_density(rho_d0)
    if rho_d0.shape != (2, 2):
        raise ValueError("demon state must be a qubit density operator")
    s = opalg.superop_to_labels(np.asarray(phi), 2)  # (aD, aM, bD, bM)
    c = s.transpose(1, 3, 0, 2).copy()
    r0 = opalg.to_labels(rho_d0)
    b = np.zeros((4, 4, 4), dtype=complex)
    for i in range(4):
        b[i, :, i] = r0
    return SequentialMpo(c=c, b=b)


def traced_interaction(mpo: SequentialMpo, k: int) -> np.ndarray:
    """``D^k = sum_l C^{lk} tr(sigma^l)``: demon map after tracing the site."""
    if k not in range(4):
        raise ValueError("label index must be in 0..3")
    return mpo.c[0, k] + mpo.c[1, k]


@dataclass(frozen=True, eq=False)
class _Contraction:
    a: np.ndarray
    env: np.ndarray
    g: np.ndarray
    c: np.ndarray

    def pre(self, window: int, demon: bool = True) -> np.ndarray:
        g = self.g if demon else (self.g[0] + self.g[1])[None]
        r = extend(g, self.a, window + 1)
        x = np.einsum("...xy,yx->...", r, self.env)
        return opalg.from_labels(x if demon else x[0])

    def post(self, window: int, demon: bool = True) -> np.ndarray:
        # outgoing site: sum_{m, a} C[m', m, a', a] A^m G[a]
        h = np.einsum("pmdb,mxy,byz->dpxz", self.c, self.a, self.g)
        if not demon:
            h = (h[0] + h[1])[None]
        r = extend(h, self.a, window)
        x = np.einsum("...xy,yx->...", r, self.env)
        return opalg.from_labels(x if demon else x[0])


@dataclass(frozen=True, eq=False)
class SteadyStateBundle:
    """Pre- and post-interaction states around the interacting site ``M``.

    ``rho_dmw`` lives on ``D M M~(w)`` (dims ``[2] * (w + 2)``) before the
    interaction and ``rho_dmw_post`` after it.
    """

    rho_dm: np.ndarray
    rho_dm_post: np.ndarray
    window: int
    rho_dmw: np.ndarray
    rho_dmw_post: np.ndarray
    converged_n: int
    residual: float
    _kernel: _Contraction = field(repr=False)

    @property
    def rho_m(self) -> np.ndarray:
        return opalg.partial_trace(self.rho_dm, [2, 2], [1])

    @property
    def rho_m_post(self) -> np.ndarray:
        return opalg.partial_trace(self.rho_dm_post, [2, 2], [1])

    @property
    def rho_d(self) -> np.ndarray:
        return opalg.partial_trace(self.rho_dm, [2, 2], [0])

    @property
    def rho_d_post(self) -> np.ndarray:
        return opalg.partial_trace(self.rho_dm_post, [2, 2], [0])

    def memory_window(self, window: int) -> tuple[np.ndarray, np.ndarray]:
        """``(rho_{M M~(w)}, rho'_{M M~(w)})`` for any window size."""
        return self._kernel.pre(window, demon=False), self._kernel.post(window, demon=False)

    def demon_window(self, window: int) -> tuple[np.ndarray, np.ndarray]:
        """``(rho_{D M M~(w)}, rho'_{D M M~(w)})`` for any window size."""
        return self._kernel.pre(window), self._kernel.post(window)


def _rho_dm(a: np.ndarray, env: np.ndarray, g: np.ndarray) -> np.ndarray:
    return opalg.from_labels(np.einsum("xy,myz,azx->am", env, a, g))


def _bundle(kernel: _Contraction, window: int, n: int, residual: float) -> SteadyStateBundle:
    if window < 1:
        raise ValueError("window must be >= 1")
    pre, post = kernel.pre(window), kernel.post(window)
    dims = [2] * (window + 2)
    return SteadyStateBundle(
        rho_dm=opalg.partial_trace(pre, dims, [0, 1]),
        rho_dm_post=opalg.partial_trace(post, dims, [0, 1]),
        window=window,
        rho_dmw=pre,
        rho_dmw_post=post,
        converged_n=n,
        residual=residual,
        _kernel=kernel,
    )


def _start(tape: MpdoState, mpo: SequentialMpo) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    a, env = tape._normalized
    g = mpo.demon_initial[:, None, None] * np.eye(tape.bond_dim, dtype=complex)[None]
    return a, env, g


def _step(g: np.ndarray, dk: np.ndarray, a: np.ndarray) -> np.ndarray:
    return np.einsum("kab,kxy,byz->axz", dk, a, g)


def propagate(tape: MpdoState, mpo: SequentialMpo, n: int, window: int = 4) -> SteadyStateBundle:
    """States around site ``n + 1`` after exactly ``n`` interactions."""
    if n < 0:
        raise ValueError("number of interactions must be non-negative")
    a, env, g = _start(tape, mpo)
    dk = mpo.traced
    prev = _rho_dm(a, env, g)
    residual = math.nan
    for _ in range(n):
        g = _step(g, dk, a)
        cur = _rho_dm(a, env, g)
        residual = opalg.trace_distance(cur, prev)
        prev = cur
    return _bundle(_Contraction(a, env, g, mpo.c), window, n, residual)


def steady_state(
    tape: MpdoState,
    mpo: SequentialMpo,
    window: int = 4,
    tol: float = 1e-12,
    n_max: int = 10_000,
) -> SteadyStateBundle:
    """Iterate interactions until ``rho_DM`` moves by less than ``tol``.

    Raises :class:`ConvergenceError` after ``n_max`` interactions.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    a, env, g = _start(tape, mpo)
    dk = mpo.traced
    prev = _rho_dm(a, env, g)
    for n in range(1, n_max + 1):
        g = _step(g, dk, a)
        cur = _rho_dm(a, env, g)
        residual = opalg.trace_distance(cur, prev)
        if residual < tol:
            return _bundle(_Contraction(a, env, g, mpo.c), window, n, residual)
        prev = cur
    raise ConvergenceError(f"no periodic steady state after {n_max} interactions (last change {residual:.3e})")


@dataclass(frozen=True, eq=False)
class History:
    record: tuple[int, ...]
    probability: float
    rho_d: np.ndarray
    rho_mw: np.ndarray


def classical_histories(
    tape: MpdoState,
    p: lindblad.DemonParams,
    n: int,
    window: int = 1,
    rho_d0: np.ndarray | None = None,
    cutoff: float = 1e-14,
) -> list[History]:
    """Expand the state before interaction ``n + 1`` over records on the past sites.

    Each term holds the record probability, the demon state after that
    record of pure classical symbols, and the conditional state of
    ``M M~(window)``.  Record prefixes lighter than ``cutoff`` are pruned.
    """
    if n < 0 or n > 20:
        raise ValueError("classical_histories supports 0 <= n <= 20")
    if rho_d0 is None:
        rho_d0 = lindblad.fixed_point(p)[0]
    transfers = [lindblad.transfer_channel(p, k) for k in (0, 1)]
    a, env = tape._normalized
    eye = np.eye(tape.bond_dim, dtype=complex)
    out: list[History] = []

    def walk(record: tuple[int, ...], bond: np.ndarray, rho_d_vec: np.ndarray):
        prob = float(np.real(np.trace(env @ bond)))
        if prob < cutoff:
            return
        if len(record) == n:
            r = extend(bond[None], a, window + 1)[0]
            x = np.einsum("...xy,yx->...", r, env) / prob
            out.append(History(record, prob, opalg.devectorize(rho_d_vec), opalg.from_labels(x)))
            return
        for k in (0, 1):
            walk(record + (k,), a[k] @ bond, transfers[k] @ rho_d_vec)

    walk((), eye, opalg.vectorize(np.asarray(rho_d0, dtype=complex)))
    return out


def reassemble(histories: Sequence[History]) -> np.ndarray:
    """``sum_k p_k rho_D^(k) (x) rho_{M M~}^(k)``."""
    return sum(h.probability * np.kron(h.rho_d, h.rho_mw) for h in histories)


def _apply_pair(rho: np.ndarray, phi: np.ndarray, n_qubits: int, site: int) -> np.ndarray:
    """Apply a two-qubit channel to qubits ``(0, site)`` of a dense state."""
    t = rho.reshape((2,) * (2 * n_qubits))
    ph = np.asarray(phi).reshape((2,) * 8)
    axes_in = [0, site, n_qubits, n_qubits + site]
    t = np.tensordot(ph, t, axes=([4, 5, 6, 7], axes_in))
    # result axes: (d, m, d', m', remaining...) -> restore positions
    rest = [ax for ax in range(2 * n_qubits) if ax not in axes_in]
    order = axes_in + rest
    t = np.moveaxis(t, range(2 * n_qubits), order)
    dim = 2**n_qubits
    return t.reshape(dim, dim)


def brute_force(rho: np.ndarray, phi, n: int | None = None) -> np.ndarray:
    """Dense sequential evolution: channel ``j`` acts on the demon and site ``j``.

    ``rho`` lives on ``D (x) site_1 (x) ... (x) site_N``.  ``phi`` is one
    16x16 superoperator reused ``n`` times (default ``N``) or a sequence of
    them, one per interaction.
    """
    rho = np.asarray(rho, dtype=complex)
    n_qubits = int(round(math.log2(rho.shape[0])))
    if 2**n_qubits != rho.shape[0] or n_qubits < 2:
        raise ValueError("state must live on the demon plus at least one memory qubit")
    if n_qubits > MAX_BRUTE_QUBITS:
        raise ValueError(f"brute force is limited to {MAX_BRUTE_QUBITS} qubits")
    if isinstance(phi, np.ndarray) and phi.ndim == 2:
        count = n_qubits - 1 if n is None else n
        channels = [phi] * count
    else:
        channels = list(phi)
    if len(channels) > n_qubits - 1:
        raise ValueError("more interactions than memory sites")
    for j, ch in enumerate(channels, start=1):
        rho = _apply_pair(rho, ch, n_qubits, j)
    return rho


def dense_input(tape: MpdoState, n_sites: int, rho_d0: np.ndarray) -> np.ndarray:
    """``rho_D(0) (x)`` the infinite-chain marginal on ``n_sites`` sites."""
    return np.kron(rho_d0, tape.marginal(n_sites))

