"""Dense operator algebra for qubit chains.

Conventions used everywhere in the package:

* Qubit matrices are written in the z basis ``{|0>, |1>}`` with
  ``sigma^z = diag(1, -1)``.
* The local operator basis is ``LABELS = ("0", "1", "+", "-")`` with
  ``sigma^0 = |0><0|``, ``sigma^1 = |1><1|``, ``sigma^+ = |0><1|`` and
  ``sigma^- = |1><0|``.  It is orthonormal under ``<A, B> = tr(A^dag B)``.
* Vectorization is row-major: ``vec(A)[i * d + j] = A[i, j]``.  Under this
  convention ``vec(X A Y) = kron(X, Y.T) @ vec(A)``.
* Tensor products put the demon first, then memory sites in tape order.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.linalg import expm

LABELS = ("0", "1", "+", "-")
CLASSICAL = (0, 1)

# label index -> position of the matrix unit in a row-major 2x2 vec
_LABEL_TO_UNIT = np.array([0, 3, 1, 2])

EIG_CLAMP = 1e-12
NEG_TOL = 1e-10
TRACE_TOL = 1e-10

_PAULI = {
    "0": np.array([[1, 0], [0, 0]], dtype=complex),
    "1": np.array([[0, 0], [0, 1]], dtype=complex),
    "+": np.array([[0, 1], [0, 0]], dtype=complex),
    "-": np.array([[0, 0], [1, 0]], dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "I": np.eye(2, dtype=complex),
}


def pauli(label) -> np.ndarray:
    """Return the 2x2 matrix for one of ``0 1 + - x y z I``.

    ``sigma^-`` maps ``|0>`` to ``|1>``; on the demon ``|0>`` is the ground
    state, so ``sigma_D^-`` is the excitation ``g -> e``.
    """
    key = str(label)
    if key not in _PAULI:
        raise ValueError(f"unknown Pauli label {label!r}")
    return _PAULI[key].copy()


BASIS = np.stack([pauli(lab) for lab in LABELS])
BASIS.setflags(write=False)


def vectorize(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a.reshape(-1).copy()


def devectorize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    dim = math.isqrt(v.size)
    if v.ndim != 1 or dim * dim != v.size:
        raise ValueError(f"vector of length {v.size} is not a vectorized square matrix")
    return v.reshape(dim, dim).copy()


def sandwich(x: np.ndarray, y: np.ndarray | None = None) -> np.ndarray:
    """Superoperator of ``A -> x A y^dag`` (``y`` defaults to ``x``)."""
    x = np.asarray(x, dtype=complex)
    y = x if y is None else np.asarray(y, dtype=complex)
    return np.kron(x, y.conj())


def left_mul(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    return np.kron(x, np.eye(x.shape[0]))


def right_mul(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    return np.kron(np.eye(x.shape[0]), x.T)


def apply_superop(s: np.ndarray, a: np.ndarray) -> np.ndarray:
    return devectorize(np.asarray(s) @ vectorize(a))


def identity_superop(dim: int) -> np.ndarray:
    return np.eye(dim * dim, dtype=complex)


def kron(*ops: np.ndarray) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def hermitize(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    return (a + a.conj().T) / 2


def hermiticity_error(a: np.ndarray) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def check_density(rho: np.ndarray, trace_tol: float = TRACE_TOL, neg_tol: float = NEG_TOL) -> None:
    """Raise ``ValueError`` unless ``rho`` is a density operator within tolerance."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density operator must be square, got {rho.shape}")
    herm = hermiticity_error(rho)
    if herm > trace_tol:
        raise ValueError(f"operator is not Hermitian (max |A - A^dag| = {herm:.3e})")
    tr = np.trace(rho).real
    if abs(tr - 1) > trace_tol:
        raise ValueError(f"trace {tr!r} differs from 1")
    lo = np.linalg.eigvalsh(hermitize(rho))[0]
    if lo < -neg_tol:
        raise ValueError(f"operator has negative eigenvalue {lo:.3e}")


def _check_dims(dims: Sequence[int], dim: int) -> list[int]:
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims) or math.prod(dims) != dim:
        raise ValueError(f"subsystem dims {dims} do not multiply to {dim}")
    return dims


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduced operator on the subsystems ``keep`` (returned in original order)."""
    rho = np.asarray(rho)
    dims = _check_dims(dims, rho.shape[0])
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {n} subsystems")
    drop = [k for k in range(n) if k not in keep]
    t = rho.reshape(dims + dims)
    # trace pairs from the highest index down so earlier axis numbers stay valid
    for k in sorted(drop, reverse=True):
        m = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + m)
    dk = math.prod(dims[k] for k in keep)
    return t.reshape(dk, dk)


def eigenvalues(rho: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(hermitize(np.asarray(rho)))


def entropy_from_eigenvalues(w: np.ndarray) -> float:
    w = np.asarray(w, dtype=float)
    w = np.minimum(w[w > EIG_CLAMP], 1.0)
    return float(-np.sum(w * np.log(w)))


def von_neumann_entropy(rho: np.ndarray, check: bool = True) -> float:
    """``-tr(rho ln rho)`` in nats."""
    if check:
        check_density(rho)
    return entropy_from_eigenvalues(eigenvalues(rho))


def mutual_information(rho: np.ndarray, dims: Sequence[int] = (2, 2), part: Sequence[int] = (0,)) -> float:
    """``I(A:B)`` where ``A`` is the subsystem set ``part`` and ``B`` the rest."""
    check_density(rho)
    dims = _check_dims(dims, np.asarray(rho).shape[0])
    part = sorted(set(part))
    rest = [k for k in range(len(dims)) if k not in part]
    if not part or not rest:
        raise ValueError("both sides of the bipartition must be nonempty")
    s_a = von_neumann_entropy(partial_trace(rho, dims, part), check=False)
    s_b = von_neumann_entropy(partial_trace(rho, dims, rest), check=False)
    return s_a + s_b - von_neumann_entropy(rho, check=False)


def relative_entropy(rho: np.ndarray, sigma: np.ndarray, support_tol: float = 1e-12) -> float:
    """``D(rho || sigma) = -S(rho) - tr(rho ln sigma)``.

    Returns ``math.inf`` when ``rho`` has weight outside the support of
    ``sigma``; malformed inputs raise ``ValueError``.
    """
    check_density(rho)
    check_density(sigma)
    ws, vs = np.linalg.eigh(hermitize(sigma))
    rho_s = vs.conj().T @ hermitize(rho) @ vs
    weights = np.real(np.diag(rho_s))
    kernel = ws <= EIG_CLAMP
    if np.any(weights[kernel] > support_tol):
        return math.inf
    cross = float(np.sum(weights[~kernel] * np.log(ws[~kernel])))
    return -von_neumann_entropy(rho, check=False) - cross


def matexp(gen: np.ndarray, t: float = 1.0) -> np.ndarray:
    """``exp(gen * t)`` by Pade scaling and squaring."""
    gen = np.asarray(gen, dtype=complex)
    if not np.all(np.isfinite(gen)) or not math.isfinite(t):
        raise ValueError("matexp input is not finite")
    out = expm(gen * t)
    if not np.all(np.isfinite(out)):
        raise OverflowError("matrix exponential overflowed")
    return out


def bias(rho: np.ndarray) -> float:
    """Population bias ``<sigma^z>`` of a qubit state."""
    rho = np.asarray(rho)
    if rho.shape != (2, 2):
        raise ValueError("bias is defined for a single qubit")
    return float(np.real(rho[0, 0] - rho[1, 1]))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    w = np.linalg.eigvalsh(hermitize(np.asarray(a) - np.asarray(b)))
    return 0.5 * float(np.sum(np.abs(w)))


def z_rotation(phi: float) -> np.ndarray:
    """``exp(-i phi sigma^z / 2)``."""
    return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])


def choi(s: np.ndarray) -> np.ndarray:
    """Choi matrix ``sum_ij |i><j| (x) S(|i><j|)`` of a row-major superoperator."""
    s = np.asarray(s)
    d = math.isqrt(s.shape[0])
    return s.reshape(d, d, d, d).transpose(2, 0, 3, 1).reshape(d * d, d * d)


def choi_min_eigenvalue(s: np.ndarray) -> float:
    return float(eigenvalues(choi(s))[0])


def trace_preservation_error(s: np.ndarray) -> float:
    """Max deviation of ``vec(1)^T S`` from ``vec(1)^T``."""
    s = np.asarray(s)
    d = math.isqrt(s.shape[0])
    v = vectorize(np.eye(d))
    return float(np.max(np.abs(v @ s - v)))


# --- label (sigma^{0,1,+,-}) coordinates -----------------------------------


def to_labels(a: np.ndarray) -> np.ndarray:
    """Coefficients ``<sigma^{i1..in}, A>`` as an ``(4,)*n`` tensor."""
    a = np.asarray(a)
    n = int(round(math.log2(a.shape[0])))
    if 2**n != a.shape[0]:
        raise ValueError("operator dimension is not a power of two")
    t = a.reshape((2,) * (2 * n))
    t = t.transpose([ax for k in range(n) for ax in (k, k + n)]).reshape((4,) * n)
    for k in range(n):
        t = np.take(t, _LABEL_TO_UNIT, axis=k)
    return t


def from_labels(c: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_labels`: ``sum_i c[i] sigma^{i1} (x) ... (x) sigma^{in}``."""
    c = np.asarray(c, dtype=complex)
    n = c.ndim
    t = np.empty_like(c)
    t[...] = c
    inv = np.argsort(_LABEL_TO_UNIT)
    for k in range(n):
        t = np.take(t, inv, axis=k)
    t = t.reshape((2,) * (2 * n))
    order = [2 * k for k in range(n)] + [2 * k + 1 for k in range(n)]
    dim = 2**n
    return t.transpose(order).reshape(dim, dim)


def superop_to_labels(s: np.ndarray, n: int) -> np.ndarray:
    """Matrix of a superoperator on ``n`` qubits in the label basis.

    Returns ``(4,)*n + (4,)*n`` with entries ``<sigma^out, S(sigma^in)>``.
    """
    s = np.asarray(s)
    dim = 2**n
    if s.shape != (dim * dim, dim * dim):
        raise ValueError(f"expected a {dim * dim}x{dim * dim} superoperator")
    t = s.reshape((2,) * (4 * n))
    out_axes = [ax for k in range(n) for ax in (k, k + n)]
    in_axes = [2 * n + ax for ax in out_axes]
    t = t.transpose(out_axes + in_axes).reshape((4,) * (2 * n))
    for k in range(2 * n):
        t = np.take(t, _LABEL_TO_UNIT, axis=k)
    return t
