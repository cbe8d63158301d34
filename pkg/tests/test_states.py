import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdemon import lindblad, mpdo, opalg, states, thermo
from qdemon.lindblad import DemonParams
from qdemon.states import GhzSpec

P = DemonParams.from_epsilon(0.05, tau=0.4)


def report(tape, p=P, **kw):
    mpo = mpdo.compile_mpo(lindblad.interaction_channel(p), lindblad.fixed_point(p)[0])
    return thermo.clausius_report(mpdo.steady_state(tape, mpo), p, **kw)


FIELDS = ("q_hc", "ds_m", "ds_mmt", "di_m_mt", "residual_global")


def ghz_vector(spec, n):
    plus, minus = states.n_basis(spec.theta, spec.phi)
    a = np.ones(1)
    b = np.ones(1)
    for _ in range(n):
        a, b = np.kron(a, plus), np.kron(b, minus)
    psi = math.sqrt((1 + spec.zeta) / 2) * a + math.sqrt((1 - spec.zeta) / 2) * b
    return psi


# GhzSpec ---------------------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(zeta=1.5), dict(zeta=0.1, theta=-0.1), dict(zeta=0.1, theta=4.0)])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        GhzSpec(**kw)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 1.0), st.floats(0.01, math.pi - 0.01), st.floats(0.0, 6.28))
def test_bloch_roundtrip(zeta, theta, phi):
    spec = GhzSpec(zeta, theta, phi)
    back = GhzSpec.from_bloch(*spec.bloch)
    assert np.allclose(back.bloch, spec.bloch, atol=1e-12)


def test_n_basis_orthonormal():
    plus, minus = states.n_basis(1.1, 0.4)
    assert abs(np.vdot(plus, minus)) < 1e-15
    assert np.isclose(np.linalg.norm(plus), 1) and np.isclose(np.linalg.norm(minus), 1)


def test_n_basis_z_axis():
    plus, minus = states.n_basis(0.0, 2.0)
    assert np.allclose(plus, [1, 0]) and np.allclose(minus, [0, 1])


# ghz -------------------------------------------------------------------------

@pytest.mark.parametrize("zeta, pure", [(1.0, [1, 0]), (-1.0, [0, 1])])
def test_ghz_extremes_are_products(zeta, pure):
    tape = states.ghz(zeta)
    site = np.outer(pure, pure)
    assert np.allclose(tape.marginal(3), opalg.kron(site, site, site))


def test_ghz_marginals_maximally_mixed():
    m = states.ghz(0.0).marginal(1)
    assert np.allclose(m, np.eye(2) / 2)


def test_ghz_bond_dimension():
    assert states.ghz(0.3).bond_dim == 2
    assert states.ghz(0.3, exact_ring=True).bond_dim == 4


@pytest.mark.parametrize("spec", [GhzSpec(0.3), GhzSpec(-0.6, 0.9, 2.1), GhzSpec(0.0, math.pi / 2, 0.0)])
def test_exact_ring_matches_state_vector(spec):
    psi = ghz_vector(spec, 3)
    assert np.allclose(states.ghz(spec, exact_ring=True).ring(3), np.outer(psi, psi.conj()), atol=1e-14)


@pytest.mark.parametrize("spec", [GhzSpec(0.3), GhzSpec(-0.6, 0.9, 2.1)])
def test_block_is_branch_mixture(spec):
    # the infinite chain keeps the two branches but not their cross terms
    plus, minus = states.n_basis(spec.theta, spec.phi)
    pp, mm = np.outer(plus, plus.conj()), np.outer(minus, minus.conj())
    expect = (1 + spec.zeta) / 2 * opalg.kron(pp, pp, pp) + (1 - spec.zeta) / 2 * opalg.kron(mm, mm, mm)
    assert np.allclose(states.ghz(spec).marginal(3), expect, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(0.0, math.pi), st.floats(0.0, 6.28))
def test_local_bias_along_n(zeta, theta, phi):
    spec = GhzSpec(zeta, theta, phi)
    rho = states.ghz(spec).marginal(1)
    n = spec.bloch
    r = [np.trace(rho @ opalg.pauli(a)).real for a in "xyz"]
    assert np.allclose(r, n, atol=1e-12)


# dephase_z ---------------------------------------------------------------------

def test_dephase_classical_unchanged():
    tape = states.product(0.4)
    assert np.array_equal(states.dephase_z(tape).tensors, tape.tensors)


def test_dephased_ghz_is_classical_mixture():
    ring = states.dephase_z(states.ghz(0.0, exact_ring=True)).ring(3)
    expect = 0.5 * (opalg.kron(*[opalg.pauli(0)] * 3) + opalg.kron(*[opalg.pauli(1)] * 3))
    assert np.allclose(ring, expect)


def test_dephase_matches_projector_sum():
    tape = states.random_tape(np.random.default_rng(0))
    rho = tape.marginal(3)
    proj = [opalg.pauli(0), opalg.pauli(1)]
    expect = sum(opalg.kron(a, b, c) @ rho @ opalg.kron(a, b, c) for a in proj for b in proj for c in proj)
    assert np.allclose(states.dephase_z(tape).marginal(3), expect, atol=1e-14)


def test_dephase_keeps_biases():
    tape = states.ghz(GhzSpec(0.4, 1.0, 0.3))
    assert opalg.bias(states.dephase_z(tape).marginal(1)) == pytest.approx(opalg.bias(tape.marginal(1)), abs=1e-14)


@pytest.mark.parametrize("zeta", [-0.7, 0.0, 0.2])
def test_dephasing_z_ghz_changes_nothing(zeta):
    a, b = report(states.ghz(zeta)), report(states.dephase_z(states.ghz(zeta)))
    for f in FIELDS:
        assert getattr(a, f) == pytest.approx(getattr(b, f), abs=1e-9)


# product ---------------------------------------------------------------------

def test_product_at_epsilon_is_fixed_point():
    eps = lindblad.epsilon(P)
    assert np.allclose(states.product(eps).marginal(1), lindblad.fixed_point(P)[1])


def test_product_pure():
    assert np.allclose(states.product(1.0).marginal(2), opalg.kron(opalg.pauli(0), opalg.pauli(0)))


def test_product_range():
    with pytest.raises(ValueError):
        states.product(1.2)


@pytest.mark.parametrize("zeta", np.linspace(-1, 1, 9))
def test_product_strict_trade_off(zeta):
    for eps in (0.0, 0.05, 0.3):
        p = DemonParams.from_epsilon(eps, tau=0.3)
        rep = report(states.product(float(zeta)), p)
        assert rep.phase != "both"
        assert rep.residual_local >= -1e-12


def test_product_state_rejects_invalid():
    with pytest.raises(ValueError):
        states.product_state(np.diag([0.6, 0.6]))


# rotate_z --------------------------------------------------------------------

def test_rotate_zero_and_full_turn():
    tape = states.random_tape(np.random.default_rng(1))
    for phi in (0.0, 2 * math.pi):
        assert np.allclose(states.rotate_z(tape, phi).tensors, tape.tensors)


def test_rotate_matches_dense_conjugation():
    tape = states.random_tape(np.random.default_rng(2))
    u = opalg.z_rotation(0.7)
    uu = opalg.kron(u, u, u)
    assert np.allclose(states.rotate_z(tape, 0.7).marginal(3), uu @ tape.marginal(3) @ uu.conj().T, atol=1e-14)


@pytest.mark.parametrize("phi", [math.pi / 7, 1.0])
def test_rotation_leaves_report_unchanged(phi):
    tape = states.random_tape(np.random.default_rng(3))
    # windowed entropies of coherent random tapes settle slowly; the symmetry holds window by window
    a, b = report(tape, adaptive=False), report(states.rotate_z(tape, phi), adaptive=False)
    for f in FIELDS:
        assert getattr(a, f) == pytest.approx(getattr(b, f), abs=1e-9)


def test_azimuthal_symmetry_of_rotated_ghz():
    reps = [report(states.ghz(GhzSpec(-0.3, 0.8, f)), strict=False) for f in (0.0, 1.3, 4.0)]
    for r in reps[1:]:
        for f in ("q_hc", "ds_m", "ds_mmt", "di_d_m"):
            assert getattr(r, f) == pytest.approx(getattr(reps[0], f), abs=1e-9)


# other families --------------------------------------------------------------

@pytest.mark.parametrize(
    "tape",
    [
        states.ghz(GhzSpec(0.2, 2.0, 1.0)),
        states.ghz(0.5, exact_ring=True),
        states.product(-0.3),
        states.random_tape(np.random.default_rng(4), chi=3),
        states.from_mps(np.random.default_rng(5).normal(size=(2, 2, 2))),
    ],
    ids=["ghz-n", "ghz-ring", "product", "hmm", "mps"],
)
def test_families_reconstruct_to_densities(tape):
    for rho in (tape.ring(4), tape.marginal(4)):
        assert opalg.hermiticity_error(rho) < 1e-12
        assert np.trace(rho) == pytest.approx(1, abs=1e-12)
        assert opalg.eigenvalues(rho)[0] >= -1e-9


def test_hidden_markov_validation():
    with pytest.raises(ValueError):
        states.hidden_markov(np.array([[0.5, 0.5], [0.6, 0.5]]), [[np.eye(2) / 2] * 2] * 2)


def test_hidden_markov_iid_limit():
    rho = np.diag([0.8, 0.2])
    tape = states.hidden_markov(np.full((2, 2), 0.5), [[rho, rho], [rho, rho]])
    assert np.allclose(tape.marginal(2), np.kron(rho, rho))


def test_from_mps_product():
    b = np.zeros((2, 1, 1))
    b[0] = 0.6
    b[1] = 0.8
    v = np.array([0.6, 0.8])
    assert np.allclose(states.from_mps(b).ring(2), np.kron(np.outer(v, v), np.outer(v, v)))


def test_from_mps_ring_matches_dense():
    rng = np.random.default_rng(6)
    b = rng.normal(size=(2, 2, 2)) + 1j * rng.normal(size=(2, 2, 2))
    psi = np.array([np.trace(b[i] @ b[j] @ b[k]) for i in (0, 1) for j in (0, 1) for k in (0, 1)])
    # ring order: site 1 is the rightmost bond matrix
    psi = psi.reshape(2, 2, 2).transpose(2, 1, 0).reshape(8)
    rho = np.outer(psi, psi.conj())
    assert np.allclose(states.from_mps(b).ring(3), rho / np.trace(rho), atol=1e-12)


def test_from_mps_shape_check():
    with pytest.raises(ValueError):
        states.from_mps(np.zeros((3, 2, 2)))
