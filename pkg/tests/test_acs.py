import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import special_ortho_group

from twistorlab.acs import (
    GramSchmidtBreakdown,
    ImpureSpinor,
    NegativeOrientation,
    NotAnACS,
    OrthoACS,
    acs_of_pure_spinor,
    acs_of_subspace,
    adapted_gram_schmidt,
    canonical_orientation,
    isotropic_of_acs,
    pure_spinor_line,
    random_positive_acs,
    standard_acs_matrix,
    unitary_basis,
)
from twistorlab.clifford import adjoint_matrix, hermitian_form, rotor
from twistorlab.spinor import Spinor, clifford_action, kernel_of_j, random_chiral_spinor

seeds = st.integers(min_value=0, max_value=2**32 - 1)
ranks = st.integers(min_value=1, max_value=3)


def same_line(s, t, atol=1e-10):
    a, b = s.normalized().coeffs, t.normalized().coeffs
    return abs(abs(np.vdot(a, b)) - 1) < atol


def reflection(n, axis=0):
    R = np.eye(n)
    R[axis, axis] = -1
    return R


def test_standard_matrix_layout():
    J = standard_acs_matrix(2)
    assert J[1, 0] == 1 and J[0, 1] == -1
    assert np.allclose(J @ J, -np.eye(4))


def test_not_an_acs():
    with pytest.raises(NotAnACS):
        OrthoACS(np.eye(2))
    with pytest.raises(NotAnACS):
        OrthoACS(2 * standard_acs_matrix(1))
    with pytest.raises(NotAnACS):
        OrthoACS(np.zeros((3, 3)))


def test_standard_frame_is_identity():
    F = unitary_basis(OrthoACS.standard(3)).vectors
    assert np.allclose(F, np.eye(6))


@given(ranks, seeds)
def test_frame_invariants(m, seed):
    acs = random_positive_acs(m, np.random.default_rng(seed))
    F = unitary_basis(acs).vectors
    assert np.allclose(F.T @ F, np.eye(2 * m), atol=1e-12)
    assert np.allclose(acs.J @ F[:, 0::2], F[:, 1::2], atol=1e-12)


@given(st.integers(2, 3), seeds)
def test_different_seeds_give_same_line(m, seed):
    rng = np.random.default_rng(seed)
    acs = random_positive_acs(m, rng)
    seed_rows = special_ortho_group.rvs(2 * m, random_state=rng)[:m]
    f1 = unitary_basis(acs)
    f2 = unitary_basis(acs, seed_rows)
    # frames differ by a unitary change, so the isotropic subspaces agree
    V1 = kernel_of_j(pure_spinor_line(acs))
    assert V1.same_as(isotropic_of_acs(acs))
    assert np.allclose(f1.epsbar() @ f1.epsbar().conj().T, f2.epsbar() @ f2.epsbar().conj().T, atol=1e-10)


def test_degenerate_seed_is_reseeded(caplog):
    acs = OrthoACS.standard(2)
    bad = np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0]])  # second seed lies in span(e1, Je1)
    with caplog.at_level(logging.WARNING):
        F = unitary_basis(acs, bad).vectors
    assert "re-seeding" in caplog.text
    assert np.allclose(F.T @ F, np.eye(4))


def test_gram_schmidt_breakdown():
    J = standard_acs_matrix(2)
    with pytest.raises(GramSchmidtBreakdown):
        adapted_gram_schmidt(np.eye(4), J, np.array([[1.0, 0, 0, 0], [1.0, 1e-12, 0, 0]]))


def test_gram_schmidt_jets_match_finite_differences(rng):
    n = 4
    B = rng.normal(size=(n, n, n)) * 0.1
    A0 = np.eye(n) + 0.1 * rng.normal(size=(n, n))
    J0 = standard_acs_matrix(2)

    def fields(t):
        A = A0 + np.einsum("abc,a->bc", B, t)
        return A.T @ A, np.linalg.solve(A, J0 @ A)

    x = np.zeros(n)
    g, J = fields(x)
    h = 1e-6
    dg = np.zeros((n, n, n))
    dJ = np.zeros((n, n, n))
    for a in range(n):
        e = np.eye(n)[a] * h
        gp, Jp = fields(x + e)
        gm, Jm = fields(x - e)
        dg[a], dJ[a] = (gp - gm) / (2 * h), (Jp - Jm) / (2 * h)
    seeds = np.eye(n)[[0, 2]]
    F, dF = adapted_gram_schmidt(g, J, seeds, dg, dJ)
    for a in range(n):
        e = np.eye(n)[a] * h
        Fp, _ = adapted_gram_schmidt(*fields(x + e), seeds)
        Fm, _ = adapted_gram_schmidt(*fields(x - e), seeds)
        assert np.allclose(dF[a], (Fp - Fm) / (2 * h), atol=1e-7)


def test_orientation_examples(rng):
    J0 = OrthoACS.standard(2)
    assert canonical_orientation(J0) == 1
    assert canonical_orientation(J0.conjugated(reflection(4))) == -1
    for _ in range(5):
        R = special_ortho_group.rvs(4, random_state=rng)
        assert canonical_orientation(J0.conjugated(R)) == 1


def test_isotropic_of_standard():
    V = isotropic_of_acs(OrthoACS.standard(2))
    assert V.dim == 2
    epsbar = np.array([[1, 1j, 0, 0], [0, 0, 1, 1j]]) / np.sqrt(2)
    assert V.same_as(type(V)(epsbar))


@given(ranks, seeds)
def test_isotropic_subspace_properties(m, seed):
    acs = random_positive_acs(m, np.random.default_rng(seed))
    V = isotropic_of_acs(acs)
    assert V.dim == m
    assert V.isotropy_defect() < 1e-12
    # V is the -i eigenspace and is hermitian-orthogonal to its conjugate
    assert np.allclose(acs.J @ V.basis.T, -1j * V.basis.T, atol=1e-12)
    for v in V.basis:
        for w in V.basis:
            assert abs(hermitian_form(v, w.conj())) < 1e-12


def test_pure_spinor_line_of_standard_is_vacuum():
    u = pure_spinor_line(OrthoACS.standard(3))
    assert np.allclose(u.coeffs, Spinor.vacuum(3).coeffs)


@pytest.mark.parametrize("i,j,theta", [(1, 3, 0.4), (2, 3, 1.1), (1, 4, -0.7)])
def test_rotated_structure_gives_spin_lift(i, j, theta):
    m = 2
    g = rotor(m, i, j, theta)
    R = adjoint_matrix(g).real
    acs = OrthoACS.standard(m).conjugated(R)
    u = pure_spinor_line(acs)
    assert same_line(u, clifford_action(g, Spinor.vacuum(m)))


def test_negative_orientation_rejected():
    acs = OrthoACS.standard(2).conjugated(reflection(4))
    with pytest.raises(NegativeOrientation):
        pure_spinor_line(acs)


def test_vacuum_recovers_standard():
    assert np.allclose(acs_of_pure_spinor(Spinor.vacuum(2)).J, standard_acs_matrix(2))
    scaled = Spinor.vacuum(2) * (0.3 - 2j)
    assert np.allclose(acs_of_pure_spinor(scaled).J, standard_acs_matrix(2))


def test_impure_spinor_rejected():
    s = Spinor(4)
    s.coeffs[0] = s.coeffs[0b1111] = 1
    with pytest.raises(ImpureSpinor):
        acs_of_pure_spinor(s)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_round_trip_many(m):
    rng = np.random.default_rng(m)
    for _ in range(100):
        acs = random_positive_acs(m, rng)
        u = pure_spinor_line(acs)
        assert np.abs(acs_of_pure_spinor(u).J - acs.J).max() < 1e-10
        assert same_line(pure_spinor_line(acs_of_pure_spinor(u)), u)
        assert np.abs(acs_of_subspace(isotropic_of_acs(acs)).J - acs.J).max() < 1e-10


@given(st.integers(2, 3), seeds, st.floats(-3, 3))
def test_equivariance(m, seed, theta):
    rng = np.random.default_rng(seed)
    s = random_chiral_spinor(m, rng)
    i, j = sorted(int(v) + 1 for v in rng.choice(2 * m, 2, replace=False))
    g = rotor(m, i, j, theta)
    R = adjoint_matrix(g).real
    lhs = acs_of_pure_spinor(clifford_action(g, s)).J
    rhs = R @ acs_of_pure_spinor(s).J @ R.T
    assert np.allclose(lhs, rhs, atol=1e-9)


def test_phase_fixed_is_reproducible(rng):
    u = pure_spinor_line(random_positive_acs(3, rng))
    k = np.argmax(np.abs(u.coeffs))
    assert abs(u.coeffs[k].imag) < 1e-15 and u.coeffs[k].real > 0
    assert np.isclose(u.norm(), 1)
