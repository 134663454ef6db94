from math import factorial

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twistorlab.acs import OrthoACS, pure_spinor_line, random_positive_acs, standard_acs_matrix
from twistorlab.clifford import Multivector, complex_volume
from twistorlab.forms import (
    DegreeOverflow,
    IncompatiblePair,
    KForm,
    clifford_of_form,
    compound,
    form_of_clifford,
    frame_components,
    coordinate_components,
    hodge_power_identity,
    hodge_star,
    kahler_form,
    omega_action_checks,
    omega_clifford,
    omega_factors,
    omega_product_expansion,
    positive_complement,
    predicted_star_constant,
    q_element,
    scalar_form,
    star_volume_constant,
    volume_form,
    wedge,
    wedge_power,
)
from twistorlab.spinor import clifford_action

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def std_omega(m):
    return KForm.from_components(2 * m, 2, {(2 * j + 1, 2 * j + 2): 1.0 for j in range(m)})


def rand_form(n, k, rng):
    a = KForm(n, k)
    a.coeffs[:] = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return KForm(n, k, a.coeffs)


def test_standard_kahler_form():
    om = kahler_form(OrthoACS.standard(2))
    assert om.allclose(std_omega(2))
    assert om.evaluate(np.eye(4)[0], standard_acs_matrix(2) @ np.eye(4)[0]) == pytest.approx(1)


def test_conformal_kahler_form():
    f = 0.3
    g = np.exp(2 * f) * np.eye(4)
    assert kahler_form(standard_acs_matrix(2), g).allclose(std_omega(2) * np.exp(2 * f), 1e-14)


@given(st.integers(1, 3), seeds)
def test_kahler_form_is_j_invariant(m, seed):
    rng = np.random.default_rng(seed)
    acs = random_positive_acs(m, rng)
    om = kahler_form(acs)
    v, w = rng.normal(size=2 * m), rng.normal(size=2 * m)
    assert om.evaluate(acs.J @ v, acs.J @ w) == pytest.approx(om.evaluate(v, w), abs=1e-12)


def test_incompatible_pair():
    g = np.diag([1.0, 2.0, 1.0, 1.0])
    with pytest.raises(IncompatiblePair):
        kahler_form(standard_acs_matrix(2), g)


def test_components_antisymmetric():
    a = KForm.from_components(4, 2, {(2, 1): 1.0})
    assert a.component(1, 2) == -1 and a.component(2, 1) == 1
    assert a.component(1, 1) == 0
    assert np.allclose(a.to_matrix(), -a.to_matrix().T)


def test_omega_squared_is_twice_volume():
    om = std_omega(2)
    assert wedge(om, om).allclose(volume_form(np.eye(4)) * 2)


@given(st.integers(1, 3), st.integers(0, 6), st.integers(0, 6), seeds)
def test_graded_commutativity(m, k, l, seed):
    n = 2 * m
    if k > n or l > n or k + l > n:
        return
    rng = np.random.default_rng(seed)
    a, b = rand_form(n, k, rng), rand_form(n, l, rng)
    assert (a ^ b).allclose((b ^ a) * (-1) ** (k * l), 1e-11)


@given(seeds)
def test_wedge_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = rand_form(6, 1, rng), rand_form(6, 2, rng), rand_form(6, 2, rng)
    assert ((a ^ b) ^ c).allclose(a ^ (b ^ c), 1e-11)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_omega_power_overflow(m):
    om = std_omega(m)
    assert wedge_power(om, m).norm() > 0
    with pytest.raises(DegreeOverflow):
        wedge_power(om, m + 1)


def test_star_of_one_is_volume():
    assert hodge_star(scalar_form(4)).allclose(volume_form(np.eye(4)))
    g = np.diag([1.0, 4.0, 9.0, 1.0])
    assert hodge_star(scalar_form(4), g).allclose(volume_form(g))
    assert volume_form(g).coeffs[-1] == pytest.approx(6.0)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_star_of_omega_powers(m):
    om = std_omega(m)
    for k in range(m + 1):
        lhs = hodge_star(wedge_power(om, k))
        rhs = wedge_power(om, m - k) * (factorial(k) / factorial(m - k))
        assert lhs.allclose(rhs, 1e-12)


@given(st.integers(1, 3), seeds)
def test_double_star_sign(m, seed):
    rng = np.random.default_rng(seed)
    n = 2 * m
    k = int(rng.integers(0, n + 1))
    a = rand_form(n, k, rng)
    assert hodge_star(hodge_star(a)).allclose(a * (-1) ** (k * (n - k)), 1e-11)


@given(st.integers(1, 3), seeds)
def test_star_defining_property(m, seed):
    # a ^ *b = <a, b>_g vol_g for a random SPD metric
    rng = np.random.default_rng(seed)
    n = 2 * m
    A = np.eye(n) + 0.2 * rng.normal(size=(n, n))
    g = A.T @ A
    k = int(rng.integers(0, n + 1))
    a = KForm(n, k, rng.normal(size=1 << n))
    b = KForm(n, k, rng.normal(size=1 << n))
    inner = compound(np.linalg.inv(g), k) @ b.strict() @ a.strict()
    assert (a ^ hodge_star(b, g)).allclose(volume_form(g) * inner, 1e-9)


def test_star_orientation_flips_sign():
    a = std_omega(2)
    assert hodge_star(a, orientation=-1).allclose(hodge_star(a) * -1)
    with pytest.raises(ValueError):
        hodge_star(a, orientation=2)


def test_clifford_identification_examples():
    assert clifford_of_form(std_omega(1)).allclose(Multivector.blade(1, [1, 2]))
    for m in (1, 2, 3):
        top = wedge_power(std_omega(m), m) * (1j**m / factorial(m))
        assert clifford_of_form(top).allclose(complex_volume(m), 1e-14)


@given(st.integers(1, 3), st.integers(0, 6), seeds)
def test_identification_round_trip(m, k, seed):
    if k > 2 * m:
        return
    a = rand_form(2 * m, k, np.random.default_rng(seed))
    assert form_of_clifford(clifford_of_form(a), k).allclose(a, 0)


def test_frame_components_round_trip(rng):
    a = rand_form(4, 2, rng)
    F = np.eye(4) + 0.3 * rng.normal(size=(4, 4))
    assert coordinate_components(frame_components(a, F), F).allclose(a, 1e-12)


def test_expansion_m1():
    lhs, rhs = omega_product_expansion(OrthoACS.standard(1))
    expected = 1 - 1j * Multivector.blade(1, [1, 2])
    assert lhs.allclose(expected) and rhs.allclose(expected)


def test_expansion_m2_blade_by_blade():
    om = clifford_of_form(std_omega(2))
    om2 = clifford_of_form(wedge_power(std_omega(2), 2))
    lhs, _ = omega_product_expansion(OrthoACS.standard(2))
    assert lhs.allclose(1 - 1j * om - om2 * 0.5, 1e-14)


@given(st.integers(1, 4), seeds)
def test_expansion_random(m, seed):
    lhs, rhs = omega_product_expansion(random_positive_acs(m, np.random.default_rng(seed)))
    assert lhs.allclose(rhs, 1e-12)


def test_q_element_m1():
    assert q_element(OrthoACS.standard(1)).allclose(1 + 1j * Multivector.blade(1, [1, 2]))


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_q_acts_as_scaled_projection(m):
    acs = random_positive_acs(m, np.random.default_rng(m))
    u = pure_spinor_line(acs)
    q = q_element(acs)
    assert (clifford_action(q, u) - u * 2**m).norm() < 1e-12
    for s in positive_complement(u):
        assert clifford_action(q, s).norm() < 1e-12


@given(st.integers(1, 4), seeds)
def test_omega_eigenvalues_on_twistor_spinor(m, seed):
    acs = random_positive_acs(m, np.random.default_rng(seed))
    u, wu, wcu = omega_action_checks(acs)
    assert (wu - u * (-1j * m)).norm() < 1e-12
    assert (wcu - u).norm() < 1e-12


@given(st.integers(1, 4), seeds)
def test_i_omega_is_m_minus_sum(m, seed):
    acs = random_positive_acs(m, np.random.default_rng(seed))
    factors, _ = omega_factors(acs)
    rhs = Multivector.scalar(m, m)
    for f in factors:
        rhs = rhs - f
    assert (omega_clifford(acs) * 1j).allclose(rhs, 1e-12)


# brute-force constants c with *phi = c phi.omega_C, frozen from the oracle
STAR_CONSTANTS = {
    1: [-1j, 1j, 1j],
    2: [-1, 1, 1, -1, -1],
    3: [1j, -1j, -1j, 1j, 1j, -1j, -1j],
}


@pytest.mark.parametrize("m", [1, 2, 3])
def test_star_constant_bruteforce(m):
    for p in range(2 * m + 1):
        c = star_volume_constant(m, p)
        assert c == pytest.approx(STAR_CONSTANTS[m][p])
        assert c == pytest.approx(predicted_star_constant(m, p))


def test_star_constant_is_not_three_i_power():
    # the factor (3i)^m would make |c| = 3^m; the measured constant is unimodular
    for m in (1, 2, 3):
        for p in range(2 * m + 1):
            c = star_volume_constant(m, p)
            assert abs(c) == pytest.approx(1.0)
            assert abs(c - (3j) ** m * (-1) ** (p * (p + 1) // 2)) > 1


def test_hodge_identity_helper():
    lhs, rhs = hodge_power_identity(std_omega(3), 1)
    assert lhs.allclose(rhs, 1e-12)
