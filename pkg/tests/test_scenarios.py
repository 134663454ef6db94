import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twistorlab import scenarios as S
from twistorlab.acs import standard_acs_matrix
from twistorlab.patch import point_geometry
from twistorlab.report import point_norms, sample_points

CORE = ["d_omega", "d_star_omega", "a", "b", "cyclic_b", "dirac_u", "nijenhuis", "dirac_omega"]


def all_norms(sc, k=8, oracle="analytic"):
    patch = sc.patch.with_oracle(oracle)
    return [point_norms(point_geometry(patch, x)) for x in sample_points(sc.patch, k, 3)]


@pytest.mark.parametrize("m", [1, 2, 3])
def test_flat_all_zero(m):
    for norms in all_norms(S.flat_standard(m)):
        assert all(norms[k] == 0 for k in CORE)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_flat_fd_matches_analytic(m):
    sc = S.flat_standard(m)
    for a, f in zip(all_norms(sc), all_norms(sc, oracle="fd")):
        for k in CORE:
            assert abs(a[k] - f[k]) < 1e-8


def test_flat_rank_limits():
    with pytest.raises(S.ScenarioError):
        S.flat_standard(4)


@pytest.mark.parametrize("m", [2, 3])
def test_kahler_positive_control(m):
    for norms in all_norms(S.kahler_potential(m)):
        for k in ("d_omega", "a", "b", "nijenhuis", "dirac_u"):
            assert norms[k] <= 1e-6


def test_kahler_eps_zero_is_flat():
    sc = S.kahler_potential(2, eps=0.0)
    for x in sample_points(sc.patch, 5, 0):
        assert np.allclose(sc.patch.g(x), np.eye(4), atol=1e-15)
        assert np.all(sc.patch.derivatives(x)[0] == 0)


def test_kahler_rejects_large_eps_and_small_m():
    with pytest.raises(S.ScenarioError):
        S.kahler_potential(2, eps=10.0)
    with pytest.raises(S.ScenarioError):
        S.kahler_potential(1)


def test_kahler_metric_is_hermitian():
    sc = S.kahler_potential(3, eps=0.2)
    J = standard_acs_matrix(3)
    for x in sample_points(sc.patch, 5, 1):
        g = sc.patch.g(x)
        assert np.allclose(J.T @ g @ J, g, atol=1e-14)


def test_kodaira_thurston_table():
    sc = S.kodaira_thurston()
    assert sc.expectation("b") == "nonzero" and sc.expectation("nijenhuis") == "nonzero"
    for k in ("d_omega", "a", "cyclic_b", "dirac_u"):
        assert sc.expectation(k) == "zero"
    for norms in all_norms(sc):
        assert norms["d_omega"] <= 1e-8 and norms["dirac_u"] <= 1e-6
        assert norms["a"] <= 1e-6 and norms["cyclic_b"] <= 1e-6
        assert norms["b"] > 0.1 and norms["nijenhuis"] > 0.1


def test_kodaira_thurston_coframe():
    sc = S.kodaira_thurston()
    x = np.array([0.2, -0.1, 0.05, 0.1])
    # sigma_4 = dt - x dy, so g_yy = 1 + x^2 and g_yt = -x
    g = sc.patch.g(x)
    assert g[1, 1] == pytest.approx(1 + 0.04) and g[1, 3] == pytest.approx(-0.2)


@pytest.mark.parametrize("m", [2, 3])
def test_conformal_warp_negative_control(m):
    for norms in all_norms(S.conformal_warp(m)):
        assert norms["d_omega"] > 1e-3 and norms["dirac_u"] > 1e-3
        assert norms["a"] > 1e-3 or norms["cyclic_b"] > 1e-3
        assert norms["b"] <= 1e-12 and norms["nijenhuis"] <= 1e-12


def test_conformal_warp_gradient_shape():
    with pytest.raises(S.ScenarioError):
        S.conformal_warp(2, [1.0, 2.0])


def test_random_amplitude_zero_is_flat():
    sc = S.random_perturbation(2, 0.0, 5)
    assert sc.expected == {k: "zero" for k in S.DEFECTS}
    for norms in all_norms(sc, 4):
        assert all(norms[k] < 1e-14 for k in CORE)


def test_random_rejects_large_amplitude():
    with pytest.raises(S.ScenarioError):
        S.random_perturbation(2, 5.0, 0)


@given(st.integers(2, 3), st.floats(0.01, 0.3), st.integers(0, 1000))
def test_random_structure_compatible(m, amp, seed):
    sc = S.random_perturbation(m, amp, seed)
    for x in sample_points(sc.patch, 3, seed):
        g, J = sc.patch.g(x), sc.patch.J(x)
        assert np.allclose(J @ J, -np.eye(2 * m), atol=1e-10)
        assert np.allclose(J.T @ g @ J, g, atol=1e-10)


@given(st.integers(2, 3), st.floats(0.01, 0.3), st.integers(0, 1000))
def test_random_coefficient_symmetries(m, amp, seed):
    from twistorlab.patch import coefficients_from_connection

    sc = S.random_perturbation(m, amp, seed)
    for x in sample_points(sc.patch, 2, seed):
        cc = coefficients_from_connection(point_geometry(sc.patch, x).conn)
        assert max(cc.symmetry_defects().values()) < 1e-9


def test_random_scenario_deterministic():
    a, b = S.random_perturbation(3, 0.2, 11), S.random_perturbation(3, 0.2, 11)
    x = np.full(6, 0.1)
    assert np.array_equal(a.patch.g(x), b.patch.g(x))
    assert np.array_equal(a.patch.J(x), b.patch.J(x))
    c = S.random_perturbation(3, 0.2, 12)
    assert not np.array_equal(a.patch.g(x), c.patch.g(x))


def test_build_by_name():
    assert S.build("flat", 3).m == 3
    assert S.build("kodaira-thurston").m == 2
    assert S.build("kahler", 2, eps=0.05).params["eps"] == 0.05
    assert S.build("random", 2, amplitude=None, seed=3).params["seed"] == 3
    with pytest.raises(S.ScenarioError):
        S.build("sphere")
    with pytest.raises(S.ScenarioError):
        S.build("kodaira-thurston", 3)


def test_registry_names():
    assert set(S.REGISTRY) == {"flat", "kahler", "kodaira-thurston", "conformal-warp", "random"}
