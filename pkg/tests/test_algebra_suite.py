import json

import numpy as np
import pytest

from twistorlab import algebra_suite as A
from twistorlab.spinor import chirality_split, kernel_analysis

NAMES = [c[0] for c in A.CHECKS]


@pytest.mark.parametrize("m", [1, 2, 3])
def test_small_suite_passes(m):
    out = A.run_suite(m, 5, 0)
    assert out["passed"]
    assert [c["name"] for c in out["checks"]] == NAMES
    for c in out["checks"]:
        assert c["max_error"] <= c["tolerance"]


def test_suite_is_deterministic():
    a = A.run_suite(2, 4, 9)
    b = A.run_suite(2, 4, 9)
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_only_filter_and_caps():
    out = A.run_suite(2, 3, 0, only={"star_constant", "round_trip"})
    assert [c["name"] for c in out["checks"]] == ["round_trip", "star_constant"]
    assert out["checks"][1]["trials"] == 1


@pytest.mark.parametrize("m,trials", [(0, 1), (A.MAX_M + 1, 1), (2, 0)])
def test_bad_arguments(m, trials):
    with pytest.raises(ValueError):
        A.run_suite(m, trials, 0)


def test_witness_is_chiral_and_impure_at_rank_four():
    w = A.impure_witness(4)
    assert chirality_split(w)[1].norm() == 0
    assert kernel_analysis(w).subspace.dim == 0
    out = A.run_suite(4, 2, 0, only={"chiral_purity"})
    det = out["checks"][0]["details"]
    assert det["witness_kernel_dim"] == 0 and det["witness_is_chiral"]
    assert out["passed"]


def test_star_constant_details_frozen():
    det = A.run_suite(2, 1, 0, only={"star_constant"})["checks"][0]["details"]["fitted"]
    got = [complex(*det[str(p)]) for p in range(5)]
    assert np.allclose(got, [-1, 1, 1, -1, -1])


def test_random_compatible_pair_is_compatible():
    rng = np.random.default_rng(4)
    for m in (1, 2, 3):
        g, J = A.random_compatible_pair(m, rng)
        assert np.allclose(J @ J, -np.eye(2 * m), atol=1e-12)
        assert np.allclose(J.T @ g @ J, g, atol=1e-12)
        assert np.all(np.linalg.eigvalsh(g) > 0)
