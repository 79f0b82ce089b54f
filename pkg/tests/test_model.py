import numpy as np
import pytest
from hypothesis import given, strategies as st

from oqrw.exceptions import DimensionMismatch, MissingOperator, NotStochastic
from oqrw.fixtures import (NN_RANGE_DIAGONAL, NN_RANGE_E2, S, fixture_set, range_e2_model,
                           unitary_column_ring)
from oqrw.model import (classical_embed, explicit_model, lattice_model, path_operator,
                        validate_model)

from randmodels import random_model


def test_range_e2_pair_is_normalized():
    b, c = NN_RANGE_E2["B"], NN_RANGE_E2["C"]
    assert np.allclose(b.conj().T @ b + c.conj().T @ c, np.eye(2))
    assert validate_model(range_e2_model()).valid


def test_single_identity_site_is_valid():
    assert validate_model(explicit_model({(0, 0): np.eye(2)})).valid


def test_scaled_operator_breaks_normalization():
    m = lattice_model({-1: 2 * NN_RANGE_E2["B"], 1: NN_RANGE_E2["C"]}, 5)
    report = validate_model(m)
    assert not report.valid
    assert report.rule_defect == pytest.approx(3.0)


def test_boundary_sites_are_exempt():
    m = range_e2_model(window=3)
    report = validate_model(m)
    assert report.boundary == frozenset({-3, 3})
    assert report.defects[-3] > 0.1
    assert report.valid


def test_site_without_outgoing_operator_is_invalid():
    m = explicit_model({(0, 1): np.eye(1)}, sites=[0, 1])
    assert validate_model(m).invalid_sites == [1]


def test_dimension_mismatch_is_reported():
    m = explicit_model({(0, 0): np.eye(2), (0, 1): np.zeros((2, 2))})
    object.__setattr__(m, "ops", {(0, 0): np.eye(3)})
    with pytest.raises(DimensionMismatch):
        validate_model(m)


def test_all_reference_fixtures_validate():
    for name, (m, _) in fixture_set().items():
        assert validate_model(m).valid, name


def test_path_operator_bc_product():
    m = range_e2_model()
    got = path_operator(m, [0, 1, 0])
    assert np.allclose(got, NN_RANGE_E2["B"] @ NN_RANGE_E2["C"])
    assert np.allclose(got, [[0, 0], [-0.5, 0.5]])


def test_single_step_and_missing_step():
    m = range_e2_model()
    assert np.allclose(path_operator(m, [2, 3]), NN_RANGE_E2["C"])
    with pytest.raises(MissingOperator):
        path_operator(m, [0, 0])


def test_classical_path_is_square_root():
    P = np.array([[0.2, 0.8], [0.5, 0.5]])
    m = classical_embed(P)
    assert m.hdim == 1
    assert path_operator(m, [0, 1])[0, 0] == pytest.approx(np.sqrt(0.8))


def test_classical_rejects_non_stochastic():
    with pytest.raises(NotStochastic):
        classical_embed(np.array([[0.5, 0.6], [0.5, 0.5]]))
    with pytest.raises(NotStochastic):
        classical_embed(np.array([[1.5, -0.5], [0.5, 0.5]]))


def test_ring_needs_three_sites():
    with pytest.raises(ValueError):
        unitary_column_ring(2)
    assert unitary_column_ring(5).n_sites == 5


def test_second_pair_ranges_match_h():
    h = NN_RANGE_DIAGONAL["h"]
    for b in (NN_RANGE_DIAGONAL["B"], NN_RANGE_DIAGONAL["C"]):
        assert np.allclose(h @ b, b)
    assert S == pytest.approx(1 / np.sqrt(2))


@given(st.integers(0, 2**31), st.integers(2, 6), st.integers(1, 5))
def test_path_composition(seed, len1, len2):
    rng = np.random.default_rng(seed)
    m = random_model(rng, 3, 2, density=1.0)
    p1 = [int(s) for s in rng.integers(0, 3, size=len1)]
    p2 = [p1[-1]] + [int(s) for s in rng.integers(0, 3, size=len2)]
    joined = p1 + p2[1:]
    assert np.allclose(path_operator(m, joined), path_operator(m, p2) @ path_operator(m, p1))
