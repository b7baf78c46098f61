import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rdipe import dense
from rdipe.clifford import RealCliffordTableau, random_real_clifford
from rdipe.errors import DimensionMismatch, OddN, SupportCapExceeded
from rdipe.pauli import PauliString
from rdipe.states import (CwState, DenseState, cosine_oracle, dense_from_gates, expectation, expectation_arrays,
                          expectation_table, load_state_spec, make_custom, make_dicke, make_family, make_w_state,
                          overlap, purity, random_cw, renyi2_half, to_dense)


def test_w_support():
    w = make_w_state(3)
    assert sorted(z for z, _ in w.support) == [1, 2, 4]
    assert all(math.isclose(c, 1 / math.sqrt(3)) for _, c in w.support)
    d = to_dense(w)
    assert d.is_real
    np.testing.assert_allclose(np.flatnonzero(d.data), [1, 2, 4])
    np.testing.assert_allclose(d.data[[1, 2, 4]], 1 / math.sqrt(3))


def test_dicke_support():
    d = make_dicke(4, 2)
    assert len(d.support) == 6
    assert all(math.isclose(c, 1 / math.sqrt(6)) for _, c in d.support)
    assert make_dicke(5, 1).support == make_w_state(5).support


def test_support_cap():
    with pytest.raises(SupportCapExceeded):
        make_dicke(20, 10)


def test_custom_normalization_checked():
    with pytest.raises(ValueError):
        make_custom(2, {"10": 0.5, "01": 0.5})
    s = make_custom(2, {"10": 1 / math.sqrt(2), "01": -1 / math.sqrt(2)})
    assert math.isclose(purity(s), 1.0)


@pytest.mark.parametrize("label,value", [("ZII", 1 / 3), ("XXI", 2 / 3), ("XYI", 0.0), ("YYI", 2 / 3), ("ZZZ", -1.0)])
def test_w3_expectations(label, value):
    assert math.isclose(expectation(make_w_state(3), PauliString.from_label(label)), value, abs_tol=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_cw_expectation_matches_dense(n):
    rng = np.random.default_rng(n)
    for k in (1, 2):
        s = random_cw(n, rng, k=k, record=True)
        table = dense.pauli_expectation_table(to_dense(s).data, n)
        idx = rng.integers(4**n, size=2000)
        got = np.array([expectation(s, PauliString.from_index(n, int(a))) for a in idx])
        np.testing.assert_allclose(got, table[idx], atol=1e-10)
        # the tableau path and the gate-log circuit agree up to the global sign
        assert math.isclose(abs(to_dense(s).data @ dense_from_gates(s).data), 1.0, abs_tol=1e-10)


def test_expectation_arrays_match_scalar():
    rng = np.random.default_rng(4)
    s = random_cw(12, rng, k=2)
    xs = rng.integers(0, 2**12, size=300).astype(np.uint64)
    zs = rng.integers(0, 2**12, size=300).astype(np.uint64)
    want = [expectation(s, PauliString(12, int(x), int(z))) for x, z in zip(xs, zs)]
    np.testing.assert_allclose(expectation_arrays(s, xs, zs), want, atol=1e-12)


def test_expectation_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        expectation(make_w_state(3), PauliString.from_label("ZZ"))


def test_purity_and_overlap():
    zero = DenseState.basis(1, 0)
    plus = DenseState.from_vector(np.array([1, 1]) / math.sqrt(2))
    assert math.isclose(purity(zero), 1.0)
    assert math.isclose(overlap(zero, plus), 0.5)
    assert math.isclose(cosine_oracle(zero, plus), 0.5)
    assert math.isclose(purity(DenseState.maximally_mixed(1)), 0.5)
    assert math.isclose(cosine_oracle(zero, DenseState.basis(1, 1)), 0.0, abs_tol=1e-15)


def test_renyi_examples():
    assert abs(renyi2_half(DenseState.basis(4, 5))) < 1e-12
    bell = DenseState.from_vector(np.array([1, 0, 0, 1]) / math.sqrt(2))
    assert math.isclose(renyi2_half(bell), 1.0)
    w4 = make_w_state(4)
    assert math.isclose(renyi2_half(w4), renyi2_half(w4, "swap"), abs_tol=1e-10)
    with pytest.raises(OddN):
        renyi2_half(make_w_state(3))


def test_renyi_methods_mixed():
    rho = DenseState.random_mixed(4, 1, rank=3)
    assert math.isclose(renyi2_half(rho), renyi2_half(rho, "swap"), abs_tol=1e-10)


def test_dense_validation():
    with pytest.raises(ValueError):
        DenseState.from_vector(np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        DenseState(1, np.diag([1.5, -0.5]))


def test_clifford_invariant_purity_and_overlap():
    rng = np.random.default_rng(2)
    t = random_real_clifford(5, None, rng)
    a, b = make_w_state(5, t), make_dicke(5, 2, t)
    assert math.isclose(overlap(a, b), 0.0, abs_tol=1e-12)
    assert math.isclose(cosine_oracle(a, a), 1.0)


def test_load_state_spec(tmp_path):
    spec = {"n": 6, "family": "w", "clifford": {"random": {"seed": 3}}}
    p = tmp_path / "s.json"
    p.write_text(json.dumps(spec))
    s = load_state_spec(p)
    assert isinstance(s, CwState)
    assert s.tableau == load_state_spec(spec).tableau
    s = load_state_spec({"n": 3, "family": "dicke", "k": 2, "clifford": [["H", 0], ["CNOT", 0, 1]]})
    assert s.tableau == RealCliffordTableau.from_gates(3, [("H", 0), ("CNOT", 0, 1)])
    s = load_state_spec({"n": 2, "family": "custom", "support": {"00": 0.6, "11": 0.8}})
    assert math.isclose(expectation(s, PauliString.from_label("ZZ")), 1.0)
    s = load_state_spec({"n": 1, "family": "dense", "amplitudes": [1, 1]})
    assert isinstance(s, DenseState) and math.isclose(s.data[0], 1 / math.sqrt(2))
    with pytest.raises(DimensionMismatch):
        load_state_spec({"n": 2, "family": "dense", "amplitudes": [1, 1]})
    with pytest.raises(ValueError):
        load_state_spec({"n": 2, "family": "nope"})


def test_make_family():
    assert isinstance(make_family("w", 6, 0), CwState)
    assert make_family("dicke2", 6, 0).k == 2
    assert isinstance(make_family("random", 4, 0), DenseState)
    with pytest.raises(ValueError):
        make_family("ghz", 4)


@given(st.integers(2, 6), st.integers(0, 2**31))
def test_cw_invariants(n, seed):
    s = random_cw(n, seed, depth=4)
    assert math.isclose(sum(c * c for _, c in s.support), 1.0, abs_tol=1e-12)
    d = to_dense(s)
    assert math.isclose(np.linalg.norm(d.data), 1.0, abs_tol=1e-10)
    assert d.is_real
    table = expectation_table(s)
    assert math.isclose((table**2).sum(), 2**n, rel_tol=1e-9)


@given(st.integers(1, 4), st.integers(0, 2**31))
def test_random_mixed_is_density(n, seed):
    rho = DenseState.random_mixed(n, seed)
    m = rho.density_matrix()
    assert math.isclose(np.trace(m).real, 1.0, abs_tol=1e-10)
    assert np.linalg.eigvalsh(m).min() >= -1e-10
    assert 2.0**-n - 1e-12 <= purity(rho) <= 1 + 1e-12
