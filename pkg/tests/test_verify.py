
import numpy as np
import pytest

from rdipe import dense
from rdipe.errors import OddN, TooLarge
from rdipe.states import DenseState, make_w_state, random_cw, renyi2_half, to_dense
from rdipe.verify import (commutant_basis, commutant_check, count_high_paulis, counting_bound, counting_check,
                          doped_separation_demo, doped_state, entanglement_average_check, group_unitaries, hs_gram,
                          lemma_suite, linear_fit, phi0_projector, predicted_entropy, random_orthogonal, run_suite,
                          swap_half_traces, sym_dims, twirl, twirl_check, twirl_constants,
                          twirl_constants_projection, twirl_constants_weingarten, w_table_check)


def test_sym_dims():
    assert sym_dims(1) == (3, 1)
    assert sym_dims(2) == (10, 6)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_commutant(n):
    r = commutant_check(n, 30, n)
    assert r["gram_error"] < 1e-10 and r["max_commutator"] < 1e-8


def test_gram_identity():
    np.testing.assert_allclose(hs_gram(commutant_basis(2)), np.eye(3), atol=1e-12)


def test_random_orthogonal():
    o = random_orthogonal(8, np.random.default_rng(0))
    np.testing.assert_allclose(o @ o.T, np.eye(8), atol=1e-12)


@pytest.mark.parametrize("n", [1, 2])
def test_twirl(n):
    r = twirl_check(n, 5, n)
    assert r["passed"], r
    assert r["group_order"] == (8 if n == 1 else 1152)


def test_twirl_requires_small_n():
    with pytest.raises(TooLarge):
        twirl_check(3)


@pytest.mark.parametrize("n", [2, 4])
def test_swap_traces(n):
    r = swap_half_traces(n)
    assert r["tr_swap_psym"] == 2 ** (3 * n // 2)
    assert abs(r["tr_swap_phi0"] - 1) < 1e-12
    with pytest.raises(OddN):
        swap_half_traces(3)


def test_twirl_constants_frozen():
    # hand-derived at n = 4: d = 16, d_sym = 136
    k, kp = twirl_constants(4)
    assert k == pytest.approx(16 / 9, abs=1e-12)
    assert kp == pytest.approx(8 / 9, abs=1e-12)


@pytest.mark.parametrize("n", [2, 4])
def test_twirl_constants_three_paths(n):
    k1 = twirl_constants(n)
    k2 = twirl_constants_projection(n)
    k3 = twirl_constants_weingarten(n)
    assert abs(k2[2]) < 1e-12  # no antisymmetric component
    np.testing.assert_allclose(k1, k2[:2], atol=1e-6)
    np.testing.assert_allclose(k1, k3, atol=1e-6)


def test_twirl_constants_from_group_average():
    # exhaustive average over rCl(2) of (C W W^T C^T)^{(x)2}
    n, d = 2, 4
    w = to_dense(make_w_state(n)).data
    m = np.kron(np.outer(w, w), np.outer(w, w))
    avg = twirl(m, group_unitaries(n))
    k, kp = twirl_constants(n)
    psym = (np.eye(d * d) + dense.swap_full(n)) / 2
    np.testing.assert_allclose(avg, (k * psym + d * kp * phi0_projector(n)) / d**2, atol=1e-12)


def test_w_state_has_no_antisymmetric_part():
    w = to_dense(make_w_state(3)).data
    m = np.kron(np.outer(w, w), np.outer(w, w))
    pasym = commutant_basis(3)[1]
    assert abs(np.vdot(pasym, m)) < 1e-12


def test_predicted_entropy_monotone():
    vals = [predicted_entropy(n) for n in (4, 6, 8, 10, 12)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_entanglement_small():
    r = entanglement_average_check(6, 60, rng=0)
    assert r["passed"], r
    with pytest.raises(OddN):
        entanglement_average_check(5, 10)


def test_linear_fit_exact():
    f = linear_fit([1, 2, 3], [2, 4, 6])
    assert f["slope"] == pytest.approx(2) and f["r2"] == pytest.approx(1)


def test_counting():
    assert counting_bound(8) == 2 * (1 + 8)
    assert count_high_paulis(random_cw(8, 0), 1.5) == 0
    r = counting_check((8, 12), 0)
    assert r["passed"]
    assert [row["count"] for row in r["rows"]] == [2, 26]


def test_stabilizer_count():
    s = doped_state(6, 0, 1)
    assert count_high_paulis(s, 1 - 1e-9) == 2**6


def test_doped_demo():
    r = doped_separation_demo(8, 0, 3)
    assert r["applicable"] and r["certified_lower_bound"] >= 0.25 and r["passed"]
    assert r["trace_distance"] >= r["certified_lower_bound"] - 1e-9
    rho = random_cw(6, 4)
    same = doped_separation_demo(6, 0, 0, rho=rho, rho_prime=to_dense(rho))
    assert not same["applicable"]
    # counting premise 2^{n-t} >= 2^{3n/4} exactly when t <= n/4
    for n in (8, 12, 16):
        for t in range(n):
            assert (2 ** (n - t) >= 2 ** (3 * n / 4)) == (t <= n / 4)


def test_doped_state_nonreal():
    s = doped_state(4, 3, 2)
    assert isinstance(s, DenseState)
    assert renyi2_half(s) >= 0


def test_w_table():
    assert w_table_check(4)["passed"]


def test_lemma_suite_small():
    r = lemma_suite(100, 4, 1)
    assert r["passed"]
    assert r["max_tv_ratio"] <= 1


def test_run_suite_quick():
    r = run_suite("quick", 0)
    assert r["passed"]
    with pytest.raises(ValueError):
        run_suite("everything")
