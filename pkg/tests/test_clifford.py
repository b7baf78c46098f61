import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rdipe import dense
from rdipe.clifford import (RealCliffordTableau, conjugate, conjugate_arrays, enumerate_group, generating_gates,
                            inverse_conjugate, random_real_clifford)
from rdipe.errors import InvalidSite
from rdipe.pauli import PauliString


def _dense_conjugate(t, p):
    u = dense.circuit_unitary(t.n, t.gate_log)
    return u @ p.to_matrix() @ u.conj().T


def test_gate_examples():
    t = RealCliffordTableau.identity(2).apply_gate(("H", 0))
    assert t.image("X", 0) == PauliString.from_label("ZI")
    assert t.image("Z", 0) == PauliString.from_label("XI")
    t = RealCliffordTableau.identity(2).apply_gate(("CNOT", 0, 1))
    assert t.image("X", 0) == PauliString.from_label("XX")
    t = RealCliffordTableau.identity(1).apply_gate(("Z", 0))
    assert t.image("X", 0) == -PauliString.from_label("X")


def test_conjugate_examples():
    ident = RealCliffordTableau.identity(3)
    for a in range(64):
        p = PauliString.from_index(3, a)
        assert conjugate(ident, p) == p
        assert inverse_conjugate(ident, p) == p
    h = RealCliffordTableau.from_gates(2, [("H", 0)])
    assert conjugate(h, PauliString.from_label("XZ")) == PauliString.from_label("ZZ")


def test_invalid_gates():
    t = RealCliffordTableau.identity(2)
    with pytest.raises(InvalidSite):
        t.apply_gate(("H", 2))
    with pytest.raises(InvalidSite):
        t.apply_gate(("CNOT", 1, 1))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_conjugate_matches_dense(n):
    rng = np.random.default_rng(n)
    for _ in range(10):
        t = random_real_clifford(n, 6, rng, record=True)
        for a in rng.integers(4**n, size=10):
            p = PauliString.from_index(n, int(a))
            np.testing.assert_allclose(conjugate(t, p).to_matrix(), _dense_conjugate(t, p), atol=1e-12)
            u = dense.circuit_unitary(n, t.gate_log)
            np.testing.assert_allclose(inverse_conjugate(t, p).to_matrix(), u.conj().T @ p.to_matrix() @ u,
                                       atol=1e-12)


def test_inverse_roundtrip_n8():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        t = random_real_clifford(8, 4, rng)
        p = PauliString.from_index(8, int(rng.integers(4**8)))
        assert inverse_conjugate(t, conjugate(t, p)) == p


def test_conjugate_arrays_match_scalar():
    rng = np.random.default_rng(3)
    t = random_real_clifford(10, None, rng)
    xs = rng.integers(0, 2**10, size=200).astype(np.uint64)
    zs = rng.integers(0, 2**10, size=200).astype(np.uint64)
    ox, oz, sg = conjugate_arrays(t, xs, zs)
    for i in range(200):
        q = t.conjugate(PauliString(10, int(xs[i]), int(zs[i])))
        assert (q.x, q.z) == (int(ox[i]), int(oz[i]))
        assert q.sign == int(sg[i])


def test_random_determinism_and_depth_zero():
    assert random_real_clifford(4, 0, 1) == RealCliffordTableau.identity(4)
    assert random_real_clifford(5, None, 42) == random_real_clifford(5, None, 42)
    assert random_real_clifford(5, None, 42).to_json() == random_real_clifford(5, None, 42).to_json()


def test_json_roundtrip():
    t = random_real_clifford(4, None, 9)
    assert RealCliffordTableau.from_json(t.to_json()) == t


def test_group_orders():
    assert len(enumerate_group(1)) == 8
    assert len(enumerate_group(2)) == 1152


def test_group_elements_symplectic_and_closed():
    group = enumerate_group(2)
    members = set(group)
    rng = np.random.default_rng(0)
    for g in group:
        assert g.is_symplectic()
    for _ in range(200):
        a, b = (group[int(i)] for i in rng.integers(len(group), size=2))
        assert a.compose(b) in members


def test_n1_group_matches_dense_enumeration():
    # all products of {H, X, Z} as real matrices modulo global sign
    mats = {"H": dense.GATE_MATRICES["H"], "X": dense.GATE_MATRICES["X"], "Z": dense.GATE_MATRICES["Z"]}
    seen = {}
    frontier = [np.eye(2)]

    def key(m):
        m = np.round(m, 9)
        flat = m.ravel()
        first = flat[np.flatnonzero(flat)[0]]
        return tuple(np.sign(first) * flat)

    while frontier:
        nxt = []
        for m in frontier:
            for g in mats.values():
                w = g @ m
                k = key(w)
                if k not in seen:
                    seen[k] = w
                    nxt.append(w)
        frontier = nxt
    assert len(seen) == len(enumerate_group(1))


def _layer_distribution(n):
    """Exact law of one random layer at n = 2 as (gate list, probability)."""
    out = []
    for perm, r, s0, s1 in itertools.product([(0, 1), (1, 0)], range(4), range(4), range(4)):
        a, b = perm
        gates = [[("CNOT", a, b)], [("CNOT", b, a)], [("CZ", a, b)], []][r]
        gates = gates + [(("H", "X", "Z")[s - 1], q) for q, s in enumerate((s0, s1)) if s]
        out.append((gates, 1 / 128))
    return out


def test_random_circuit_approaches_uniform_exactly():
    group = enumerate_group(2)
    index = {g: i for i, g in enumerate(group)}
    layers = _layer_distribution(2)
    trans = np.zeros((len(group), len(group)))
    for i, g in enumerate(group):
        for gates, p in layers:
            trans[i, index[g.apply_gates(gates)]] += p
    dist = np.zeros(len(group))
    dist[index[RealCliffordTableau.identity(2)]] = 1.0
    for _ in range(50):
        dist = dist @ trans
    assert 0.5 * np.abs(dist - 1 / len(group)).sum() < 1e-6


def test_random_circuit_empirical_uniformity():
    group = enumerate_group(2)
    index = {g: i for i, g in enumerate(group)}
    rng = np.random.default_rng(11)
    N = 5000
    counts = np.zeros(len(group))
    for _ in range(N):
        counts[index[random_real_clifford(2, 50, rng)]] += 1
    tv = 0.5 * np.abs(counts / N - 1 / len(group)).sum()
    # sampling noise of a uniform law over K cells: E[TV] ~ sqrt(K / (2 pi N))
    assert tv < 1.5 * np.sqrt(len(group) / (2 * np.pi * N))


@given(st.integers(1, 6), st.integers(0, 2**31), st.data())
def test_symplectic_invariant(n, seed, data):
    t = random_real_clifford(n, 3, seed)
    assert t.is_symplectic()
    for q in range(n):
        assert t.image("X", q).sign in (1, -1)
    a = data.draw(st.integers(0, 4**n - 1))
    b = data.draw(st.integers(0, 4**n - 1))
    p, r = PauliString.from_index(n, a), PauliString.from_index(n, b)
    assert conjugate(t, p).commutes(conjugate(t, r)) == p.commutes(r)


def test_generating_gates_cover_pairs():
    gates = generating_gates(3)
    assert ("CNOT", 0, 2) in gates and ("CNOT", 2, 0) in gates and ("CZ", 0, 2) in gates
