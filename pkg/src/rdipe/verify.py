"""Brute-force numerical checks of the structural facts the protocol relies on.

Every check returns a JSON-serialisable report with a boolean ``passed``.
"""

from __future__ import annotations

import math

import numpy as np

from . import dense
from .clifford import enumerate_group, random_layer
from .distributions import TIE_TOL, cdf_exact, count_above, pauli_distribution, tv_distance, value_distribution
from .errors import OddN, TooLarge
from .noise import trace_distance
from .pauli import PauliString
from .states import (
    DenseState,
    QuantumState,
    expectation_table,
    make_w_state,
    purity,
    random_cw,
    renyi2_half,
    to_dense,
)

MAX_COMMUTANT_QUBITS = 5
MAX_DENSE_COUNT = 8


# ---------------------------------------------------------------------------
# commutant of O(d) (x) O(d)


def sym_dims(n: int) -> tuple[int, int]:
    d = 2**n
    return d * (d + 1) // 2, d * (d - 1) // 2


def phi0_projector(n: int) -> np.ndarray:
    d = 2**n
    phi = np.eye(d).reshape(-1) / math.sqrt(d)
    return np.outer(phi, phi)


def commutant_basis(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """HS-orthonormal basis of the commutant of ``O (x) O``: normalised symmetric
    and antisymmetric projectors, and the maximally entangled projector with its
    symmetric component removed."""
    if n > MAX_COMMUTANT_QUBITS:
        raise TooLarge(f"commutant basis is dense 4^n x 4^n; n <= {MAX_COMMUTANT_QUBITS}")
    d2 = 4**n
    swap = dense.swap_full(n)
    eye = np.eye(d2)
    ds, da = sym_dims(n)
    psym, pasym = (eye + swap) / 2, (eye - swap) / 2
    bbar = (phi0_projector(n) - psym / ds) / math.sqrt(1 - 1 / ds)
    return psym / math.sqrt(ds), pasym / math.sqrt(da), bbar


def hs_gram(ops) -> np.ndarray:
    return np.array([[np.vdot(a, b).real for b in ops] for a in ops])


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random orthogonal matrix (QR of a Gaussian, diagonal signs fixed)."""
    q, r = np.linalg.qr(rng.normal(size=(d, d)))
    return q * np.sign(np.diag(r))


def conjugate_two_copy(op: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``(U (x) U) op (U (x) U)^dag`` without forming the Kronecker product."""
    d = u.shape[0]
    t = op.reshape(d, d, d, d)
    t = np.einsum("ia,jb,abcd,kc,ld->ijkl", u, u, t, u.conj(), u.conj(), optimize=True)
    return t.reshape(d * d, d * d)


def commutant_check(n: int, trials: int = 100, rng=None) -> dict:
    rng = np.random.default_rng(rng)
    basis = commutant_basis(n)
    gram_err = float(np.abs(hs_gram(basis) - np.eye(3)).max())
    comm = 0.0
    for _ in range(trials):
        o = random_orthogonal(2**n, rng)
        for b in basis:
            comm = max(comm, float(np.abs(conjugate_two_copy(b, o) - b).max()))
    ds, da = sym_dims(n)
    return {"check": "commutant", "n": n, "d_sym": ds, "d_asym": da, "gram_error": gram_err,
            "max_commutator": comm, "trials": trials, "passed": gram_err < 1e-10 and comm < 1e-8}


# ---------------------------------------------------------------------------
# exhaustive twirl


def project_commutant(x: np.ndarray, basis) -> np.ndarray:
    return sum(np.vdot(b, x) * b for b in basis)


def group_unitaries(n: int) -> list[np.ndarray]:
    return [dense.circuit_unitary(n, t.gate_log).real for t in enumerate_group(n)]


def twirl(x: np.ndarray, unitaries) -> np.ndarray:
    return sum(conjugate_two_copy(x, u) for u in unitaries) / len(unitaries)


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (g + g.conj().T) / 2


def twirl_check(n: int, trials: int = 20, rng=None) -> dict:
    """Exact group average vs HS projection onto the commutant, on random Hermitian inputs."""
    if n not in (1, 2):
        raise TooLarge("twirl_check enumerates rCl(n) and needs n in {1, 2}")
    rng = np.random.default_rng(rng)
    us = group_unitaries(n)
    basis = commutant_basis(n)
    dev = 0.0
    for _ in range(trials):
        x = random_hermitian(4**n, rng)
        dev = max(dev, float(np.abs(twirl(x, us) - project_commutant(x, basis)).max()))
    # fixed point and kernel
    fixed = float(np.abs(twirl(basis[2], us) - basis[2]).max())
    x = random_hermitian(4**n, rng)
    kernel_in = x - project_commutant(x, basis)
    kernel = float(np.abs(twirl(kernel_in, us)).max())
    return {"check": "twirl", "n": n, "group_order": len(us), "trials": trials, "max_deviation": dev,
            "fixed_point_error": fixed, "kernel_error": kernel,
            "passed": max(dev, fixed, kernel) < 1e-8}


# ---------------------------------------------------------------------------
# entanglement of Clifford-rotated W states


def twirl_constants(n: int) -> tuple[float, float]:
    """``(k, k')`` with ``E[(C W W^T C^T)^{(x)2}] = (k P_sym + 2^n k' Phi0) / 4^n``.

    Closed form of the projection onto the commutant basis, using
    ``tr(P_sym W^{(x)2}) = 1`` and ``<Phi0|W W> ^2 = 1/2^n`` for real ``W``.
    """
    d = 2**n
    ds, _ = sym_dims(n)
    b = (1 / d - 1 / ds) / (1 - 1 / ds)
    a = 1 / ds - b / ds
    return d * d * a, d * b


def twirl_constants_projection(n: int) -> tuple[float, float]:
    """``(k, k')`` by projecting the dense ``|W><W|^{(x)2}`` onto the commutant basis."""
    w = to_dense(make_w_state(n)).data
    m = np.kron(np.outer(w, w), np.outer(w, w))
    psym_n, pasym_n, bbar = commutant_basis(n)
    ds, _ = sym_dims(n)
    c_sym, c_asym, c_b = (float(np.vdot(b, m).real) for b in (psym_n, pasym_n, bbar))
    # c_sym Psym/sqrt(ds) + c_b (Phi0 - Psym/ds)/sqrt(1 - 1/ds) = a Psym + b Phi0
    scale = math.sqrt(1 - 1 / ds)
    b = c_b / scale
    a = c_sym / math.sqrt(ds) - b / ds
    d = 2**n
    return d * d * a, d * b, c_asym


def twirl_constants_weingarten(n: int) -> tuple[float, float]:
    """Independent path: solve the Gram system of ``{I, SWAP, Phi0}`` with traces
    evaluated in closed form, then read off the ``P_sym`` and ``Phi0`` weights."""
    d = 2**n
    # basis E = (I, SWAP, Phi0); G_ij = tr(E_i E_j); v_i = tr(E_i W^{(x)2})
    G = np.array([[d * d, d, 1.0], [d, d * d, 1.0], [1.0, 1.0, 1.0]])
    v = np.array([1.0, 1.0, 1.0 / d])
    c_id, c_swap, c_phi = np.linalg.solve(G, v)
    # c_id I + c_swap SWAP = a P_sym + (c_id - c_swap) P_asym; the latter must vanish
    a = c_id + c_swap
    return d * d * a, d * c_phi


def swap_half_traces(n: int) -> dict:
    """``tr(SWAP_{n/2} P_sym)`` and ``tr(SWAP_{n/2} Phi0)`` from dense matrices."""
    if n % 2:
        raise OddN("half swap needs even n")
    sw = dense.swap_half(n)
    psym = (np.eye(4**n) + dense.swap_full(n)) / 2
    t_sym = float(np.einsum("ij,ji->", sw, psym))
    t_phi = float(np.einsum("ij,ji->", sw, phi0_projector(n)))
    return {"n": n, "tr_swap_psym": t_sym, "expected_psym": 2 ** (3 * n / 2), "tr_swap_phi0": t_phi,
            "passed": t_sym == 2 ** (3 * n // 2) and abs(t_phi - 1) < 1e-12}


def predicted_entropy(n: int) -> float:
    """``-log2(k 2^{-n/2} + k' 2^{-n})``: minus log of the averaged half-system purity."""
    k, kp = twirl_constants(n)
    return -math.log2(k * 2 ** (-n / 2) + kp * 2.0 ** (-n))


def entanglement_average_check(n: int, samples: int = 200, depth: int | None = None, rng=None,
                               z: float = 3.0) -> dict:
    """Average half-system Renyi-2 entropy of random ``C|W_n>``.

    The twirl fixes the average half-system purity exactly, so the sample mean
    purity must agree with ``k 2^{-n/2} + k' 2^{-n}`` within ``z`` standard
    errors, and by convexity the mean entropy must not fall below the
    prediction by more than ``z`` standard errors.
    """
    if n % 2:
        raise OddN("entanglement check needs even n")
    if n > 12:
        raise TooLarge("dense Renyi entropy capped at n = 12")
    rng = np.random.default_rng(rng)
    ent, pur = np.empty(samples), np.empty(samples)
    for i in range(samples):
        s2 = renyi2_half(random_cw(n, rng, depth))
        ent[i], pur[i] = s2, 2.0**-s2
    k, kp = twirl_constants(n)
    pred_purity = k * 2 ** (-n / 2) + kp * 2.0 ** (-n)
    pred = -math.log2(pred_purity)
    se_p = float(pur.std(ddof=1) / math.sqrt(samples))
    se_s = float(ent.std(ddof=1) / math.sqrt(samples))
    mean_s, mean_p = float(ent.mean()), float(pur.mean())
    purity_ok = abs(mean_p - pred_purity) <= z * max(se_p, 1e-15)
    entropy_ok = mean_s >= pred - z * max(se_s, 1e-15)
    return {"check": "entanglement", "n": n, "samples": samples, "k": k, "k_prime": kp,
            "mean_entropy": mean_s, "entropy_stderr": se_s, "mean_purity": mean_p,
            "purity_stderr": se_p, "predicted_purity": pred_purity, "predicted_entropy": pred,
            "entropy_of_mean_purity": -math.log2(mean_p), "purity_consistent": bool(purity_ok),
            "entropy_above_prediction": bool(entropy_ok), "passed": bool(purity_ok and entropy_ok)}


def linear_fit(xs, ys) -> dict:
    x, y = np.asarray(xs, float), np.asarray(ys, float)
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    r2 = 1 - resid @ resid / ((y - y.mean()) @ (y - y.mean()))
    return {"slope": float(slope), "intercept": float(icpt), "r2": float(r2)}


def entanglement_scaling(ns=(4, 6, 8, 10, 12), samples: int = 200, seed: int = 0, depth=None) -> dict:
    rows = [entanglement_average_check(n, samples, depth, np.random.default_rng([seed, n])) for n in ns]
    fit = linear_fit(ns, [r["mean_entropy"] for r in rows])
    return {"check": "entanglement_scaling", "rows": rows, "fit": fit,
            "passed": fit["slope"] > 0 and fit["r2"] > 0.95 and all(r["passed"] for r in rows)}


# ---------------------------------------------------------------------------
# counting Paulis with large expectation


def counting_bound(n: int) -> int:
    """``2 sum_{k <= n/8} C(n, k)``."""
    return 2 * sum(math.comb(n, k) for k in range(n // 8 + 1))


def count_high_paulis(s: QuantumState, threshold: float) -> int:
    """Exact number of labels with ``|<P_a>| > threshold``."""
    if isinstance(s, DenseState) and s.n > MAX_DENSE_COUNT:
        raise TooLarge(f"dense Pauli count capped at n = {MAX_DENSE_COUNT}")
    if threshold >= 1:
        return 0
    return count_above(s, threshold)


def counting_check(ns=(8, 12, 16), seed: int = 0) -> dict:
    rows = []
    for n in ns:
        c = count_high_paulis(random_cw(n, np.random.default_rng([seed, n])), 0.75)
        rows.append({"n": n, "count": c, "binomial_bound": counting_bound(n), "bound": 2 ** (3 * n / 4),
                     "passed": c <= counting_bound(n) and c < 2 ** (3 * n / 4)})
    return {"check": "counting", "rows": rows, "passed": all(r["passed"] for r in rows)}


# ---------------------------------------------------------------------------
# doped states


def doped_circuit(n: int, t: int, rng, depth: int | None = None) -> list[tuple]:
    """Random real-Clifford circuit with ``t`` pi/4 phase gates at random positions."""
    depth = 10 * n if depth is None else depth
    gates: list[tuple] = []
    for _ in range(depth):
        gates.extend(random_layer(n, rng))
    for pos in sorted(rng.choice(len(gates) + 1, size=t, replace=True).tolist(), reverse=True):
        gates.insert(pos, ("PHASE", int(rng.integers(n)), math.pi / 4))
    return gates


def doped_state(n: int, t: int, rng=None, depth: int | None = None) -> DenseState:
    rng = np.random.default_rng(rng)
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    return DenseState(n, dense.apply_circuit(psi, doped_circuit(n, t, rng, depth), n))


def doped_separation_demo(n: int, t: int, rng=None, rho: QuantumState | None = None,
                          rho_prime: QuantumState | None = None) -> dict:
    """Look for a Pauli whose expectations differ by at least 1/4 between a CW
    state and a t-doped state.  Such a Pauli certifies ``||rho - rho'||_1 >= 1/4``.

    The search starts from the labels the doped state fixes to +-1 (there are at
    least ``2^{n-t}``); with fewer than ``2^{3n/4}`` large-expectation labels on
    the CW side, one of them must be a witness when ``t <= n/4``.
    """
    if n > MAX_DENSE_COUNT:
        raise TooLarge(f"doped demo is dense; n <= {MAX_DENSE_COUNT}")
    rng = np.random.default_rng(rng)
    rho = random_cw(n, rng) if rho is None else rho
    rho_prime = doped_state(n, t, rng) if rho_prime is None else rho_prime
    r, rp = expectation_table(rho), expectation_table(rho_prime)
    stab = np.flatnonzero(np.abs(rp) > 1 - 1e-9)
    high_cw = int((np.abs(r) > 0.75 + TIE_TOL).sum())
    premise = 2 ** (n - t) >= 2 ** (3 * n / 4)
    diff = np.abs(r - rp)
    cand = stab[np.abs(r[stab]) <= 0.75 + TIE_TOL]
    if cand.size:
        best = int(cand[np.argmax(diff[cand])])
    else:
        best = int(np.argmax(diff))
    gap = float(diff[best])
    witness = gap >= 0.25 - 1e-12
    return {
        "check": "doped_separation", "n": n, "t": t, "premise_t_le_n_over_4": t <= n / 4,
        "stabilizer_count": int(stab.size), "stabilizer_lower_bound": 2 ** (n - t),
        "cw_high_count": high_cw, "cw_high_bound": 2 ** (3 * n / 4), "counting_premise": bool(premise),
        "witness": PauliString.from_index(n, best).letters if witness else None,
        "witness_gap": gap, "certified_lower_bound": gap if witness else None,
        "trace_distance": trace_distance(rho, rho_prime),
        "applicable": bool(witness),
        "passed": (not premise) or (witness and int(stab.size) >= 2 ** (n - t) and high_cw < 2 ** (3 * n / 4)),
    }


# ---------------------------------------------------------------------------
# continuity of Pauli distributions and CDFs


def pauli_tv_lemma(rho: QuantumState, sigma: QuantumState) -> dict:
    """Both continuity inequalities for purity-weighted Pauli distributions."""
    pr, ps = purity(rho), purity(sigma)
    a, b = pauli_distribution(rho), pauli_distribution(sigma)
    dist = trace_distance(rho, sigma)
    lhs1 = float(np.abs(pr * a - ps * b).sum())
    lhs2 = max(pr, ps) * tv_distance(a, b)
    return {"trace_distance": dist, "weighted_l1": lhs1, "weighted_tv": lhs2,
            "holds": lhs1 <= 2 * dist + 1e-12 and lhs2 <= 2 * dist + 1e-12}


def cdf_lemma(rho: QuantumState, rho_prime: QuantumState) -> dict:
    """``max_eps F_{rho'}(eps) - F_rho(2 eps) - 4 ||rho - rho'||_1 / tr rho'^2`` over
    every point where either side can change."""
    v_p, _, _ = value_distribution(rho_prime)
    v, _, _ = value_distribution(rho)
    eps = np.concatenate([v_p, np.nextafter(v / 2, -np.inf), [0.0, 1.0]])
    eps = np.unique(eps[eps >= 0])
    slack = 4 * trace_distance(rho, rho_prime) / purity(rho_prime)
    excess = np.asarray(cdf_exact(rho_prime, eps)) - np.asarray(cdf_exact(rho, 2 * eps)) - slack
    return {"max_excess": float(excess.max()), "slack": slack, "holds": bool(excess.max() <= 1e-12)}


def random_dense_pair(n: int, rng) -> tuple[DenseState, DenseState]:
    """Mixed bag of pairs: pure/mixed, real/complex, near and far."""
    kind = int(rng.integers(4))
    d = 2**n
    if kind == 0:
        return DenseState.random_pure(n, rng, real=True), DenseState.random_pure(n, rng, real=False)
    if kind == 1:
        rank = int(rng.integers(1, d + 1))
        return DenseState.random_mixed(n, rng, rank), DenseState.random_mixed(n, rng, int(rng.integers(1, d + 1)))
    base = DenseState.random_pure(n, rng, real=bool(kind == 2))
    other = DenseState.random_mixed(n, rng, int(rng.integers(1, d + 1)))
    lam = float(rng.uniform(0, 0.3))
    mix = (1 - lam) * base.density_matrix() + lam * other.density_matrix()
    return base, DenseState(n, (mix + mix.conj().T) / 2)


def lemma_suite(pairs: int = 1000, max_n: int = 5, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    v_tv = v_cdf = 0
    worst_tv = worst_cdf = -np.inf
    for _ in range(pairs):
        n = int(rng.integers(1, max_n + 1))
        a, b = random_dense_pair(n, rng)
        t = pauli_tv_lemma(a, b)
        c = cdf_lemma(a, b)
        v_tv += not t["holds"]
        v_cdf += not c["holds"]
        dist = t["trace_distance"]
        if dist > 0:
            worst_tv = max(worst_tv, max(t["weighted_l1"], t["weighted_tv"]) / (2 * dist))
        worst_cdf = max(worst_cdf, c["max_excess"])
    return {"check": "lemmas", "pairs": pairs, "tv_violations": v_tv, "cdf_violations": v_cdf,
            "max_tv_ratio": float(worst_tv), "max_cdf_excess": float(worst_cdf),
            "passed": v_tv == 0 and v_cdf == 0}


# ---------------------------------------------------------------------------
# identities used by the sampler


def real_state_identity(states) -> dict:
    """``TV(p, q)`` for real pure states (should vanish)."""
    from .distributions import bell_distribution

    worst = max(tv_distance(pauli_distribution(s), bell_distribution(s)) for s in states)
    return {"check": "p_equals_q", "count": len(states), "max_tv": float(worst), "passed": worst < 1e-10}


def w_table_check(n: int) -> dict:
    """Dense W-state expectation table against the closed form by letter counts."""
    table = expectation_table(to_dense(make_w_state(n)))
    worst = 0.0
    for idx in range(4**n):
        p = PauliString.from_index(n, idx)
        nx, ny, nz = p.weight_counts()
        if nx == 0 and ny == 0:
            exp = 1 - 2 * nz / n
        elif (nx, ny) in ((2, 0), (0, 2)):
            exp = 2 / n
        else:
            exp = 0.0
        worst = max(worst, abs(table[idx] - exp))
    return {"check": "w_table", "n": n, "max_error": float(worst), "passed": worst < 1e-10}


def cdf_vanishing_check(ns=(4, 6, 8, 10), seed: int = 0) -> dict:
    rows = []
    for n in ns:
        s = random_cw(n, np.random.default_rng([seed, n]))
        below = float(cdf_exact(s, 4 / n**2 * (1 - 1e-9)))
        rows.append({"n": n, "F_below": below, "F_at": float(cdf_exact(s, 4 / n**2)), "passed": below == 0.0})
    return {"check": "cdf_vanishing", "rows": rows, "passed": all(r["passed"] for r in rows)}


# ---------------------------------------------------------------------------
# suite


SUITES = ("quick", "all")


def run_suite(suite: str = "all", seed: int = 0) -> dict:
    """Run the checks; ``quick`` uses small sample counts."""
    if suite not in SUITES:
        raise ValueError(f"suite must be one of {SUITES}")
    quick = suite == "quick"
    rng = np.random.default_rng(seed)
    reports = {}
    reports["commutant"] = [commutant_check(n, 20 if quick else 100, rng) for n in (1, 2, 3)]
    reports["twirl"] = [twirl_check(n, 5 if quick else 20, rng) for n in (1, 2)]
    reports["swap_traces"] = [swap_half_traces(n) for n in (2, 4)]
    k_rows = []
    for n in (2, 4):
        k1 = twirl_constants(n)
        k2 = twirl_constants_projection(n)
        k3 = twirl_constants_weingarten(n)
        err = max(abs(k1[0] - k2[0]), abs(k1[1] - k2[1]), abs(k1[0] - k3[0]), abs(k1[1] - k3[1]))
        k_rows.append({"n": n, "k": k1[0], "k_prime": k1[1], "asym_component": k2[2],
                       "max_disagreement": err, "passed": err < 1e-6 and abs(k2[2]) < 1e-12})
    reports["twirl_constants"] = k_rows
    reports["entanglement"] = entanglement_scaling((4, 6, 8) if quick else (4, 6, 8, 10, 12),
                                                   50 if quick else 200, seed)
    reports["counting"] = counting_check((8, 12, 16), seed)
    reports["doped"] = [doped_separation_demo(8, t, np.random.default_rng([seed, t])) for t in (0, 1, 2)]
    reports["lemmas"] = lemma_suite(100 if quick else 1000, 4 if quick else 5, seed)
    reports["p_equals_q"] = real_state_identity(
        [DenseState.random_pure(int(n), rng) for n in rng.integers(2, 7, size=10 if quick else 50)])
    reports["w_table"] = [w_table_check(n) for n in (3, 4, 5, 6)]
    reports["cdf_vanishing"] = cdf_vanishing_check((4, 6, 8, 10), seed)

    def ok(r):
        return all(x["passed"] for x in r) if isinstance(r, list) else r["passed"]

    return {"suite": suite, "seed": seed, "reports": reports,
            "passed": all(ok(r) for r in reports.values())}
