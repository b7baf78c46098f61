"""Bell sampling, single-copy Pauli shots and purity estimation.

Batch samplers return labels as pairs of uint64 bit arrays ``(xs, zs)`` in site
order (site ``i`` at bit ``i``), which limits the array paths to n <= 64.
"""

from __future__ import annotations

import math

import numpy as np

from . import dense
from .clifford import conjugate_arrays
from .errors import DimensionMismatch, TooLarge, TooLargeForDense
from .pauli import PauliString, index_tables
from .states import CwState, DenseState, QuantumState, expectation, purity

MAX_MIXED_BELL = 8
ENUMERATE_LIMIT = 12  # max varying sites for pattern enumeration


# ---------------------------------------------------------------------------
# label conversions


def labels_to_index(xs: np.ndarray, zs: np.ndarray, n: int) -> np.ndarray:
    """Site-order bit arrays to base-4 table indices (MSD = qubit 0)."""
    xs = np.asarray(xs, dtype=np.uint64)
    zs = np.asarray(zs, dtype=np.uint64)
    out = np.zeros(xs.shape, dtype=np.int64)
    lut = np.array([[0, 3], [1, 2]], dtype=np.int64)  # [x][z] -> digit
    one = np.uint64(1)
    for i in range(n):
        xi = ((xs >> np.uint64(i)) & one).astype(np.int64)
        zi = ((zs >> np.uint64(i)) & one).astype(np.int64)
        out = out * 4 + lut[xi, zi]
    return out


def index_to_labels(idx: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.asarray(idx, dtype=np.int64)
    xs = np.zeros(idx.shape, dtype=np.uint64)
    zs = np.zeros(idx.shape, dtype=np.uint64)
    for i in range(n):
        d = (idx >> (2 * (n - 1 - i))) & 3
        bit = np.uint64(1 << i)
        xs |= np.where((d == 1) | (d == 2), bit, np.uint64(0))
        zs |= np.where((d == 2) | (d == 3), bit, np.uint64(0))
    return xs, zs


def to_pauli_list(xs, zs, n: int) -> list[PauliString]:
    return [PauliString(n, int(x), int(z)) for x, z in zip(xs, zs)]


# ---------------------------------------------------------------------------
# W-state closed form


def _w_z_weights(n: int) -> np.ndarray:
    w = np.arange(n + 1)
    weights = np.array([math.comb(n, int(k)) for k in w], dtype=float) * (1 - 2 * w / n) ** 2
    return weights / weights.sum()


def w_pauli_samples(n: int, count: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """``count`` exact draws from the Pauli distribution of the n-qubit W state.

    With probability 1/n a string is Z-type: its Z-weight ``w`` is drawn with
    weight ``C(n,w)(1-2w/n)^2`` and placed uniformly.  Otherwise it carries XX or
    YY on a uniformly random pair and independent uniform I/Z elsewhere.
    """
    if n < 2:
        raise ValueError("W-state sampler needs n >= 2")
    if n > 64:
        raise TooLarge("array sampler needs n <= 64")
    ztype = rng.random(count) < 1 / n
    weights = rng.choice(n + 1, size=count, p=_w_z_weights(n))
    # uniform placement of w ones: keep the w smallest of n random keys
    ranks = np.argsort(np.argsort(rng.random((count, n)), axis=1), axis=1)
    pow2 = np.left_shift(np.uint64(1), np.arange(n, dtype=np.uint64))
    zonly = ((ranks < weights[:, None]) * pow2).sum(axis=1, dtype=np.uint64)
    # two-body strings
    i = rng.integers(n, size=count)
    j = (i + 1 + rng.integers(n - 1, size=count)) % n
    pair = pow2[i] | pow2[j]
    rest = (rng.integers(2, size=(count, n)) * pow2).sum(axis=1, dtype=np.uint64) & ~pair
    yy = rng.random(count) < 0.5
    xs = np.where(ztype, np.uint64(0), pair)
    zs = np.where(ztype, zonly, np.where(yy, rest | pair, rest))
    return xs.astype(np.uint64), zs.astype(np.uint64)


def w_pauli_sample(n: int, rng: np.random.Generator) -> PauliString:
    xs, zs = w_pauli_samples(n, 1, rng)
    return PauliString(n, int(xs[0]), int(zs[0]))


# ---------------------------------------------------------------------------
# generic sparse supports


def _support_partners(state: CwState, x: int) -> dict[int, float]:
    """``{s: c_s c_{s^x}}`` over support elements whose partner is also in the support."""
    arrays = state.support_arrays()
    if arrays is not None:
        keys, vals = arrays
        t = keys ^ np.uint64(x)
        idx = np.searchsorted(keys, t)
        idx[idx == len(keys)] = 0
        hit = np.flatnonzero(keys[idx] == t)
        return {int(keys[h]): float(vals[h] * vals[idx[h]]) for h in hit}
    coef = state.coefficient_map()
    return {s: c * coef[s ^ x] for s, c in state.support if (s ^ x) in coef}


def _varying(keys) -> int:
    anded, ored = ~0, 0
    for s in keys:
        anded &= s
        ored |= s
    return ored & ~anded


def hadamard_measure_sparse(amps: dict[int, float], n: int, rng: np.random.Generator) -> int:
    """Sample ``z`` with probability proportional to ``(sum_s a_s (-1)^{s.z})^2``.

    Measures the sparse vector ``sum_s a_s |s>`` in the Hadamard basis one
    qubit at a time.  Sites on which every key agrees give a uniform outcome.
    """
    varying = _varying(amps)
    z = 0
    fixed = ((1 << n) - 1) & ~varying
    for site in range(n):
        if fixed >> site & 1 and rng.random() < 0.5:
            z |= 1 << site
    cur = amps
    while varying:
        low = varying & -varying
        varying ^= low
        plus: dict[int, float] = {}
        minus: dict[int, float] = {}
        for s, a in cur.items():
            r = s & ~low
            plus[r] = plus.get(r, 0.0) + a
            minus[r] = minus.get(r, 0.0) + (-a if s & low else a)
        p0 = sum(v * v for v in plus.values())
        p1 = sum(v * v for v in minus.values())
        if rng.random() * (p0 + p1) < p0:
            cur = plus
        else:
            cur = minus
            z |= low
    return z


def _pattern_table(amps: dict[int, float], varying: int):
    """Amplitude of every sign pattern on the varying sites.

    Returns ``(sites, patterns, values)`` with ``values[u] = sum_s a_s (-1)^{s_V . u}``.
    """
    sites = [i for i in range(varying.bit_length()) if varying >> i & 1]
    r = len(sites)
    keys = np.array([[(s >> i) & 1 for i in sites] for s in amps], dtype=np.int64).reshape(len(amps), r)
    a = np.array(list(amps.values()))
    u = (np.arange(2**r)[:, None] >> np.arange(r)[None, :]) & 1
    signs = 1 - 2 * ((keys @ u.T) & 1)
    return sites, u, a @ signs


def support_pauli_samples(state: CwState, count: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Exact draws from the Pauli distribution of the support vector (no tableau).

    The X part is the XOR of two independent draws from ``c_z^2``; given it,
    the Z part follows the squared Walsh transform of the partner amplitudes
    ``c_s c_{s^x}``.
    """
    n = state.n
    if n > 64:
        raise TooLarge("array sampler needs n <= 64")
    keys = np.array([z for z, _ in state.support], dtype=np.uint64)
    probs = np.array([c * c for _, c in state.support])
    probs /= probs.sum()
    xs = keys[rng.choice(len(keys), size=count, p=probs)] ^ keys[rng.choice(len(keys), size=count, p=probs)]
    zs = np.zeros(count, dtype=np.uint64)
    pow2 = np.left_shift(np.uint64(1), np.arange(n, dtype=np.uint64))
    for x in np.unique(xs):
        where = np.flatnonzero(xs == x)
        amps = _support_partners(state, int(x))
        varying = _varying(amps)
        if varying.bit_count() > ENUMERATE_LIMIT:
            for w in where:
                zs[w] = hadamard_measure_sparse(amps, n, rng)
            continue
        sites, u, vals = _pattern_table(amps, varying)
        p = vals**2
        picks = rng.choice(len(p), size=len(where), p=p / p.sum())
        fixed = ((1 << n) - 1) & ~varying
        free = (rng.integers(2, size=(len(where), n)) * pow2).sum(axis=1, dtype=np.uint64) & np.uint64(fixed)
        vbits = np.zeros(len(where), dtype=np.uint64)
        for col, site in enumerate(sites):
            vbits |= (u[picks, col].astype(np.uint64) << np.uint64(site))
        zs[where] = free | vbits
    return xs, zs


def support_pauli_sample(state: CwState, rng: np.random.Generator) -> PauliString:
    xs, zs = support_pauli_samples(state, 1, rng)
    return PauliString(state.n, int(xs[0]), int(zs[0]))


# ---------------------------------------------------------------------------
# Bell sampling


def _index_lookup(n: int) -> np.ndarray:
    """Map dense-order ``(xmask << n) | zmask`` to table index."""
    xm, zm = index_tables(n)
    lut = np.empty(4**n, dtype=np.int64)
    lut[(xm << n) | zm] = np.arange(4**n)
    return lut


def _dense_pure_bell_indices(s: DenseState, count: int, rng: np.random.Generator) -> np.ndarray:
    """Bell samples of a pure dense state, grouped by X part (no 4^n table)."""
    psi, n = s.data, s.n
    d = 2**n
    p = np.abs(psi) ** 2
    p /= p.sum()
    xs = rng.choice(d, size=count, p=p) ^ rng.choice(d, size=count, p=p)
    zs = np.empty(count, dtype=np.int64)
    idx = np.arange(d)
    for x in np.unique(xs):
        where = np.flatnonzero(xs == x)
        f = np.abs(dense.fwht(psi[idx ^ x] * psi)) ** 2
        zs[where] = rng.choice(d, size=len(where), p=f / f.sum())
    if n <= 8:
        lut = s._cache.get("lut")
        if lut is None:
            lut = s._cache["lut"] = _index_lookup(n)
        return lut[(xs << n) | zs]
    # larger n: convert via reversed bit masks
    rev = np.array([int(format(v, f"0{n}b")[::-1], 2) for v in range(d)], dtype=np.uint64)
    return labels_to_index(rev[xs], rev[zs], n)


def bell_table_cached(s: DenseState) -> np.ndarray:
    table = s._cache.get("bell")
    if table is None:
        if not s.is_pure_vector and s.n > MAX_MIXED_BELL:
            raise TooLargeForDense(f"mixed-state Bell table capped at n={MAX_MIXED_BELL}")
        table = np.clip(dense.bell_table(s.data, s.n), 0, None)
        table /= table.sum()
        s._cache["bell"] = table
    return table


def bell_sample_indices(s: DenseState, count: int, rng: np.random.Generator) -> np.ndarray:
    """Bell samples of a dense state as base-4 table indices."""
    if s.is_pure_vector:
        return _dense_pure_bell_indices(s, count, rng)
    table = bell_table_cached(s)
    return rng.choice(len(table), size=count, p=table)


def bell_sample_arrays(s: QuantumState, count: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """``count`` Bell-measurement outcomes on two copies of ``s`` as bit arrays."""
    if isinstance(s, CwState):
        if s.family == "w" and s.n >= 2:
            xs, zs = w_pauli_samples(s.n, count, rng)
        else:
            xs, zs = support_pauli_samples(s, count, rng)
        xs, zs, _ = conjugate_arrays(s.tableau, xs, zs)
        return xs, zs
    return index_to_labels(bell_sample_indices(s, count, rng), s.n)


def bell_samples(s: QuantumState, count: int, rng: np.random.Generator) -> list[PauliString]:
    xs, zs = bell_sample_arrays(s, count, rng)
    return to_pauli_list(xs, zs, s.n)


def bell_sample(s: QuantumState, rng: np.random.Generator) -> PauliString:
    """One Bell-basis outcome ``a`` (sign-free Pauli label) on ``s (x) s``."""
    return bell_samples(s, 1, rng)[0]


# ---------------------------------------------------------------------------
# single-copy shots and purity


def shots_from_expectation(value, shots, rng: np.random.Generator):
    """Mean of ``shots`` +-1 outcomes with ``P(+1) = (1 + value)/2`` (vectorised)."""
    p = np.clip((1 + np.asarray(value, dtype=float)) / 2, 0.0, 1.0)
    k = rng.binomial(shots, p)
    return 2 * k / shots - 1


def pauli_shots(s: QuantumState, p: PauliString, shots: int, rng: np.random.Generator) -> float:
    """Empirical mean of ``shots`` single-copy measurements of ``P`` on ``s``."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if s.n != p.n:
        raise DimensionMismatch("state and Pauli qubit counts differ")
    return float(shots_from_expectation(expectation(s, p), shots, rng))


PURITY_SAMPLE_LIMIT = 1 << 20


def purity_from_labels(xs: np.ndarray, zs: np.ndarray) -> float:
    """Mean SWAP eigenvalue ``(-1)^{y_a}`` of a batch of Bell labels."""
    y = np.bitwise_count(np.asarray(xs, dtype=np.uint64) & np.asarray(zs, dtype=np.uint64))
    return float(np.mean(1 - 2 * (y & 1).astype(np.int64)))


def estimate_purity(s: QuantumState, shots: int, rng: np.random.Generator) -> float:
    """Unbiased estimate of ``tr rho^2`` from ``shots`` Bell samples.

    Above ``PURITY_SAMPLE_LIMIT`` the count of +1 signs is drawn from its
    exact law ``Bin(shots, (1 + tr rho^2)/2)`` instead of sample by sample.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if shots > PURITY_SAMPLE_LIMIT:
        return float(shots_from_expectation(purity(s), shots, rng))
    return purity_from_labels(*bell_sample_arrays(s, shots, rng))
