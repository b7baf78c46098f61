"""Pauli and Bell distributions, CDFs of squared expectations, and sample planning."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import dense
from .errors import LengthMismatch, NoSolution, NotReal
from .sampling import ENUMERATE_LIMIT, _pattern_table, _support_partners, _varying, bell_sample_arrays, shots_from_expectation
from .states import CwState, DenseState, QuantumState, expectation_arrays, expectation_table, purity, to_dense

TIE_TOL = 1e-12

# ---------------------------------------------------------------------------
# exact tables


def pauli_distribution(s: QuantumState) -> np.ndarray:
    """``p(a) = <P_a>^2 / (2^n tr rho^2)`` over all 4^n labels."""
    r = expectation_table(s)
    p = r**2 / (2**s.n * purity(s))
    return p


def bell_distribution(s: QuantumState) -> np.ndarray:
    """``q(a) = <Phi_a| rho (x) rho |Phi_a>`` over all 4^n labels."""
    d = to_dense(s)
    q = np.clip(dense.bell_table(d.data, d.n), 0.0, None)
    return q


def tv_distance(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise LengthMismatch(f"{p.shape} vs {q.shape}")
    return float(0.5 * np.abs(p - q).sum())


def empirical_distribution(indices, size: int) -> np.ndarray:
    counts = np.bincount(np.asarray(indices, dtype=np.int64), minlength=size)
    return counts / counts.sum()


# ---------------------------------------------------------------------------
# squared-expectation distributions


def value_distribution(s: QuantumState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Distribution of ``<P_a>^2`` under ``a ~ p``.

    Returns ``(values, probs, counts)``: distinct-or-not squared expectations,
    their total Pauli-distribution weight, and the number of labels carrying
    them.  Zero-expectation labels are omitted (they carry no weight).
    CW states use the structured enumeration when every partner set varies on
    at most ``ENUMERATE_LIMIT + 8`` sites, otherwise the dense table.
    """
    if isinstance(s, CwState):
        out = _cw_value_distribution(s)
        if out is not None:
            return out
    r = expectation_table(s)
    nz = r != 0
    vals = r[nz] ** 2
    return vals, vals / (2**s.n * purity(s)), np.ones(vals.shape)


def _cw_value_distribution(s: CwState, limit: int = ENUMERATE_LIMIT + 8):
    keys = [z for z, _ in s.support]
    diffs = {a ^ b for a in keys for b in keys}
    vals, probs, counts = [], [], []
    for x in diffs:
        amps = _support_partners(s, x)
        varying = _varying(amps)
        r = varying.bit_count()
        if r > limit:
            return None
        _, _, a = _pattern_table(amps, varying)
        a2 = a**2
        keep = a2 > 1e-24
        vals.append(a2[keep])
        probs.append(a2[keep] / 2**r)  # each pattern covers 2^(n-r) labels of weight a^2/2^n
        counts.append(np.full(keep.sum(), 2.0 ** (s.n - r)))
    return np.concatenate(vals), np.concatenate(probs), np.concatenate(counts)


def cdf_exact(s: QuantumState, eps) -> np.ndarray | float:
    """``F(eps) = sum_a p(a) [<P_a>^2 <= eps]`` (right-continuous step function).

    Squared expectations within ``TIE_TOL`` above ``eps`` count as ties, so
    rounding noise never moves a jump to the wrong side of an exact value.
    """
    vals, probs, _ = value_distribution(s)
    order = np.argsort(vals)
    v, cp = vals[order], np.cumsum(probs[order])
    cp /= cp[-1]  # the omitted zero-expectation labels carry no weight
    e = np.asarray(eps, dtype=float)
    idx = np.searchsorted(v, e + TIE_TOL, side="right")
    out = np.where(idx > 0, cp[np.maximum(idx - 1, 0)], 0.0)
    out = np.minimum(out, 1.0)
    return float(out) if out.ndim == 0 else out


def count_above(s: QuantumState, threshold: float) -> int:
    """Number of labels with ``|<P_a>| > threshold`` (values within ``TIE_TOL`` count as ties)."""
    vals, _, counts = value_distribution(s)
    return int(round(counts[np.sqrt(vals) > threshold + TIE_TOL].sum()))


# ---------------------------------------------------------------------------
# empirical CDF


def dkw_epsilon(N: int, alpha: float) -> float:
    """Half-width of the two-sided DKW band at confidence ``1 - alpha``."""
    return math.sqrt(math.log(2 / alpha) / (2 * N))


@dataclass(frozen=True)
class EmpiricalCdf:
    samples: np.ndarray  # sorted squared estimates
    N: int
    K: int | None  # None: exact expectations

    def __call__(self, x):
        out = np.searchsorted(self.samples, np.asarray(x, dtype=float) + TIE_TOL, side="right") / self.N
        return float(out) if np.ndim(out) == 0 else out

    def band(self, x, alpha: float = 0.01):
        f = np.asarray(self(x))
        e = dkw_epsilon(self.N, alpha)
        return np.clip(f - e, 0, 1), np.clip(f + e, 0, 1)

    def sup_distance(self, cdf) -> float:
        """``sup_x |F_N(x) - F(x)|`` against a callable exact CDF.

        ``F_N`` is constant on ``[u_{j-1}, u_j)`` between distinct sample values,
        so the supremum is attained at a sample value or just left of one.
        Left limits are taken ``2 TIE_TOL`` below, matching the tie rule of
        :func:`cdf_exact`.
        """
        u = np.unique(self.samples)
        fn = np.searchsorted(self.samples, u, side="right") / self.N
        f = np.asarray(cdf(u), dtype=float)
        prev = np.concatenate([[-np.inf], u[:-1]])
        left = np.asarray(cdf(np.maximum(prev, u - 2 * TIE_TOL)), dtype=float)
        fn_left = np.concatenate([[0.0], fn[:-1]])
        return float(max(np.abs(fn - f).max(), np.abs(fn_left - left).max(), abs(1.0 - float(cdf(1.0)))))


def default_shots(N: int, x: float) -> int:
    return math.ceil(8 * math.log(4 * N) / x**2)


def build_empirical_cdf(s: QuantumState, N: int, K: int | None, rng: np.random.Generator) -> EmpiricalCdf:
    """Collect ``N`` Bell samples and square a ``K``-shot estimate of each expectation.

    ``K=None`` substitutes the exact squared expectation.
    """
    if not s.is_real or (isinstance(s, DenseState) and not s.is_pure_vector):
        raise NotReal("Bell samples equal Pauli samples only for real pure states")
    xs, zs = bell_sample_arrays(s, N, rng)
    ev = expectation_arrays(s, xs, zs)
    if K is not None:
        ev = shots_from_expectation(ev, K, rng)
    # snap to a 1e-12 grid so one exact value reached by different float paths is one sample value
    return EmpiricalCdf(np.sort(np.round(ev**2, 12)), N, K)


def resource_estimate(cdf: EmpiricalCdf, eps: float) -> tuple[float, float]:
    """``(sup{x : F_N(x) <= eps}, half of it)``.

    The second value is the conservative threshold for which the DKW/Hoeffding
    guarantee is stated (``F_N(2x) <= eps``).
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if cdf(0.0) > eps:
        raise NoSolution(f"F_N(0) = {cdf(0.0)} already exceeds {eps}")
    k = math.floor(eps * cdf.N)
    x = float(cdf.samples[k])
    return x, x / 2


# ---------------------------------------------------------------------------
# planning


def performance_bound(eps1: float, eps2: float, N1: int, N2: int) -> float:
    """Failure-probability budget ``4 exp(-2 eps1^2 N1) + 4 N1 exp(-eps2^2 N2 / 2)``."""
    return 4 * math.exp(-2 * eps1**2 * N1) + 4 * N1 * math.exp(-(eps2**2) * N2 / 2)


def error_threshold(eps1: float, eps2: float, F: float, delta_tv: float = 0.0) -> float:
    return 4 * eps1 + 4 * math.sqrt(eps2) + 2 * F + 6 * delta_tv


def plan_from_eps(eps1: float, eps2: float, delta: float) -> tuple[int, int]:
    """Smallest ``N1`` then ``N2`` with each failure term at most ``e^-delta / 2``."""
    target = math.exp(-delta) / 2
    N1 = max(1, math.ceil((delta + math.log(8)) / (2 * eps1**2)))
    while 4 * math.exp(-2 * eps1**2 * N1) > target:
        N1 += 1
    while N1 > 1 and 4 * math.exp(-2 * eps1**2 * (N1 - 1)) <= target:
        N1 -= 1
    N2 = max(1, math.ceil(2 * (delta + math.log(8 * N1)) / eps2**2))
    while 4 * N1 * math.exp(-(eps2**2) * N2 / 2) > target:
        N2 += 1
    while N2 > 1 and 4 * N1 * math.exp(-(eps2**2) * (N2 - 1) / 2) <= target:
        N2 -= 1
    return N1, N2


def plan_epsilons(n: int, eps: float) -> tuple[float, float]:
    return eps / 8, min((eps / 8) ** 2, 3 / n**2)


def sample_size_plan(n: int, eps: float, delta: float) -> tuple[int, int]:
    """``(N1, N2)`` guaranteeing ``P(|f - c| > eps) < e^-delta`` on CW inputs."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if delta <= 0:
        raise ValueError("delta must be positive")
    return plan_from_eps(*plan_epsilons(n, eps), delta)


def robust_plan_epsilons(n: int, tau: float) -> tuple[float, float]:
    return tau / 8, min((tau / 8) ** 2, 1 / n**2)


def robust_sample_size_plan(n: int, tau: float, delta: float) -> tuple[int, int]:
    return plan_from_eps(*robust_plan_epsilons(n, tau), delta)


# ---------------------------------------------------------------------------
# epsilon_2 sweeps


CSV_COLUMNS = ("n", "epsilon", "epsilon2_optimistic", "epsilon2_conservative", "N", "K", "seed")


def epsilon2_sweep(make_state, ns: Iterable[int], epsilons: Sequence[float], N: int, K: int | None,
                   seed: int) -> list[dict]:
    """Solve ``F_N(eps2) = eps`` for each ``n`` and each target ``eps``."""
    rows = []
    for n in ns:
        rng = np.random.default_rng([seed, n])
        cdf = build_empirical_cdf(make_state(n, rng), N, K, rng)
        for e in epsilons:
            opt, cons = resource_estimate(cdf, e)
            rows.append({"n": n, "epsilon": e, "epsilon2_optimistic": opt,
                         "epsilon2_conservative": cons, "N": N, "K": "inf" if K is None else K,
                         "seed": seed})
    return rows


def write_csv(rows: list[dict], path, metadata: dict | None = None, columns=CSV_COLUMNS) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        for k, v in (metadata or {}).items():
            fh.write(f"# {k}: {v}\n")
        w = csv.DictWriter(fh, fieldnames=list(columns))
        w.writeheader()
        for r in rows:
            w.writerow({c: r[c] for c in columns})


def loglog_slopes(ns, values) -> np.ndarray:
    ln, lv = np.log(np.asarray(ns, float)), np.log(np.asarray(values, float))
    return np.diff(lv) / np.diff(ln)
