"""Noise channels, trace distance and the noisy-input robustness experiment.

Trace distance here is the unnormalised Schatten-1 norm ``||rho - sigma||_1``
(sum of singular values), so orthogonal pure states are at distance 2.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import dense
from .distributions import (
    bell_distribution,
    cdf_exact,
    pauli_distribution,
    robust_plan_epsilons,
    robust_sample_size_plan,
    sample_size_plan,
    plan_epsilons,
    tv_distance,
    write_csv,
)
from .errors import CalibrationFailed, InvalidChannelParam, TooLargeForDense
from .pauli import PauliString
from .protocol import ProtocolConfig, simulate_rdipe
from .rng import derive_seed
from .states import MAX_DENSE_MATRIX, DenseState, QuantumState, cosine_oracle, make_family, to_dense

NORM_CONVENTION = "schatten-1 (sum of singular values, no 1/2)"
CHANNEL_KINDS = ("depolarizing", "pauli", "phase")

_PAULI_1Q = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class Channel:
    """``depolarizing``: ``(1-p) rho + p I/d``.
    ``pauli``: independent ``(px, py, pz)`` Pauli flips on each of ``sites``.
    ``phase``: coherent ``diag(1, e^{i theta})`` on each of ``sites``.
    ``sites=None`` means every qubit."""

    kind: str
    p: float = 0.0
    px: float = 0.0
    py: float = 0.0
    pz: float = 0.0
    theta: float = 0.0
    sites: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in CHANNEL_KINDS:
            raise InvalidChannelParam(f"unknown channel {self.kind!r}")
        if not 0 <= self.p <= 1:
            raise InvalidChannelParam("depolarizing p must lie in [0, 1]")
        probs = (self.px, self.py, self.pz)
        if min(probs) < 0 or sum(probs) > 1 + 1e-12:
            raise InvalidChannelParam("Pauli probabilities must be >= 0 and sum to <= 1")
        if not math.isfinite(self.theta):
            raise InvalidChannelParam("phase angle must be finite")

    @property
    def strength(self) -> float:
        return {"depolarizing": self.p, "pauli": self.px + self.py + self.pz, "phase": self.theta}[self.kind]

    def with_strength(self, t: float) -> Channel:
        """Same channel shape at strength ``t`` (Pauli ratios are kept)."""
        if self.kind == "depolarizing":
            return replace(self, p=t)
        if self.kind == "phase":
            return replace(self, theta=t)
        total = self.px + self.py + self.pz
        w = np.array([self.px, self.py, self.pz]) / total if total > 0 else np.array([1, 1, 1]) / 3
        return replace(self, px=t * w[0], py=t * w[1], pz=t * w[2])

    def max_strength(self) -> float:
        return math.pi if self.kind == "phase" else 1.0

    @property
    def is_real_preserving(self) -> bool:
        if self.kind == "phase":
            return math.isclose(math.sin(self.theta), 0.0, abs_tol=1e-15)
        return True  # X, Y and Z conjugations all map real matrices to real matrices

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sites"] = None if self.sites is None else list(self.sites)
        return d

    @classmethod
    def parse(cls, text: str) -> Channel:
        """``depolarizing[:p]``, ``pauli[:px,py,pz]``, ``phase[:theta][@i,j]``."""
        body, _, where = text.partition("@")
        kind, _, args = body.partition(":")
        try:
            sites = tuple(int(v) for v in where.split(",")) if where else None
            vals = [float(v) for v in args.split(",")] if args else []
            if kind == "depolarizing":
                return cls(kind, p=vals[0] if vals else 0.0, sites=sites)
            if kind == "pauli":
                px, py, pz = vals if vals else (1 / 3, 1 / 3, 1 / 3)
                return cls(kind, px=px, py=py, pz=pz, sites=sites)
            if kind == "phase":
                return cls(kind, theta=vals[0] if vals else 0.0, sites=sites)
        except ValueError as e:
            raise InvalidChannelParam(f"bad channel spec {text!r}: {e}") from None
        raise InvalidChannelParam(f"unknown channel {kind!r}")


def _sites(ch: Channel, n: int) -> tuple[int, ...]:
    sites = tuple(range(n)) if ch.sites is None else ch.sites
    if any(not 0 <= q < n for q in sites):
        raise InvalidChannelParam(f"channel sites {sites} outside 0..{n - 1}")
    return sites


def _conjugate_site(rho: np.ndarray, u: np.ndarray, q: int, n: int) -> np.ndarray:
    """``U_q rho U_q^dag`` for a single-qubit ``u`` on site ``q``."""
    t = dense.apply_matrix(rho.reshape(-1), np.kron(u, u.conj()), (q, n + q), 2 * n)
    return t.reshape(rho.shape)


def apply_channel(s: QuantumState, ch: Channel) -> DenseState:
    """Exact channel output; coherent noise on a pure vector stays a vector."""
    d = to_dense(s)
    n = d.n
    sites = _sites(ch, n)
    if ch.kind == "phase":
        gate = dense.phase_gate(ch.theta)
        if d.is_pure_vector:
            psi = d.data.astype(complex)
            for q in sites:
                psi = dense.apply_matrix(psi, gate, (q,), n)
            return DenseState(n, psi)
        rho = d.data.astype(complex)
        for q in sites:
            rho = _conjugate_site(rho, gate, q, n)
        return DenseState(n, (rho + rho.conj().T) / 2)
    if n > MAX_DENSE_MATRIX:
        raise TooLargeForDense(f"mixed-state channel output needs a density matrix (n={n})")
    rho = d.density_matrix().astype(complex)
    if ch.kind == "depolarizing":
        out = (1 - ch.p) * rho + ch.p * np.eye(2**n) / 2**n
    else:
        out = rho
        keep = 1 - ch.px - ch.py - ch.pz
        for q in sites:
            acc = keep * out
            for name, prob in (("X", ch.px), ("Y", ch.py), ("Z", ch.pz)):
                if prob:
                    acc = acc + prob * _conjugate_site(out, _PAULI_1Q[name], q, n)
            out = acc
    out = (out + out.conj().T) / 2
    return DenseState(n, out / np.trace(out).real)


def depolarized_purity(purity: float, p: float, n: int) -> float:
    """Purity after global depolarizing of a state with the given purity."""
    d = 2**n
    return (1 - p) ** 2 * purity + 2 * (1 - p) * p / d + p**2 / d


# ---------------------------------------------------------------------------
# trace distance


def _difference(rho, sigma) -> np.ndarray:
    a = to_dense(rho) if not isinstance(rho, np.ndarray) else None
    b = to_dense(sigma) if not isinstance(sigma, np.ndarray) else None
    for st in (a, b):
        if st is not None and st.n > MAX_DENSE_MATRIX:
            raise TooLargeForDense(f"trace distance needs density matrices (n={st.n})")
    ma = dense.density(a.data) if a is not None else rho
    mb = dense.density(b.data) if b is not None else sigma
    if ma.shape != mb.shape:
        raise ValueError("states have different dimensions")
    return ma - mb


def trace_distance(rho, sigma) -> float:
    """``||rho - sigma||_1`` from the eigenvalues of the Hermitian difference."""
    diff = _difference(rho, sigma)
    return float(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2)).sum())


def trace_distance_svd(rho, sigma) -> float:
    """Independent path: sum of singular values of ``rho - sigma``."""
    return float(np.linalg.svd(_difference(rho, sigma), compute_uv=False).sum())


def pure_trace_distance(psi: np.ndarray, phi: np.ndarray) -> float:
    """Closed form for two pure vectors: ``2 sqrt(1 - |<psi|phi>|^2)``."""
    ov = abs(np.vdot(psi, phi)) ** 2
    return 2 * math.sqrt(max(0.0, 1 - ov))


def _distance_to(s: DenseState, out: DenseState) -> float:
    if s.is_pure_vector and out.is_pure_vector:
        return pure_trace_distance(s.data, out.data)
    return trace_distance(s, out)


# ---------------------------------------------------------------------------
# calibration


def calibrate(s: QuantumState, ch: Channel, tau: float, rel_tol: float = 0.01,
              grid: int = 64, max_iter: int = 200) -> tuple[Channel, float]:
    """Strength of ``ch`` putting the output at trace distance ``tau`` (within ``rel_tol``).

    Scans a grid from zero for the first crossing, then bisects.
    """
    if tau < 0:
        raise InvalidChannelParam("tau must be >= 0")
    d = to_dense(s)
    if tau == 0:
        return ch.with_strength(0.0), 0.0
    def dist(t):
        return _distance_to(d, apply_channel(d, ch.with_strength(t)))
    ts = np.linspace(0.0, ch.max_strength(), grid + 1)
    lo, hi = 0.0, None
    for t in ts[1:]:
        if dist(t) >= tau:
            hi = t
            break
        lo = t
    if hi is None:
        raise CalibrationFailed(f"{ch.kind} channel cannot reach trace distance {tau}")
    for _ in range(max_iter):
        mid = (lo + hi) / 2
        v = dist(mid)
        if abs(v - tau) <= rel_tol * tau:
            return ch.with_strength(mid), v
        lo, hi = (mid, hi) if v < tau else (lo, mid)
    v = dist(hi)
    if abs(v - tau) <= rel_tol * tau:
        return ch.with_strength(hi), v
    raise CalibrationFailed(f"bisection did not settle within {rel_tol:.0%} of tau={tau}")


# ---------------------------------------------------------------------------
# robustness experiment


ROBUSTNESS_COLUMNS = (
    "tau", "k", "bound", "max_error", "p95_error", "mean_error", "failures", "runs",
    "delta_tv", "delta_bound", "perf_threshold", "F_eps2", "c_noisy",
    "dist_rho", "dist_sigma", "strength_rho", "strength_sigma", "N1", "N2",
)


def mix_delta(rho: QuantumState, sigma: QuantumState) -> float:
    """``TV(q_mix, p_mix)`` for the two inputs."""
    q = (bell_distribution(rho) + bell_distribution(sigma)) / 2
    p = (pauli_distribution(rho) + pauli_distribution(sigma)) / 2
    return tv_distance(q, p)


def robustness_experiment(rho: QuantumState, sigma: QuantumState, taus, channel: Channel, runs: int = 100,
                          seed: int = 0, delta: float = 3.0, clean_epsilon: float = 0.1,
                          k: float = 29.0, threads: int = 1) -> dict:
    """Run the protocol on calibrated noisy copies of ``rho`` and ``sigma``.

    For each ``tau``, both inputs get ``channel`` at the strength that puts them
    at trace distance ``tau``.  ``N1, N2`` come from the noisy-input plan
    (``eps1 = tau/8``, ``eps2 = min((tau/8)^2, 1/n^2)``); ``tau = 0`` uses the
    clean plan at ``clean_epsilon``.  Run ``r`` at ``tau`` index ``i`` uses the
    seed ``derive_seed(seed, i, r)``, so ``threads`` never changes the result.
    """
    n = rho.n
    rows = []
    for ti, tau in enumerate(taus):
        ch_r, dist_r = calibrate(rho, channel, tau)
        ch_s, dist_s = calibrate(sigma, channel, tau)
        noisy_r, noisy_s = apply_channel(rho, ch_r), apply_channel(sigma, ch_s)
        if tau > 0:
            N1, N2 = robust_sample_size_plan(n, tau, delta)
            eps1, eps2 = robust_plan_epsilons(n, tau)
            bound = k * tau
        else:
            N1, N2 = sample_size_plan(n, clean_epsilon, delta)
            eps1, eps2 = plan_epsilons(n, clean_epsilon)
            bound = clean_epsilon
        c = cosine_oracle(noisy_r, noisy_s)
        def one_run(r, ti=ti, N1=N1, N2=N2, a=noisy_r, b=noisy_s):
            cfg = ProtocolConfig(n=n, N1=N1, N2=N2, seed=derive_seed(seed, ti, r))
            return simulate_rdipe(a, b, cfg).f

        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                fs = list(pool.map(one_run, range(runs)))
        else:
            fs = [one_run(r) for r in range(runs)]
        errors = np.abs(np.array(fs) - c)
        dtv = mix_delta(noisy_r, noisy_s)
        F = (cdf_exact(noisy_r, eps2) + cdf_exact(noisy_s, eps2)) / 2
        rows.append({
            "tau": tau, "k": k, "bound": bound,
            "max_error": float(errors.max()), "p95_error": float(np.percentile(errors, 95)),
            "mean_error": float(errors.mean()), "failures": int((errors > bound).sum()), "runs": runs,
            "delta_tv": dtv, "delta_bound": 3 * tau,
            "perf_threshold": 4 * eps1 + 4 * math.sqrt(eps2) + 2 * F + 6 * dtv, "F_eps2": F,
            "c_noisy": c, "dist_rho": dist_r, "dist_sigma": dist_s,
            "strength_rho": float(ch_r.strength), "strength_sigma": float(ch_s.strength), "N1": N1, "N2": N2,
        })
    return {
        "norm": NORM_CONVENTION, "n": n, "channel": channel.to_dict(), "seed": seed, "delta": delta,
        "runs": runs, "rows": rows,
        "passed": all(r["max_error"] <= r["bound"] and r["delta_tv"] <= r["delta_bound"] + 1e-12 for r in rows),
    }


def robustness_pair(family: str, n: int, seed: int) -> tuple[QuantumState, QuantumState]:
    """A CW-family input ``rho = C|psi>`` and ``sigma = C Z_0 |psi>``.

    Both are in the family and overlap non-trivially (``(1 - 2/n)^2`` for W);
    the ``random`` family pairs two independent dense states instead.
    """
    from .clifford import RealCliffordTableau

    rng = np.random.default_rng([seed, n])
    rho = make_family(family, n, rng)
    if family == "random":
        return rho, make_family(family, n, rng)
    flip = RealCliffordTableau.from_gates(n, [("Z", 0)], record=rho.tableau.gate_log is not None)
    return rho, rho.with_tableau(rho.tableau.compose(flip))


def write_robustness_report(report: dict, csv_path, json_path=None) -> None:
    meta = {"norm": report["norm"], "n": report["n"], "channel": json.dumps(report["channel"]),
            "seed": report["seed"], "delta": report["delta"], "runs": report["runs"]}
    write_csv(report["rows"], csv_path, meta, ROBUSTNESS_COLUMNS)
    if json_path is not None:
        Path(json_path).write_text(json.dumps(report, indent=2))


# ---------------------------------------------------------------------------
# two-copy (correlated) noise


def bell_distribution_two_copy(rho2: np.ndarray, n: int) -> np.ndarray:
    """``<Phi_a| rho2 |Phi_a>`` for an arbitrary 2n-qubit density matrix."""
    if 2 * n > MAX_DENSE_MATRIX:
        raise TooLargeForDense("two-copy states are capped at n = 5")
    vecs = np.stack([dense.bell_vector(n, PauliString.from_index(n, a)) for a in range(4**n)], axis=1)
    q = np.einsum("ia,ij,ja->a", vecs.conj(), rho2, vecs).real
    return np.clip(q, 0.0, None)


def correlated_two_copy(s: QuantumState, theta: float, p: float = 0.0) -> np.ndarray:
    """``rho (x) rho`` under a cross-copy ``exp(-i theta Z_q Z_q')`` on every qubit
    pair plus global depolarizing ``p``; the result is generally entangled."""
    d = to_dense(s)
    n = d.n
    if 2 * n > MAX_DENSE_MATRIX:
        raise TooLargeForDense("two-copy states are capped at n = 5")
    r = d.density_matrix().astype(complex)
    rho2 = np.kron(r, r)
    idx = np.arange(4**n)
    phase = np.zeros(4**n)
    for q in range(n):
        b1 = (idx >> (2 * n - 1 - q)) & 1
        b2 = (idx >> (n - 1 - q)) & 1
        phase += 1 - 2 * (b1 ^ b2)  # Z_q Z_q' eigenvalue
    u = np.exp(-1j * theta * phase)
    out = u[:, None] * rho2 * u.conj()[None, :]
    out = (1 - p) * out + p * np.eye(4**n) / 4**n
    return out


def two_copy_check(s: QuantumState, theta: float, p: float = 0.0) -> dict:
    """Bell-distribution shift caused by correlated two-copy noise vs its trace distance."""
    d = to_dense(s)
    rho2 = correlated_two_copy(d, theta, p)
    r = d.density_matrix()
    ideal = np.kron(r, r)
    dist = trace_distance(rho2, ideal)
    tv = tv_distance(bell_distribution_two_copy(rho2, d.n), bell_distribution(d))
    return {"theta": theta, "p": p, "trace_distance": dist, "tv": tv, "holds": tv <= dist + 1e-12}
