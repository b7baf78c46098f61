"""Quantum state backends: dense vectors/density matrices and structured CW states.

A :class:`CwState` is ``C sum_{z in S} c_z |z>`` with ``C`` a real Clifford
tableau and a sparse real superposition over computational basis states.  Its
Pauli expectations are evaluated without ever forming a 2^n vector.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Union

import numpy as np

from . import dense
from .clifford import RealCliffordTableau, random_real_clifford
from .errors import (
    DimensionMismatch,
    OddN,
    SupportCapExceeded,
    TooLargeForDense,
)
from .pauli import PauliString, reverse_bits

MAX_DENSE_VECTOR = 14
MAX_DENSE_MATRIX = 10
_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DenseState:
    """Pure state vector (``data.ndim == 1``) or density matrix."""

    n: int
    data: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        d = 2**self.n
        if self.data.ndim == 1:
            if self.n > MAX_DENSE_VECTOR:
                raise TooLargeForDense(f"n={self.n} exceeds dense vector cap")
            if self.data.shape != (d,):
                raise DimensionMismatch("vector length is not 2^n")
            if abs(np.vdot(self.data, self.data).real - 1) > _TOL:
                raise ValueError("state vector is not normalized")
        else:
            if self.n > MAX_DENSE_MATRIX:
                raise TooLargeForDense(f"n={self.n} exceeds density-matrix cap")
            if self.data.shape != (d, d):
                raise DimensionMismatch("density matrix shape is not 2^n x 2^n")
            if abs(np.trace(self.data).real - 1) > _TOL:
                raise ValueError("density matrix trace is not 1")
            if np.abs(self.data - self.data.conj().T).max() > _TOL:
                raise ValueError("density matrix is not Hermitian")
            if np.linalg.eigvalsh(self.data).min() < -_TOL:
                raise ValueError("density matrix is not positive semidefinite")
        self.data.setflags(write=False)

    @property
    def is_pure_vector(self) -> bool:
        return self.data.ndim == 1

    @property
    def is_real(self) -> bool:
        return bool(np.abs(np.imag(self.data)).max() < _TOL) if np.iscomplexobj(self.data) else True

    def density_matrix(self) -> np.ndarray:
        return dense.density(self.data)

    @classmethod
    def from_vector(cls, vec, normalize: bool = False) -> DenseState:
        vec = np.asarray(vec)
        if normalize:
            vec = vec / np.linalg.norm(vec)
        n = int(round(math.log2(vec.shape[0])))
        return cls(n, vec)

    @classmethod
    def from_density(cls, rho) -> DenseState:
        rho = np.asarray(rho)
        n = int(round(math.log2(rho.shape[0])))
        return cls(n, rho)

    @classmethod
    def basis(cls, n: int, index: int) -> DenseState:
        v = np.zeros(2**n)
        v[index] = 1.0
        return cls(n, v)

    @classmethod
    def random_pure(cls, n: int, rng=None, real: bool = True) -> DenseState:
        rng = np.random.default_rng(rng)
        v = rng.normal(size=2**n)
        if not real:
            v = v + 1j * rng.normal(size=2**n)
        return cls(n, v / np.linalg.norm(v))

    @classmethod
    def random_mixed(cls, n: int, rng=None, rank: int | None = None, real: bool = False) -> DenseState:
        """Random density matrix ``G G^dag / tr`` with ``G`` of shape (2^n, rank)."""
        rng = np.random.default_rng(rng)
        d = 2**n
        rank = d if rank is None else rank
        g = rng.normal(size=(d, rank))
        if not real:
            g = g + 1j * rng.normal(size=(d, rank))
        rho = g @ g.conj().T
        rho = (rho + rho.conj().T) / 2
        return cls(n, rho / np.trace(rho).real)

    @classmethod
    def maximally_mixed(cls, n: int) -> DenseState:
        return cls(n, np.eye(2**n) / 2**n)


@dataclass(frozen=True, eq=False)
class CwState:
    """``C sum_z c_z |z>`` with sparse real coefficients.

    ``support`` holds ``(z, c_z)`` pairs with bitstrings encoded as integers
    (site ``i`` at bit ``i``).  ``family`` records how the support was built
    ("w", "dicke" or "custom") so samplers can use closed forms.
    """

    n: int
    tableau: RealCliffordTableau
    support: tuple[tuple[int, float], ...]
    family: str = "custom"
    k: int | None = None
    cap: int | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.tableau.n != self.n:
            raise DimensionMismatch("tableau and support qubit counts differ")
        cap = self.cap if self.cap is not None else 4 * self.n**2
        if len(self.support) > cap:
            raise SupportCapExceeded(f"|support|={len(self.support)} exceeds cap {cap}")
        keys = [z for z, _ in self.support]
        if len(set(keys)) != len(keys) or any(z < 0 or z >> self.n for z in keys):
            raise ValueError("support bitstrings must be distinct n-bit values")
        norm = sum(c * c for _, c in self.support)
        if abs(norm - 1) > 1e-12:
            raise ValueError(f"coefficients not normalized (sum c^2 = {norm})")
        order = sorted(range(len(keys)), key=keys.__getitem__)
        self._cache["coef"] = {z: c for z, c in self.support}
        if self.n <= 64:
            self._cache["keys"] = np.array([keys[i] for i in order], dtype=np.uint64)
            self._cache["vals"] = np.array([self.support[i][1] for i in order])

    @property
    def is_real(self) -> bool:
        return True

    def with_tableau(self, tableau: RealCliffordTableau) -> CwState:
        return CwState(self.n, tableau, self.support, self.family, self.k, self.cap)

    def coefficient_map(self) -> dict[int, float]:
        return self._cache["coef"]

    def support_arrays(self) -> tuple[np.ndarray, np.ndarray] | None:
        if "keys" not in self._cache:
            return None
        return self._cache["keys"], self._cache["vals"]

    def xz_overlap(self, x: int, z: int) -> float:
        """``<v| X^x Z^z |v>`` for the support vector ``v`` (no tableau)."""
        arrays = self.support_arrays()
        if arrays is not None:
            keys, vals = arrays
            t = keys ^ np.uint64(x)
            idx = np.searchsorted(keys, t)
            idx[idx == len(keys)] = 0
            hit = keys[idx] == t
            if not hit.any():
                return 0.0
            signs = 1 - 2 * (np.bitwise_count(keys[hit] & np.uint64(z)) & 1).astype(np.int64)
            return float(np.sum(vals[hit] * vals[idx[hit]] * signs))
        coef = self.coefficient_map()
        total = 0.0
        for s, c in self.support:
            c2 = coef.get(s ^ x)
            if c2 is not None:
                total += c * c2 * (-1 if (s & z).bit_count() & 1 else 1)
        return total


QuantumState = Union[DenseState, CwState]


# ---------------------------------------------------------------------------
# constructors


def make_dicke(n: int, k: int, tableau: RealCliffordTableau | None = None, cap: int | None = None) -> CwState:
    """Uniform superposition over Hamming-weight-``k`` bitstrings."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    count = math.comb(n, k)
    limit = cap if cap is not None else 4 * n * n
    if count > limit:
        raise SupportCapExceeded(f"C({n},{k})={count} exceeds cap {limit}")
    c = 1 / math.sqrt(count)
    support = tuple((sum(1 << i for i in sites), c) for sites in combinations(range(n), k))
    family = "w" if k == 1 else "dicke"
    return CwState(n, tableau or RealCliffordTableau.identity(n), support, family, k, cap)


def make_w_state(n: int, tableau: RealCliffordTableau | None = None) -> CwState:
    return make_dicke(n, 1, tableau)


def make_custom(n: int, support, tableau: RealCliffordTableau | None = None, cap: int | None = None) -> CwState:
    """Generic real superposition; ``support`` maps bitstring ints or '0101' strings to coefficients."""
    items = support.items() if isinstance(support, dict) else support
    pairs = []
    for z, c in items:
        if isinstance(z, str):
            z = sum(1 << i for i, ch in enumerate(z) if ch == "1")
        pairs.append((int(z), float(c)))
    return CwState(n, tableau or RealCliffordTableau.identity(n), tuple(pairs), "custom", None, cap)


def random_cw(n: int, rng=None, depth: int | None = None, k: int = 1, record: bool = False) -> CwState:
    rng = np.random.default_rng(rng)
    return make_dicke(n, k, random_real_clifford(n, depth, rng, record=record))


FAMILIES = ("w", "dicke2", "random")


def make_family(name: str, n: int, rng=None, clifford: bool = True) -> QuantumState:
    """Named test families: ``w`` and ``dicke2`` (optionally Clifford-rotated CW
    states) and ``random`` (dense Gaussian real pure state)."""
    rng = np.random.default_rng(rng)
    if name == "w":
        return random_cw(n, rng) if clifford else make_w_state(n)
    if name == "dicke2":
        return random_cw(n, rng, k=2) if clifford else make_dicke(n, 2)
    if name == "random":
        return DenseState.random_pure(n, rng, real=True)
    raise ValueError(f"unknown family {name!r}; choose from {FAMILIES}")


# ---------------------------------------------------------------------------
# exact quantities


def _check_n(s: QuantumState, p: PauliString) -> None:
    if s.n != p.n:
        raise DimensionMismatch(f"state has {s.n} qubits, Pauli has {p.n}")


def expectation(s: QuantumState, p: PauliString) -> float:
    """Exact ``<P>`` for either backend."""
    _check_n(s, p)
    if isinstance(s, DenseState):
        if s.is_pure_vector:
            return float(np.vdot(s.data, dense.apply_pauli(s.data, p)).real)
        pd = dense.apply_pauli(np.eye(2**s.n), p)  # matrix of P
        return float(np.einsum("ij,ji->", s.data, pd).real)
    cache = s._cache.setdefault("exp", {})
    key = (p.x, p.z)
    val = cache.get(key)
    if val is None:
        q = s.tableau.inverse_conjugate(p.unsigned())
        y = q.y_count
        if y & 1:
            val = 0.0  # imaginary operator on a real state
        else:
            val = q.sign * (-1 if y & 2 else 1) * s.xz_overlap(q.x, q.z)
        cache[key] = val
    return p.sign * val


def _require_dense_vector(s: QuantumState) -> None:
    if s.n > MAX_DENSE_VECTOR:
        raise TooLargeForDense(f"n={s.n} too large for a dense vector")


def to_dense(s: QuantumState) -> DenseState:
    """Amplitude vector of ``C |support>`` built from the tableau alone."""
    if isinstance(s, DenseState):
        return s
    _require_dense_vector(s)
    n = s.n
    cached = s._cache.get("dense")
    if cached is not None:
        return cached
    # C|0> is the joint +1 eigenvector of the images of Z_i
    v = np.random.default_rng(12345).normal(size=2**n)
    for i in range(n):
        g = s.tableau.image("Z", i)
        v = (v + dense.apply_pauli(v, g).real) / 2
    v /= np.linalg.norm(v)
    v *= np.sign(v[np.argmax(np.abs(v) > 1e-9)])
    out = np.zeros(2**n)
    for z, c in s.support:
        xz = PauliString(n, z, 0)
        out += c * dense.apply_pauli(v, s.tableau.conjugate(xz)).real
    state = DenseState(n, out / np.linalg.norm(out))
    s._cache["dense"] = state
    return state


def dense_from_gates(s: CwState) -> DenseState:
    """Independent dense path: apply the recorded gate list to the support vector."""
    if s.tableau.gate_log is None:
        raise ValueError("tableau carries no gate log")
    _require_dense_vector(s)
    v = np.zeros(2**s.n)
    for z, c in s.support:
        v[reverse_bits(z, s.n)] = c
    v = dense.apply_circuit(v, s.tableau.gate_log, s.n).real
    return DenseState(s.n, v)


def _as_matrix(s: QuantumState) -> np.ndarray:
    d = to_dense(s)
    if d.n > MAX_DENSE_MATRIX and not d.is_pure_vector:
        raise TooLargeForDense("density matrix too large")
    return d.data


def purity(s: QuantumState) -> float:
    if isinstance(s, CwState):
        return 1.0
    if s.is_pure_vector:
        return float(abs(np.vdot(s.data, s.data)) ** 2)
    return float(np.sum(np.abs(s.data) ** 2))


def overlap(rho: QuantumState, sigma: QuantumState) -> float:
    """``tr(rho sigma)``."""
    if rho.n != sigma.n:
        raise DimensionMismatch("states have different qubit counts")
    a, b = to_dense(rho).data, to_dense(sigma).data
    if a.ndim == 1 and b.ndim == 1:
        return float(abs(np.vdot(a, b)) ** 2)
    if a.ndim == 1:
        a, b = b, a
    if b.ndim == 1:
        return float(np.vdot(b, a @ b).real)
    return float(np.einsum("ij,ji->", a, b).real)


def cosine_oracle(rho: QuantumState, sigma: QuantumState) -> float:
    return overlap(rho, sigma) / math.sqrt(purity(rho) * purity(sigma))


def renyi2_half(s: QuantumState, method: str = "partial_trace") -> float:
    """Second Renyi entropy (bits) of the last n/2 qubits."""
    if s.n % 2:
        raise OddN("renyi2_half needs even n")
    d = to_dense(s)
    n, h = d.n, d.n // 2
    da = 2**h
    if method == "partial_trace":
        if d.is_pure_vector:
            m = d.data.reshape(da, da)
            red = m.T @ m.conj()
        else:
            red = dense.partial_trace_first(d.data, n, h)
        pur = np.sum(np.abs(red) ** 2)
    elif method == "swap":
        if d.is_pure_vector:
            t = d.data.reshape(da, da)
            # tr(SWAP_A (psi psi^dag)^{(x)2}) with A the first half
            pur = np.einsum("ab,cb,cd,ad->", t, t.conj(), t, t.conj())
        else:
            r = d.data.reshape(da, da, da, da)
            pur = np.einsum("abad,cdcb->", r, r)  # tr rho_B^2 with rho_B = tr_A rho
    else:
        raise ValueError(method)
    return float(-np.log2(pur.real))


# ---------------------------------------------------------------------------
# state spec files


def load_state_spec(spec: dict | str | Path) -> QuantumState:
    """Build a state from the JSON spec format used by the CLI.

    ``family`` is ``w``, ``dicke`` (with ``k``) or ``custom`` (with ``support``),
    rotated by ``clifford`` (gate list, ``{"random": {...}}`` or tableau JSON);
    or ``dense`` with ``amplitudes`` or ``{"random": {"seed": s}}``.
    """
    if isinstance(spec, (str, Path)) and not str(spec).lstrip().startswith("{"):
        spec = json.loads(Path(spec).read_text())
    elif isinstance(spec, str):
        spec = json.loads(spec)
    n = int(spec["n"])
    if spec.get("family") == "dense":
        if "amplitudes" in spec:
            st = DenseState.from_vector(np.asarray(spec["amplitudes"], dtype=float), normalize=True)
            if st.n != n:
                raise DimensionMismatch(f"{len(spec['amplitudes'])} amplitudes for n={n}")
            return st
        return DenseState.random_pure(n, np.random.default_rng(spec["random"].get("seed", 0)))
    cl = spec.get("clifford")
    if cl is None:
        tab = RealCliffordTableau.identity(n)
    elif isinstance(cl, dict) and "random" in cl:
        r = cl["random"]
        tab = random_real_clifford(n, r.get("depth"), np.random.default_rng(r.get("seed", 0)))
    elif isinstance(cl, dict) and "images" in cl:
        tab = RealCliffordTableau.from_json(cl)
    else:
        tab = RealCliffordTableau.from_gates(n, [tuple(g) for g in cl], record=False)
    family = spec.get("family", "w")
    if family == "w":
        return make_w_state(n, tab)
    if family == "dicke":
        return make_dicke(n, int(spec["k"]), tab)
    if family == "custom":
        sup = spec["support"]
        if isinstance(sup, dict):
            return make_custom(n, sup, tab)
        return make_custom(n, [(e[0], e[1]) for e in sup], tab)
    raise ValueError(f"unknown family {family!r}")


def expectation_table(s: QuantumState) -> np.ndarray:
    """All 4^n exact expectations (dense evaluation, cached)."""
    d = to_dense(s)
    table = d._cache.get("paulis")
    if table is None:
        if d.n > MAX_DENSE_MATRIX:
            raise TooLargeForDense(f"4^n Pauli table too large for n={d.n}")
        table = dense.pauli_expectation_table(d.data, d.n)
        table[np.abs(table) < 1e-12] = 0.0
        table.setflags(write=False)
        d._cache["paulis"] = table
    return table


def expectation_arrays(s: QuantumState, xs: np.ndarray, zs: np.ndarray) -> np.ndarray:
    """Exact expectations for a batch of letter-form labels (uint64 bit arrays)."""
    xs = np.asarray(xs, dtype=np.uint64)
    zs = np.asarray(zs, dtype=np.uint64)
    if isinstance(s, DenseState):
        from .sampling import labels_to_index

        if s.n <= 8:
            return expectation_table(s)[labels_to_index(xs, zs, s.n)]
        return np.array([expectation(s, PauliString(s.n, int(x), int(z))) for x, z in zip(xs, zs)])
    from .clifford import conjugate_arrays

    qx, qz, sg = conjugate_arrays(s.tableau.inverse(), xs, zs)
    y = np.bitwise_count(qx & qz).astype(np.int64)
    out = np.zeros(len(xs))
    cache: dict = {}
    for i in np.flatnonzero((y & 1) == 0):
        key = (int(qx[i]), int(qz[i]))
        v = cache.get(key)
        if v is None:
            v = cache[key] = s.xz_overlap(*key)
        out[i] = v * sg[i] * (-1 if y[i] & 2 else 1)
    return out
