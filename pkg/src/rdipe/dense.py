"""Dense state-vector / density-matrix kernels.

Basis index convention: qubit 0 is the most significant bit of the index.
Pauli masks passed to these functions are already in index bit order (see
:func:`rdipe.pauli.reverse_bits`).
"""

from __future__ import annotations

import numpy as np

from .pauli import PauliString, index_tables, reverse_bits

_H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=float)
_Z = np.diag([1.0, -1.0])
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=float)
_CZ = np.diag([1.0, 1.0, 1.0, -1.0])

GATE_MATRICES = {"H": _H, "X": _X, "Z": _Z, "CNOT": _CNOT, "CZ": _CZ}


def phase_gate(theta: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * theta)])


def apply_matrix(psi: np.ndarray, mat: np.ndarray, sites: tuple[int, ...], n: int) -> np.ndarray:
    """Apply a k-qubit matrix to ``sites`` of a state vector."""
    k = len(sites)
    t = psi.reshape((2,) * n)
    t = np.moveaxis(t, sites, range(k))
    shape = t.shape
    t = (mat @ t.reshape(2**k, -1)).reshape(shape)
    t = np.moveaxis(t, range(k), sites)
    return t.reshape(-1)


def apply_gate(psi: np.ndarray, gate: tuple, n: int) -> np.ndarray:
    name = gate[0]
    if name == "PHASE":
        return apply_matrix(psi, phase_gate(gate[2]), (gate[1],), n)
    return apply_matrix(psi, GATE_MATRICES[name], tuple(gate[1:]), n)


def apply_circuit(psi: np.ndarray, gates, n: int) -> np.ndarray:
    for g in gates:
        psi = apply_gate(psi, g, n)
    return psi


def circuit_unitary(n: int, gates) -> np.ndarray:
    u = np.eye(2**n, dtype=complex)
    for g in gates:
        u = np.stack([apply_gate(col, g, n) for col in u.T], axis=1)
    return u


def pauli_masks(p: PauliString) -> tuple[int, int]:
    return reverse_bits(p.x, p.n), reverse_bits(p.z, p.n)


def parity(v: np.ndarray) -> np.ndarray:
    return (np.bitwise_count(v) & 1).astype(np.int8)


def apply_pauli(psi: np.ndarray, p: PauliString) -> np.ndarray:
    """``P |psi>`` for a signed Pauli string."""
    n = p.n
    xm, zm = pauli_masks(p)
    idx = np.arange(2**n, dtype=np.int64)
    src = idx ^ xm
    signs = 1 - 2 * parity(src & zm)
    out = signs * psi[src]
    y = p.y_count % 4
    return (p.sign * (1j**y)) * out if y else p.sign * out


def fwht(a: np.ndarray, axis: int = -1) -> np.ndarray:
    """Unnormalised Walsh-Hadamard transform along ``axis`` (length 2^k)."""
    a = np.moveaxis(np.array(a, copy=True), axis, -1)
    shape = a.shape
    size = shape[-1]
    h = 1
    while h < size:
        a = a.reshape(shape[:-1] + (size // (2 * h), 2, h))
        lo = a[..., 0, :] + a[..., 1, :]
        hi = a[..., 0, :] - a[..., 1, :]
        a = np.stack([lo, hi], axis=-2)
        h *= 2
    return np.moveaxis(a.reshape(shape), -1, axis)


def xz_expectation_grid(state: np.ndarray) -> np.ndarray:
    """``E[x, z] = tr(rho X^x Z^z)`` over all index-order masks x, z."""
    d = state.shape[0]
    s = np.arange(d)
    xs = s[:, None] ^ s[None, :]  # xs[x, s] = s ^ x
    if state.ndim == 1:
        h = np.conj(state[xs]) * state[None, :]
    else:
        h = state[s[None, :], xs]  # rho[s, s ^ x]
    return fwht(h, axis=1)


def pauli_expectation_table(state: np.ndarray, n: int) -> np.ndarray:
    """All 4^n Pauli expectations, indexed by base-4 label (MSD = qubit 0)."""
    grid = xz_expectation_grid(state)
    xm, zm = index_tables(n)
    y = np.bitwise_count(xm & zm) % 4
    vals = (1j**y) * grid[xm, zm]
    return vals.real


def bell_table(state: np.ndarray, n: int) -> np.ndarray:
    """Bell distribution ``q(a) = <Phi_a| rho (x) rho |Phi_a>`` over all labels."""
    xm, zm = index_tables(n)
    d = 2**n
    if state.ndim == 1:
        s = np.arange(d)
        xs = s[:, None] ^ s[None, :]
        h = state[xs] * state[None, :]  # psi[s^x] psi[s]
        grid = np.abs(fwht(h, axis=1)) ** 2 / d
        return grid[xm, zm]
    r = pauli_expectation_table(state, n)
    y = np.bitwise_count(xm & zm)
    weights = np.zeros((d, d))
    weights[xm, zm] = np.where(y & 1, -1.0, 1.0) * r**2
    w = fwht(fwht(weights, axis=0), axis=1)
    # symplectic pairing: omega(a, b) = x_a.z_b + z_a.x_b
    return w[zm, xm] / d**2


def bell_vector(n: int, p: PauliString) -> np.ndarray:
    """``(1 (x) P_a) |Phi_0>`` on 2n qubits, first register most significant."""
    d = 2**n
    phi0 = np.eye(d).reshape(-1) / np.sqrt(d)
    m = p.to_matrix()
    return np.kron(np.eye(d), m) @ phi0


def density(state: np.ndarray) -> np.ndarray:
    return np.outer(state, np.conj(state)) if state.ndim == 1 else state


def partial_trace_first(rho: np.ndarray, n: int, k: int) -> np.ndarray:
    """Trace out the first ``k`` qubits of an n-qubit density matrix."""
    da, db = 2**k, 2 ** (n - k)
    return np.einsum("ajak->jk", rho.reshape(da, db, da, db))


def swap_half(n: int) -> np.ndarray:
    """SWAP of the first n/2 qubits of copy 1 with the first n/2 qubits of copy 2."""
    h = n // 2
    d = 2**n
    idx = np.arange(d * d)
    hi = idx >> n
    lo = idx & (d - 1)
    mask_first = ((1 << h) - 1) << (n - h)
    new_hi = (hi & ~mask_first) | (lo & mask_first)
    new_lo = (lo & ~mask_first) | (hi & mask_first)
    out = np.zeros((d * d, d * d))
    out[(new_hi << n) | new_lo, idx] = 1.0
    return out


def swap_full(n: int) -> np.ndarray:
    d = 2**n
    idx = np.arange(d * d)
    hi, lo = idx >> n, idx & (d - 1)
    out = np.zeros((d * d, d * d))
    out[(lo << n) | hi, idx] = 1.0
    return out
