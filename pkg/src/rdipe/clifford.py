"""Real Clifford unitaries as sign-tracked tableaus.

A tableau stores the images ``C X_i C^dag`` and ``C Z_i C^dag`` of the 2n
single-site generators.  Every image is a Hermitian letter-form Pauli with a
real sign, which is exactly the real Clifford group rCl(n) modulo a global
sign.  The generating gate set is {H, X, Z, CNOT, CZ}.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidSite, PhaseNotReal, TooLarge
from .pauli import PauliString, product_phase, symplectic_product

GATES_1Q = ("H", "X", "Z")
GATES_2Q = ("CNOT", "CZ")

Gate = tuple  # ("H", q) | ("CNOT", control, target) | ("CZ", a, b)

# image triple: (x bits, z bits, sign)
_Image = tuple[int, int, int]


def _gate_on_image(img: _Image, gate: Gate) -> _Image:
    """Conjugate one letter-form Pauli by a generating gate."""
    x, z, s = img
    name = gate[0]
    if name == "H":
        b = 1 << gate[1]
        xb, zb = x & b, z & b
        if xb and zb:
            s = -s
        x = (x & ~b) | (b if zb else 0)
        z = (z & ~b) | (b if xb else 0)
    elif name == "X":
        if z >> gate[1] & 1:
            s = -s
    elif name == "Z":
        if x >> gate[1] & 1:
            s = -s
    elif name == "CNOT":
        c, t = gate[1], gate[2]
        xc, zc = x >> c & 1, z >> c & 1
        xt, zt = x >> t & 1, z >> t & 1
        if xc and zt and not (xt ^ zc):
            s = -s
        x ^= xc << t
        z ^= zt << c
    elif name == "CZ":
        a, b = gate[1], gate[2]
        xa, za = x >> a & 1, z >> a & 1
        xb, zb = x >> b & 1, z >> b & 1
        if xa and xb and (za ^ zb):
            s = -s
        z ^= (xb << a) | (xa << b)
    else:
        raise ValueError(f"unknown gate {name!r}")
    return x, z, s


def _validate_gate(n: int, gate: Gate) -> None:
    name = gate[0]
    if name in GATES_1Q:
        sites = gate[1:2]
        if len(gate) != 2:
            raise InvalidSite(f"{name} takes one site")
    elif name in GATES_2Q:
        sites = gate[1:3]
        if len(gate) != 3 or gate[1] == gate[2]:
            raise InvalidSite(f"{name} needs two distinct sites")
    else:
        raise ValueError(f"gate {name!r} not in the real generating set")
    for q in sites:
        if not (isinstance(q, (int, np.integer)) and 0 <= q < n):
            raise InvalidSite(f"site {q} out of range for n={n}")


@dataclass(frozen=True)
class RealCliffordTableau:
    n: int
    images: tuple[_Image, ...]  # X_0..X_{n-1}, Z_0..Z_{n-1}
    gate_log: tuple[Gate, ...] | None = None
    _inverse: list = field(default_factory=list, repr=False, compare=False, hash=False)

    @classmethod
    def identity(cls, n: int, record: bool = False) -> RealCliffordTableau:
        images = tuple((1 << i, 0, 1) for i in range(n)) + tuple((0, 1 << i, 1) for i in range(n))
        return cls(n, images, () if record else None)

    @classmethod
    def from_gates(cls, n: int, gates: Iterable[Gate], record: bool = True) -> RealCliffordTableau:
        t = cls.identity(n, record=record)
        return t.apply_gates(gates)

    # ------------------------------------------------------------------
    def key(self) -> tuple[_Image, ...]:
        return self.images

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RealCliffordTableau) and self.images == other.images

    def __hash__(self) -> int:
        return hash(self.images)

    def image(self, generator: str, site: int) -> PauliString:
        """Signed image of ``X_site`` (generator "X") or ``Z_site`` under conjugation."""
        k = site if generator == "X" else self.n + site
        x, z, s = self.images[k]
        return PauliString(self.n, x, z, s)

    def apply_gate(self, gate: Gate) -> RealCliffordTableau:
        """Left-compose with ``gate``: the result represents ``g C``."""
        return self.apply_gates((gate,))

    def apply_gates(self, gates: Iterable[Gate]) -> RealCliffordTableau:
        images = list(self.images)
        log = list(self.gate_log) if self.gate_log is not None else None
        for g in gates:
            g = tuple(g)
            _validate_gate(self.n, g)
            images = [_gate_on_image(img, g) for img in images]
            if log is not None:
                log.append(g)
        return RealCliffordTableau(self.n, tuple(images), tuple(log) if log is not None else None)

    def is_symplectic(self) -> bool:
        n = self.n
        for i in range(2 * n):
            xi, zi, _ = self.images[i]
            for j in range(i + 1, 2 * n):
                xj, zj, _ = self.images[j]
                want = 1 if j == i + n else 0
                if symplectic_product(xi, zi, xj, zj) != want:
                    return False
        return True

    # ------------------------------------------------------------------
    def _push(self, images: Sequence[_Image], x: int, z: int, sign: int) -> tuple[int, int, int]:
        """Map letter-form ``sign * P(x, z)`` through ``images``; returns (x, z, sign)."""
        e = (x & z).bit_count()  # P = i^y prod_i X_i^x_i Z_i^z_i
        if sign < 0:
            e += 2
        ax = az = 0
        n = self.n
        bits = x | z
        while bits:
            low = bits & -bits
            i = low.bit_length() - 1
            bits ^= low
            for k in (i, n + i):
                if (x if k == i else z) >> i & 1:
                    ix, iz, s = images[k]
                    e += product_phase(ax, az, ix, iz)
                    if s < 0:
                        e += 2
                    ax ^= ix
                    az ^= iz
        e %= 4
        if e & 1:
            raise PhaseNotReal("conjugation produced an imaginary phase; tableau corrupted")
        return ax, az, (-1 if e == 2 else 1)

    def conjugate(self, p: PauliString) -> PauliString:
        """``C P C^dag`` as a signed Pauli string."""
        if p.n != self.n:
            raise ValueError("qubit count mismatch")
        x, z, s = self._push(self.images, p.x, p.z, p.sign)
        return PauliString(self.n, x, z, s)

    def inverse(self) -> RealCliffordTableau:
        if not self._inverse:
            self._inverse.append(self._compute_inverse())
        return self._inverse[0]

    def _compute_inverse(self) -> RealCliffordTableau:
        n = self.n
        imgs = self.images
        out = []
        for k in range(2 * n):
            # generator g_k; its preimage Q satisfies omega(Q, X_l) = omega(g_k, C X_l C^dag)
            gx = (1 << k) if k < n else 0
            gz = (1 << (k - n)) if k >= n else 0
            qx = qz = 0
            for l in range(n):
                if symplectic_product(gx, gz, imgs[l][0], imgs[l][1]):
                    qz |= 1 << l
                if symplectic_product(gx, gz, imgs[n + l][0], imgs[n + l][1]):
                    qx |= 1 << l
            fx, fz, s = self._push(imgs, qx, qz, 1)
            if (fx, fz) != (gx, gz):
                raise PhaseNotReal("tableau is not symplectic")
            out.append((qx, qz, s))
        inv = RealCliffordTableau(n, tuple(out), None)
        inv._inverse.append(self)
        return inv

    def inverse_conjugate(self, p: PauliString) -> PauliString:
        """``C^dag P C`` as a signed Pauli string."""
        return self.inverse().conjugate(p)

    def compose(self, other: RealCliffordTableau) -> RealCliffordTableau:
        """Tableau of ``self @ other`` (apply ``other`` first)."""
        images = tuple(self._push(self.images, x, z, s) for x, z, s in other.images)
        log = None
        if self.gate_log is not None and other.gate_log is not None:
            log = other.gate_log + self.gate_log
        return RealCliffordTableau(self.n, images, log)

    # ------------------------------------------------------------------
    def to_json(self) -> dict:
        width = max(1, (self.n + 3) // 4)
        rows = [{"x": format(x, f"0{width}x"), "z": format(z, f"0{width}x"), "sign": s}
                for x, z, s in self.images]
        out = {"n": self.n, "images": rows}
        if self.gate_log is not None:
            out["gates"] = [list(g) for g in self.gate_log]
        return out

    @classmethod
    def from_json(cls, data: dict | str) -> RealCliffordTableau:
        if isinstance(data, str):
            data = json.loads(data)
        n = int(data["n"])
        images = tuple((int(r["x"], 16), int(r["z"], 16), int(r["sign"])) for r in data["images"])
        log = tuple(tuple(g) for g in data["gates"]) if "gates" in data else None
        t = cls(n, images, log)
        if len(images) != 2 * n or not t.is_symplectic():
            raise ValueError("serialized tableau is not a valid symplectic image set")
        return t


def apply_gate(t: RealCliffordTableau, gate: Gate) -> RealCliffordTableau:
    return t.apply_gate(gate)


def conjugate(t: RealCliffordTableau, p: PauliString) -> PauliString:
    return t.conjugate(p)


def inverse_conjugate(t: RealCliffordTableau, p: PauliString) -> PauliString:
    return t.inverse_conjugate(p)


def random_layer(n: int, rng: np.random.Generator) -> list[Gate]:
    """One layer of the random real Clifford circuit.

    Sites are randomly paired; each pair gets CNOT (either orientation, 1/4
    each), CZ (1/4) or nothing (1/4).  Then every site gets one of
    {I, H, X, Z} uniformly.
    """
    gates: list[Gate] = []
    perm = rng.permutation(n)
    for k in range(0, n - 1, 2):
        a, b = int(perm[k]), int(perm[k + 1])
        r = int(rng.integers(4))
        if r == 0:
            gates.append(("CNOT", a, b))
        elif r == 1:
            gates.append(("CNOT", b, a))
        elif r == 2:
            gates.append(("CZ", a, b))
    for q, r in enumerate(rng.integers(4, size=n)):
        if r:
            gates.append((("H", "X", "Z")[int(r) - 1], q))
    return gates


def random_real_clifford(n: int, depth: int | None = None, rng: np.random.Generator | int | None = None,
                         record: bool = False) -> RealCliffordTableau:
    """Tableau of a depth-``depth`` random real Clifford circuit (default depth 10n)."""
    rng = np.random.default_rng(rng)
    if depth is None:
        depth = 10 * n
    if depth < 0:
        raise ValueError("depth must be >= 0")
    gates: list[Gate] = []
    for _ in range(depth):
        gates.extend(random_layer(n, rng))
    return RealCliffordTableau.from_gates(n, gates, record=record)


def generating_gates(n: int) -> list[Gate]:
    gates: list[Gate] = [(g, q) for q in range(n) for g in GATES_1Q]
    for a in range(n):
        for b in range(n):
            if a != b:
                gates.append(("CNOT", a, b))
                if a < b:
                    gates.append(("CZ", a, b))
    return gates


def enumerate_group(n: int) -> list[RealCliffordTableau]:
    """Every element of rCl(n) (modulo global sign) by BFS closure, n <= 2."""
    if n not in (1, 2):
        raise TooLarge("exhaustive enumeration only for n in {1, 2}")
    gens = generating_gates(n)
    start = RealCliffordTableau.identity(n, record=True)
    seen = {start.images: start}
    queue = deque([start])
    while queue:
        t = queue.popleft()
        for g in gens:
            u = t.apply_gate(g)
            if u.images not in seen:
                seen[u.images] = u
                queue.append(u)
    return list(seen.values())


def _phase_arrays(x1, z1, x2, z2):
    """Vectorised :func:`rdipe.pauli.product_phase` over uint64 arrays."""
    y1 = x1 & z1
    xo = x1 & ~z1
    zo = ~x1 & z1
    y2 = x2 & z2
    x2o = x2 & ~z2
    z2o = ~x2 & z2
    plus = (y1 & z2o) | (xo & y2) | (zo & x2o)
    minus = (y1 & x2o) | (xo & z2o) | (zo & y2)
    return np.bitwise_count(plus).astype(np.int64) - np.bitwise_count(minus).astype(np.int64)


def conjugate_arrays(t: RealCliffordTableau, xs: np.ndarray, zs: np.ndarray):
    """Batch ``C P C^dag`` for letter-form strings given as uint64 bit arrays (n <= 64).

    Returns ``(xs', zs', signs)``.
    """
    if t.n > 64:
        raise TooLarge("array conjugation needs n <= 64")
    xs = np.asarray(xs, dtype=np.uint64)
    zs = np.asarray(zs, dtype=np.uint64)
    e = np.bitwise_count(xs & zs).astype(np.int64)
    ax = np.zeros_like(xs)
    az = np.zeros_like(zs)
    one = np.uint64(1)
    for k in range(2 * t.n):
        site = np.uint64(k % t.n)
        src = xs if k < t.n else zs
        sel = ((src >> site) & one).astype(bool)
        if not sel.any():
            continue
        ix, iz, s = t.images[k]
        ix, iz = np.uint64(ix), np.uint64(iz)
        e[sel] += _phase_arrays(ax[sel], az[sel], ix, iz) + (2 if s < 0 else 0)
        ax[sel] ^= ix
        az[sel] ^= iz
    e %= 4
    if np.any(e & 1):
        raise PhaseNotReal("conjugation produced an imaginary phase; tableau corrupted")
    return ax, az, np.where(e == 2, -1, 1)
