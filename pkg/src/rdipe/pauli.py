"""Bit-packed n-qubit Pauli strings and Bell-basis labels.

A Pauli string stores its X and Z components as two Python integers used as
bit vectors (site ``i`` lives at bit ``i``).  Python integers are arbitrary
precision word arrays, so XOR/AND/popcount cost O(n/64) per operation.

Site letters decode as ``(x, z)``: (0,0)->I, (1,0)->X, (1,1)->Y, (0,1)->Z.
The base-4 label digit of a site is 0->I, 1->X, 2->Y, 3->Z, and label strings
are written with the most significant digit for qubit 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DimensionMismatch, PhaseNotReal

LETTERS = "IXYZ"
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_DIGIT = {(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}
_DIGIT_BITS = {d: b for b, d in _BITS_DIGIT.items()}


def popcount(v: int) -> int:
    return v.bit_count()


def product_phase(x1: int, z1: int, x2: int, z2: int) -> int:
    """Exponent ``e`` (mod 4) with ``P1 P2 = i**e R`` for letter-form strings.

    ``R`` is the letter-form string with bits ``(x1^x2, z1^z2)``.
    """
    y1 = x1 & z1
    xo = x1 & ~z1
    zo = ~x1 & z1
    y2 = x2 & z2
    x2o = x2 & ~z2
    z2o = ~x2 & z2
    plus = (y1 & z2o) | (xo & y2) | (zo & x2o)
    minus = (y1 & x2o) | (xo & z2o) | (zo & y2)
    return (plus.bit_count() - minus.bit_count()) % 4


def symplectic_product(x1: int, z1: int, x2: int, z2: int) -> int:
    """0 if the strings commute, 1 if they anticommute."""
    return ((x1 & z2) ^ (z1 & x2)).bit_count() & 1


@dataclass(frozen=True, slots=True)
class PauliString:
    """Hermitian n-qubit Pauli operator ``sign * P_1 (x) ... (x) P_n``."""

    n: int
    x: int
    z: int
    sign: int = 1

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("n must be non-negative")
        if self.x >> self.n or self.z >> self.n or self.x < 0 or self.z < 0:
            raise ValueError(f"bit vectors exceed {self.n} sites")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    # construction -------------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> PauliString:
        return cls(n, 0, 0, 1)

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        """Parse ``"-XYZI"``, ``"+XX"`` or ``"XX"``."""
        sign = 1
        if label[:1] in "+-" and label:
            sign = -1 if label[0] == "-" else 1
            label = label[1:]
        x = z = 0
        for i, ch in enumerate(label):
            try:
                bx, bz = _LETTER_BITS[ch]
            except KeyError:
                raise ValueError(f"bad Pauli letter {ch!r}") from None
            x |= bx << i
            z |= bz << i
        return cls(len(label), x, z, sign)

    @classmethod
    def single(cls, n: int, site: int, letter: str) -> PauliString:
        bx, bz = _LETTER_BITS[letter]
        return cls(n, bx << site, bz << site)

    @classmethod
    def from_digits(cls, digits: Iterable[int]) -> PauliString:
        x = z = 0
        n = 0
        for i, d in enumerate(digits):
            bx, bz = _DIGIT_BITS[int(d)]
            x |= bx << i
            z |= bz << i
            n = i + 1
        return cls(n, x, z)

    @classmethod
    def from_base4(cls, text: str) -> PauliString:
        """Inverse of :meth:`to_base4` (wire format, MSD = qubit 0)."""
        if any(ch not in "0123" for ch in text):
            raise ValueError(f"not a base-4 label: {text!r}")
        return cls.from_digits(int(ch) for ch in text)

    @classmethod
    def from_index(cls, n: int, index: int) -> PauliString:
        """Table index ``sum_i digit_i 4**(n-1-i)`` back to a string."""
        digits = [(index >> (2 * (n - 1 - i))) & 3 for i in range(n)]
        p = cls.from_digits(digits)
        return p if n else cls.identity(0)

    # views ---------------------------------------------------------------

    def letter(self, site: int) -> str:
        return LETTERS[_BITS_DIGIT[((self.x >> site) & 1, (self.z >> site) & 1)]]

    @property
    def letters(self) -> str:
        return "".join(self.letter(i) for i in range(self.n))

    def digits(self) -> list[int]:
        return [_BITS_DIGIT[((self.x >> i) & 1, (self.z >> i) & 1)] for i in range(self.n)]

    def to_base4(self) -> str:
        return "".join(str(d) for d in self.digits())

    def to_index(self) -> int:
        idx = 0
        for d in self.digits():
            idx = 4 * idx + d
        return idx

    def __str__(self) -> str:
        return ("-" if self.sign < 0 else "+") + self.letters

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r})"

    def unsigned(self) -> PauliString:
        return self if self.sign == 1 else PauliString(self.n, self.x, self.z, 1)

    def __neg__(self) -> PauliString:
        return PauliString(self.n, self.x, self.z, -self.sign)

    # algebra ---------------------------------------------------------------

    @property
    def y_count(self) -> int:
        return (self.x & self.z).bit_count()

    def weight_counts(self) -> tuple[int, int, int]:
        """Number of X, Y and Z letters."""
        y = self.x & self.z
        return (self.x & ~y).bit_count(), y.bit_count(), (self.z & ~y).bit_count()

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def commutes(self, other: PauliString) -> bool:
        self._check(other)
        return symplectic_product(self.x, self.z, other.x, other.z) == 0

    def multiply(self, other: PauliString) -> PauliString:
        """Product ``self * other``; raises :class:`PhaseNotReal` on a +-i phase."""
        self._check(other)
        e = product_phase(self.x, self.z, other.x, other.z)
        if e & 1:
            raise PhaseNotReal(f"{self} * {other} has an imaginary phase")
        sign = self.sign * other.sign * (-1 if e == 2 else 1)
        return PauliString(self.n, self.x ^ other.x, self.z ^ other.z, sign)

    __mul__ = multiply

    def swap_symmetry_sign(self) -> int:
        """Eigenvalue of SWAP on the Bell state labelled by this string."""
        return -1 if self.y_count & 1 else 1

    def _check(self, other: PauliString) -> None:
        if self.n != other.n:
            raise DimensionMismatch(f"{self.n} vs {other.n} qubits")

    # dense -------------------------------------------------------------------

    def to_matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix (qubit 0 is the most significant index bit)."""
        mats = {
            "I": np.eye(2),
            "X": np.array([[0, 1], [1, 0]], dtype=complex),
            "Y": np.array([[0, -1j], [1j, 0]]),
            "Z": np.diag([1.0, -1.0]),
        }
        out = np.ones((1, 1), dtype=complex)
        for ch in self.letters:
            out = np.kron(out, mats[ch])
        return self.sign * out


def weight_counts(p: PauliString) -> tuple[int, int, int]:
    return p.weight_counts()


def multiply(p: PauliString, q: PauliString) -> PauliString:
    return p.multiply(q)


def swap_symmetry_sign(a: PauliString) -> int:
    return a.swap_symmetry_sign()


def reverse_bits(v: int, n: int) -> int:
    """Map a site-ordered bit vector to a dense basis index (qubit 0 = MSB)."""
    return int(format(v, f"0{n}b")[::-1], 2) if n else 0


def index_tables(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Dense-index X and Z masks for every table index ``a`` in ``range(4**n)``.

    The masks are expressed in dense basis-index bit order (qubit 0 = MSB),
    ready for use with state vectors.
    """
    a = np.arange(4**n, dtype=np.int64)
    xm = np.zeros_like(a)
    zm = np.zeros_like(a)
    for i in range(n):
        d = (a >> (2 * (n - 1 - i))) & 3
        bit = 1 << (n - 1 - i)
        xm |= np.where((d == 1) | (d == 2), bit, 0)
        zm |= np.where((d == 2) | (d == 3), bit, 0)
    return xm, zm
