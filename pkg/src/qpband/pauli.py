"""Pauli-string algebra on a fixed qubit register.

Conventions used throughout the package:

* A Pauli string is a word over ``{I, X, Y, Z}``; character ``i`` acts on
  qubit ``i``.
* Measurement bitstrings follow the same order: character ``i`` of a
  bitstring is the outcome of qubit ``i``, and the integer index of a
  basis state treats qubit 0 as the most significant bit.
* An operator sum maps Pauli strings to complex coefficients. Terms whose
  coefficient combines to exactly zero are dropped eagerly so that the
  map stays canonical and equality is well defined.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

LETTERS = "IXYZ"


def _product_table() -> dict[tuple[str, str], tuple[complex, str]]:
    table: dict[tuple[str, str], tuple[complex, str]] = {}
    for a in LETTERS:
        table[("I", a)] = (1, a)
        table[(a, "I")] = (1, a)
        table[(a, a)] = (1, "I")
    for (a, b), c in {("X", "Y"): "Z", ("Y", "Z"): "X", ("Z", "X"): "Y"}.items():
        table[(a, b)] = (1j, c)
        table[(b, a)] = (-1j, c)
    return table


_PRODUCT: dict[tuple[str, str], tuple[complex, str]] = _product_table()


@dataclass(frozen=True, order=True)
class PauliString:
    """An n-qubit Pauli word such as ``XZI``."""

    letters: str

    def __post_init__(self) -> None:
        if not self.letters:
            raise ValueError("a Pauli string needs at least one qubit")
        bad = set(self.letters) - set(LETTERS)
        if bad:
            raise ValueError(f"invalid Pauli letters: {sorted(bad)}")

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls("I" * n_qubits)

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @property
    def is_identity(self) -> bool:
        return set(self.letters) == {"I"}

    def support(self) -> tuple[int, ...]:
        """Qubits on which this string acts non-trivially."""
        return tuple(q for q, ch in enumerate(self.letters) if ch != "I")

    def commutes_with(self, other: "PauliString") -> bool:
        """True when the two strings commute as operators.

        Two Pauli words commute exactly when the number of positions with
        distinct non-identity letters is even.
        """
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit count mismatch")
        clashes = sum(
            1
            for a, b in zip(self.letters, other.letters)
            if a != "I" and b != "I" and a != b
        )
        return clashes % 2 == 0

    def __getitem__(self, qubit: int) -> str:
        return self.letters[qubit]

    def __str__(self) -> str:
        return self.letters


def multiply(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Multiply two Pauli strings, returning ``(phase, product)``.

    The phase is one of ``{1, -1, 1j, -1j}`` and satisfies
    ``a @ b == phase * product`` as operators.
    """
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"qubit count mismatch: {a.n_qubits} vs {b.n_qubits}")
    phase: complex = 1
    out = []
    for x, y in zip(a.letters, b.letters):
        p, c = _PRODUCT[(x, y)]
        phase *= p
        out.append(c)
    return phase, PauliString("".join(out))


class PauliSum:
    """A linear combination of Pauli strings with complex coefficients.

    Instances behave as read-only values: all algebraic operations return
    new sums, which keeps sharing across threads safe.
    """

    __slots__ = ("n_qubits", "_terms")

    def __init__(
        self,
        n_qubits: int,
        terms: Mapping[PauliString, complex] | Iterable[tuple[PauliString, complex]] | None = None,
    ) -> None:
        if n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        self.n_qubits = n_qubits
        combined: dict[PauliString, complex] = {}
        items = terms.items() if isinstance(terms, Mapping) else (terms or ())
        for pauli, coeff in items:
            if pauli.n_qubits != n_qubits:
                raise ValueError(f"term {pauli} does not act on {n_qubits} qubits")
            combined[pauli] = combined.get(pauli, 0) + complex(coeff)
        self._terms = {p: c for p, c in combined.items() if c != 0}

    @classmethod
    def from_strings(cls, n_qubits: int, terms: Mapping[str, complex]) -> "PauliSum":
        return cls(n_qubits, {PauliString(s): c for s, c in terms.items()})

    @property
    def terms(self) -> dict[PauliString, complex]:
        return dict(self._terms)

    def coefficient(self, pauli: PauliString) -> complex:
        return self._terms.get(pauli, 0)

    def items(self) -> Iterator[tuple[PauliString, complex]]:
        return iter(self._terms.items())

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[PauliString]:
        return iter(self._terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self._terms == other._terms

    def __repr__(self) -> str:
        return f"PauliSum(n_qubits={self.n_qubits}, terms={len(self._terms)})"

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit count mismatch")
        merged = dict(self._terms)
        for p, c in other._terms.items():
            merged[p] = merged.get(p, 0) + c
        return PauliSum(self.n_qubits, merged)

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (-1) * other

    def __mul__(self, scalar: complex) -> "PauliSum":
        return PauliSum(self.n_qubits, {p: c * scalar for p, c in self._terms.items()})

    __rmul__ = __mul__

    def __matmul__(self, other: "PauliSum") -> "PauliSum":
        """Operator product of two sums."""
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit count mismatch")
        out: dict[PauliString, complex] = {}
        for p1, c1 in self._terms.items():
            for p2, c2 in other._terms.items():
                phase, prod = multiply(p1, p2)
                out[prod] = out.get(prod, 0) + phase * c1 * c2
        return PauliSum(self.n_qubits, out)

    def adjoint(self) -> "PauliSum":
        return PauliSum(self.n_qubits, {p: np.conj(c) for p, c in self._terms.items()})

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        """Pauli words are Hermitian, so the sum is iff every coefficient is real."""
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def split_identity(self) -> tuple[complex, "PauliSum"]:
        """Return ``(identity coefficient, sum of all other terms)``."""
        ident = PauliString.identity(self.n_qubits)
        rest = {p: c for p, c in self._terms.items() if p != ident}
        return self._terms.get(ident, 0), PauliSum(self.n_qubits, rest)

    def to_matrix(self) -> np.ndarray:
        """Dense ``2^n x 2^n`` matrix of the sum (qubit 0 = most significant bit)."""
        dim = 2 ** self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for pauli, coeff in self._terms.items():
            mat = np.array([[1.0]], dtype=complex)
            for ch in pauli.letters:
                mat = np.kron(mat, _LETTER_MATRICES[ch])
            out += coeff * mat
        return out


_LETTER_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def truncate(h: PauliSum, eps: float) -> PauliSum:
    """Keep exactly the terms with ``|coefficient| >= eps``.

    Retained coefficients are never modified.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    return PauliSum(h.n_qubits, {p: c for p, c in h.items() if abs(c) >= eps})


@dataclass(frozen=True)
class MeasurementGroup:
    """Pauli terms that can be estimated from one measurement setting.

    ``basis`` assigns each qubit the letter it is read out in; every member
    must act as ``I`` or as that letter on each qubit (qubit-wise
    compatibility), which is what lets the whole group share counts.
    """

    members: tuple[tuple[PauliString, complex], ...]
    basis: PauliString

    def __post_init__(self) -> None:
        for pauli, _ in self.members:
            for a, b in zip(pauli.letters, self.basis.letters):
                if a != "I" and a != b:
                    raise ValueError(
                        f"member {pauli} is not qubit-wise compatible with basis {self.basis}"
                    )

    @property
    def n_qubits(self) -> int:
        return self.basis.n_qubits


def _compatible(pauli: str, basis: str) -> bool:
    return all(a == "I" or b == "I" or a == b for a, b in zip(pauli, basis))


def _join(pauli: str, basis: str) -> str:
    return "".join(a if a != "I" else b for a, b in zip(pauli, basis))


def group_qubitwise(h: PauliSum) -> list[MeasurementGroup]:
    """Partition the terms of ``h`` into qubit-wise commuting groups.

    Greedy first-fit over the terms in lexicographic order: each term joins
    the first existing group it is compatible with (widening that group's
    basis), otherwise it opens a new group. The assignment is deterministic.
    """
    bases: list[str] = []
    members: list[list[tuple[PauliString, complex]]] = []
    for pauli in sorted(h, key=lambda p: p.letters):
        coeff = h.coefficient(pauli)
        for g, basis in enumerate(bases):
            if _compatible(pauli.letters, basis):
                bases[g] = _join(pauli.letters, basis)
                members[g].append((pauli, coeff))
                break
        else:
            bases.append(pauli.letters)
            members.append([(pauli, coeff)])
    return [
        MeasurementGroup(members=tuple(m), basis=PauliString(b))
        for m, b in zip(members, bases)
    ]


def dump_text(h: PauliSum) -> str:
    """Serialize one term per line as ``<coeff_re> <coeff_im> <letters>``."""
    lines = []
    for pauli in sorted(h, key=lambda p: p.letters):
        c = h.coefficient(pauli)
        lines.append(f"{c.real!r} {c.imag!r} {pauli.letters}")
    return "\n".join(lines) + ("\n" if lines else "")


def load_text(text: str) -> PauliSum:
    """Parse the text format produced by :func:`dump_text`."""
    terms: dict[PauliString, complex] = {}
    n_qubits = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected '<re> <im> <letters>'")
        re_part, im_part, letters = parts
        pauli = PauliString(letters)
        if n_qubits is None:
            n_qubits = pauli.n_qubits
        terms[pauli] = terms.get(pauli, 0) + complex(float(re_part), float(im_part))
    if n_qubits is None:
        raise ValueError("no Pauli terms in input")
    return PauliSum(n_qubits, terms)
