"""Fermionic operator algebra, the Jordan-Wigner encoding, and Z2 tapering.

Spin-orbital modes are numbered blocked: all spin-up modes first (orbitals
ascending by energy), then all spin-down modes. Mode ``m`` maps onto qubit
``m`` under Jordan-Wigner, which makes the per-spin parity strings obvious:
``Z...ZI...I`` counts the up electrons and ``I...IZ...Z`` the down ones.

Tapering removes one qubit per symmetry generator. Each Z-type generator is
rotated onto a single-qubit X by the involution ``(g + X_q)/sqrt(2)``, the
X is replaced by its sector eigenvalue, and the qubit is deleted.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .pauli import PauliString, PauliSum, multiply

_SQRT_HALF_SQ = 0.5  # weight of each of the four conjugation products


class TaperingError(ValueError):
    """A symmetry set is inconsistent with the operator being tapered."""


@dataclass(frozen=True)
class FermionOperator:
    """A linear combination of products of ladder operators.

    Each term is ``(coefficient, ((mode, dagger), ...))``; the empty product
    is the identity. Terms need not be normal ordered. ``canonicalize``
    merges repeated products and is idempotent.
    """

    terms: tuple[tuple[complex, tuple[tuple[int, bool], ...]], ...]

    @classmethod
    def from_term(cls, coeff: complex, product: Iterable[tuple[int, bool]] = ()) -> "FermionOperator":
        return cls(terms=((complex(coeff), tuple((int(m), bool(d)) for m, d in product)),))

    @classmethod
    def annihilation(cls, mode: int) -> "FermionOperator":
        return cls.from_term(1.0, ((mode, False),))

    @classmethod
    def creation(cls, mode: int) -> "FermionOperator":
        return cls.from_term(1.0, ((mode, True),))

    @property
    def max_mode(self) -> int:
        modes = [m for _, prod in self.terms for m, _ in prod]
        return max(modes) if modes else -1

    def canonicalize(self) -> "FermionOperator":
        merged: dict[tuple, complex] = {}
        for coeff, prod in self.terms:
            merged[prod] = merged.get(prod, 0) + coeff
        return FermionOperator(
            terms=tuple((c, p) for p, c in merged.items() if c != 0)
        )

    def adjoint(self) -> "FermionOperator":
        out = []
        for coeff, prod in self.terms:
            out.append(
                (np.conj(coeff), tuple((m, not d) for m, d in reversed(prod)))
            )
        return FermionOperator(terms=tuple(out))

    def __add__(self, other: "FermionOperator") -> "FermionOperator":
        return FermionOperator(self.terms + other.terms).canonicalize()

    def __mul__(self, scalar: complex) -> "FermionOperator":
        return FermionOperator(tuple((c * scalar, p) for c, p in self.terms))

    __rmul__ = __mul__

    def __matmul__(self, other: "FermionOperator") -> "FermionOperator":
        out = []
        for c1, p1 in self.terms:
            for c2, p2 in other.terms:
                out.append((c1 * c2, p1 + p2))
        return FermionOperator(terms=tuple(out))


def _jw_ladder(mode: int, n_modes: int, dagger: bool) -> PauliSum:
    z_tail = "Z" * mode
    pad = "I" * (n_modes - mode - 1)
    x_term = PauliString(z_tail + "X" + pad)
    y_term = PauliString(z_tail + "Y" + pad)
    y_coeff = -0.5j if dagger else 0.5j
    return PauliSum(n_modes, {x_term: 0.5, y_term: y_coeff})


def jordan_wigner(f: FermionOperator, n_modes: int) -> PauliSum:
    """Map a fermionic operator to a Pauli sum on ``n_modes`` qubits.

    Creation on mode ``j`` becomes ``Z_0..Z_{j-1} (X_j - iY_j)/2``;
    annihilation takes the ``+iY`` sign. Products map to products, which
    preserves the anticommutation algebra.
    """
    if f.max_mode >= n_modes:
        raise ValueError(f"operator uses mode {f.max_mode}, register has {n_modes}")
    total = PauliSum(n_modes)
    identity = PauliSum(n_modes, {PauliString.identity(n_modes): 1.0})
    for coeff, prod in f.terms:
        cur = identity
        for mode, dagger in prod:
            cur = cur @ _jw_ladder(mode, n_modes, dagger)
        total = total + coeff * cur
    return total


@dataclass(frozen=True)
class SymmetrySet:
    """Z-type Pauli symmetries with their tapering pivots and sector.

    ``single_qubit_x[i]`` is the qubit whose X operator anticommutes with
    ``generators[i]`` and commutes with all the others; that qubit is the
    one removed for this generator. ``sector`` holds the generator
    eigenvalues that define the symmetry block being kept.
    """

    generators: tuple[PauliString, ...]
    single_qubit_x: tuple[int, ...]
    sector: tuple[int, ...]

    def __post_init__(self) -> None:
        k = len(self.generators)
        if len(self.single_qubit_x) != k or len(self.sector) != k:
            raise ValueError("generators, pivots and sector must align")
        if any(s not in (1, -1) for s in self.sector):
            raise ValueError("sector eigenvalues must be +/-1")
        for g, q in zip(self.generators, self.single_qubit_x):
            if set(g.letters) - {"I", "Z"}:
                raise ValueError(f"generator {g} is not Z-type")
            if g[q] != "Z":
                raise ValueError(f"pivot {q} is outside the support of {g}")
        for i, g in enumerate(self.generators):
            for j, q in enumerate(self.single_qubit_x):
                if i != j and g[q] != "I":
                    raise ValueError(
                        f"pivot {q} of generator {j} lies in the support of generator {i}"
                    )

    @property
    def n_qubits(self) -> int:
        return self.generators[0].n_qubits if self.generators else 0

    def for_occupation(self, occupation: Sequence[int]) -> "SymmetrySet":
        """The same generators with the sector of the given occupation."""
        return dataclasses.replace(
            self, sector=tuple(sector_from_occupation(self, occupation))
        )


def _gf2_rref(matrix: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2); returns (rref, pivot columns)."""
    m = matrix.copy().astype(np.uint8)
    pivots: list[int] = []
    row = 0
    for col in range(m.shape[1]):
        if row >= m.shape[0]:
            break
        hits = np.nonzero(m[row:, col])[0]
        if hits.size == 0:
            continue
        swap = row + hits[0]
        m[[row, swap]] = m[[swap, row]]
        for r in range(m.shape[0]):
            if r != row and m[r, col]:
                m[r] ^= m[row]
        pivots.append(col)
        row += 1
    return m[: len(pivots)], pivots


def _gf2_kernel(matrix: np.ndarray) -> np.ndarray:
    """Basis of the null space over GF(2), one vector per row."""
    n = matrix.shape[1]
    rref, pivots = _gf2_rref(matrix)
    free = [c for c in range(n) if c not in pivots]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for r, c in enumerate(pivots):
            basis[k, c] = rref[r, f]
    return basis


def _x_block(h: PauliSum) -> np.ndarray:
    """One GF(2) row per distinct X/Y pattern occurring among the terms."""
    rows = sorted(
        {
            tuple(1 if ch in "XY" else 0 for ch in p.letters)
            for p in h
        }
    )
    return np.array(rows, dtype=np.uint8).reshape(len(rows), h.n_qubits)


def _pivot_for(generator: np.ndarray, others: list[np.ndarray]) -> int:
    eligible = [
        q
        for q in range(len(generator))
        if generator[q] and not any(o[q] for o in others)
    ]
    # highest eligible index: removes the qubits of the latest modes first,
    # which keeps the low-lying occupied modes as the surviving register
    return max(eligible)


def find_z2_symmetries(h: PauliSum) -> SymmetrySet:
    """Find the independent Z-type Pauli symmetries of a Hermitian sum.

    A Z string commutes with every term exactly when its support meets each
    term's X/Y pattern an even number of times, so the generators span the
    GF(2) kernel of the terms' X-block. The kernel basis is row reduced for
    reproducibility and each generator is assigned the highest qubit it can
    claim exclusively. The returned sector defaults to all +1; pick the
    physical block with :meth:`SymmetrySet.for_occupation`.
    """
    if not h.is_hermitian(1e-10):
        raise ValueError("symmetry search expects a Hermitian operator")
    kernel = _gf2_kernel(_x_block(h))
    if kernel.shape[0] == 0:
        return SymmetrySet(generators=(), single_qubit_x=(), sector=())
    canonical, _ = _gf2_rref(kernel)
    rows = [canonical[i] for i in range(canonical.shape[0])]
    generators = tuple(
        PauliString("".join("Z" if b else "I" for b in row)) for row in rows
    )
    pivots = tuple(
        _pivot_for(row, [o for j, o in enumerate(rows) if j != i])
        for i, row in enumerate(rows)
    )
    return SymmetrySet(
        generators=generators, single_qubit_x=pivots, sector=(1,) * len(rows)
    )


def spin_parity_symmetries(n_orbitals: int) -> SymmetrySet:
    """The per-spin electron-parity symmetries in blocked mode ordering.

    These exist for any spin-conserving Hamiltonian and are the two
    symmetries the band pipeline tapers, independent of whatever extra
    accidental symmetries a particular integral set may have.
    """
    n = 2 * n_orbitals
    up = PauliString("Z" * n_orbitals + "I" * n_orbitals)
    down = PauliString("I" * n_orbitals + "Z" * n_orbitals)
    return SymmetrySet(
        generators=(up, down),
        single_qubit_x=(n_orbitals - 1, n - 1),
        sector=(1, 1),
    )


def sector_from_occupation(s: SymmetrySet, occupation: Sequence[int]) -> list[int]:
    """Eigenvalue of each generator on the basis state of the occupation."""
    if s.generators and len(occupation) != s.n_qubits:
        raise ValueError("occupation length does not match the register")
    out = []
    for g in s.generators:
        parity = sum(int(occupation[q]) for q in g.support()) % 2
        out.append(-1 if parity else 1)
    return out


def split_by_symmetry(h: PauliSum, generator: PauliString) -> tuple[PauliSum, PauliSum]:
    """Split ``h`` into the parts commuting and anticommuting with ``generator``.

    Every Pauli word either commutes or anticommutes, so the split is exact.
    In a fixed symmetry sector the anticommuting part has zero expectation.
    """
    com: dict[PauliString, complex] = {}
    anti: dict[PauliString, complex] = {}
    for p, c in h.items():
        (com if p.commutes_with(generator) else anti)[p] = c
    return PauliSum(h.n_qubits, com), PauliSum(h.n_qubits, anti)


def _conjugate_by_involution(h: PauliSum, a: PauliString, b: PauliString) -> PauliSum:
    """Conjugate ``h`` by ``U = (a + b)/sqrt(2)`` where a, b anticommute.

    ``U`` is Hermitian and unitary, so conjugation is ``U h U`` expanded as
    ``(a h a + a h b + b h a + b h b)/2``.
    """
    out: dict[PauliString, complex] = {}
    for p, c in h.items():
        for left, right in ((a, a), (a, b), (b, a), (b, b)):
            ph1, p1 = multiply(left, p)
            ph2, p2 = multiply(p1, right)
            out[p2] = out.get(p2, 0) + _SQRT_HALF_SQ * ph1 * ph2 * c
    return PauliSum(h.n_qubits, out)


def taper(h: PauliSum, s: SymmetrySet) -> PauliSum:
    """Project ``h`` into the sector of ``s`` and drop the pivot qubits.

    Every term must commute with every generator; terms that do not would
    connect different sectors and are rejected. The result acts on
    ``n_qubits - len(generators)`` qubits, the pivots removed in place.
    """
    if not s.generators:
        return h
    if s.n_qubits != h.n_qubits:
        raise TaperingError("symmetry set does not match the operator register")
    if len(s.generators) >= h.n_qubits:
        raise TaperingError("tapering would remove every qubit")
    for g in s.generators:
        for p in h:
            if not p.commutes_with(g):
                raise TaperingError(f"term {p} does not commute with generator {g}")

    conjugated = h
    for g, q in zip(s.generators, s.single_qubit_x):
        x_string = PauliString(
            "".join("X" if i == q else "I" for i in range(h.n_qubits))
        )
        conjugated = _conjugate_by_involution(conjugated, g, x_string)

    removed = set(s.single_qubit_x)
    eps = dict(zip(s.single_qubit_x, s.sector))
    out: dict[PauliString, complex] = {}
    for p, c in conjugated.items():
        coeff = c
        for q in s.single_qubit_x:
            ch = p[q]
            if ch == "X":
                coeff *= eps[q]
            elif ch != "I":
                raise TaperingError(
                    f"internal: residual {ch} on pivot {q} after conjugation"
                )
        kept = "".join(ch for i, ch in enumerate(p.letters) if i not in removed)
        key = PauliString(kept)
        out[key] = out.get(key, 0) + coeff
    result = PauliSum(h.n_qubits - len(removed), out)
    # conjugation phases cancel in Hermitian inputs; tiny residues are noise
    cleaned = {
        p: (c.real if abs(c.imag) < 1e-14 else c) for p, c in result.items()
    }
    return PauliSum(result.n_qubits, cleaned)


def tapered_occupation_bits(s: SymmetrySet, occupation: Sequence[int]) -> tuple[int, ...]:
    """Computational-basis image of an occupation after tapering.

    Conjugating a basis state leaves the non-pivot qubits untouched, so the
    tapered representative is just the occupation restricted to the kept
    qubits.
    """
    removed = set(s.single_qubit_x)
    return tuple(
        int(occupation[q]) for q in range(len(occupation)) if q not in removed
    )
