"""Crystalline-orbital integral files, Hamiltonian assembly, and the dense
exact-diagonalization oracle.

An integral file carries spatial-orbital one-body integrals ``t[p][q]`` and
two-body integrals ``v[p,q,r,s]`` for one k-point, in exactly the
coefficient convention of the assembled operator:

    H = constant
      + sum_pq   t[p,q]   sum_s  c+_{p,s} c_{q,s}
      + sum_pqrs v[p,q,r,s] sum_{s,t} c+_{p,s} c+_{q,t} c_{r,t} c_{s,s}

with s, t spin labels. There is no hidden 1/2 prefactor; the file is the
single source of truth. With a single k-point the momentum conservation
constraint on the two-body indices is vacuous.

All energies are Hartree internally; conversion to eV happens only in
reporting code.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fermion import FermionOperator
from .pauli import PauliSum

HARTREE_TO_EV = 27.211386245988
CHEMICAL_ACCURACY_EV = 0.0434

_HERMITICITY_TOL = 1e-10


class IntegralError(ValueError):
    """Malformed or physically inconsistent integral data."""


@dataclass(frozen=True)
class KPoint:
    """A point on the band path."""

    label: str
    frac: tuple[float, float, float]
    path_distance: float

    def __post_init__(self) -> None:
        if len(self.frac) != 3:
            raise IntegralError("k-point needs three fractional coordinates")
        if any(abs(c) > 0.5 + 1e-9 for c in self.frac):
            raise IntegralError(f"fractional coordinates outside [-0.5, 0.5]: {self.frac}")


@dataclass(frozen=True)
class IntegralSet:
    """Active-space integrals for one k-point."""

    n_orbitals: int
    n_electrons: int
    kpoint: KPoint
    constant: float
    t: np.ndarray
    v: dict[tuple[int, int, int, int], complex]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = self.n_orbitals
        if n < 1:
            raise IntegralError("need at least one orbital")
        if self.n_electrons < 0 or self.n_electrons > 2 * n:
            raise IntegralError(
                f"{self.n_electrons} electrons do not fit {2 * n} spin orbitals"
            )
        if self.t.shape != (n, n):
            raise IntegralError(f"t has shape {self.t.shape}, expected {(n, n)}")
        if np.max(np.abs(self.t - self.t.conj().T), initial=0.0) > _HERMITICITY_TOL:
            raise IntegralError("one-body integrals are not Hermitian")
        for key, val in self.v.items():
            if len(key) != 4 or any(not 0 <= i < n for i in key):
                raise IntegralError(f"two-body index out of range: {key}")
            p, q, r, s = key
            partner = self.v.get((s, r, q, p), 0.0)
            if abs(val - np.conj(partner)) > _HERMITICITY_TOL:
                raise IntegralError(
                    f"two-body integrals break Hermiticity at {key}"
                )

    @property
    def n_modes(self) -> int:
        return 2 * self.n_orbitals

    def hf_occupation(self) -> tuple[int, ...]:
        """Closed-shell reference occupation in blocked mode order."""
        if self.n_electrons % 2:
            raise IntegralError("closed-shell reference needs an even electron count")
        n_occ = self.n_electrons // 2
        per_spin = [1] * n_occ + [0] * (self.n_orbitals - n_occ)
        return tuple(per_spin + per_spin)


def _complex_from_pair(pair) -> complex:
    if not isinstance(pair, (list, tuple)) or len(pair) != 2:
        raise IntegralError(f"complex values must be [re, im] pairs, got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


def load_integrals(path: str | Path) -> IntegralSet:
    """Read and validate an integral JSON file."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise IntegralError(f"{path}: not valid JSON ({exc})") from exc
    try:
        if data.get("version") != 1:
            raise IntegralError(f"unsupported schema version {data.get('version')!r}")
        kp = data["kpoint"]
        kpoint = KPoint(
            label=str(kp["label"]),
            frac=tuple(float(x) for x in kp["frac"]),
            path_distance=float(kp["path_distance"]),
        )
        n = int(data["n_orbitals"])
        t = np.array(
            [[_complex_from_pair(cell) for cell in row] for row in data["t"]],
            dtype=complex,
        )
        v: dict[tuple[int, int, int, int], complex] = {}
        for entry in data["v"]:
            key = tuple(int(i) for i in entry["pqrs"])
            if key in v:
                raise IntegralError(f"duplicate two-body entry {key}")
            v[key] = _complex_from_pair(entry["value"])
        return IntegralSet(
            n_orbitals=n,
            n_electrons=int(data["n_electrons"]),
            kpoint=kpoint,
            constant=float(data["constant"]),
            t=t,
            v=v,
            metadata=dict(data.get("metadata", {})),
        )
    except KeyError as exc:
        raise IntegralError(f"{path}: missing field {exc}") from exc


def save_integrals(ints: IntegralSet, path: str | Path) -> None:
    """Write the JSON schema read by :func:`load_integrals`."""
    data = {
        "version": 1,
        "kpoint": {
            "label": ints.kpoint.label,
            "frac": list(ints.kpoint.frac),
            "path_distance": ints.kpoint.path_distance,
        },
        "n_orbitals": ints.n_orbitals,
        "n_electrons": ints.n_electrons,
        "constant": ints.constant,
        "t": [
            [[float(c.real), float(c.imag)] for c in row] for row in ints.t
        ],
        "v": [
            {"pqrs": list(key), "value": [float(val.real), float(val.imag)]}
            for key, val in sorted(ints.v.items())
        ],
        "metadata": ints.metadata,
    }
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def build_hamiltonian(ints: IntegralSet) -> FermionOperator:
    """Assemble the second-quantized Hamiltonian over spin orbitals.

    One-body integrals are spin diagonal; two-body integrals are expanded
    over both spin labels of each ladder pair (spin-conserving pattern).
    """
    n = ints.n_orbitals

    def mode(p: int, spin: int) -> int:
        return p + spin * n

    terms: list[tuple[complex, tuple[tuple[int, bool], ...]]] = []
    if ints.constant:
        terms.append((complex(ints.constant), ()))
    for p in range(n):
        for q in range(n):
            coeff = complex(ints.t[p, q])
            if coeff == 0:
                continue
            for spin in (0, 1):
                terms.append((coeff, ((mode(p, spin), True), (mode(q, spin), False))))
    for (p, q, r, s), coeff in ints.v.items():
        if coeff == 0:
            continue
        for sigma in (0, 1):
            for tau in (0, 1):
                terms.append(
                    (
                        complex(coeff),
                        (
                            (mode(p, sigma), True),
                            (mode(q, tau), True),
                            (mode(r, tau), False),
                            (mode(s, sigma), False),
                        ),
                    )
                )
    return FermionOperator(terms=tuple(terms)).canonicalize()


@dataclass(frozen=True)
class SpectrumResult:
    """Eigenvalues (ascending, Hartree) with per-state particle numbers."""

    eigenvalues: np.ndarray
    particle_numbers: np.ndarray
    eigenvectors: np.ndarray | None = None


def _number_diagonal(n_qubits: int) -> np.ndarray:
    indices = np.arange(2 ** n_qubits)
    counts = np.zeros(2 ** n_qubits, dtype=float)
    for q in range(n_qubits):
        counts += (indices >> q) & 1
    return counts


MAX_DENSE_QUBITS = 14


def exact_spectrum(h: PauliSum, filter_particles: int | None = None) -> SpectrumResult:
    """Dense Hermitian eigendecomposition, optionally within a number sector.

    With ``filter_particles`` set, the matrix is restricted to the basis
    states of that occupation number before diagonalizing; this is exact for
    number-conserving operators and is verified by checking that the
    restriction leaks no amplitude outside the sector.
    """
    n = h.n_qubits
    if n > MAX_DENSE_QUBITS:
        raise ValueError(f"{n} qubits exceeds the dense limit of {MAX_DENSE_QUBITS}")
    if not h.is_hermitian(1e-10):
        raise ValueError("exact_spectrum expects a Hermitian operator")
    mat = h.to_matrix()
    number = _number_diagonal(n)
    if filter_particles is None:
        vals, vecs = np.linalg.eigh(mat)
        particles = np.einsum("ij,i,ij->j", vecs.conj(), number, vecs).real
        return SpectrumResult(
            eigenvalues=vals, particle_numbers=particles, eigenvectors=vecs
        )
    sector = np.nonzero(number == filter_particles)[0]
    if sector.size == 0:
        raise ValueError(f"no basis states with {filter_particles} particles")
    outside = np.delete(np.arange(mat.shape[0]), sector)
    leak = 0.0
    if outside.size:
        leak = float(np.max(np.abs(mat[np.ix_(outside, sector)])))
    if leak > 1e-10:
        raise ValueError(
            "operator does not conserve particle number; sector filter invalid"
        )
    block = mat[np.ix_(sector, sector)]
    vals, small_vecs = np.linalg.eigh(block)
    vecs = np.zeros((mat.shape[0], sector.size), dtype=complex)
    vecs[sector] = small_vecs
    particles = np.full(vals.shape, float(filter_particles))
    return SpectrumResult(eigenvalues=vals, particle_numbers=particles, eigenvectors=vecs)


def casci_ground_energy(h: PauliSum, n_electrons: int) -> float:
    """Lowest eigenvalue in the given particle-number sector."""
    return float(exact_spectrum(h, filter_particles=n_electrons).eigenvalues[0])
