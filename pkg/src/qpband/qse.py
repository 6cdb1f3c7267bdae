"""Subspace expansion around the optimized reference state.

Quasiparticle bands come from projecting the Hamiltonian onto the states
reached by single electron removals (valence) or additions (conduction)
applied to the correlated ground state. Matrix elements of the projected
Hamiltonian and overlap are measured on the tapered register: each operator
product is mapped to Pauli strings as a whole, split against the tapering
symmetries (the anticommuting part has exactly zero expectation in a fixed
sector and is dropped), tapered, truncated, and measured group by group.

The generalized eigenvalue problem is solved by canonical orthogonalization
of the overlap; eigenvalues below a conditioning threshold are discarded.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .fermion import (
    FermionOperator,
    SymmetrySet,
    jordan_wigner,
    split_by_symmetry,
    taper,
)
from .hamiltonian import HARTREE_TO_EV, IntegralSet, KPoint
from .pauli import PauliSum, group_qubitwise, truncate
from .simulator import Circuit

DEFAULT_TRUNCATION = 1e-8
DEFAULT_S_THRESHOLD = 1e-6

_GAMMA_LABELS = {"gamma", "g", "Γ"}


class SubspaceError(RuntimeError):
    """The subspace problem is inconsistent or degenerate."""


@dataclass(frozen=True)
class ExcitationSet:
    """Single-mode ladder operators spanning the probe subspace."""

    kind: str  # "valence" | "conduction"
    operators: tuple[FermionOperator, ...]
    orbital_labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.kind not in ("valence", "conduction"):
            raise ValueError(f"unknown excitation kind {self.kind!r}")
        if len(self.operators) != len(self.orbital_labels):
            raise ValueError("labels and operators must align")


def build_excitations(ints: IntegralSet, kind: str) -> ExcitationSet:
    """One annihilation per occupied spin orbital (valence) or one creation
    per unoccupied spin orbital (conduction)."""
    if kind not in ("valence", "conduction"):
        raise ValueError(f"unknown excitation kind {kind!r}")
    occupation = ints.hf_occupation()
    n = ints.n_orbitals
    ops: list[FermionOperator] = []
    labels: list[str] = []
    for mode, occupied in enumerate(occupation):
        wanted = occupied if kind == "valence" else not occupied
        if not wanted:
            continue
        orbital, spin = mode % n, "ud"[mode // n]
        if kind == "valence":
            ops.append(FermionOperator.annihilation(mode))
        else:
            ops.append(FermionOperator.creation(mode))
        labels.append(f"{orbital}{spin}")
    if not ops:
        raise SubspaceError(
            f"no {kind} excitations: every spin orbital is "
            + ("empty" if kind == "valence" else "occupied")
        )
    return ExcitationSet(kind=kind, operators=tuple(ops), orbital_labels=tuple(labels))


def split_by_spin(excitations: ExcitationSet) -> tuple[ExcitationSet, ExcitationSet]:
    """Split an excitation set into its spin-up and spin-down channels.

    Under per-spin parity tapering every cross-spin matrix element is
    symmetry-forbidden, so the subspace problem block-diagonalizes into the
    two channels. Solving the channels separately keeps each eigenvalue
    attached to a definite (orbital, spin) identity, which is what makes
    averaging over noisy repeats unbiased for spin-degenerate bands.
    """
    channels: dict[str, tuple[list, list]] = {"u": ([], []), "d": ([], [])}
    for op, label in zip(excitations.operators, excitations.orbital_labels):
        ops, labels = channels[label[-1]]
        ops.append(op)
        labels.append(label)
    up, down = channels["u"], channels["d"]
    return (
        ExcitationSet(excitations.kind, tuple(up[0]), tuple(up[1])),
        ExcitationSet(excitations.kind, tuple(down[0]), tuple(down[1])),
    )


@dataclass(frozen=True)
class SubspaceProblem:
    """Measured projected Hamiltonian and overlap with per-element errors."""

    hamiltonian: np.ndarray
    overlap: np.ndarray
    hamiltonian_err: np.ndarray
    overlap_err: np.ndarray

    def __post_init__(self) -> None:
        shape = self.hamiltonian.shape
        if len(shape) != 2 or shape[0] != shape[1]:
            raise ValueError("subspace matrices must be square")
        for other in (self.overlap, self.hamiltonian_err, self.overlap_err):
            if other.shape != shape:
                raise ValueError("subspace matrices must share one shape")


def _sector_observable(
    product: FermionOperator,
    n_modes: int,
    symmetries: SymmetrySet,
    truncation: float,
) -> PauliSum | None:
    """Tapered Pauli image of a product, or None if it is symmetry-forbidden.

    Pauli terms anticommuting with any tapering generator connect different
    symmetry sectors, so their expectation in the reference sector vanishes
    identically; only the commuting remainder is measured.
    """
    image = jordan_wigner(product, n_modes)
    for g in symmetries.generators:
        image, _ = split_by_symmetry(image, g)
    if len(image) == 0:
        return None
    return truncate(taper(image, symmetries), truncation)


def measure_subspace(
    reference: Circuit,
    excitations: ExcitationSet,
    hamiltonian: FermionOperator,
    symmetries: SymmetrySet,
    backend,
    shots_per_group: int = 10_000,
    seed: int = 0,
    cycle: int = 0,
    truncation: float = DEFAULT_TRUNCATION,
) -> SubspaceProblem:
    """Measure H_ij = <O_i' H O_j> and S_ij = <O_i' O_j> on the reference.

    Products are formed fermionically, mapped and tapered as wholes, and
    estimated element by element with ``shots_per_group`` shots per
    qubit-wise group. Both matrices are Hermitized afterwards.
    """
    n_modes = reference.n_qubits + len(symmetries.generators)
    d = len(excitations.operators)
    h_mat = np.zeros((d, d), dtype=complex)
    s_mat = np.zeros((d, d), dtype=complex)
    h_err = np.zeros((d, d))
    s_err = np.zeros((d, d))

    for i in range(d):
        adjoint_i = excitations.operators[i].adjoint()
        for j in range(d):
            pairs = (
                (0, adjoint_i @ hamiltonian @ excitations.operators[j], h_mat, h_err),
                (1, adjoint_i @ excitations.operators[j], s_mat, s_err),
            )
            for tag, product, target, target_err in pairs:
                observable = _sector_observable(product, n_modes, symmetries, truncation)
                if observable is None:
                    continue
                constant, rest = observable.split_identity()
                value = complex(constant)
                var = 0.0
                for g_index, group in enumerate(group_qubitwise(rest)):
                    est, err = backend.group_expectation(
                        reference,
                        group,
                        shots_per_group,
                        seed=_element_seed(seed, tag, i, j, g_index),
                        cycle=cycle,
                    )
                    value += est
                    var += err ** 2
                target[i, j] = value
                target_err[i, j] = math.sqrt(var)

    return SubspaceProblem(
        hamiltonian=(h_mat + h_mat.conj().T) / 2.0,
        overlap=(s_mat + s_mat.conj().T) / 2.0,
        hamiltonian_err=np.sqrt(h_err ** 2 + h_err.T ** 2) / 2.0,
        overlap_err=np.sqrt(s_err ** 2 + s_err.T ** 2) / 2.0,
    )


def _element_seed(seed: int, tag: int, i: int, j: int, group_index: int) -> int:
    key = (tag, i, j, group_index)
    return int(np.random.SeedSequence(entropy=seed, spawn_key=key).generate_state(1)[0])


@dataclass(frozen=True)
class GevSolution:
    """Solution of H C = S C E by canonical orthogonalization."""

    eigenvalues: np.ndarray
    kept_dimension: int
    discarded_overlap_eigenvalues: tuple[float, ...]
    eigen_stderrs: np.ndarray | None = None


def solve_gev(problem: SubspaceProblem, s_threshold: float = DEFAULT_S_THRESHOLD) -> GevSolution:
    """Diagonalize within the well-conditioned part of the overlap.

    Overlap eigenvalues below ``s_threshold`` are discarded; if none remain
    the subspace is degenerate and the solve fails loudly.
    """
    s_vals, s_vecs = np.linalg.eigh(problem.overlap)
    keep = s_vals >= s_threshold
    if not keep.any():
        raise SubspaceError(
            f"all overlap eigenvalues fall below {s_threshold}: {s_vals.tolist()}"
        )
    discarded = tuple(float(v) for v in s_vals[~keep])
    x = s_vecs[:, keep] / np.sqrt(s_vals[keep])
    reduced = x.conj().T @ problem.hamiltonian @ x
    vals, vecs = np.linalg.eigh(reduced)

    stderrs = None
    if problem.hamiltonian_err.any() or problem.overlap_err.any():
        stderrs = np.zeros_like(vals)
        for k in range(vals.size):
            c = x @ vecs[:, k]  # normalized so c' S c = 1
            weight = np.abs(np.outer(c.conj(), c)) ** 2
            var = float(
                np.sum(weight * (problem.hamiltonian_err ** 2
                                 + vals[k] ** 2 * problem.overlap_err ** 2))
            )
            stderrs[k] = math.sqrt(var)
    return GevSolution(
        eigenvalues=vals,
        kept_dimension=int(keep.sum()),
        discarded_overlap_eigenvalues=discarded,
        eigen_stderrs=stderrs,
    )


@dataclass(frozen=True)
class BandPoint:
    """Quasiparticle energies at one k-point, in eV after the reference shift."""

    kpoint: KPoint
    valence: tuple[float, ...]
    conduction: tuple[float, ...]
    valence_err: tuple[float, ...]
    conduction_err: tuple[float, ...]


@dataclass(frozen=True)
class BandStructure:
    points: tuple[BandPoint, ...]
    reference_shift_ev: float

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["k_label", "path_distance", "band_type", "band_index",
                 "energy_ev", "stderr_ev"]
            )
            for pt in self.points:
                for kind, energies, errs in (
                    ("valence", pt.valence, pt.valence_err),
                    ("conduction", pt.conduction, pt.conduction_err),
                ):
                    for idx, (e, err) in enumerate(zip(energies, errs)):
                        writer.writerow(
                            [pt.kpoint.label, f"{pt.kpoint.path_distance!r}",
                             kind, idx, f"{e!r}", f"{err!r}"]
                        )


@dataclass(frozen=True)
class KPointSolution:
    """Inputs to band assembly for one k-point."""

    kpoint: KPoint
    valence: GevSolution | None
    conduction: GevSolution | None
    ground_energy: float
    ground_energy_err: float = 0.0


def assemble_bands(
    per_k: Sequence[KPointSolution],
    reference_shift: str = "gamma-valence-max",
) -> BandStructure:
    """Convert sector energies to quasiparticle bands in eV.

    A valence level is the negated removal energy -(E(N-1) - E_gs); a
    conduction level is the addition energy E(N+1) - E_gs. With the default
    shift policy the highest valence level at the Gamma point defines 0 eV.
    """
    if not per_k:
        raise ValueError("need at least one k-point")
    if reference_shift not in ("gamma-valence-max", "none"):
        raise ValueError(f"unknown shift policy {reference_shift!r}")

    raw: list[BandPoint] = []
    for sol in per_k:
        def to_bands(gev: GevSolution | None, sign: float) -> tuple[tuple[float, ...], tuple[float, ...]]:
            if gev is None:
                return (), ()
            energies = tuple(
                float(sign * (e - sol.ground_energy) * HARTREE_TO_EV)
                for e in gev.eigenvalues
            )
            base = (
                gev.eigen_stderrs
                if gev.eigen_stderrs is not None
                else np.zeros_like(gev.eigenvalues)
            )
            errs = tuple(
                float(math.hypot(s, sol.ground_energy_err) * HARTREE_TO_EV)
                for s in base
            )
            return energies, errs

        valence, valence_err = to_bands(sol.valence, -1.0)
        conduction, conduction_err = to_bands(sol.conduction, +1.0)
        raw.append(
            BandPoint(
                kpoint=sol.kpoint,
                valence=valence,
                conduction=conduction,
                valence_err=valence_err,
                conduction_err=conduction_err,
            )
        )

    shift = 0.0
    if reference_shift == "gamma-valence-max":
        gamma_points = [
            pt for pt in raw if pt.kpoint.label.lower() in _GAMMA_LABELS and pt.valence
        ]
        if not gamma_points:
            raise SubspaceError(
                "shift policy needs a Gamma point with valence bands"
            )
        shift = max(max(pt.valence) for pt in gamma_points)

    shifted = tuple(
        BandPoint(
            kpoint=pt.kpoint,
            valence=tuple(e - shift for e in pt.valence),
            conduction=tuple(e - shift for e in pt.conduction),
            valence_err=pt.valence_err,
            conduction_err=pt.conduction_err,
        )
        for pt in raw
    )
    return BandStructure(points=shifted, reference_shift_ev=shift)
