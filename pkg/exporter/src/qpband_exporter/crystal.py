"""Crystal description and the band path for the exporter."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BOHR_PER_ANGSTROM = 1.8897259886
EV_PER_HARTREE = 27.211386245988


@dataclass(frozen=True)
class CrystalSpec:
    """Diamond-structure crystal with a labelled k-path.

    Fractional k coordinates refer to the primitive reciprocal basis of the
    fcc lattice. ``basis`` and ``pseudopotential`` are recorded as metadata
    tags; the bundled model stack uses its own parametrization.
    """

    structure: str = "diamond-Si"
    lattice_constant_angstrom: float = 5.43
    basis: str = "GTH-SZV (model values)"
    pseudopotential: str = "GTH (model values)"
    kpath: tuple[tuple[str, tuple[float, float, float]], ...] = (
        ("L", (0.5, 0.5, 0.5)),
        ("L-Gamma-mid", (0.25, 0.25, 0.25)),
        ("Gamma", (0.0, 0.0, 0.0)),
        ("Gamma-X-mid", (0.25, 0.0, 0.25)),
        ("X", (0.5, 0.0, 0.5)),
    )

    def __post_init__(self) -> None:
        if self.lattice_constant_angstrom <= 0:
            raise ValueError("lattice constant must be positive")
        if self.structure != "diamond-Si":
            raise ValueError(f"unknown structure tag {self.structure!r}")

    def reciprocal_basis(self) -> np.ndarray:
        """Primitive reciprocal vectors, rows, in units of 2*pi/a."""
        # fcc direct lattice a/2 (110) family -> bcc reciprocal lattice
        return np.array(
            [
                [-1.0, 1.0, 1.0],
                [1.0, -1.0, 1.0],
                [1.0, 1.0, -1.0],
            ]
        )

    def cartesian_k(self, frac: tuple[float, float, float]) -> np.ndarray:
        """Cartesian k in units of 2*pi/a."""
        return np.asarray(frac) @ self.reciprocal_basis()

    def path_distances(self) -> dict[str, float]:
        """Cumulative Cartesian distance along the k-path, per label."""
        out: dict[str, float] = {}
        total = 0.0
        previous: np.ndarray | None = None
        for label, frac in self.kpath:
            cart = self.cartesian_k(frac)
            if previous is not None:
                total += float(np.linalg.norm(cart - previous))
            out[label] = total
            previous = cart
        return out

    def kpoint(self, label: str) -> tuple[str, tuple[float, float, float], float]:
        for name, frac in self.kpath:
            if name.lower() == label.lower():
                return name, frac, self.path_distances()[name]
        known = [name for name, _ in self.kpath]
        raise KeyError(f"unknown k-point {label!r}; known: {known}")
