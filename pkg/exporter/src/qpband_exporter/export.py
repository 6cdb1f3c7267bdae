"""Write active-space integrals in the band-pipeline's JSON schema.

The schema is the consumer's contract (version 1): complex numbers are
``[re, im]`` pairs, ``t`` multiplies spin-diagonal one-body ladder pairs and
``v[p,q,r,s]`` multiplies ``c+_{p,s} c+_{q,t} c_{r,t} c_{s,s}`` summed over
both spin labels, with no hidden prefactor. Spin-orbital order on the
consumer side is blocked (all up, then all down), orbitals ascending by
orbital energy.
"""

from __future__ import annotations

import json
from pathlib import Path

from .crystal import CrystalSpec
from .model_stack import ACTIVE, ScfError, active_space


class ExportError(RuntimeError):
    pass


def export_integrals(
    spec: CrystalSpec, kpoint_label: str, out: str | Path
) -> dict:
    """Run the model stack at one k-point and write the integral file.

    Returns the written document. Raises :class:`ExportError` when the SCF
    does not converge or the file cannot be written.
    """
    label, frac, distance = spec.kpoint(kpoint_label)
    try:
        space = active_space(spec, frac)
    except ScfError as exc:
        raise ExportError(f"{label}: {exc}") from exc

    document = {
        "version": 1,
        "kpoint": {
            "label": label,
            "frac": list(frac),
            "path_distance": distance,
        },
        "n_orbitals": ACTIVE,
        "n_electrons": 2,
        "constant": space.constant,
        "t": [
            [[float(c.real), float(c.imag)] for c in row] for row in space.t
        ],
        "v": [
            {"pqrs": list(key), "value": [float(val.real), float(val.imag)]}
            for key, val in sorted(space.v.items())
        ],
        "metadata": {
            "source": "qpband-exporter model stack",
            "structure": spec.structure,
            "lattice_constant_angstrom": spec.lattice_constant_angstrom,
            "basis": spec.basis,
            "pseudopotential": spec.pseudopotential,
            "active_space": "highest occupied + lowest unoccupied orbital",
            "active_orbital_indices": list(space.active_indices),
            "frozen_orbitals": space.active_indices[0],
            "scf_iterations": space.scf.iterations,
            "total_hf_energy_hartree": space.scf.total_energy,
        },
    }
    out = Path(out)
    try:
        with open(out, "w") as fh:
            json.dump(document, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise ExportError(f"cannot write {out}: {exc}") from exc
    return document
