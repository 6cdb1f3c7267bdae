import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qpband.fermion import jordan_wigner, spin_parity_symmetries, taper
from qpband.hamiltonian import build_hamiltonian, load_integrals
from qpband.pauli import truncate

DATA_DIR = Path(__file__).parent.parent / "src" / "qpband" / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def si_gamma():
    return load_integrals(DATA_DIR / "si_gamma.json")


@pytest.fixture(scope="session")
def si_l():
    return load_integrals(DATA_DIR / "si_l.json")


@pytest.fixture(scope="session")
def si_gamma_qubit(si_gamma):
    """Jordan-Wigner image of the 4-spin-orbital Hamiltonian."""
    return jordan_wigner(build_hamiltonian(si_gamma), si_gamma.n_modes)


@pytest.fixture(scope="session")
def si_gamma_symmetries(si_gamma):
    return spin_parity_symmetries(si_gamma.n_orbitals).for_occupation(
        si_gamma.hf_occupation()
    )


@pytest.fixture(scope="session")
def si_gamma_tapered(si_gamma_qubit, si_gamma_symmetries):
    return truncate(taper(si_gamma_qubit, si_gamma_symmetries), 1e-8)
