"""First-principles quasiparticle band structures on a simulated noisy
quantum processor: Pauli algebra, statevector simulation with shot noise,
fermion-to-qubit mapping with symmetry tapering, variational ground-state
optimization, subspace expansion for electron addition/removal energies,
and readout/gate error mitigation."""

__version__ = "0.1.0"

from .pauli import (
    MeasurementGroup,
    PauliString,
    PauliSum,
    group_qubitwise,
    multiply,
    truncate,
)
from .simulator import (
    Circuit,
    Gate,
    NoiseModel,
    ShotResult,
    apply_circuit,
    expectation,
    expectation_from_counts,
    sample_group,
    zero_state,
)
from .fermion import (
    FermionOperator,
    SymmetrySet,
    find_z2_symmetries,
    jordan_wigner,
    sector_from_occupation,
    spin_parity_symmetries,
    taper,
)
from .hamiltonian import (
    CHEMICAL_ACCURACY_EV,
    HARTREE_TO_EV,
    IntegralSet,
    KPoint,
    SpectrumResult,
    build_hamiltonian,
    exact_spectrum,
    load_integrals,
    save_integrals,
)
from .backends import ExactBackend, SamplingBackend
from .vqe import OptimizationTrace, build_ansatz, estimate_energy, smo_optimize
from .qse import (
    BandStructure,
    ExcitationSet,
    GevSolution,
    SubspaceProblem,
    assemble_bands,
    build_excitations,
    measure_subspace,
    solve_gev,
)
from .mitigation import (
    CalibrationMatrix,
    Distribution,
    FoldFactor,
    apply_rem,
    fold_circuit,
    measure_calibration,
    repeat_average,
    zne_extrapolate,
)
from .pipeline import RunConfig, derive_seed, run_pipeline
