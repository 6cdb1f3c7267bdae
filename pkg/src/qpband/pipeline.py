"""End-to-end orchestration: integrals to band structure.

The pipeline runs, per k-point: load integrals, assemble and map the
Hamiltonian, taper the two spin-parity qubits, optimize the ansatz on the
exact estimator, then measure the subspace matrices on the configured
backend. In noisy mode each repeat re-measures the readout calibration at
an advancing measurement cycle (calibration at cycle 2r, computation at
cycle 2r+1) and applies mitigation, and the per-repeat band energies are
averaged.

Every random draw is seeded from the root seed through
:func:`derive_seed`, keyed by (purpose, k-index, repeat, ...), so runs are
bit-reproducible for a fixed configuration, independent of the number of
worker threads.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime as _dt
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .backends import ExactBackend, SamplingBackend
from .fermion import jordan_wigner, spin_parity_symmetries, taper, tapered_occupation_bits
from .hamiltonian import (
    HARTREE_TO_EV,
    IntegralSet,
    build_hamiltonian,
    casci_ground_energy,
    exact_spectrum,
    load_integrals,
)
from .mitigation import fold_circuit, measure_calibration, zne_extrapolate
from .pauli import PauliSum, group_qubitwise, truncate
from .qse import (
    DEFAULT_S_THRESHOLD,
    GevSolution,
    KPointSolution,
    assemble_bands,
    build_excitations,
    measure_subspace,
    solve_gev,
    split_by_spin,
)
from .simulator import NoiseModel
from .vqe import build_ansatz, estimate_energy, smo_optimize

PAULI_TRUNCATION = 1e-8

# seed-derivation purpose tags
_TAG_CALIBRATION = 0
_TAG_QSE = 1
_TAG_GROUND = 2
_TAG_ZNE = 3
_TAG_VQE = 4


class ConfigError(ValueError):
    """The run configuration is invalid."""


def derive_seed(root: int, *key: int) -> int:
    """Stable child seed for a task addressed by an integer key path."""
    seq = np.random.SeedSequence(entropy=root, spawn_key=tuple(int(k) for k in key))
    return int(seq.generate_state(1)[0])


@dataclass(frozen=True)
class RunConfig:
    integrals: tuple[str, ...]
    backend: str = "exact"  # exact | sampled | noisy
    noise_model: str | None = None
    vqe_shots_per_group: int = 5_000
    qse_shots_per_group: int = 10_000
    calibration_shots: int = 10_000
    repeats: int = 40
    zne_lambdas: tuple[int, ...] = (1, 3)
    zne_study: bool = False
    seed: int = 0
    s_threshold: float = DEFAULT_S_THRESHOLD
    sweeps: int = 3
    out_dir: str = "runs"
    jobs: int = 1
    ground_reference: str = "oracle"  # oracle | vqe
    vqe_estimator: str = "exact"  # exact | backend
    rem: bool = True
    plot: bool = True

    def __post_init__(self) -> None:
        if not self.integrals:
            raise ConfigError("no integral files configured")
        if self.backend not in ("exact", "sampled", "noisy"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.backend == "noisy" and not self.noise_model:
            raise ConfigError("noisy backend needs a noise model file")
        if self.ground_reference not in ("oracle", "vqe"):
            raise ConfigError(f"unknown ground reference {self.ground_reference!r}")
        if self.vqe_estimator not in ("exact", "backend"):
            raise ConfigError(f"unknown vqe estimator {self.vqe_estimator!r}")
        for name in ("vqe_shots_per_group", "qse_shots_per_group",
                     "calibration_shots", "repeats", "sweeps", "jobs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        for lam in self.zne_lambdas:
            if lam < 1 or lam % 2 == 0:
                raise ConfigError(f"fold factors must be odd, got {lam}")
        missing = [p for p in self.integrals if not Path(p).is_file()]
        if self.noise_model and not Path(self.noise_model).is_file():
            missing.append(self.noise_model)
        if missing:
            raise ConfigError(f"missing input files: {missing}")

    @classmethod
    def from_json(cls, path: str | Path, **overrides) -> "RunConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
        base = path.parent
        if "integrals" in data:
            data["integrals"] = tuple(str((base / p)) for p in data["integrals"])
        if data.get("noise_model"):
            data["noise_model"] = str(base / data["noise_model"])
        if "zne_lambdas" in data:
            data["zne_lambdas"] = tuple(int(x) for x in data["zne_lambdas"])
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def with_overrides(self, **overrides) -> "RunConfig":
        clean = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **clean)

    def echo(self) -> dict:
        out = dataclasses.asdict(self)
        out["integrals"] = list(out["integrals"])
        out["zne_lambdas"] = list(out["zne_lambdas"])
        return out


@dataclass
class PreparedKPoint:
    """Everything derived from one integral file before any sampling."""

    index: int
    integrals: IntegralSet
    tapered_h: PauliSum
    symmetries: object
    casci_energy: float
    hf_energy: float


def prepare_kpoint(index: int, ints: IntegralSet) -> PreparedKPoint:
    hamiltonian = build_hamiltonian(ints)
    image = jordan_wigner(hamiltonian, ints.n_modes)
    if not image.is_hermitian(1e-9):
        raise ConfigError(f"{ints.kpoint.label}: Hamiltonian image is not Hermitian")
    symmetries = spin_parity_symmetries(ints.n_orbitals).for_occupation(
        ints.hf_occupation()
    )
    tapered = truncate(taper(image, symmetries), PAULI_TRUNCATION)
    bits = tapered_occupation_bits(symmetries, ints.hf_occupation())
    if bits != (1,) * len(bits):
        raise ConfigError(
            f"{ints.kpoint.label}: tapered reference occupation is {bits}; "
            "the X-preparation ansatz expects all ones"
        )
    casci = casci_ground_energy(image, ints.n_electrons)
    hf_index = int("".join(str(b) for b in ints.hf_occupation()), 2)
    hf_energy = float(image.to_matrix()[hf_index, hf_index].real)
    return PreparedKPoint(
        index=index,
        integrals=ints,
        tapered_h=tapered,
        symmetries=symmetries,
        casci_energy=casci,
        hf_energy=hf_energy,
    )


@dataclass
class KPointReport:
    prepared: PreparedKPoint
    vqe_params: list[float]
    vqe_trace: object
    solution: KPointSolution | None = None
    repeat_samples: dict[str, list[float]] = field(default_factory=dict)
    calibrations: list[list[list[float]]] = field(default_factory=list)
    exact_levels: dict[str, list[float]] = field(default_factory=dict)


@dataclass
class RunResult:
    band_structure: object
    reports: list[KPointReport]
    record: dict
    paths: dict[str, Path]


def _vqe_estimator(config: RunConfig, prepared: PreparedKPoint, noise: NoiseModel | None):
    """Energy estimator closure for the optimizer, with fresh seeds per call."""
    if config.vqe_estimator == "exact":
        backend = ExactBackend()

        def estimate(params):
            return estimate_energy(prepared.tapered_h, params, backend, shots_per_group=1)

        return estimate

    backend = SamplingBackend(noise=noise)
    counter = [0]

    def estimate(params):
        counter[0] += 1
        return estimate_energy(
            prepared.tapered_h,
            params,
            backend,
            shots_per_group=config.vqe_shots_per_group,
            seed=derive_seed(config.seed, _TAG_VQE, prepared.index, counter[0]),
            cycle=0,
        )

    return estimate


def _qse_single(
    config: RunConfig,
    prepared: PreparedKPoint,
    reference,
    backend,
    seed: int,
    cycle: int,
) -> tuple[GevSolution, GevSolution]:
    """Per-kind subspace solutions, solved per spin channel.

    Cross-spin elements vanish under the parity tapering, so the channel
    block solutions together carry exactly the full problem's eigenvalues
    while keeping every eigenvalue position tied to one (orbital, spin).
    """
    hamiltonian = build_hamiltonian(prepared.integrals)
    solutions = []
    for tag, kind in ((0, "valence"), (1, "conduction")):
        blocks = split_by_spin(build_excitations(prepared.integrals, kind))
        eigenvalues, stderrs, discarded, kept = [], [], [], 0
        for b_index, block in enumerate(blocks):
            problem = measure_subspace(
                reference,
                block,
                hamiltonian,
                prepared.symmetries,
                backend,
                shots_per_group=config.qse_shots_per_group,
                seed=derive_seed(seed, tag, b_index),
                cycle=cycle,
                truncation=PAULI_TRUNCATION,
            )
            solution = solve_gev(problem, config.s_threshold)
            eigenvalues.append(solution.eigenvalues)
            stderrs.append(
                solution.eigen_stderrs
                if solution.eigen_stderrs is not None
                else np.zeros_like(solution.eigenvalues)
            )
            discarded.extend(solution.discarded_overlap_eigenvalues)
            kept += solution.kept_dimension
        solutions.append(
            GevSolution(
                eigenvalues=np.concatenate(eigenvalues),
                kept_dimension=kept,
                discarded_overlap_eigenvalues=tuple(discarded),
                eigen_stderrs=np.concatenate(stderrs),
            )
        )
    return solutions[0], solutions[1]


def _mean_gev(samples: list[np.ndarray]) -> GevSolution:
    stacked = np.vstack(samples)
    mean = stacked.mean(axis=0)
    if stacked.shape[0] > 1:
        sem = stacked.std(axis=0, ddof=1) / np.sqrt(stacked.shape[0])
    else:
        sem = np.zeros_like(mean)
    return GevSolution(
        eigenvalues=mean,
        kept_dimension=mean.size,
        discarded_overlap_eigenvalues=(),
        eigen_stderrs=sem,
    )


def _run_kpoint(config: RunConfig, prepared: PreparedKPoint, noise: NoiseModel | None) -> KPointReport:
    estimator = _vqe_estimator(config, prepared, noise)
    params, trace = smo_optimize(
        [0.0] * 4,
        estimator,
        sweeps=config.sweeps,
        shots_per_evaluation=(
            0 if config.vqe_estimator == "exact" else config.vqe_shots_per_group
        ),
    )
    reference = build_ansatz(params)
    vqe_exact_energy, _ = estimate_energy(
        prepared.tapered_h, params, ExactBackend(), shots_per_group=1
    )

    report = KPointReport(prepared=prepared, vqe_params=params, vqe_trace=trace)

    if config.backend == "exact":
        backend = ExactBackend()
        valence, conduction = _qse_single(
            config, prepared, reference, backend,
            seed=derive_seed(config.seed, _TAG_QSE, prepared.index, 0), cycle=0,
        )
        e_gs = (
            prepared.casci_energy
            if config.ground_reference == "oracle"
            else vqe_exact_energy
        )
        report.solution = KPointSolution(
            kpoint=prepared.integrals.kpoint,
            valence=valence,
            conduction=conduction,
            ground_energy=e_gs,
        )
        return report

    base = SamplingBackend(noise=noise)
    use_rem = config.backend == "noisy" and config.rem

    def one_repeat(r: int):
        cal_cycle, meas_cycle = 2 * r, 2 * r + 1
        backend = base
        cal = None
        if use_rem:
            cal = measure_calibration(
                base,
                reference.n_qubits,
                shots=config.calibration_shots,
                cycle=cal_cycle,
                seed=derive_seed(config.seed, _TAG_CALIBRATION, prepared.index, r),
            )
            backend = base.with_calibration(cal)
        valence, conduction = _qse_single(
            config, prepared, reference, backend,
            seed=derive_seed(config.seed, _TAG_QSE, prepared.index, r),
            cycle=meas_cycle,
        )
        if config.ground_reference == "oracle":
            e_gs = prepared.casci_energy
        else:
            e_gs, _ = estimate_energy(
                prepared.tapered_h,
                params,
                backend,
                shots_per_group=config.vqe_shots_per_group,
                seed=derive_seed(config.seed, _TAG_GROUND, prepared.index, r),
                cycle=meas_cycle,
            )
        return valence, conduction, e_gs, cal

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(one_repeat, range(config.repeats)))
    else:
        outcomes = [one_repeat(r) for r in range(config.repeats)]

    # eigenvalue positions are (spin channel, orbital) identities; averaging
    # positionally across repeats stays unbiased for degenerate bands
    valence_samples = [v.eigenvalues for v, _, _, _ in outcomes]
    conduction_samples = [c.eigenvalues for _, c, _, _ in outcomes]
    gs_samples = np.array([g for _, _, g, _ in outcomes])

    def _edge(values: np.ndarray) -> float:
        # lowest sector level per spin channel, averaged over the channels
        half = values.size // 2
        return float((values[0] + values[half]) / 2.0)

    report.repeat_samples = {
        "valence_ev": [
            float(-(_edge(v) - g) * HARTREE_TO_EV)
            for (v, g) in zip(valence_samples, gs_samples)
        ],
        "conduction_ev": [
            float((_edge(c) - g) * HARTREE_TO_EV)
            for (c, g) in zip(conduction_samples, gs_samples)
        ],
    }
    report.calibrations = [
        np.asarray(cal.m).tolist() for _, _, _, cal in outcomes if cal is not None
    ]

    e_gs_mean = float(gs_samples.mean())
    e_gs_err = (
        float(gs_samples.std(ddof=1) / np.sqrt(len(gs_samples)))
        if len(gs_samples) > 1
        else 0.0
    )
    report.solution = KPointSolution(
        kpoint=prepared.integrals.kpoint,
        valence=_mean_gev(valence_samples),
        conduction=_mean_gev(conduction_samples),
        ground_energy=e_gs_mean,
        ground_energy_err=e_gs_err,
    )
    return report


def _zne_study(config: RunConfig, report: KPointReport, noise: NoiseModel) -> dict:
    """Energies of the optimized state at each fold factor, extrapolated to zero."""
    prepared = report.prepared
    base = SamplingBackend(noise=noise)
    points = []
    for l_index, lam in enumerate(config.zne_lambdas):
        folded = fold_circuit(build_ansatz(report.vqe_params), lam)
        backend = base
        if config.rem:
            cal = measure_calibration(
                base, folded.n_qubits, shots=config.calibration_shots,
                cycle=0, seed=derive_seed(config.seed, _TAG_ZNE, prepared.index, l_index, 0),
            )
            backend = base.with_calibration(cal)
        constant, rest = prepared.tapered_h.split_identity()
        total = complex(constant)
        var = 0.0
        for g_index, group in enumerate(group_qubitwise(rest)):
            value, err = backend.group_expectation(
                folded, group, config.vqe_shots_per_group,
                seed=derive_seed(config.seed, _TAG_ZNE, prepared.index, l_index, 1, g_index),
                cycle=1,
            )
            total += value
            var += err ** 2
        points.append((float(lam), float(total.real), float(np.sqrt(var))))
    value0, stderr0 = zne_extrapolate(points)
    return {
        "kpoint": prepared.integrals.kpoint.label,
        "points": [
            {"lambda": lam, "energy_hartree": e, "stderr_hartree": s}
            for lam, e, s in points
        ],
        "extrapolated_hartree": value0,
        "extrapolated_stderr_hartree": stderr0,
        "exact_hartree": prepared.casci_energy,
    }


def _safe_label(label: str) -> str:
    cleaned = label.lower().replace("Γ", "gamma")
    return "".join(ch if ch.isalnum() else "_" for ch in cleaned)


def run_pipeline(config: RunConfig) -> RunResult:
    """Execute the full band-structure workflow and write all artifacts."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    noise = NoiseModel.from_json(config.noise_model) if config.noise_model else None
    sets = [load_integrals(p) for p in config.integrals]
    order = np.argsort([s.kpoint.path_distance for s in sets], kind="stable")
    prepared = [prepare_kpoint(int(i), sets[int(i)]) for i in order]

    reports = [_run_kpoint(config, prep, noise) for prep in prepared]

    for report in reports:
        spectrum_v = _exact_sector_levels(report.prepared, -1)
        spectrum_c = _exact_sector_levels(report.prepared, +1)
        report.exact_levels = {
            "valence_ev": spectrum_v,
            "conduction_ev": spectrum_c,
        }

    bands = assemble_bands([r.solution for r in reports])
    paths: dict[str, Path] = {}

    bands_path = out_dir / "bands.csv"
    bands.write_csv(bands_path)
    paths["bands_csv"] = bands_path

    for report in reports:
        label = _safe_label(report.prepared.integrals.kpoint.label)
        trace_path = out_dir / f"trace_{label}.csv"
        report.vqe_trace.write_csv(trace_path)
        paths[f"trace_{label}"] = trace_path
        for kind_key, values in report.repeat_samples.items():
            kind = kind_key.replace("_ev", "")
            hist_path = out_dir / f"hist_{label}_{kind}.csv"
            _write_histogram_csv(hist_path, values)
            paths[f"hist_{label}_{kind}"] = hist_path

    zne_record = None
    if config.zne_study:
        if noise is None:
            raise ConfigError("the fold-factor study needs a noise model")
        target = _gamma_or_first(reports)
        zne_record = _zne_study(config, target, noise)
        zne_path = out_dir / "zne.csv"
        _write_zne_csv(zne_path, zne_record)
        paths["zne_csv"] = zne_path

    record = {
        "created_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "package_version": __version__,
        "config": config.echo(),
        "seed_scheme": (
            "SeedSequence(root_seed, spawn_key=(purpose, k_index, repeat, ...)); "
            "purposes: 0=calibration 1=qse 2=ground 3=zne 4=vqe"
        ),
        "reference_shift_ev": bands.reference_shift_ev,
        "kpoints": [_kpoint_record(r) for r in reports],
        "zne_study": zne_record,
    }
    record_path = out_dir / "run_record.json"
    with open(record_path, "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths["run_record"] = record_path

    if config.plot:
        from . import plotting

        paths["bands_png"] = plotting.band_figure(bands, out_dir / "bands.png")
        for report in reports:
            label = _safe_label(report.prepared.integrals.kpoint.label)
            paths[f"trace_png_{label}"] = plotting.trace_figure(
                report.vqe_trace,
                report.prepared.casci_energy,
                out_dir / f"trace_{label}.png",
                title=f"VQE optimization at {report.prepared.integrals.kpoint.label}",
            )
            if report.repeat_samples:
                paths[f"hist_png_{label}"] = plotting.histogram_figure(
                    report.repeat_samples,
                    report.exact_levels,
                    out_dir / f"hist_{label}.png",
                    title=f"Repeat outcomes at {report.prepared.integrals.kpoint.label}",
                )
        if zne_record is not None:
            paths["zne_png"] = plotting.zne_figure(zne_record, out_dir / "zne.png")

    return RunResult(band_structure=bands, reports=reports, record=record, paths=paths)


def _exact_sector_levels(prepared: PreparedKPoint, delta: int) -> list[float]:
    """Band-edge removal/addition energies from the dense oracle, in eV."""
    image = jordan_wigner(
        build_hamiltonian(prepared.integrals), prepared.integrals.n_modes
    )
    n_e = prepared.integrals.n_electrons + delta
    spectrum = exact_spectrum(image, filter_particles=n_e)
    e_gs = prepared.casci_energy
    lowest = float(spectrum.eigenvalues[0])
    if delta < 0:
        return [-(lowest - e_gs) * HARTREE_TO_EV]
    return [(lowest - e_gs) * HARTREE_TO_EV]


def _gamma_or_first(reports: list[KPointReport]) -> KPointReport:
    for r in reports:
        if _safe_label(r.prepared.integrals.kpoint.label) == "gamma":
            return r
    return reports[0]


def _write_histogram_csv(path: Path, values: list[float]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["repeat_index", "value_ev"])
        for r, value in enumerate(values):
            writer.writerow([r, f"{value!r}"])


def _write_zne_csv(path: Path, record: dict) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "energy_hartree", "stderr_hartree"])
        for point in record["points"]:
            writer.writerow(
                [point["lambda"], f"{point['energy_hartree']!r}",
                 f"{point['stderr_hartree']!r}"]
            )
        writer.writerow(
            [0, f"{record['extrapolated_hartree']!r}",
             f"{record['extrapolated_stderr_hartree']!r}"]
        )


def _kpoint_record(report: KPointReport) -> dict:
    prep = report.prepared
    sol = report.solution
    return {
        "label": prep.integrals.kpoint.label,
        "path_distance": prep.integrals.kpoint.path_distance,
        "n_orbitals": prep.integrals.n_orbitals,
        "n_electrons": prep.integrals.n_electrons,
        "casci_energy_hartree": prep.casci_energy,
        "hf_energy_hartree": prep.hf_energy,
        "tapered_terms": len(prep.tapered_h),
        "vqe": {
            "params": list(report.vqe_params),
            "iterations": len(report.vqe_trace.points),
            "final_energy_hartree": report.vqe_trace.points[-1].energy
            if report.vqe_trace.points
            else None,
        },
        "ground_energy_hartree": sol.ground_energy,
        "ground_energy_stderr_hartree": sol.ground_energy_err,
        "valence_eigenvalues_hartree": [float(x) for x in sol.valence.eigenvalues],
        "conduction_eigenvalues_hartree": [float(x) for x in sol.conduction.eigenvalues],
        "repeat_samples_ev": report.repeat_samples,
        "exact_levels_ev": report.exact_levels,
        "calibration_matrices": report.calibrations,
    }
