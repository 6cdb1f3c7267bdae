"""Command-line interface.

Exit codes: 0 success, 2 configuration or validation error, 3 file I/O
error, 4 computation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .backends import SamplingBackend
from .fermion import jordan_wigner, spin_parity_symmetries, taper
from .hamiltonian import (
    HARTREE_TO_EV,
    IntegralError,
    build_hamiltonian,
    load_integrals,
)
from .mitigation import MitigationError, measure_calibration
from .pauli import dump_text, truncate
from .pipeline import ConfigError, RunConfig, derive_seed, run_pipeline
from .qse import SubspaceError
from .simulator import NoiseModel

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_COMPUTE = 4


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="root random seed")
    parser.add_argument("--out", type=str, default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpband",
        description="Quasiparticle band structures on a simulated noisy quantum processor",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("taper", help="dump symmetry generators and the tapered Hamiltonian")
    p.add_argument("--integrals", required=True)
    p.add_argument("--out", type=str, default=None, help="file for the tapered operator")

    p = sub.add_parser("vqe", help="optimize the ansatz for one k-point")
    p.add_argument("--integrals", required=True)
    p.add_argument("--backend", choices=["exact", "sampled", "noisy"], default="exact")
    p.add_argument("--noise", type=str, default=None)
    p.add_argument("--shots", type=int, default=5_000)
    p.add_argument("--sweeps", type=int, default=3)
    p.add_argument("--no-plot", action="store_true")
    _add_common(p)

    p = sub.add_parser("qse", help="subspace expansion for one k-point")
    p.add_argument("--integrals", required=True)
    p.add_argument("--backend", choices=["exact", "sampled", "noisy"], default="exact")
    p.add_argument("--noise", type=str, default=None)
    p.add_argument("--shots", type=int, default=10_000)
    p.add_argument("--repeats", type=int, default=1)
    _add_common(p)

    p = sub.add_parser("bands", help="full pipeline from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--backend", choices=["exact", "sampled", "noisy"], default=None)
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--no-plot", action="store_true")
    _add_common(p)

    p = sub.add_parser("calibrate", help="measure a readout calibration matrix")
    p.add_argument("--noise", required=True)
    p.add_argument("--qubits", type=int, default=2)
    p.add_argument("--shots", type=int, default=10_000)
    p.add_argument("--cycle", type=int, default=0)
    _add_common(p)

    p = sub.add_parser("zne-study", help="fold-factor extrapolation of the optimized energy")
    p.add_argument("--integrals", required=True)
    p.add_argument("--noise", required=True)
    p.add_argument("--lambdas", type=str, default="1,3")
    p.add_argument("--shots", type=int, default=5_000)
    p.add_argument("--no-plot", action="store_true")
    _add_common(p)

    p = sub.add_parser("assets", help="copy the bundled integral files and sample config")
    p.add_argument("--out", type=str, default="si_assets")

    return parser


def _cmd_taper(args) -> int:
    ints = load_integrals(args.integrals)
    image = jordan_wigner(build_hamiltonian(ints), ints.n_modes)
    symmetries = spin_parity_symmetries(ints.n_orbitals).for_occupation(
        ints.hf_occupation()
    )
    tapered = truncate(taper(image, symmetries), 1e-8)
    print(f"# k-point {ints.kpoint.label}")
    for g, q, s in zip(
        symmetries.generators, symmetries.single_qubit_x, symmetries.sector
    ):
        print(f"# generator {g}  pivot {q}  sector {s:+d}")
    text = dump_text(tapered)
    print(text, end="")
    if args.out:
        Path(args.out).write_text(text)
        print(f"# wrote {args.out}")
    return EXIT_OK


def _single_point_config(args, **extra) -> RunConfig:
    return RunConfig(
        integrals=(args.integrals,),
        backend=getattr(args, "backend", "exact"),
        noise_model=getattr(args, "noise", None),
        seed=args.seed if args.seed is not None else 0,
        out_dir=args.out if args.out is not None else "runs",
        plot=not getattr(args, "no_plot", False),
        **extra,
    )


def _cmd_vqe(args) -> int:
    if args.backend == "noisy" and not args.noise:
        raise ConfigError("noisy backend needs --noise")
    config = _single_point_config(
        args,
        vqe_shots_per_group=args.shots,
        sweeps=args.sweeps,
        vqe_estimator="exact" if args.backend == "exact" else "backend",
        repeats=2,
    )
    # only the optimization side of the pipeline is of interest here
    config = config.with_overrides(backend="exact")
    result = run_pipeline(config)
    report = result.reports[0]
    casci = report.prepared.casci_energy
    final = report.vqe_trace.points[-1].energy
    print(f"k-point {report.prepared.integrals.kpoint.label}")
    print(f"optimized parameters: {[round(p, 6) for p in report.vqe_params]}")
    print(f"final energy  {final:.8f} Ha   exact {casci:.8f} Ha")
    print(f"difference    {(final - casci) * HARTREE_TO_EV * 1000:.3f} meV")
    print(f"artifacts in  {config.out_dir}")
    return EXIT_OK


def _cmd_qse(args) -> int:
    config = _single_point_config(
        args,
        qse_shots_per_group=args.shots,
        repeats=max(args.repeats, 1),
    )
    result = run_pipeline(config)
    report = result.reports[0]
    sol = report.solution
    print(f"k-point {report.prepared.integrals.kpoint.label}")
    print(f"ground energy        {sol.ground_energy:.8f} Ha")
    print(f"valence eigenvalues  {[round(float(x), 8) for x in sol.valence.eigenvalues]}")
    print(f"conduction eigenvalues {[round(float(x), 8) for x in sol.conduction.eigenvalues]}")
    print(f"artifacts in  {config.out_dir}")
    return EXIT_OK


def _cmd_bands(args) -> int:
    config = RunConfig.from_json(
        args.config,
        backend=args.backend,
        repeats=args.repeats,
        jobs=args.jobs,
        seed=args.seed,
        out_dir=args.out,
    )
    if args.no_plot:
        config = config.with_overrides(plot=False)
    result = run_pipeline(config)
    print(f"reference shift: {result.band_structure.reference_shift_ev:.6f} eV")
    for pt in result.band_structure.points:
        print(
            f"{pt.kpoint.label:10s} valence {tuple(round(e, 4) for e in pt.valence)}"
            f"  conduction {tuple(round(e, 4) for e in pt.conduction)}"
        )
    print(f"artifacts in {config.out_dir}")
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    backend = SamplingBackend(noise=NoiseModel.from_json(args.noise))
    seed = args.seed if args.seed is not None else 0
    cal = measure_calibration(
        backend, args.qubits, shots=args.shots, cycle=args.cycle,
        seed=derive_seed(seed, 0),
    )
    payload = {
        "cycle": cal.cycle,
        "shots_per_basis_state": cal.shots_per_basis_state,
        "matrix": cal.m.tolist(),
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        out_file = Path(args.out) / "calibration.json"
        out_file.write_text(text + "\n")
        print(f"wrote {out_file}")
    else:
        print(text)
    return EXIT_OK


def _cmd_zne(args) -> int:
    lambdas = tuple(int(x) for x in args.lambdas.split(","))
    config = _single_point_config(
        args,
        vqe_shots_per_group=args.shots,
        zne_lambdas=lambdas,
        zne_study=True,
        repeats=2,
    )
    config = config.with_overrides(backend="noisy", noise_model=args.noise)
    result = run_pipeline(config)
    study = result.record["zne_study"]
    exact = study["exact_hartree"]
    for point in study["points"]:
        print(
            f"lambda {point['lambda']:.0f}: {point['energy_hartree']:.8f} Ha"
            f"  (above exact {(point['energy_hartree'] - exact) * HARTREE_TO_EV * 1000:.2f} meV)"
        )
    print(
        f"extrapolated: {study['extrapolated_hartree']:.8f} Ha"
        f"  (above exact {(study['extrapolated_hartree'] - exact) * HARTREE_TO_EV * 1000:.2f} meV)"
    )
    print(f"artifacts in {config.out_dir}")
    return EXIT_OK


def _cmd_assets(args) -> int:
    import importlib.resources as resources

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data_root = resources.files("qpband") / "data"
    for item in sorted(data_root.iterdir()):
        if item.name.endswith(".json"):
            (out / item.name).write_text(item.read_text())
            print(f"wrote {out / item.name}")
    return EXIT_OK


_HANDLERS = {
    "taper": _cmd_taper,
    "vqe": _cmd_vqe,
    "qse": _cmd_qse,
    "bands": _cmd_bands,
    "calibrate": _cmd_calibrate,
    "zne-study": _cmd_zne,
    "assets": _cmd_assets,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = _HANDLERS[args.command]
    try:
        return handler(args)
    except (ConfigError, IntegralError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SubspaceError, MitigationError, ArithmeticError, RuntimeError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
