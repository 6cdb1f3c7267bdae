"""Command line: export active-space integrals per k-point."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .crystal import CrystalSpec
from .export import ExportError, export_integrals


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpband-export",
        description="Export per-k-point active-space integrals from the model crystal stack",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export", help="write one integral file")
    p.add_argument("--kpoint", required=True, help="k-point label on the band path")
    p.add_argument("--out", required=True, help="output JSON file")
    p.add_argument("--lattice-constant", type=float, default=5.43)

    p = sub.add_parser("export-all", help="write every k-point on the path")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--lattice-constant", type=float, default=5.43)

    sub.add_parser("list", help="print the band path")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec = CrystalSpec(
        lattice_constant_angstrom=getattr(args, "lattice_constant", 5.43)
    )
    try:
        if args.command == "list":
            distances = spec.path_distances()
            for label, frac in spec.kpath:
                print(f"{label:14s} frac={frac}  path_distance={distances[label]:.5f}")
            return 0
        if args.command == "export":
            export_integrals(spec, args.kpoint, args.out)
            print(f"wrote {args.out}")
            return 0
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for label, _ in spec.kpath:
            name = label.lower().replace("-", "_")
            path = out_dir / f"model_{name}.json"
            export_integrals(spec, label, path)
            print(f"wrote {path}")
        return 0
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ExportError as exc:
        print(f"export failed: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
