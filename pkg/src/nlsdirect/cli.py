"""Command-line entry point.

Subcommands: pipeline, convergence, synth, kernels, spectral, scattering.
Exit codes: 0 success, 2 configuration error, 3 numerical-stage failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, build_model, load_config, preset_potential
from .pipeline import (REFERENCES, StageError, make_grid, run_convergence, run_pipeline,
                       spectral_from_files, write_config, write_table)

EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 2, 3

log = logging.getLogger("nlsdirect")


def _lambda_grid(text: str) -> dict:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected MIN:MAX:COUNT")
    try:
        return {"min": float(parts[0]), "max": float(parts[1]), "count": int(parts[2])}
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad lambda grid {text!r}: {exc}") from exc


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--preset", choices=("zero", "test1", "test2"),
                   help="built-in potential (overrides the config potential)")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--n", type=int, dest="nx", help="grid intervals on [0, L] (nx)")
    p.add_argument("--L", type=float, dest="L", help="truncation half-width")
    p.add_argument("--pencil-N", type=int, dest="pencil_N", help="Hankel size N")
    p.add_argument("--pencil-stride", type=int, dest="pencil_stride",
                   help="Marchenko samples skipped between pencil samples")
    p.add_argument("--lambda-grid", type=_lambda_grid, dest="lambda_grid",
                   metavar="MIN:MAX:COUNT", help="real spectral grid")
    p.add_argument("--emit-kernels", action="store_true", help="also dump the kernel triangles")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="nlsdirect",
        description="Initial scattering data of the focusing NLS for compactly supported real potentials.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in (
        ("pipeline", "kernels, Marchenko kernels, spectral data and scattering entries"),
        ("kernels", "auxiliary kernels and Marchenko kernels only"),
        ("scattering", "scattering coefficients over the lambda grid"),
    ):
        _common(sub.add_parser(name, help=text))
    sp = sub.add_parser("spectral", help="bound states and norming constants")
    _common(sp)
    sp.add_argument("--omega-left", type=Path, help="left kernel CSV (skips the kernel stages)")
    sp.add_argument("--omega-right", type=Path, help="right kernel CSV")
    cp = sub.add_parser("convergence", help="kernel error table over several n")
    _common(cp)
    cp.add_argument("--n-list", type=lambda s: [int(v) for v in s.split(",")], dest="n_list",
                    help="comma-separated nx values")
    cp.add_argument("--reference", choices=REFERENCES, help="reference kernel")
    cp.add_argument("--reference-n", type=int, default=4800,
                    help="nx of the high-resolution run for the fitted reference")
    yp = sub.add_parser("synth", help="write a tabulated potential")
    _common(yp)
    yp.add_argument("--file", type=Path, help="output file (default OUT/potential.txt)")
    return ap


def _overrides(args) -> dict:
    ov: dict = {}
    if args.preset:
        ov["potential"] = preset_potential(args.preset)
    if args.nx is not None:
        ov["nx"] = args.nx
    if args.L is not None:
        ov["L"] = args.L
    pc = {}
    if args.pencil_N is not None:
        pc["N"] = args.pencil_N
    if args.pencil_stride is not None:
        pc["stride"] = args.pencil_stride
    if pc:
        ov["pencil"] = pc
    if args.lambda_grid is not None:
        ov["lambda_grid"] = args.lambda_grid
    if args.emit_kernels:
        ov["emit"] = {"kernels": True}
    if args.out is not None:
        ov["out"] = str(args.out)
    if getattr(args, "n_list", None):
        ov.setdefault("convergence", {})["n_list"] = args.n_list
    if getattr(args, "reference", None):
        ov.setdefault("convergence", {})["reference"] = args.reference
    return ov


def _run(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    out = Path(cfg["out"])
    cmd = args.command
    if cmd == "pipeline":
        res = run_pipeline(cfg, out)
        sd = res.spectral
        print(f"bound states: {len(sd.exponents)}; outputs in {out}")
    elif cmd == "kernels":
        run_pipeline(cfg, out, stages=("kernels",))
        print(f"kernels written to {out}")
    elif cmd == "scattering":
        res = run_pipeline(cfg, out, stages=("scattering",))
        print(f"{len(res.scattering)} scattering samples written to {out}")
    elif cmd == "spectral":
        if args.omega_left is not None:
            out.mkdir(parents=True, exist_ok=True)
            write_config(cfg, out)
            sd = spectral_from_files(args.omega_left, args.omega_right, cfg["pencil"], out)
        else:
            sd = run_pipeline(cfg, out, stages=("spectral",)).spectral
        for s, m in zip(sd.exponents, sd.multiplicities):
            print(f"bound state i*({s.real:.8g}{s.imag:+.3g}j)  multiplicity {m}")
    elif cmd == "convergence":
        conv = cfg["convergence"]
        rows = run_convergence(cfg, conv["n_list"], conv["reference"], out, args.reference_n)
        print("n,error,ratio,ratio_per_doubling")
        for r in rows:
            ratio = "" if r.ratio is None else f"{r.ratio:.4f}"
            rpd = "" if r.ratio_per_doubling is None else f"{r.ratio_per_doubling:.4f}"
            print(f"{r.n},{r.error:.6e},{ratio},{rpd}")
    elif cmd == "synth":
        build_model(cfg["potential"])
        grid = make_grid(cfg)
        path = args.file if args.file is not None else out / "potential.txt"
        path.parent.mkdir(parents=True, exist_ok=True)
        write_table(grid, path)
        print(f"potential written to {path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
