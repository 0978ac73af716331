"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 too many failed pixels.
"""
import argparse
import csv
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .cube import (
    REPORT_COLUMNS,
    CubeFormatError,
    PipelineConfig,
    extract_pixel,
    generate_phantom_cube,
    load_cube,
    run_pipeline,
    save_cube,
    sparsify_cube,
)
from .experiments import (
    PIXEL_STUDY_COLUMNS,
    SWEEP_COLUMNS,
    pixel_study,
    planted_trials,
    threshold_sweep,
)
from .linalg import ContractViolation
from .metrics import PSNR_CAP_DB, bandwise_quality
from .sensing import measurement_count

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SOLVER = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dims(text):
    try:
        dims = tuple(int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected XxYxZ, got {text!r}") from None
    if len(dims) != 3 or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"expected three positive sizes XxYxZ, got {text!r}")
    return dims


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _load(path):
    try:
        return load_cube(path)
    except (OSError, CubeFormatError, ContractViolation) as exc:
        raise DataError(f"cannot load {path}: {exc}") from None


def _write_csv(path_or_stream, header, rows):
    if hasattr(path_or_stream, "write"):
        w = csv.writer(path_or_stream, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return
    with open(path_or_stream, "w", newline="") as fh:
        _write_csv(fh, header, rows)


def cmd_gen_phantom(args):
    x, y, z = args.dims
    if args.kappa < 1 or args.kappa > z:
        raise UsageError(f"--kappa must lie in [1, {z}], got {args.kappa}")
    cube = generate_phantom_cube(x, y, z, args.kappa, args.seed, noise=args.noise)
    save_cube(cube, args.out, dtype=args.dtype)
    print(f"wrote {args.out} ({x}x{y}x{z}, kappa={args.kappa})", file=sys.stderr)
    return EXIT_OK


def cmd_sparsify(args):
    cube = _load(args.input)
    spf, mean_sr, kappa_map = sparsify_cube(cube, args.T)
    save_cube(spf, args.out, dtype=args.dtype)
    if args.kappa_map:
        rows = [[i, j, int(kappa_map[i, j])] for i in range(cube.x_dim) for j in range(cube.y_dim)]
        _write_csv(args.kappa_map, ["x", "y", "kappa"], rows)
    q = bandwise_quality(spf, cube)
    _write_csv(sys.stdout, ["T", "SR", "PSNR_spf_or", "SSI_spf_or"], [[args.T, mean_sr, q.psnr_db, q.ssi]])
    return EXIT_OK


def _pipeline_config(args):
    return PipelineConfig(
        threshold_T=args.T,
        compression_factor=args.compression,
        measurements=args.measurements,
        group_size=args.G,
        epsilon=args.epsilon,
        relative_epsilon=not args.absolute_epsilon,
        max_iterations=args.max_iterations,
        seed=args.seed,
        phi_mode="shared" if args.shared_phi else "per-pixel",
        kappa_mode="fixed" if args.kappa is not None else "sparsification",
        kappa=args.kappa,
        threads=args.threads,
    )


def _progress(quiet):
    if quiet:
        return None
    t0 = time.perf_counter()

    def report(done, total):
        if done == total or done % 256 == 0:
            rate = done / max(time.perf_counter() - t0, 1e-9)
            print(f"\r{done}/{total} pixels ({rate:.0f} px/s)", end="\n" if done == total else "",
                  file=sys.stderr, flush=True)
    return report


def cmd_pipeline(args):
    cube = _load(args.input)
    try:
        config = _pipeline_config(args)
        config.measurement_count(cube.z_dim)
    except ContractViolation as exc:
        raise UsageError(str(exc)) from None
    if cube.z_dim < 4:
        raise DataError(f"cube needs at least 4 bands, has {cube.z_dim}")
    i_spf, i_rec, report = run_pipeline(cube, config, progress=_progress(args.quiet))

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_cube(i_spf, out / "I_spf.cube", dtype=args.dtype)
    save_cube(i_rec, out / "I_rec.cube", dtype=args.dtype)
    doc = report.to_dict()
    doc["input"] = str(args.input)
    (out / "report.json").write_text(json.dumps(doc, indent=2, default=float))
    _write_csv(out / "report.csv", REPORT_COLUMNS, [report.row()])
    if args.diagnostics:
        fields = ["x", "y", "kappa", "iterations", "converged", "final_delta",
                  "residual_norm", "rel_error", "error"]
        _write_csv(args.diagnostics, fields, [[asdict(p)[k] for k in fields] for p in report.pixels])
    _write_csv(sys.stdout, REPORT_COLUMNS, [report.row()])

    total = report.perf.pixels_recovered + report.perf.pixels_failed
    if report.perf.pixels_failed > args.max_fail * total:
        print(f"{report.perf.pixels_failed}/{total} pixels failed (limit {args.max_fail:.2%})",
              file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_metrics(args):
    a, ref = _load(args.a), _load(args.ref)
    if a.shape != ref.shape:
        raise DataError(f"cube dimensions differ: {a.shape} vs {ref.shape}")
    q = bandwise_quality(a, ref, psnr_cap=args.psnr_cap)
    _write_csv(sys.stdout, ["PSNR", "SSI", "capped_bands"], [[q.psnr_db, q.ssi, q.capped_bands]])
    return EXIT_OK


def cmd_sweep(args):
    rows = []
    if args.T_list is not None:
        if not args.T_list:
            raise UsageError("--T-list is empty")
        if args.input is None:
            raise UsageError("--T-list needs --input")
        cube = _load(args.input)
        try:
            base = PipelineConfig(
                threshold_T=args.T_list[0], compression_factor=args.compression,
                group_size=args.G, kappa_mode="fixed" if args.kappa is not None else "sparsification",
                kappa=args.kappa, threads=args.threads,
            )
        except ContractViolation as exc:
            raise UsageError(str(exc)) from None
        cells = threshold_sweep(cube, args.T_list, base, trials=args.trials, seed=args.seed)
    else:
        if not args.kappa_list or not args.m_list:
            raise UsageError("give --T-list, or both --kappa-list and --m-list")
        n = args.n
        if args.input is not None:
            n = _load(args.input).z_dim
        if any(m < 1 or m > n for m in args.m_list) or any(k < 1 or k > n for k in args.kappa_list):
            raise UsageError(f"grid values must lie in [1, N={n}]")
        cells = [planted_trials(n, m, k, args.G, args.trials, args.seed)
                 for k in args.kappa_list for m in args.m_list]
    rows = [c.row() for c in cells]
    _write_csv(args.out if args.out else sys.stdout, SWEEP_COLUMNS, rows)
    return EXIT_OK


def cmd_recover_pixel(args):
    cube = _load(args.input)
    try:
        f = extract_pixel(cube, *args.pixel)
    except IndexError as exc:
        raise UsageError(str(exc)) from None
    m = args.measurements or measurement_count(cube.z_dim, args.compression)
    study = pixel_study(f, m, kappa=args.kappa, T=args.T, group_size=args.G, seed=args.seed)
    _write_csv(sys.stdout, PIXEL_STUDY_COLUMNS, [study.cells()])
    return EXIT_OK


def _pixel(text):
    try:
        x, y = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected X,Y, got {text!r}") from None
    return x, y


def _add_recovery_flags(p):
    p.add_argument("--compression", type=float, default=2.5, help="N/M compression factor")
    p.add_argument("--G", type=int, default=2, help="atoms selected per iteration")
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = _Parser(prog="gompcs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-phantom", help="write a synthetic cube with sparse pixels")
    p.add_argument("--dims", type=_dims, required=True, help="XxYxZ")
    p.add_argument("--kappa", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0, help="additive Gaussian noise std")
    p.add_argument("--dtype", choices=["float32", "float64"], default="float32")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_phantom)

    p = sub.add_parser("sparsify", help="threshold a cube in the transform domain")
    p.add_argument("--input", required=True)
    p.add_argument("--T", type=float, required=True, help="threshold, percent of peak modulus")
    p.add_argument("--out", required=True)
    p.add_argument("--kappa-map", help="write per-pixel kappa CSV here")
    p.add_argument("--dtype", choices=["float32", "float64"], default="float32")
    p.set_defaults(func=cmd_sparsify)

    p = sub.add_parser("pipeline", help="sparsify, compress and recover a cube")
    p.add_argument("--input", required=True)
    p.add_argument("--T", type=float, required=True)
    _add_recovery_flags(p)
    p.add_argument("--measurements", type=int, help="explicit M (overrides --compression)")
    p.add_argument("--kappa", type=int, help="fixed kappa for all pixels (default: from sparsification)")
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--absolute-epsilon", action="store_true", help="epsilon is absolute, not relative to |y|")
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--shared-phi", action="store_true", help="one measurement matrix for all pixels")
    p.add_argument("--threads", type=int)
    p.add_argument("--max-fail", type=float, default=0.01, help="tolerated failed-pixel fraction")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--diagnostics", help="write per-pixel diagnostics CSV here")
    p.add_argument("--dtype", choices=["float32", "float64"], default="float32")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("metrics", help="band-averaged PSNR/SSI between two cubes")
    p.add_argument("--a", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--psnr-cap", type=float, default=PSNR_CAP_DB)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("sweep", help="seeded recovery trials over T or (kappa, M)")
    p.add_argument("--input")
    p.add_argument("--T-list", type=_floats)
    p.add_argument("--kappa-list", type=_ints)
    p.add_argument("--m-list", type=_ints)
    p.add_argument("--n", type=int, default=224)
    p.add_argument("--kappa", type=int)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--threads", type=int)
    p.add_argument("--out")
    _add_recovery_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("recover-pixel", help="single-pixel study with and without sparsification")
    p.add_argument("--input", required=True)
    p.add_argument("--pixel", type=_pixel, required=True, help="X,Y")
    p.add_argument("--kappa", type=int, default=15)
    p.add_argument("--T", type=float, help="threshold (default: calibrated to --kappa)")
    p.add_argument("--measurements", type=int)
    _add_recovery_flags(p)
    p.set_defaults(func=cmd_recover_pixel)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ContractViolation) as exc:
        print(f"gompcs {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"gompcs {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
