"""Command line surface: analyze, batch, verify-lattice, distribution.

Configuration precedence is flags, then the job file (curve rows only),
then GALIMAGE_-prefixed environment variables, then built-in defaults.
Exit codes: 0 success, 2 input error, 3 lattice error, 4 resource cap.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from .curve import CurveInputError, new_curve
from .gspfour import (
    GspElement,
    LatticeFormatError,
    LatticeVerificationError,
    ResourceError,
    default_lattice_path,
    generate_subgroup,
    load_lattice,
    local_distribution,
    pair_sort_key,
    verify_lattice,
)
from .inference import InferenceConfig, InferenceError, pair_string, run_imager
from .jacobian import FrobeniusCache

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_LATTICE = 3
EXIT_RESOURCE = 4

ENV_PREFIX = "GALIMAGE_"


def _env(name: str) -> str | None:
    return os.environ.get(ENV_PREFIX + name)


def _resolve(flag_value, env_name: str, fallback, convert=str):
    if flag_value is not None:
        return flag_value
    raw = _env(env_name)
    if raw is not None:
        return convert(raw)
    return fallback


def _parse_coeffs(text: str) -> list[Fraction]:
    body = text.strip()
    if body.startswith("[") and body.endswith("]"):
        body = body[1:-1]
    if not body.strip():
        return []
    return [Fraction(tok.strip()) for tok in body.split(",")]


def _curve_from_args(args):
    if args.f is None:
        raise CurveInputError("--f is required")
    f = _parse_coeffs(args.f)
    h = _parse_coeffs(args.h) if args.h else []
    conductor = int(args.conductor) if args.conductor is not None else None
    return new_curve(f, h, conductor=conductor, label=args.label)


def _config_from_args(args) -> InferenceConfig:
    no_filters = _resolve(
        getattr(args, "no_global_filters", None),
        "NO_GLOBAL_FILTERS",
        False,
        lambda s: s not in ("", "0", "false"),
    )
    return InferenceConfig(
        prime_floor=_resolve(args.prime_min, "PRIME_MIN", 10000, int),
        prime_ceiling=_resolve(args.prime_max, "PRIME_MAX", 100000, int),
        step=_resolve(args.step, "STEP", 10000, int),
        nu=_resolve(args.nu, "NU", 30.0, float),
        monte_carlo_k=_resolve(None, "MONTE_CARLO_K", 64, int),
        height_bound=_resolve(args.height_bound, "HEIGHT_BOUND", 40.0, float),
        seed=_resolve(args.seed, "SEED", 0, int),
        threads=_resolve(args.threads, "THREADS", 1, int),
        apply_global_filters=not no_filters,
    )


def _load_lattice_or_none(path_value):
    path = _resolve(path_value, "LATTICE", None)
    if path is None:
        packaged = default_lattice_path()
        if not packaged.exists():
            print("lattice error: no lattice file given (--lattice)", file=sys.stderr)
            return None
        path = packaged
    try:
        return load_lattice(path)
    except (FileNotFoundError, IsADirectoryError, LatticeFormatError) as e:
        print(f"lattice error: {e}", file=sys.stderr)
        return None


def _cache_from_args(args) -> FrobeniusCache:
    cache_dir = _resolve(args.cache_dir, "CACHE_DIR", None)
    return FrobeniusCache(cache_dir)


def cmd_analyze(args) -> int:
    try:
        curve = _curve_from_args(args)
        config = _config_from_args(args)
    except (CurveInputError, InferenceError, ValueError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    lattice = _load_lattice_or_none(args.lattice)
    if lattice is None:
        return EXIT_LATTICE
    try:
        report = run_imager(curve, config, lattice, cache=_cache_from_args(args))
    except ResourceError as e:
        print(f"resource error: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except InferenceError as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _read_job(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        needed = {"label", "f", "h", "conductor"}
        if not needed <= set(reader.fieldnames):
            raise CurveInputError(f"job file needs columns {sorted(needed)}")
        rows = list(reader)
    labels = [r["label"] for r in rows]
    if len(labels) != len(set(labels)):
        raise CurveInputError("duplicate labels in job file")
    return rows


_BATCH_COLUMNS = [
    "label",
    "final_possibilities",
    "candidates",
    "eta",
    "error_bound",
    "rational_point",
    "simple_quadratic_point",
    "quadratic_d",
    "low_confidence",
    "error",
]


def _batch_one(row, config, lattice, cache, outdir):
    label = row["label"]
    try:
        curve = new_curve(
            _parse_coeffs(row["f"]),
            _parse_coeffs(row["h"]) if row["h"].strip() else [],
            conductor=int(row["conductor"]) if row["conductor"].strip() else None,
            label=label,
        )
        report = run_imager(curve, config, lattice, cache=cache)
    except Exception as e:  # noqa: BLE001  - batch rows fail independently
        return {"label": label, "error": str(e)}
    (outdir / f"{label}.json").write_text(report.to_json())
    return {
        "label": label,
        "final_possibilities": "|".join(report.final_possibilities),
        "candidates": "|".join(report.candidates),
        "eta": repr(report.eta),
        "error_bound": repr(report.error_bound),
        "rational_point": json.dumps(report.rational_point),
        "simple_quadratic_point": json.dumps(report.simple_quadratic_point),
        "quadratic_d": json.dumps(report.quadratic_d),
        "low_confidence": json.dumps(report.low_confidence),
        "error": "",
    }


def cmd_batch(args) -> int:
    try:
        rows = _read_job(args.job_file)
        config = _config_from_args(args)
    except (CurveInputError, InferenceError, ValueError, OSError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    lattice = _load_lattice_or_none(args.lattice)
    if lattice is None:
        return EXIT_LATTICE
    outdir = Path(args.out) if args.out else Path("galimage_batch")
    outdir.mkdir(parents=True, exist_ok=True)
    cache_dir = _resolve(args.cache_dir, "CACHE_DIR", None)
    cache = FrobeniusCache(cache_dir if cache_dir else outdir / "cache")
    per_curve = dataclasses.replace(config, threads=1)
    workers = max(1, config.threads)
    if workers > 1 and len(rows) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_batch_one, row, per_curve, lattice, cache, outdir)
                for row in rows
            ]
            results = [f.result() for f in futures]
    else:
        results = [_batch_one(row, per_curve, lattice, cache, outdir) for row in rows]
    summary = outdir / "summary.csv"
    with summary.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_BATCH_COLUMNS, restval="")
        writer.writeheader()
        for res in results:
            writer.writerow(res)
    print(f"wrote {summary}")
    return EXIT_OK


def cmd_verify_lattice(args) -> int:
    lattice = _load_lattice_or_none(args.lattice_path)
    if lattice is None:
        return EXIT_LATTICE
    try:
        report = verify_lattice(lattice, effort=args.effort)
    except LatticeVerificationError as e:
        print(f"lattice verification failed: {e}", file=sys.stderr)
        return EXIT_LATTICE
    except ResourceError as e:
        print(f"resource error: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    print(
        f"{report['admissible']} admissible classes, "
        f"max bucket {report['max_bucket']}, "
        f"{report['distributions_checked']} distributions recomputed "
        f"(effort {report['effort']})"
    )
    if args.out:
        Path(args.out).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def cmd_distribution(args) -> int:
    if bool(args.dist_label) == bool(args.generators):
        print("input error: give exactly one of --label or --generators", file=sys.stderr)
        return EXIT_INPUT
    if args.dist_label:
        lattice = _load_lattice_or_none(args.lattice)
        if lattice is None:
            return EXIT_LATTICE
        rec = lattice.by_label.get(args.dist_label)
        if rec is None:
            print(f"input error: no class labelled {args.dist_label}", file=sys.stderr)
            return EXIT_INPUT
        dist, order, name = rec.distribution, rec.order, rec.label
    else:
        try:
            gens = [GspElement.from_code(int(tok)) for tok in args.generators.split(",")]
            sub = generate_subgroup(gens, order_cap=2_000_000)
            dist, order, name = local_distribution(sub), sub.order, "<generated>"
        except (ValueError, ResourceError) as e:
            code = EXIT_RESOURCE if isinstance(e, ResourceError) else EXIT_INPUT
            print(f"error: {e}", file=sys.stderr)
            return code
    print(f"{name}: order {order}, {len(dist.masses)} realized pairs")
    dump = {}
    for pair, mass in sorted(dist.masses.items(), key=lambda kv: pair_sort_key(kv[0])):
        print(f"  {pair_string(pair):<30} {str(mass):>18}  {float(mass):12.8%}")
        dump[pair_string(pair)] = str(mass)
    if args.out:
        Path(args.out).write_text(json.dumps(dump, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def _add_config_flags(sp) -> None:
    sp.add_argument("--lattice", help="path to the class lattice file")
    sp.add_argument("--prime-min", dest="prime_min", type=int)
    sp.add_argument("--prime-max", dest="prime_max", type=int)
    sp.add_argument("--step", type=int)
    sp.add_argument("--nu", type=float)
    sp.add_argument("--height-bound", dest="height_bound", type=float)
    sp.add_argument("--threads", type=int)
    sp.add_argument("--cache-dir", dest="cache_dir")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", help="write the report here instead of stdout")
    sp.add_argument(
        "--no-global-filters",
        dest="no_global_filters",
        action="store_const",
        const=True,
        help="stop after distribution matching",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="galimage",
        description="mod-5 Galois image classification for genus-2 Jacobians",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    an = sub.add_parser("analyze", help="classify one curve")
    an.add_argument("--f", help="coefficients of f, lowest degree first, e.g. [-4,20,5,-20,0,4]")
    an.add_argument("--h", help="coefficients of h, lowest degree first")
    an.add_argument("--conductor", type=int)
    an.add_argument("--label")
    _add_config_flags(an)
    an.set_defaults(func=cmd_analyze)

    ba = sub.add_parser("batch", help="classify every curve in a CSV job file")
    ba.add_argument("job_file", help="CSV with header label,f,h,conductor")
    _add_config_flags(ba)
    ba.set_defaults(func=cmd_batch)

    ve = sub.add_parser("verify-lattice", help="recheck a lattice file")
    ve.add_argument("lattice_path")
    ve.add_argument("--effort", choices=("basic", "full-small", "full"), default="full-small")
    ve.add_argument("--out", help="write the JSON verification report here")
    ve.set_defaults(func=cmd_verify_lattice)

    di = sub.add_parser("distribution", help="dump a class's local distribution")
    di.add_argument("--label", dest="dist_label", help="lattice label, e.g. 5.624.2")
    di.add_argument("--generators", help="comma-separated element codes")
    di.add_argument("--lattice", help="path to the class lattice file")
    di.add_argument("--out", help="write the JSON dump here")
    di.set_defaults(func=cmd_distribution)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
