"""Command-line interface.

Exit status: 0 when every criterion passes, 1 when a criterion fails, 2 on
configuration or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..corpus import CorpusError, generate, write_corpus
from ..grid import GridError
from ..mgf import read_grid
from ..norms import MorreyParams, NormError, bmo_norm, bmoL_norm, cis_norm, lp_norm, morrey_norm, vmo_modulus, weak_lp_norm
from ..semigroup import OperatorError, SemigroupOperator
from .config import ConfigError, from_dict, load_config
from .experiments import run
from .report import _clean, merge_reports

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracmorrey", description="Fractional-integral and Morrey/BMO verification harness.")
    sub = ap.add_subparsers(dest="command", required=True)

    def io(p, out_required=False):
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", required=out_required, help="output path")
        p.add_argument("--csv", help="directory for CSV series")

    g = sub.add_parser("gen-corpus", help="write corpus MGF1 files and a JSON manifest per grid level")
    g.add_argument("--config", required=True)
    g.add_argument("--out", required=True, help="output directory")

    io(sub.add_parser("kernel-suite", help="kernel bound fits across backends"))

    v = sub.add_parser("verify", help="run a refinement experiment")
    v.add_argument("experiment", choices=["thm1", "thm2", "cor3", "adams", "examples"])
    io(v)

    nm = sub.add_parser("norms", help="norms of an MGF1 grid file")
    nm.add_argument("file")
    nm.add_argument("--p", type=float, default=2.0)
    nm.add_argument("--lambda", dest="lam", type=float, default=0.0)
    nm.add_argument("--out")

    m = sub.add_parser("report-merge", help="merge JSON reports")
    m.add_argument("reports", nargs="+")
    m.add_argument("--out", required=True)
    return ap


def _emit_report(report, args) -> int:
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if getattr(args, "csv", None):
        report.write_csv(args.csv)
    status = "PASS" if report.passed else "FAIL"
    print(f"{report.experiment}: {status}", file=sys.stderr)
    for note in report.notes:
        print(f"  note: {note}", file=sys.stderr)
    return EXIT_PASS if report.passed else EXIT_FAIL


def _gen_corpus(args) -> int:
    try:
        raw = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    cfg = from_dict({**raw, "experiment": "kernel-suite"})
    out = Path(args.out)
    for spec in cfg.grids():
        cs = cfg.corpus_spec(spec)
        path = write_corpus(generate(cs), cs, out / f"N{spec.N}")
        print(path)
    return EXIT_PASS


def _norms(args) -> int:
    f = read_grid(args.file)
    params = MorreyParams(args.p, args.lam, f.spec.n)
    radii = f.spec.dyadic_radii()
    heat = SemigroupOperator("heat", f.spec)
    result = {
        "file": str(args.file),
        "grid": {"n": f.spec.n, "N": f.spec.N, "L": f.spec.L, "support_tag": f.support_tag},
        "lp": lp_norm(f, args.p),
        "weak_lp": weak_lp_norm(f, args.p),
        "morrey": morrey_norm(f, params, radii).to_dict(),
        "bmo": bmo_norm(f, "mean-abs", radii).to_dict(),
        "bmo_rms": bmo_norm(f, "rms", radii).to_dict(),
        "vmo_modulus": [[r, vmo_modulus(f, r)] for r in radii],
        "bmoL_heat": bmoL_norm(f, heat, radii).to_dict(),
    }
    if 1 <= args.p <= f.spec.n:
        result["cis"] = cis_norm(f, args.p, radii)
    text = json.dumps(_clean(result), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_PASS


def _merge(args) -> int:
    reports = []
    for p in args.reports:
        try:
            reports.append(json.loads(Path(p).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read report {p}: {exc}") from exc
    merged = merge_reports(reports)
    Path(args.out).write_text(json.dumps(merged, indent=2, sort_keys=True) + "\n")
    return EXIT_PASS if merged["pass"] else EXIT_FAIL


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "gen-corpus":
            return _gen_corpus(args)
        if args.command == "kernel-suite":
            return _emit_report(run(load_config(args.config, "kernel-suite")), args)
        if args.command == "verify":
            return _emit_report(run(load_config(args.config, args.experiment)), args)
        if args.command == "norms":
            return _norms(args)
        return _merge(args)
    except (ConfigError, GridError, CorpusError, NormError, OperatorError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
