"""Run every study config in ``configs/`` and write CSV tables to ``results/``.

Usage::

    python3 scripts/run_studies.py [--only tanh1d_spline burgers_gpc] [--outdir results]
"""
import argparse
import json
import sys
import time
from pathlib import Path

from splinepdf.study import StudyConfig, emit_csv, fits_to_json, run_study

ROOT = Path(__file__).resolve().parent.parent


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--configs", type=Path, default=ROOT / "configs")
    ap.add_argument("--outdir", type=Path, default=ROOT / "results")
    ap.add_argument("--only", nargs="*", default=None, help="config stems to run")
    args = ap.parse_args(argv)

    args.outdir.mkdir(parents=True, exist_ok=True)
    summary = {}
    for path in sorted(args.configs.glob("*.json")):
        if args.only and path.stem not in args.only:
            continue
        cfg = StudyConfig.from_json(path)
        t0 = time.perf_counter()
        report = run_study(cfg)
        emit_csv(report, args.outdir / f"{path.stem}.csv")
        summary[path.stem] = fits_to_json(report)
        fits = ", ".join(f"{m}: N^{f.exponent:.2f}" for m, f in report.fits.items())
        print(f"{path.stem:24s} {time.perf_counter() - t0:6.1f}s  {fits}")
    with open(args.outdir / "fits.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
