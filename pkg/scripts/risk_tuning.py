"""Grow the sample size until the certified risk meets a target, with and without
compression, and write the risk/effort curve as CSV.

    python scripts/risk_tuning.py --case case118 --method hull --target 0.03 \
        --n-grid 100,200,300,500,800,1200 --plot-data tuning.csv
"""
import argparse
import csv
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from sced_compress.errors import TargetUnreachable  # noqa: E402
from sced_compress.pipeline import RunConfig, tune  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--case", default="case118")
    ap.add_argument("--method", default="hull", choices=("none", "hull", "box", "hull-dual"))
    ap.add_argument("--kind", choices=("solution", "compression"))
    ap.add_argument("--target", type=float, default=0.03)
    ap.add_argument("--n-grid", default="100,200,300,500,800,1200")
    ap.add_argument("--beta", type=float, default=1e-3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--plot-data", default="tuning.csv")
    a = ap.parse_args()

    grid = [int(s) for s in a.n_grid.split(",")]
    cfg = RunConfig(case=a.case, method=a.method, beta=a.beta, seed=a.seed)
    try:
        reps = tune(cfg, grid, a.target, a.kind, a.plot_data)
        print(f"target {a.target} met at N = {reps[-1]['config']['N']}")
    except TargetUnreachable as e:
        print(f"not met: {e}")
    with open(a.plot_data, newline="") as fh:
        rows = list(csv.DictReader(fh))
    print(f"{'N':>6} {'k':>4} {'eps_upper':>10} {'cum rows full':>14} {'cum rows ' + a.method:>16}")
    for r in rows:
        print(f"{r['N']:>6} {r['k']:>4} {float(r['eps_upper']):>10.4f} "
              f"{int(r['cumulative_rows_full']):>14d} {float(r['cumulative_rows_method']):>16.0f}")


if __name__ == "__main__":
    main()
