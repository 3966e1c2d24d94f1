"""Monte-Carlo coverage of the risk bounds for hull and box compression.

For each trial, draws N training and a large holdout set of regional factors,
compresses the training set and checks whether the holdout escape rate falls in
[eps_lower(k_c), eps_upper(k_c)].

    python scripts/bound_coverage.py --trials 500 --dim 3 --source uniform
"""
import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from sced_compress.compress import (box_hull, compression_complexity, convex_hull,  # noqa: E402
                                    estimate_compression_risk)
from sced_compress.risk import epsilon_bounds  # noqa: E402
from sced_compress.scenario import sample_gaussian_regions, sample_uniform_regions  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--N", type=int, default=500)
    ap.add_argument("--holdout", type=int, default=10_000)
    ap.add_argument("--dim", type=int, default=3)
    ap.add_argument("--beta", type=float, default=1e-3)
    ap.add_argument("--source", default="gaussian", choices=("gaussian", "uniform"))
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()

    sampler = sample_gaussian_regions if a.source == "gaussian" else sample_uniform_regions
    scale = np.linspace(0.05, 0.1, a.dim)
    inside = {"hull": 0, "box": 0}
    ks = {"hull": [], "box": []}
    for t in range(a.trials):
        z = sampler(scale, a.N + a.holdout, a.seed + t).data
        train, hold = z[:a.N], z[a.N:]
        for name, region in (("hull", convex_hull(train)), ("box", box_hull(train))):
            k = compression_complexity(train, name)
            lo, hi = epsilon_bounds(k, a.N, a.beta)
            inside[name] += lo <= estimate_compression_risk(region, hold) <= hi
            ks[name].append(k)
    for name in inside:
        print(f"{name:5s} mean k_c {np.mean(ks[name]):6.2f}  inside bounds {inside[name]}/{a.trials}")


if __name__ == "__main__":
    main()
