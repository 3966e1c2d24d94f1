"""Regenerate src/sced_compress/data/case118.txt from the stock IEEE 118-bus data.

Needs the PYPOWER distribution of case118 (``pip install pypower``, or a path to
an unpacked copy via --pypower). The derivation is deterministic:

* reactances from the branch table (taps ignored, DC model)
* generator pmin/pmax from the gen table; linear cost = c1 + c2 * pmax (the
  quadratic's marginal cost at half output) plus 0.01 $/MWh * position so that
  the 35 identical synchronous units do not tie
* ramp limits +-30% of pmax
* loads = bus Pd
* 11 wind farms in 3 regions; forecast = 0.25 * capacity
* line ratings: 1.3 x |flow| of the uncongested economic dispatch (floor 60 MW,
  rounded up to 5 MW); the three most loaded lines are derated to 0.85 x flow
"""
import argparse
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from sced_compress.grid import compute_ptdf, make_case, write_case  # noqa: E402
from sced_compress.sced import build_deterministic, solve_dispatch  # noqa: E402

WIND = [  # bus, capacity MW, region
    (3, 100, 1), (12, 120, 1), (15, 150, 1), (19, 80, 1), (27, 100, 1),
    (49, 200, 2), (54, 150, 2), (56, 120, 2), (59, 180, 2),
    (80, 250, 3), (92, 200, 3),
]
REGIONS = [(1, 0.02), (2, 0.04), (3, 0.06)]


def stock(pypower_path=None):
    if pypower_path:
        sys.path.insert(0, pypower_path)
    from pypower.case118 import case118
    return case118()


def derive(ppc):
    bus, branch, gen, gc = ppc["bus"], ppc["branch"], ppc["gen"], ppc["gencost"]
    buses = [(int(b[0]), int(b[1] == 3)) for b in bus]
    lines = [(int(r[0]), int(r[1]), float(r[3]), 9900.0) for r in branch]
    pmax = gen[:, 8]
    cost = gc[:, 5] + gc[:, 4] * pmax + 0.01 * np.arange(len(gen))
    gens = [(int(g[0]), float(g[9]), float(g[8]), -0.3 * float(g[8]), 0.3 * float(g[8]),
             round(float(c), 4)) for g, c in zip(gen, cost)]
    loads = [(int(b[0]), float(b[2])) for b in bus if b[2] > 0]
    wind = [(b, 0.25 * cap, float(cap), r) for b, cap, r in WIND]
    case = make_case(buses, lines, gens, loads, wind, REGIONS, name="case118")

    ptdf = compute_ptdf(case)
    f0 = np.abs(solve_dispatch(build_deterministic(case, ptdf)).flows)
    caps = np.maximum(np.ceil(1.3 * f0 / 5.0) * 5.0, 60.0)
    top = np.argsort(-f0)[:3]
    caps[top] = np.ceil(0.85 * f0[top])
    case = case.with_line_caps(caps)
    meta = {"source": "IEEE 118-bus (PYPOWER case118), derived by scripts/make_case118.py",
            "base_mva": "100"}
    object.__setattr__(case, "meta", meta)
    return case


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pypower", help="directory containing the pypower package")
    ap.add_argument("--out", default=str(ROOT / "src/sced_compress/data/case118.txt"))
    args = ap.parse_args()
    case = derive(stock(args.pypower))
    write_case(case, args.out)
    det = solve_dispatch(build_deterministic(case, compute_ptdf(case)))
    print(f"wrote {args.out}: cost {det.cost:.2f}, binding {det.binding}")


if __name__ == "__main__":
    main()
