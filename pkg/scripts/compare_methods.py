"""Side-by-side comparison of the four dispatch formulations on one case.

    python scripts/compare_methods.py --case case118 --N 500 --repetitions 4 --holdout 10000

Prints one row per method with mean cost, complexities, certificates, empirical
risks, row counts and wall-clock, and optionally writes the full JSON report.
"""
import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from sced_compress.pipeline import METHODS, RunConfig, run, write_report  # noqa: E402


def fmt(x, spec=".4f"):
    return "-" if x is None else format(x, spec)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--case", default="case118")
    ap.add_argument("--N", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repetitions", type=int, default=4)
    ap.add_argument("--holdout", type=int, default=10_000)
    ap.add_argument("--beta", type=float, default=1e-3)
    ap.add_argument("--source", default="gaussian", choices=("gaussian", "uniform"))
    ap.add_argument("--out", help="write the JSON report here")
    a = ap.parse_args()

    cfg = RunConfig(case=a.case, N=a.N, seed=a.seed, repetitions=a.repetitions,
                    holdout=a.holdout, beta=a.beta, source=a.source, method=METHODS)
    rep = run(cfg, write=False)
    if a.out:
        write_report(rep, a.out)

    print(f"{rep['case']['name']}: N={a.N}, beta={a.beta}, {a.repetitions} repetitions, "
          f"deterministic cost {rep['deterministic_cost']:.2f}")
    head = ("method", "cost", "s*", "k_c", "sol. cert", "comp. cert", "sol. risk",
            "comp. risk", "rows", "build s", "solve s")
    print(("{:<10}" + "{:>15}" * (len(head) - 1)).format(*head))
    tims = rep["timings"]["repetitions"]
    for m in METHODS:
        recs = [r["methods"][m] for r in rep["repetitions"]]
        agg = rep["aggregate"][m]

        def cert(kind):
            cs = [r[f"{kind}_certificate"] for r in recs if f"{kind}_certificate" in r]
            if not cs:
                return "-"
            return f"[{min(c['eps_lower'] for c in cs):.3f},{max(c['eps_upper'] for c in cs):.3f}]"

        build = sum(t[m].get("build", 0.0) for t in tims) / len(tims)
        solve = sum(t[m].get("solve", 0.0) for t in tims) / len(tims)
        row = (m, fmt(agg.get("mean_cost"), ".2f"), fmt(agg.get("mean_s_star"), ".2f"),
               fmt(agg.get("mean_k_c"), ".2f"), cert("solution"), cert("compression"),
               fmt(agg.get("mean_solution_risk")), fmt(agg.get("mean_compression_risk")),
               fmt(agg.get("mean_rows"), ".0f"), fmt(build, ".3f"), fmt(solve, ".3f"))
        print(("{:<10}" + "{:>15}" * (len(row) - 1)).format(*row))


if __name__ == "__main__":
    main()
