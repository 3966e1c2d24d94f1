"""Risk bounds versus complexity for several sample sizes, as one long CSV.

    python scripts/bounds_curves.py --N 200,500,1000 --k-max 60 --out bounds.csv
"""
import argparse
import csv
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from sced_compress.pipeline import bounds_table  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", default="200,500,1000")
    ap.add_argument("--beta", type=float, default=1e-3)
    ap.add_argument("--k-max", type=int, default=60)
    ap.add_argument("--out", default="bounds.csv")
    a = ap.parse_args()

    with open(a.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "k", "eps_lower", "eps_upper", "classical"])
        for N in (int(s) for s in a.N.split(",")):
            for r in bounds_table(N, a.beta, min(a.k_max, N)):
                w.writerow([N, r["k"], r["eps_lower"], r["eps_upper"], r["classical"]])
    print(f"wrote {a.out}")


if __name__ == "__main__":
    main()
