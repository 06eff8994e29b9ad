"""Measured versus predicted log coefficient across sphere radii.

For each radius, builds the exact spectrum of the m = 5 cone over a circle times
S^3(rho), fits its heat trace and prints the fitted t^(-1/2) log t coefficient
next to the curvature prediction. Also runs the m = 4 null model.

    python scripts/scan_rho.py --rho 0.8 1.0 1.25 1.5 --json scan.json
"""
import argparse
import json
import time

from wedgeheat.chart_geometry import RoundSphere
from wedgeheat.spectral_sim import ExtractProtocol, extract_c
from wedgeheat.wedge_geometry import WedgeModel


def scan(radii, protocol, even=True):
    rows = []
    models = [(5, rho) for rho in radii] + ([(4, 1.3)] if even else [])
    for m, rho in models:
        start = time.perf_counter()
        res = extract_c(WedgeModel(m, RoundSphere(m - 2, rho)), protocol)
        rows.append({"m": m, "rho": rho, "c_measured": res.c_measured,
                     "c_predicted": res.c_predicted, "rel_deviation": res.rel_deviation,
                     "leading_rel": abs(res.leading_fitted / res.leading_predicted - 1),
                     "condition": res.fit.condition, "lambda_max": res.lambda_max,
                     "rows": res.rows, "seconds": time.perf_counter() - start})
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rho", type=float, nargs="+", default=[0.8, 1.0, 1.25, 1.5])
    ap.add_argument("--t-min", type=float, default=4e-4)
    ap.add_argument("--t-max", type=float, default=1e-2)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--no-even", action="store_true", help="skip the m = 4 null model")
    ap.add_argument("--json", help="also write the rows here")
    args = ap.parse_args()

    protocol = ExtractProtocol(t_min=args.t_min, t_max=args.t_max, threads=args.threads)
    rows = scan(args.rho, protocol, even=not args.no_even)
    print(f"{'m':>2} {'rho':>5} {'c measured':>13} {'c predicted':>13} {'rel dev':>9} "
          f"{'lead dev':>9} {'rows':>9} {'s':>5}")
    for r in rows:
        rel = "-" if r["rel_deviation"] is None else f"{r['rel_deviation']:.2e}"
        print(f"{r['m']:>2} {r['rho']:>5.2f} {r['c_measured']:>13.6e} {r['c_predicted']:>13.6e} "
              f"{rel:>9} {r['leading_rel']:>9.1e} {r['rows']:>9} {r['seconds']:>5.1f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
