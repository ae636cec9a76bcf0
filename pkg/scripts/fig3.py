"""Small-SNR mutual information curves for Gaussian and Laplacian noise.

Writes the CSV and prints the fitted slopes next to half the noise Fisher
information they should match.
"""

import argparse

from epilab.cli import fig3_data
from epilab.distributions import GaussianND, Laplace1D
from epilab.functionals import fisher_info


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/fig3.csv")
    args = ap.parse_args()
    rows = fig3_data(args.out)
    noise = {"gaussian": GaussianND([0.0], [[1.0]]), "laplacian": Laplace1D(0.0, 2**-0.5)}
    print(f"wrote {len(rows)} rows to {args.out}")
    print(f"{'channel':<10} {'slope':>10} {'J(Z)/2':>8}")
    for name, z in noise.items():
        slope = next(r["fitted_slope"] for r in rows if r["channel"] == name)
        print(f"{name:<10} {slope:>10.6f} {fisher_info(z).scalar / 2:>8.4f}")
    print(f"\n{'t':>6} {'I gaussian':>12} {'I laplacian':>12}")
    by_t = {}
    for r in rows:
        by_t.setdefault(r["t"], {})[r["channel"]] = r["mutual_info_nats"]
    for t, v in list(by_t.items())[::5]:
        print(f"{t:>6.2f} {v['gaussian']:>12.6f} {v['laplacian']:>12.6f}")


if __name__ == "__main__":
    main()
