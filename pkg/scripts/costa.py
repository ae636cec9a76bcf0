"""Entropy power along the Gaussian perturbation path X + sqrt(t) Z.

For each input law prints N(X + sqrt(t) Z) on the grid, the interior second
differences (concavity needs them <= 0) and whether the chord slope
(N(t) - N(0)) / t is nonincreasing.
"""

import argparse

from epilab.distributions import GaussianND, GaussianSmoothed, Laplace1D, MixtureND, Uniform1D
from epilab.extensions.costa import COSTA_GRID, costa_concavity

LAWS = {
    "gaussian": GaussianND([0.0], [[1.0]]),
    "laplace": Laplace1D(0.0, 2**-0.5),
    "mixture": MixtureND([0.5, 0.5], [GaussianND([-2.0], [[1.0]]), GaussianND([2.0], [[1.0]])]),
    "smoothed uniform": GaussianSmoothed(Uniform1D(-1.0, 1.0), 0.05, [[1.0]]),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", default=",".join(str(t) for t in COSTA_GRID))
    args = ap.parse_args()
    grid = [float(v) for v in args.grid.split(",")]
    print("t grid:", grid)
    for name, x in LAWS.items():
        res = costa_concavity(x, None, grid)
        print(f"\n{name}: verdict {res.report.verdict}, slopes nonincreasing {res.slopes_nonincreasing}, "
              f"Shannon slack {res.shannon_slack:.4g}")
        print("  N:      " + " ".join(f"{v:9.5f}" for v in res.N_values))
        print("  2nd d:  " + " ".join(f"{v:9.2e}" for v in res.second_differences))


if __name__ == "__main__":
    main()
