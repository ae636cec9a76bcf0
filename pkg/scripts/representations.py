"""Entropy through the four path-integral representations against direct quadrature."""

import argparse
import time

from epilab.distributions import GaussianND, GaussianSmoothed, Laplace1D, MixtureND, Uniform1D
from epilab.functionals import entropy
from epilab.paths import REPRESENTATIONS, entropy_via_path

LAWS = {
    "gaussian": GaussianND([0.0], [[2.0]]),
    "laplace": Laplace1D(0.0, 1.0),
    "mixture": MixtureND([0.5, 0.5], [GaussianND([-2.0], [[1.0]]), GaussianND([2.0], [[1.0]])]),
    "smoothed uniform": GaussianSmoothed(Uniform1D(-1.0, 1.0), 0.1, [[1.0]]),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--law", choices=sorted(LAWS), action="append")
    args = ap.parse_args()
    print(f"{'law':<17} {'representation':<17} {'entropy':>12} {'direct':>12} {'diff':>10} {'err est':>9} {'s':>6}")
    for name in args.law or LAWS:
        x = LAWS[name]
        direct = entropy(x).nats
        for rep in REPRESENTATIONS:
            t0 = time.perf_counter()
            est = entropy_via_path(x, rep)
            dt = time.perf_counter() - t0
            print(f"{name:<17} {rep:<17} {est.entropy_nats:>12.8f} {direct:>12.8f} "
                  f"{est.entropy_nats - direct:>10.2e} {est.error_estimate:>9.1e} {dt:>6.2f}")


if __name__ == "__main__":
    main()
