"""Linear-transform EPI over random orthonormal-row matrices.

Prints, per matrix shape and form, the smallest slack seen and the verdict
counts.  Marginals are drawn from the non-Gaussian families.
"""

import argparse
import collections
import math

import numpy as np

from epilab.distributions import GaussianND, GaussianSmoothed, Laplace1D, MixtureND, Uniform1D
from epilab.extensions.zamir_feder import ZF_EPI_FORMS, LinearMixSpec, check_zf_epi, random_orthonormal_rows


def random_marginal(rng):
    kind = rng.integers(3)
    var = rng.uniform(0.3, 3.0)
    if kind == 0:
        return Laplace1D(rng.uniform(-1, 1), math.sqrt(var / 2))
    if kind == 1:
        sep = rng.uniform(0.5, 2.5)
        w = rng.uniform(0.2, 0.8)
        return MixtureND([w, 1 - w], [GaussianND([-sep], [[rng.uniform(0.4, 1.5)]]),
                                      GaussianND([sep], [[rng.uniform(0.4, 1.5)]])])
    width = rng.uniform(0.5, 3.0)
    return GaussianSmoothed(Uniform1D(-width / 2, width / 2), rng.uniform(0.05, 0.5), [[1.0]])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=8, help="matrices per shape")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    worst = collections.defaultdict(lambda: math.inf)
    verdicts = collections.Counter()
    for r, m in [(1, 2), (1, 3), (2, 2), (2, 3)]:
        for _ in range(args.count):
            spec = LinearMixSpec(random_orthonormal_rows(rng, r, m), [random_marginal(rng) for _ in range(m)])
            for form in ZF_EPI_FORMS:
                rep = check_zf_epi(spec, form)
                worst[(r, m, form)] = min(worst[(r, m, form)], rep.slack)
                verdicts[rep.verdict] += 1
    print(f"{'shape':<6} {'form':<10} {'min slack':>11}")
    for (r, m, form), s in sorted(worst.items()):
        print(f"{r}x{m:<4} {form:<10} {s:>11.3e}")
    print("verdicts:", dict(verdicts))


if __name__ == "__main__":
    main()
