"""Generalized entropy power inequalities: linear transforms, dependent pairs,
covariance constraints, Costa concavity, subset sums and gas mixtures."""
