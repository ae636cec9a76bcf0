"""Numerical laboratory for entropy-power, Fisher-information and mutual-information inequalities."""
