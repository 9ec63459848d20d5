"""Shared fixtures-by-function for the test modules."""

import numpy as np

from diracverify import ad
from diracverify.algebroid import levi_civita
from diracverify.smooth import Chart, OneForm, exterior_derivative


def su2_bivector(x):
    return ad.einsum("ijk,...k->...ij", levi_civita(), x)


def random_exact_twoform(chart: Chart, seed: int):
    """d(alpha) for a random trigonometric-polynomial one-form alpha."""
    rng = np.random.default_rng(seed)
    n = chart.dim
    A = rng.normal(size=(n, n))
    B = rng.normal(size=(n, n, n))
    c = rng.normal(size=(n, n))

    def alpha(x):
        lin = ad.einsum("ij,...j->...i", A, x)
        quad = ad.einsum("ijk,...j,...k->...i", B, x, x)
        trig = ad.sin(ad.einsum("ij,...j->...i", c, x))
        return lin + 0.3 * quad + trig

    return exterior_derivative(OneForm(chart, alpha))
