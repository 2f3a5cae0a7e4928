"""Shared fixtures for the test modules."""

import numpy as np
from asymcop import (
    Asymmetrized,
    Clayton,
    ClaytonSurvival,
    FrailtyMixed,
    Gumbel,
    Independence,
    Plackett,
    SurvivalAsymmetrizedClayton,
)

# filled by tests/test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


# three settings per family, parameter values taken from the fitted tables
# where they exist
FAMILY_SETTINGS = {
    "independence": [Independence()],
    "plackett": [Plackett(6.76), Plackett(-0.5), Plackett(993.03)],
    "clayton": [Clayton(0.3), Clayton(2.0), Clayton(8.0)],
    "clayton_survival": [ClaytonSurvival(1.24), ClaytonSurvival(1.47), ClaytonSurvival(5.0)],
    "gumbel": [Gumbel(0.57), Gumbel(0.2), Gumbel(0.95)],
    "asymmetrized": [
        Asymmetrized(Gumbel(0.46), 1.0, 0.85),
        Asymmetrized(Plackett(15.17), 1.0, 0.78),
        Asymmetrized(Clayton(2.0), 0.5, 0.9),
    ],
    "survival_asymmetrized_clayton": [
        SurvivalAsymmetrizedClayton(2.34, 0.78, 0.96),
        SurvivalAsymmetrizedClayton(2.96, 0.75, 1.0),
        SurvivalAsymmetrizedClayton(0.5, 0.3, 0.6),
    ],
    "frailty_mixed": [
        FrailtyMixed(Asymmetrized(Gumbel(0.48), 1.0, 0.76), 0.19),
        FrailtyMixed(SurvivalAsymmetrizedClayton(1.75, 0.86, 1.0), 0.25),
        FrailtyMixed(Asymmetrized(Plackett(9.0), 1.0, 0.78), 0.3),
    ],
}

ALL_MODELS = [m for ms in FAMILY_SETTINGS.values() for m in ms]


def model_id(m):
    return m.describe()


def quadrature_mass(model, n=200):
    """Integral of the density over the unit square, sine-squared Gauss-Legendre."""
    x, w = np.polynomial.legendre.leggauss(n)
    z = 0.5 * (x + 1.0)
    u = np.sin(0.5 * np.pi * z) ** 2
    wu = 0.5 * w * 0.5 * np.pi * np.sin(np.pi * z)
    uu, vv = np.meshgrid(u, u, indexing="ij")
    return float(wu @ model.density(uu, vv) @ wu)


def rectangle_volumes(model, k=50):
    g = np.linspace(0.0, 1.0, k + 1)
    uu, vv = np.meshgrid(g, g, indexing="ij")
    c = model.cdf(uu, vv)
    return c[1:, 1:] - c[1:, :-1] - c[:-1, 1:] + c[:-1, :-1]


def boundary_error(model):
    g = np.linspace(0.0, 1.0, 21)
    zero = np.zeros_like(g)
    one = np.ones_like(g)
    return max(
        np.max(np.abs(model.cdf(g, zero))),
        np.max(np.abs(model.cdf(zero, g))),
        np.max(np.abs(model.cdf(g, one) - g)),
        np.max(np.abs(model.cdf(one, g) - g)),
    )
