import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asymcop import (
    AsymmetryParams,
    Asymmetrized,
    Clayton,
    ClaytonSurvival,
    CopulaDomainError,
    FrailtyMixed,
    Gumbel,
    Independence,
    MixtureParams,
    Plackett,
    SurvivalAsymmetrizedClayton,
    asymmetrize,
    asymmetrize_one_sided,
    asymmetrize_survival_clayton,
    frailty_mix,
    numerical_tail_probe,
)
from helpers import boundary_error, rectangle_volumes

GRID = np.linspace(0.025, 0.975, 20)
UU, VV = np.meshgrid(GRID, GRID, indexing="ij")


def test_identity_exponents_return_base():
    base = Gumbel(0.5)
    assert asymmetrize(base, AsymmetryParams()) is base
    explicit = Asymmetrized(base, 1.0, 1.0)
    np.testing.assert_allclose(explicit.cdf(UU, VV), base.cdf(UU, VV), atol=1e-12)


def test_zero_exponents_give_independence():
    m = Asymmetrized(Clayton(3.0), 0.0, 0.0)
    np.testing.assert_allclose(m.cdf(UU, VV), UU * VV, atol=1e-12)


def test_asymmetrized_gumbel_direct_formula(rng):
    a, th, de = 0.5, 1.0, 0.94
    m = asymmetrize(Gumbel(a), AsymmetryParams(th, de))
    u, v = rng.uniform(0.01, 0.99, size=(2, 10))
    direct = u ** (1 - th) * v ** (1 - de) * np.exp(
        -(((-np.log(u**th)) ** (1 / a) + (-np.log(v**de)) ** (1 / a)) ** a)
    )
    np.testing.assert_allclose(m.cdf(u, v), direct, rtol=1e-12)


@pytest.mark.parametrize("bad", [(-0.1, 1.0), (1.0, 1.5)])
def test_exponent_domain(bad):
    with pytest.raises(CopulaDomainError):
        AsymmetryParams(*bad)
    with pytest.raises(CopulaDomainError):
        Asymmetrized(Gumbel(0.5), *bad)


def test_one_sided():
    base = Plackett(6.76)
    assert asymmetrize_one_sided(base, 1.0) is base
    np.testing.assert_allclose(asymmetrize_one_sided(base, 0.0).cdf(UU, VV), UU * VV, atol=1e-12)
    m = asymmetrize_one_sided(base, 0.7)
    np.testing.assert_allclose(m.cdf(UU, VV), VV**0.3 * base.cdf(UU, VV**0.7), rtol=1e-12)
    mu = asymmetrize_one_sided(base, 0.7, side="u")
    np.testing.assert_allclose(mu.cdf(UU, VV), m.cdf(VV, UU), rtol=1e-12)
    with pytest.raises(ValueError):
        asymmetrize_one_sided(base, 0.7, side="w")


def test_one_sided_gumbel_table_values_valid():
    m = asymmetrize_one_sided(Gumbel(0.46), 0.85)
    assert boundary_error(m) < 1e-12
    assert rectangle_volumes(m).min() >= -1e-12


def test_survival_clayton_construction():
    assert isinstance(asymmetrize_survival_clayton(1.24, 1.0, 1.0), ClaytonSurvival)
    m = asymmetrize_survival_clayton(2.34, 0.78, 0.96)
    assert boundary_error(m) < 1e-12
    assert rectangle_volumes(m).min() >= -1e-12
    near_zero = SurvivalAsymmetrizedClayton(1e-12, 0.78, 0.96)
    np.testing.assert_allclose(near_zero.cdf(UU, VV), UU * VV, atol=1e-9)


def test_survival_clayton_definition():
    a, th, de = 2.34, 0.78, 0.96
    m = SurvivalAsymmetrizedClayton(a, th, de)
    s, t = 1 - UU, 1 - VV
    k = s ** (1 - th) * t ** (1 - de) * ((s**th) ** -a + (t**de) ** -a - 1) ** (-1 / a)
    np.testing.assert_allclose(m.cdf(UU, VV), UU + VV - 1 + k, rtol=1e-10, atol=1e-13)


def test_non_exchangeable():
    m = Asymmetrized(Gumbel(0.4), 0.6, 0.9)
    assert np.max(np.abs(m.cdf(UU, VV) - m.cdf(VV, UU))) > 1e-3


@pytest.mark.parametrize("n", [2, 5, 10])
def test_asymmetrized_gumbel_max_stable(n):
    m = Asymmetrized(Gumbel(0.46), 0.8, 0.6)
    np.testing.assert_allclose(m.cdf(UU ** (1 / n), VV ** (1 / n)) ** n, m.cdf(UU, VV), rtol=1e-10)


def test_asymmetrized_lower_tail_vanishes():
    rep = numerical_tail_probe(Asymmetrized(Clayton(2.0), 0.7, 0.8), "lower", [1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
    ratios = [r for _, r in rep.probe_points]
    assert all(a > b for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] < 0.05


def test_mixture_identity_and_domain():
    inner = Gumbel(0.5)
    assert frailty_mix(inner, MixtureParams(0.0)) is inner
    with pytest.raises(CopulaDomainError):
        MixtureParams(-1.0)
    with pytest.raises(CopulaDomainError):
        FrailtyMixed(inner, 0.0)


def test_mixture_small_beta_recovers_max_stable_inner():
    inner = Asymmetrized(Gumbel(0.48), 1.0, 0.76)
    np.testing.assert_allclose(FrailtyMixed(inner, 1e-9).cdf(UU, VV), inner.cdf(UU, VV), atol=1e-6)


def test_mixture_small_beta_does_not_recover_clayton_survival():
    # the beta -> 0 limit is the extreme-value attractor of the inner copula,
    # which differs from it unless it is max-stable; hence beta = 0 is structural
    inner = ClaytonSurvival(2.0)
    gap = np.max(np.abs(FrailtyMixed(inner, 1e-9).cdf(UU, VV) - inner.cdf(UU, VV)))
    assert gap > 1e-3


@pytest.mark.parametrize("beta", [0.3, 1.0, 4.0])
def test_mixture_of_independence_is_clayton(beta):
    np.testing.assert_allclose(
        FrailtyMixed(Independence(), beta).cdf(UU, VV), Clayton(beta).cdf(UU, VV), rtol=1e-12
    )


def test_mixture_table_values_lower_tail_above_clayton():
    inner = Asymmetrized(Gumbel(0.48), 1.0, 0.76)
    m = FrailtyMixed(inner, 0.19)
    assert boundary_error(m) < 1e-12
    assert rectangle_volumes(m).min() >= -1e-12
    probes = [1e-2, 1e-3, 1e-4]
    mixed = numerical_tail_probe(m, "lower", probes).probe_points
    ref = numerical_tail_probe(Clayton(0.19), "lower", probes).probe_points
    assert all(a[1] > b[1] for a, b in zip(mixed, ref))


@settings(max_examples=40, deadline=None)
@given(
    alpha=st.floats(0.1, 0.95),
    theta=st.floats(0.05, 1.0),
    delta=st.floats(0.05, 1.0),
    beta=st.floats(0.05, 3.0),
)
def test_mixture_of_asymmetrized_gumbel_is_copula(alpha, theta, delta, beta):
    m = FrailtyMixed(Asymmetrized(Gumbel(alpha), theta, delta), beta)
    assert boundary_error(m) < 1e-10
    assert rectangle_volumes(m, k=20).min() >= -1e-10
