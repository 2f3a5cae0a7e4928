import numpy as np
import pytest
from scipy import stats

from asymcop import (
    Asymmetrized,
    Clayton,
    ClaytonSurvival,
    CopulaNumericError,
    FrailtyMixed,
    GeneratorKind,
    GeneratorSpec,
    Gumbel,
    Independence,
    Plackett,
    SurvivalAsymmetrizedClayton,
    reproduce_figure1,
    sample,
)
from asymcop import sampling
from asymcop.sampling import (
    SampleSet,
    grid_sup_distance,
    sample_conditional,
    sample_frailty,
    sample_gumbel,
    sample_khoudraji,
)

GAMMA2 = GeneratorSpec(GeneratorKind.GAMMA_LT, 2.0)


@pytest.mark.parametrize(
    "draw",
    [
        lambda s: sample_frailty(50, Independence(), GAMMA2, s),
        lambda s: sample_gumbel(50, 0.5, s),
        lambda s: sample_khoudraji(50, Independence(), Gumbel(0.5), 0.7, 0.8, s),
        lambda s: sample_conditional(50, Plackett(5.0), s),
        lambda s: sample(FrailtyMixed(SurvivalAsymmetrizedClayton(2.0, 1.0, 0.7), 0.5), 50, s),
    ],
)
def test_same_seed_same_sample(draw):
    a, b, c = draw(11), draw(11), draw(12)
    np.testing.assert_array_equal(a.pairs, b.pairs)
    assert not np.array_equal(a.pairs, c.pairs)


def test_single_draw_deterministic():
    assert sample_frailty(1, Independence(), GAMMA2, 5).pairs.tolist() == sample_frailty(
        1, Independence(), GAMMA2, 5
    ).pairs.tolist()


@pytest.mark.parametrize("n", [0, -3, 2.5])
def test_bad_sample_size(n):
    with pytest.raises(ValueError):
        sample(Clayton(1.0), n, 0)


def test_frailty_contract():
    with pytest.raises(ValueError):
        sample_frailty(10, Independence(), GeneratorSpec(GeneratorKind.POSITIVE_STABLE_LT, 0.5), 0)
    with pytest.raises(ValueError):
        sample_frailty(10, ClaytonSurvival(2.0), GAMMA2, 0)


def test_frailty_independence_is_clayton():
    s = sample_frailty(100_000, Independence(), GAMMA2, 1)
    assert s.kendall_tau() == pytest.approx(0.5, abs=0.01)
    small = sample_frailty(10_000, Independence(), GAMMA2, 2)
    assert grid_sup_distance(small.u, small.v, Clayton(2.0)) < 0.015


def test_gumbel_independence_and_tau():
    assert abs(sample_gumbel(100_000, 1.0, 3).kendall_tau()) < 0.01
    assert sample_gumbel(100_000, 0.5, 4).kendall_tau() == pytest.approx(0.5, abs=0.01)


def test_gumbel_gate_recorded():
    s = sample_gumbel(10_000, 0.5, 5)
    d = s.diagnostics
    assert d["gate_threshold"] == pytest.approx(0.03)
    assert "gate_distance" in d and d["method"] in ("gamma_mixture", "conditional_inversion")
    assert grid_sup_distance(s.u, s.v, Gumbel(0.5)) < 0.015


def test_khoudraji_cases():
    ind = sample_khoudraji(100_000, Independence(), Independence(), 0.4, 0.6, 6)
    assert abs(ind.kendall_tau()) < 0.01
    near = sample_khoudraji(20_000, Independence(), Gumbel(0.5), 1 - 1e-9, 1 - 1e-9, 7)
    assert near.kendall_tau() == pytest.approx(0.5, abs=0.02)
    s = sample_khoudraji(10_000, Independence(), ClaytonSurvival(2.0), 1.0, 0.7, 8)
    assert grid_sup_distance(s.u, s.v, Asymmetrized(ClaytonSurvival(2.0), 1.0, 0.7)) < 0.015


def test_khoudraji_domain():
    with pytest.raises(ValueError):
        sample_khoudraji(10, Independence(), Gumbel(0.5), 1.2, 0.5, 0)


def test_conditional_independence_returns_t():
    s = sample_conditional(100, Independence(), 9)
    rng = np.random.default_rng(np.random.SeedSequence(9))
    u = rng.uniform(size=100)
    t = rng.uniform(size=100)
    np.testing.assert_array_equal(s.u, np.clip(u, 1e-15, 1 - 1e-15))
    np.testing.assert_array_equal(s.v, np.clip(t, 1e-15, 1 - 1e-15))


def test_conditional_clayton_tau():
    assert sample_conditional(20_000, Clayton(2.0), 10).kendall_tau() == pytest.approx(0.5, abs=0.015)


def test_conditional_mixed_grid():
    m = FrailtyMixed(SurvivalAsymmetrizedClayton(2.0, 1.0, 0.7), 0.5)
    s = sample_conditional(10_000, m, 11)
    assert grid_sup_distance(s.u, s.v, m) < 0.02


def test_conditional_root_failure(monkeypatch):
    monkeypatch.setattr(sampling, "ROOT_MAX_ITER", 3)
    with pytest.raises(CopulaNumericError, match="did not converge"):
        sample_conditional(10, Clayton(2.0), 0)


@pytest.mark.parametrize(
    "model",
    [Clayton(2.0), Gumbel(0.3), Plackett(-0.5), Asymmetrized(Gumbel(0.46), 1.0, 0.85),
     FrailtyMixed(Asymmetrized(Gumbel(0.48), 1.0, 0.76), 0.19)],
)
def test_marginal_uniformity(model):
    n = 10_000
    s = sample(model, n, 21)
    for x in (s.u, s.v):
        assert stats.kstest(x, "uniform").statistic < 1.5 / np.sqrt(n)


def test_sample_set_clipped_and_sized():
    s = SampleSet(np.array([0.0, 0.5, 1.0]), np.array([0.2, 1.0, 0.0]), 1, "x")
    assert len(s) == 3
    assert np.all((s.pairs > 0) & (s.pairs < 1))


def test_figure1():
    res = reproduce_figure1(seed=2024)
    t1, t2, t3 = res.taus
    assert t1 == pytest.approx(0.50, abs=0.02)
    assert t2 < t1 and t3 > t2
    assert t2 <= res.cuadras_auge_bound + 0.02
    assert res.delta < 1 and res.beta > 0
    assert all(len(s) == 5000 for s in res.samples)
