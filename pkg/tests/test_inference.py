import json
import math

import numpy as np
import pytest
from scipy import stats

from asymcop import (
    ClaytonSurvival,
    FitResult,
    Gumbel,
    Independence,
    ModelSpec,
    NestingError,
    NoClosedFormError,
    bic,
    fit_copula_ml,
    fit_ladder,
    fit_margin,
    lr_test,
    margin_quantile,
    pseudo_observations,
    sample,
    tail_estimate,
)
from asymcop import inference
from asymcop.inference import lr_statistic, tail_from_alpha


def fake_fit(spec, params, loglik, n=1000, stderr=None):
    return FitResult(spec, params, loglik, bic(loglik, spec.n_params, n), stderr, None, True, 0, n)


def test_bic():
    assert bic(0.0, 0, 10) == 0.0
    assert bic(4054, 1, 8103) == pytest.approx(-8099, abs=1)
    assert bic(4297, 1, 8103) == pytest.approx(-8585, abs=1)
    with pytest.raises(ValueError):
        bic(1.0, 1, 1)


def test_lr_statistics():
    t = lr_statistic(4246, 4360, 1)
    assert t.statistic == pytest.approx(228) and t.p_value < 1e-10
    t = lr_statistic(5605, 5682, 1)
    assert t.statistic == pytest.approx(154) and t.p_value < 1e-10
    assert t.p_value == pytest.approx(stats.chi2.sf(154, 1))


def test_lr_identical_fits():
    spec = ModelSpec("gumbel")
    f = fake_fit(spec, {"alpha": 0.5}, 100.0)
    t = lr_test(f, f)
    assert t.statistic == 0.0 and t.df == 0 and t.p_value == 1.0


def test_lr_requires_nesting():
    base = fake_fit(ModelSpec("gumbel"), {"alpha": 0.5}, 100.0)
    other = fake_fit(ModelSpec("plackett", "asym"), {"delta": 0.8, "alpha": 3.0}, 120.0)
    with pytest.raises(NestingError):
        lr_test(base, other)
    mixed = fake_fit(ModelSpec("clayton", "mixed"), {"beta": 0.1, "delta": 0.8, "alpha": 1.0}, 1.0)
    asym2 = fake_fit(ModelSpec("clayton", "asym2"), {"theta": 0.9, "delta": 0.8, "alpha": 1.0}, 1.0)
    with pytest.raises(NestingError):
        lr_test(mixed, asym2)


@pytest.mark.parametrize(
    "small, big, nested",
    [
        (("clayton", "base"), ("clayton", "mixed2"), True),
        (("clayton", "asym"), ("clayton", "asym2"), True),
        (("clayton", "asym"), ("clayton", "mixed2"), True),
        (("clayton", "mixed2"), ("clayton", "asym2"), False),
        (("gumbel", "base"), ("clayton", "asym"), False),
    ],
)
def test_nesting_relation(small, big, nested):
    assert ModelSpec(*small).nests(ModelSpec(*big)) is nested


def test_tail_estimate_delta_method():
    f = fake_fit(ModelSpec("clayton"), {"alpha": 1.24}, 0.0, stderr={"alpha": 1.7e-2})
    t = tail_estimate(f)
    assert t.lam == pytest.approx(0.57, abs=0.005)
    assert t.stderr == pytest.approx(4.34e-3, rel=0.05)
    g = fake_fit(ModelSpec("gumbel"), {"alpha": 0.57}, 0.0, stderr={"alpha": 3.6e-3})
    assert tail_estimate(g).lam == pytest.approx(0.52, abs=0.005)
    assert tail_from_alpha("gumbel", 0.57, 0.0).stderr == 0.0


def test_tail_estimate_transformed_model():
    f = fake_fit(ModelSpec("clayton", "asym"), {"delta": 0.8, "alpha": 1.0}, 0.0, stderr={"delta": 0.1, "alpha": 0.1})
    with pytest.raises(NoClosedFormError, match="numerical"):
        tail_estimate(f)
    with pytest.raises(NoClosedFormError):
        tail_from_alpha("plackett", 3.0, 0.1)


def test_spec_parsing_and_params():
    s = ModelSpec.parse("clayton:mixed:u")
    assert s.param_names == ("beta", "theta", "alpha")
    assert ModelSpec.parse("gumbel:asym2").param_names == ("theta", "delta", "alpha")
    assert ModelSpec.parse("plackett").key == "plackett:base"
    assert ModelSpec.parse("plackett:mixed2").restricted == ModelSpec("plackett", "asym2")
    with pytest.raises(ValueError):
        ModelSpec("frank")
    with pytest.raises(ValueError):
        ModelSpec("gumbel", "asym3")


def test_build_structural_identities():
    spec = ModelSpec("clayton", "mixed2")
    m = spec.build({"beta": 0.0, "theta": 1.0, "delta": 1.0, "alpha": 1.24})
    u = np.linspace(0.05, 0.95, 7)
    np.testing.assert_allclose(m.cdf(u, u[::-1]), ClaytonSurvival(1.24).cdf(u, u[::-1]), atol=1e-12)


@pytest.fixture(scope="module")
def clayton_8000():
    return sample(ClaytonSurvival(1.24), 8000, 101)


def test_recovers_clayton_survival(clayton_8000):
    f = fit_copula_ml(clayton_8000, ModelSpec("clayton"))
    assert f.converged
    assert f.params["alpha"] == pytest.approx(1.24, abs=0.10)
    assert 5e-3 < f.stderr["alpha"] < 5e-2
    assert f.bic == -2 * f.loglik + math.log(8000)
    assert f.n_obs == 8000


def test_fit_result_round_trip(clayton_8000):
    f = fit_copula_ml(clayton_8000, ModelSpec("clayton"))
    again = FitResult.from_dict(json.loads(json.dumps(f.to_dict())))
    assert again == f


def test_independence_data():
    s = sample(Independence(), 2000, 102)
    f = fit_copula_ml(s, ModelSpec("clayton"))
    assert f.params["alpha"] < 0.15
    assert tail_estimate(f).lam < 0.01 if f.stderr else True


def test_nested_degeneracy_and_monotone_logliks():
    s = sample(Gumbel(0.5), 3000, 103)
    base, asym2, mixed2 = fit_ladder(s, "gumbel", ("base", "asym2", "mixed2"))
    assert asym2.params["delta"] == pytest.approx(1.0, abs=0.05)
    # the two extra parameters only buy chance-level likelihood
    assert 2 * (asym2.loglik - base.loglik) < stats.chi2.ppf(0.999, 2)
    assert asym2.loglik >= base.loglik - 1e-6
    assert mixed2.loglik >= asym2.loglik - 1e-6
    for f in (base, asym2, mixed2):
        for name, x in f.params.items():
            box = f.spec.box(name)
            assert box.lo <= x <= box.hi


def test_boundary_beta_reports_restricted_stderr():
    s = sample(ClaytonSurvival(1.5), 3000, 104)
    asym = fit_copula_ml(s, ModelSpec("clayton", "asym"))
    mixed = fit_copula_ml(s, ModelSpec("clayton", "mixed"), restricted=asym)
    assert mixed.loglik >= asym.loglik - 1e-6
    if mixed.params["beta"] < 1e-3:
        assert "beta" in mixed.degenerate
        assert mixed.restricted_stderr == asym.stderr


def test_stderr_scales_with_root_n():
    small = fit_copula_ml(sample(ClaytonSurvival(1.24), 2000, 105), ModelSpec("clayton"))
    big = fit_copula_ml(sample(ClaytonSurvival(1.24), 8000, 106), ModelSpec("clayton"))
    assert 1.6 <= small.stderr["alpha"] / big.stderr["alpha"] <= 2.5


def test_all_starts_fail(monkeypatch):
    def boom(model, u, v):
        raise ArithmeticError("synthetic failure")

    monkeypatch.setattr(inference, "loglik", boom)
    f = fit_copula_ml(sample(Gumbel(0.5), 200, 1), ModelSpec("gumbel"))
    assert not f.converged
    assert f.loglik == -math.inf
    assert "all starts failed" in f.diagnostics
    assert any("aborted" in d for d in f.diagnostics)


def test_user_init_is_used():
    s = sample(Gumbel(0.5), 500, 2)
    f = fit_copula_ml(s, ModelSpec("gumbel"), init={"alpha": 0.5})
    assert f.params["alpha"] == pytest.approx(0.5, abs=0.1)


def test_pseudo_observations():
    s = sample(ClaytonSurvival(2.0), 5000, 108)
    # push the copula sample through two skewed margins
    x = stats.gamma(2.0).ppf(s.u)
    y = stats.lognorm(0.5).ppf(s.v)
    m1, m2 = fit_margin(x, 0.9), fit_margin(y, 0.9)
    ps = pseudo_observations(x, y, m1, m2)
    n = len(x)
    assert stats.kstest(ps.u, "uniform").statistic < 1.5 / np.sqrt(n)
    assert stats.kstest(ps.v, "uniform").statistic < 1.5 / np.sqrt(n)
    assert ps.kendall_tau() == pytest.approx(0.5, abs=0.02)
    at_threshold = pseudo_observations([m1.threshold], [margin_quantile(m2, 0.5)], m1, m2)
    assert at_threshold.u[0] == pytest.approx(m1.u0)
