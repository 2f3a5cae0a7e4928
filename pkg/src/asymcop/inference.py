"""Two-stage (IFM) estimation: margins first, copula parameters by ML second."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special, stats

from .construct import Asymmetrized, FrailtyMixed, SurvivalAsymmetrizedClayton
from .core import ClaytonSurvival, CopulaModel, Gumbel, Plackett
from .margins import MarginModel, margin_cdf
from .sampling import SampleSet, empirical_kendall_tau
from .tails import NoClosedFormError, kendall_tau_numeric

log = logging.getLogger(__name__)

FAMILIES = ("plackett", "gumbel", "clayton")
LEVELS = ("base", "asym", "asym2", "mixed", "mixed2")
DEFAULT_LEVELS = ("base", "asym", "mixed")
DEGENERATE_TOL = 1e-3
SCREEN_ITER = 25
LOGIT_CAP = 12.0
LOG_FLOOR = -16.0
N_FINALISTS = 2
IDENTITY_VALUE = {"beta": 0.0, "theta": 1.0, "delta": 1.0}
_PENALTY = 1e100


class NestingError(ValueError):
    pass


@dataclass(frozen=True)
class ParamBox:
    lo: float
    hi: float
    transform: str  # "logit" on (lo, hi) or "log" on (lo, inf) clipped at hi

    def to_free(self, x: float) -> float:
        if self.transform == "logit":
            p = (x - self.lo) / (self.hi - self.lo)
            return float(special.logit(np.clip(p, 1e-12, 1 - 1e-12)))
        return math.log(max(x - self.lo, 1e-12))

    def from_free(self, z: float) -> float:
        # saturate so the objective is flat past the edge and the simplex contracts
        if self.transform == "logit":
            return self.lo + (self.hi - self.lo) * float(special.expit(np.clip(z, -LOGIT_CAP, LOGIT_CAP)))
        return min(self.lo + math.exp(np.clip(z, LOG_FLOOR, 50.0)), self.hi)

    def near_edge(self, x: float) -> bool:
        return x - self.lo < DEGENERATE_TOL or self.hi - x < DEGENERATE_TOL


ALPHA_BOX = {
    "plackett": ParamBox(-1.0, 5000.0, "log"),
    "gumbel": ParamBox(0.0, 1.0, "logit"),
    "clayton": ParamBox(0.0, 100.0, "log"),
}
UNIT_BOX = ParamBox(0.0, 1.0, "logit")
BETA_BOX = ParamBox(0.0, 20.0, "log")

# weak / moderate / strong dependence per family
ALPHA_LADDER = {
    "plackett": (1.0, 5.0, 20.0),
    "gumbel": (0.85, 0.6, 0.35),
    "clayton": (0.3, 1.2, 3.0),
}


@dataclass(frozen=True)
class ModelSpec:
    """One rung of a family's nesting ladder.

    Levels: ``base`` (alpha); ``asym`` (one exponent on the ``side``
    coordinate); ``asym2`` (theta and delta); ``mixed``/``mixed2`` add the
    frailty parameter beta to ``asym``/``asym2``. ``clayton`` is the survival
    Clayton family, with exponents acting on (1-u, 1-v).
    """

    family: str
    level: str = "base"
    side: str = "v"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.level not in LEVELS:
            raise ValueError(f"unknown level {self.level!r}; expected one of {LEVELS}")
        if self.side not in ("u", "v"):
            raise ValueError(f"side must be 'u' or 'v', got {self.side!r}")

    @property
    def key(self) -> str:
        if self.level in ("asym", "mixed"):
            return f"{self.family}:{self.level}:{self.side}"
        return f"{self.family}:{self.level}"

    @classmethod
    def parse(cls, text: str, side: str = "v") -> ModelSpec:
        parts = text.strip().split(":")
        if len(parts) == 3:
            return cls(parts[0], parts[1], parts[2])
        if len(parts) == 2:
            return cls(parts[0], parts[1], side)
        return cls(parts[0], "base", side)

    @property
    def asym_names(self) -> tuple[str, ...]:
        if self.level in ("asym", "mixed"):
            return ("theta",) if self.side == "u" else ("delta",)
        if self.level in ("asym2", "mixed2"):
            return ("theta", "delta")
        return ()

    @property
    def param_names(self) -> tuple[str, ...]:
        mix = ("beta",) if self.level.startswith("mixed") else ()
        return mix + self.asym_names + ("alpha",)

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    def box(self, name: str) -> ParamBox:
        if name == "alpha":
            return ALPHA_BOX[self.family]
        if name == "beta":
            return BETA_BOX
        return UNIT_BOX

    @property
    def restricted(self) -> ModelSpec | None:
        chain = {"asym": "base", "asym2": "base", "mixed": "asym", "mixed2": "asym2"}
        if self.level == "base":
            return None
        return ModelSpec(self.family, chain[self.level], self.side)

    def nests(self, other: ModelSpec) -> bool:
        """True when ``self`` is obtained from ``other`` by fixing parameters."""
        if self.family != other.family:
            return False
        if self == other:
            return True
        spec = other.restricted
        while spec is not None:
            if spec == self:
                return True
            spec = spec.restricted
        # a one-sided model sits inside the two-sided one
        if set(self.param_names) < set(other.param_names):
            return other.level.startswith("mixed") or not self.level.startswith("mixed")
        return False

    def build(self, params: dict) -> CopulaModel:
        alpha = params["alpha"]
        theta = params.get("theta", 1.0)
        delta = params.get("delta", 1.0)
        if self.family == "plackett":
            model = Plackett(alpha)
        elif self.family == "gumbel":
            model = Gumbel(min(alpha, 1.0))
        else:
            model = ClaytonSurvival(alpha)
        if self.asym_names:
            if self.family == "clayton":
                model = SurvivalAsymmetrizedClayton(alpha, theta, delta)
            else:
                model = Asymmetrized(model, theta, delta)
        if "beta" in params and params["beta"] > 0.0:
            model = FrailtyMixed(model, params["beta"])
        return model

    def to_dict(self) -> dict:
        return {"family": self.family, "level": self.level, "side": self.side}

    @classmethod
    def from_dict(cls, d: dict) -> ModelSpec:
        return cls(d["family"], d["level"], d.get("side", "v"))


def default_grid(side: str = "v", levels=DEFAULT_LEVELS) -> list[ModelSpec]:
    return [ModelSpec(f, lev, side) for f in FAMILIES for lev in levels]


@dataclass
class FitResult:
    spec: ModelSpec
    params: dict[str, float]
    loglik: float
    bic: float
    stderr: dict[str, float | None] | None
    hessian: list[list[float]] | None
    converged: bool
    n_eval: int
    n_obs: int
    degenerate: list[str] = field(default_factory=list)
    restricted_stderr: dict[str, float | None] | None = None
    diagnostics: list[str] = field(default_factory=list)

    @property
    def n_params(self) -> int:
        return self.spec.n_params

    def model(self) -> CopulaModel:
        return self.spec.build(self.params)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "key": self.spec.key,
            "params": dict(self.params),
            "loglik": self.loglik,
            "bic": self.bic,
            "stderr": None if self.stderr is None else dict(self.stderr),
            "hessian": self.hessian,
            "converged": self.converged,
            "n_eval": self.n_eval,
            "n_obs": self.n_obs,
            "degenerate": list(self.degenerate),
            "restricted_stderr": None if self.restricted_stderr is None else dict(self.restricted_stderr),
            "diagnostics": list(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, d: dict) -> FitResult:
        return cls(
            spec=ModelSpec.from_dict(d["spec"]),
            params=dict(d["params"]),
            loglik=d["loglik"],
            bic=d["bic"],
            stderr=None if d["stderr"] is None else dict(d["stderr"]),
            hessian=d["hessian"],
            converged=d["converged"],
            n_eval=d["n_eval"],
            n_obs=d["n_obs"],
            degenerate=list(d.get("degenerate", [])),
            restricted_stderr=d.get("restricted_stderr"),
            diagnostics=list(d.get("diagnostics", [])),
        )


def bic(loglik: float, p: int, n: int) -> float:
    if n < 2:
        raise ValueError("BIC needs at least two observations")
    return -2.0 * loglik + p * math.log(n)


def pseudo_observations(x, y, m1: MarginModel, m2: MarginModel) -> SampleSet:
    u = margin_cdf(m1, np.asarray(x, dtype=float))
    v = margin_cdf(m2, np.asarray(y, dtype=float))
    return SampleSet(u, v, None, "pseudo-observations")


def loglik(model: CopulaModel, u, v) -> float:
    return float(np.sum(model.log_density(u, v)))


def _objective(spec: ModelSpec, u, v):
    names = spec.param_names
    boxes = [spec.box(n) for n in names]
    counter = {"n": 0}

    def negll(z):
        counter["n"] += 1
        params = {n: b.from_free(zi) for n, b, zi in zip(names, boxes, z)}
        try:
            val = -loglik(spec.build(params), u, v)
        except (ArithmeticError, ValueError):
            return _PENALTY
        return val if np.isfinite(val) else _PENALTY

    return negll, counter


def _plackett_alpha_for_tau(tau: float) -> float:
    tau = float(np.clip(tau, -0.9, 0.95))

    def f(a):
        return kendall_tau_numeric(Plackett(a), n_nodes=60) - tau

    lo, hi = -0.99, 5000.0
    if f(lo) > 0.0:
        return lo
    if f(hi) < 0.0:
        return hi
    return optimize.brentq(f, lo, hi, xtol=1e-4)


def tau_inverted_alpha(family: str, tau: float) -> float:
    tau = float(np.clip(tau, 0.02, 0.95))
    if family == "clayton":
        return 2.0 * tau / (1.0 - tau)
    if family == "gumbel":
        return 1.0 - tau
    return _plackett_alpha_for_tau(tau)


def initial_points(spec: ModelSpec, tau: float, restricted: FitResult | None = None) -> list[dict]:
    """Deterministic multi-start points, plus the restricted optimum lifted."""
    a_tau = tau_inverted_alpha(spec.family, tau)
    weak, moderate, strong = ALPHA_LADDER[spec.family]
    rows = [
        (a_tau, 0.9, 0.1),
        (a_tau, 0.99, 0.01),
        (weak, 0.7, 0.3),
        (strong, 0.8, 0.05),
        (moderate, 0.5, 0.5),
    ]
    starts = []
    for alpha, asym, beta in rows:
        p = {"alpha": alpha, "beta": beta}
        p.update({name: asym for name in spec.asym_names})
        starts.append({k: p[k] for k in spec.param_names})
    if restricted is not None:
        lifted = {}
        for name in spec.param_names:
            if name in restricted.params:
                lifted[name] = restricted.params[name]
            else:
                lifted[name] = 0.02 if name == "beta" else 0.98
        starts.append(lifted)
    return starts


def _clip_inside(spec: ModelSpec, params: dict) -> dict:
    out = {}
    for name, x in params.items():
        b = spec.box(name)
        out[name] = float(np.clip(x, b.lo + 1e-6, b.hi - 1e-6))
    return out


def numerical_hessian(f, x, names, steps) -> np.ndarray:
    """Central-difference Hessian of f at x over the coordinates in ``names``."""
    k = len(names)
    h = np.zeros((k, k))
    f0 = f(x)
    for i in range(k):
        for j in range(i, k):
            ni, nj = names[i], names[j]
            hi, hj = steps[ni], steps[nj]
            if i == j:
                xp = dict(x, **{ni: x[ni] + hi})
                xm = dict(x, **{ni: x[ni] - hi})
                h[i, i] = (f(xp) - 2.0 * f0 + f(xm)) / (hi * hi)
            else:
                vals = []
                for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                    vals.append(f(dict(x, **{ni: x[ni] + si * hi, nj: x[nj] + sj * hj})))
                h[i, j] = h[j, i] = (vals[0] - vals[1] - vals[2] + vals[3]) / (4.0 * hi * hj)
    return h


def _stderr_from_hessian(spec, params, u, v):
    """Standard errors from the observed information, skipping edge parameters."""
    free = [n for n in spec.param_names if not spec.box(n).near_edge(params[n])]
    degenerate = [n for n in spec.param_names if n not in free]
    if not free:
        return None, None, degenerate, []

    def ll(p):
        try:
            return loglik(spec.build(p), u, v)
        except (ArithmeticError, ValueError):
            return np.nan

    steps = {n: 1e-4 * (1.0 + abs(params[n])) for n in free}
    hess = numerical_hessian(ll, params, free, steps)
    notes = []
    if not np.all(np.isfinite(hess)):
        notes.append("hessian has non-finite entries")
        return None, hess, degenerate, notes
    info = -hess
    try:
        np.linalg.cholesky(info)
    except np.linalg.LinAlgError:
        notes.append("observed information is not positive definite")
        return None, hess, degenerate, notes
    cov = np.linalg.inv(info)
    se = {n: None for n in spec.param_names}
    for i, n in enumerate(free):
        se[n] = float(math.sqrt(cov[i, i]))
    return se, hess, degenerate, notes


def fit_copula_ml(
    pseudo: SampleSet,
    spec: ModelSpec,
    init: dict | None = None,
    restricted: FitResult | None = None,
    maxiter: int | None = None,
) -> FitResult:
    """Maximum-likelihood fit of one ladder model to pseudo-observations.

    Nelder-Mead in a free reparametrization (logit for bounded parameters,
    log for half-bounded ones). Every initial point gets a short screening
    search and the two best are run to convergence, with one restart if the
    simplex stalls.

    The restricted model is also a candidate, evaluated exactly at beta = 0
    and unit exponents: the frailty mixture only tends to its inner copula as
    beta -> 0 when that copula is max-stable, so the boundary cannot be
    reached by the search itself. Without ``restricted`` the restricted model
    is fitted first.
    """
    u, v = pseudo.u, pseudo.v
    n = len(u)
    if restricted is None and spec.restricted is not None:
        restricted = fit_copula_ml(pseudo, spec.restricted)
    negll, counter = _objective(spec, u, v)
    names = spec.param_names
    boxes = [spec.box(nm) for nm in names]
    tau = empirical_kendall_tau(u, v)
    starts = initial_points(spec, tau, restricted)
    if init is not None:
        starts.append({k: init[k] for k in names})
    maxiter = maxiter or 250 * len(names)
    adaptive = len(names) > 2
    diagnostics = []
    # screen every start with a short search, then run the two best to convergence
    screened = []
    for k, start in enumerate(starts):
        z0 = np.array([b.to_free(start[nm]) for nm, b in zip(names, boxes)])
        if negll(z0) >= _PENALTY:
            diagnostics.append(f"start {k} aborted: likelihood not finite at {start}")
            log.debug("start %d aborted for %s", k, spec.key)
            continue
        res = optimize.minimize(
            negll, z0, method="Nelder-Mead",
            options={"maxiter": SCREEN_ITER * len(names), "xatol": 1e-2, "fatol": 1e-2, "adaptive": adaptive},
        )
        screened.append(res)
    screened.sort(key=lambda r: r.fun)
    best = None
    for cand in screened[:N_FINALISTS]:
        if best is not None and cand.fun - screened[0].fun < 1e-3:
            continue
        res = optimize.minimize(
            negll, cand.x, method="Nelder-Mead",
            options={"maxiter": maxiter, "xatol": 1e-5, "fatol": 1e-6, "adaptive": adaptive},
        )
        if best is None or res.fun < best.fun:
            best = res
    if best is None or best.fun >= _PENALTY:
        return FitResult(spec, {nm: float("nan") for nm in names}, float("-inf"), float("inf"),
                         None, None, False, counter["n"], n, diagnostics=diagnostics + ["all starts failed"])
    if not best.success:
        # a collapsed simplex often recovers from a fresh restart
        polish = optimize.minimize(
            negll, best.x, method="Nelder-Mead",
            options={"maxiter": maxiter, "xatol": 1e-5, "fatol": 1e-6, "adaptive": adaptive},
        )
        if polish.fun <= best.fun:
            best = polish
    params = {nm: b.from_free(zi) for nm, b, zi in zip(names, boxes, best.x)}
    ll = -float(best.fun)
    converged = bool(best.success)
    if restricted is not None and np.isfinite(restricted.loglik):
        exact = {nm: restricted.params.get(nm, IDENTITY_VALUE.get(nm)) for nm in names}
        ll_exact = loglik(spec.build(exact), u, v)
        if ll_exact >= ll:
            diagnostics.append(f"optimum on the boundary: {spec.restricted.key} at {ll_exact:.6g} vs interior {ll:.6g}")
            params, ll, converged = exact, ll_exact, restricted.converged
    se, hess, degenerate, notes = _stderr_from_hessian(spec, params, u, v)
    diagnostics.extend(notes)
    result = FitResult(
        spec=spec,
        params=params,
        loglik=ll,
        bic=bic(ll, len(names), n),
        stderr=se,
        hessian=None if hess is None else hess.tolist(),
        converged=converged,
        n_eval=counter["n"],
        n_obs=n,
        degenerate=degenerate,
        diagnostics=diagnostics,
    )
    if degenerate and restricted is not None:
        result.restricted_stderr = restricted.stderr
    return result


def fit_ladder(pseudo: SampleSet, family: str, levels=DEFAULT_LEVELS, side: str = "v") -> list[FitResult]:
    """Fit a family's nested models in order, seeding each with its predecessor."""
    fits: dict[ModelSpec, FitResult] = {}
    order = sorted(levels, key=lambda lv: ModelSpec(family, lv, side).n_params)
    for lev in order:
        spec = ModelSpec(family, lev, side)
        restricted = fits.get(spec.restricted) if spec.restricted is not None else None
        if spec.restricted is not None and restricted is None:
            restricted = fit_copula_ml(pseudo, spec.restricted)
            fits[spec.restricted] = restricted
        fits[spec] = fit_copula_ml(pseudo, spec, restricted=restricted)
    return [fits[ModelSpec(family, lev, side)] for lev in levels]


@dataclass(frozen=True)
class LRTest:
    statistic: float
    df: int
    p_value: float

    def to_dict(self):
        return {"statistic": self.statistic, "df": self.df, "p_value": self.p_value}


def lr_statistic(loglik_restricted: float, loglik_full: float, df: int) -> LRTest:
    stat = -2.0 * (loglik_restricted - loglik_full)
    if -1e-9 < stat < 0.0:
        stat = 0.0
    p = 1.0 if df == 0 else float(stats.chi2.sf(max(stat, 0.0), df))
    return LRTest(stat, df, p)


def lr_test(restricted: FitResult, full: FitResult) -> LRTest:
    if not restricted.spec.nests(full.spec):
        raise NestingError(f"{restricted.spec.key} is not nested in {full.spec.key}")
    if restricted.n_obs != full.n_obs:
        raise NestingError("fits use different numbers of observations")
    return lr_statistic(restricted.loglik, full.loglik, full.n_params - restricted.n_params)


@dataclass(frozen=True)
class TailEstimate:
    lam: float
    stderr: float

    def to_dict(self):
        return {"lambda": self.lam, "stderr": self.stderr}


def tail_from_alpha(family: str, alpha: float, sd_alpha: float) -> TailEstimate:
    """Upper-tail index and its delta-method standard deviation."""
    if family == "clayton":
        lam = 2.0 ** (-1.0 / alpha)
        grad = math.log(2.0) * lam / alpha**2
    elif family == "gumbel":
        lam = 2.0 - 2.0**alpha
        grad = -math.log(2.0) * 2.0**alpha
    else:
        raise NoClosedFormError(f"no closed-form tail index for family {family!r}")
    return TailEstimate(lam, abs(grad) * sd_alpha)


def tail_estimate(fit: FitResult) -> TailEstimate:
    if fit.spec.level != "base" or fit.spec.family == "plackett":
        raise NoClosedFormError(
            f"closed form unavailable for {fit.spec.key}; use asymcop.tails.numerical_tail_probe"
        )
    if fit.stderr is None or fit.stderr.get("alpha") is None:
        raise ValueError(f"fit {fit.spec.key} has no standard error for alpha")
    return tail_from_alpha(fit.spec.family, fit.params["alpha"], fit.stderr["alpha"])
