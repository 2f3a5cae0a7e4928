"""Base bivariate copulas and the log-space evaluation protocol.

Every model implements ``log_terms(lu, lv)``, which takes log-arguments
``lu = log u``, ``lv = log v`` and returns four arrays:

    log C(u, v)
    d1  = d log C / d log u
    d2  = d log C / d log v
    d12 = d^2 log C / d log u d log v

From these, the cdf, both partial derivatives and the density follow without
any further model-specific code::

    dC/du = C * d1 / u
    c     = C / (u v) * (d12 + d1 * d2)

Working on log-arguments is what lets the transforms in :mod:`asymcop.construct`
compose analytically: asymmetrization is affine in log space, and the frailty
mixture evaluates its inner copula at ``log x = 1 - u**-beta``, which underflows
in linear space long before it does in log space.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

EPS_CLAMP = 1e-12
LIMIT_TOL = 1e-10
_EXP_MAX = 700.0
_TINY = 1e-300


class CopulaDomainError(ValueError):
    """Parameter or argument outside the admissible domain."""


class BoundaryError(ValueError):
    """Density requested on the boundary of the unit square."""


class CopulaNumericError(ArithmeticError):
    """Non-finite value produced during copula evaluation."""


class Family(str, enum.Enum):
    INDEPENDENCE = "independence"
    PLACKETT = "plackett"
    CLAYTON = "clayton"
    CLAYTON_SURVIVAL = "clayton_survival"
    GUMBEL = "gumbel"
    ASYMMETRIZED = "asymmetrized"
    FRAILTY_MIXED = "frailty_mixed"


def _as_arrays(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.broadcast_arrays(u, v)


def _clamped_logs(u, v):
    lu = np.log(np.clip(u, EPS_CLAMP, 1.0 - EPS_CLAMP))
    lv = np.log(np.clip(v, EPS_CLAMP, 1.0 - EPS_CLAMP))
    return lu, lv


def _scalarize(x, like):
    if np.ndim(like) == 0:
        return float(x)
    return x


class CopulaModel:
    """Common evaluation surface shared by every bivariate copula."""

    family: ClassVar[Family]
    max_stable: ClassVar[bool] = False

    @property
    def params(self) -> dict[str, float]:
        raise NotImplementedError

    @property
    def inner(self) -> CopulaModel | None:
        return None

    def log_terms(self, lu, lv):
        raise NotImplementedError

    def describe(self) -> str:
        args = ", ".join(f"{k}={v:.6g}" for k, v in self.params.items())
        text = f"{self.family.value}({args})"
        if self.inner is not None:
            text += f"[{self.inner.describe()}]"
        return text

    def _terms(self, u, v):
        u, v = _as_arrays(u, v)
        lu, lv = _clamped_logs(u, v)
        with np.errstate(all="ignore"):
            return (u, v, lu, lv) + tuple(self.log_terms(lu, lv))

    def cdf(self, u, v):
        u, v, lu, lv, logc, _, _, _ = self._terms(u, v)
        with np.errstate(all="ignore"):
            c = np.exp(logc)
        c = np.clip(c, 0.0, np.minimum(u, v))
        c = np.where(u >= 1.0, v, np.where(v >= 1.0, u, c))
        c = np.where((u <= 0.0) | (v <= 0.0), 0.0, c)
        return _scalarize(c, u)

    def log_cdf(self, u, v):
        u, v, lu, lv, logc, _, _, _ = self._terms(u, v)
        return _scalarize(logc, u)

    def conditional_cdf(self, u, v):
        """P(V <= v | U = u), i.e. the partial derivative of C in u."""
        u, v, lu, lv, logc, d1, _, _ = self._terms(u, v)
        with np.errstate(all="ignore"):
            h = np.exp(logc - lu) * d1
        h = np.clip(h, 0.0, 1.0)
        h = np.where(v >= 1.0, 1.0, np.where(v <= 0.0, 0.0, h))
        return _scalarize(h, u)

    def partial_v(self, u, v):
        """P(U <= u | V = v), the partial derivative of C in v."""
        u, v, lu, lv, logc, _, d2, _ = self._terms(u, v)
        with np.errstate(all="ignore"):
            h = np.exp(logc - lv) * d2
        h = np.clip(h, 0.0, 1.0)
        h = np.where(u >= 1.0, 1.0, np.where(u <= 0.0, 0.0, h))
        return _scalarize(h, u)

    def log_density(self, u, v):
        u, v = _as_arrays(u, v)
        if np.any((u <= 0.0) | (u >= 1.0) | (v <= 0.0) | (v >= 1.0)):
            raise BoundaryError("density is only defined on the open unit square")
        _, _, lu, lv, logc, d1, d2, d12 = self._terms(u, v)
        with np.errstate(all="ignore"):
            ratio = d12 + d1 * d2
            out = np.where(ratio > 0.0, logc - lu - lv + np.log(np.abs(ratio)), -np.inf)
        bad = np.isnan(out) | (out == np.inf)
        if np.any(bad):
            i = int(np.flatnonzero(bad.ravel())[0])
            raise CopulaNumericError(
                f"non-finite log-density at (u={u.ravel()[i]!r}, v={v.ravel()[i]!r}) "
                f"for {self.describe()}"
            )
        return _scalarize(out, u)

    def density(self, u, v):
        with np.errstate(over="ignore"):
            return np.exp(self.log_density(u, v))

    def __call__(self, u, v):
        return self.cdf(u, v)


def independence_terms(lu, lv):
    one = np.ones_like(lu)
    return lu + lv, one, one.copy(), np.zeros_like(lu)


@dataclass(frozen=True)
class Independence(CopulaModel):
    family: ClassVar[Family] = Family.INDEPENDENCE
    max_stable: ClassVar[bool] = True

    @property
    def params(self):
        return {}

    def log_terms(self, lu, lv):
        return independence_terms(lu, lv)


def clayton_terms(lu, lv, alpha):
    """Log-space terms of C = (u^-a + v^-a - 1)^(-1/a), overflow-safe."""
    if alpha <= LIMIT_TOL:
        return independence_terms(lu, lv)
    a, b = np.broadcast_arrays(-alpha * np.asarray(lu, dtype=float), -alpha * np.asarray(lv, dtype=float))
    big = np.maximum(a, b) > _EXP_MAX
    with np.errstate(over="ignore", invalid="ignore"):
        ea = np.expm1(a)
        eb = np.expm1(b)
        log_s = np.log1p(ea + eb)
        s = 1.0 + ea + eb
        d1 = (1.0 + ea) / s
        d2 = (1.0 + eb) / s
    if np.any(big):
        # rescale by the larger exponent where u^-a overflows
        ab, bb = a[big], b[big]
        m = np.maximum(ab, bb)
        xa = np.exp(ab - m)
        xb = np.exp(bb - m)
        sb = xa + xb - np.exp(-m)
        log_s = np.array(log_s, copy=True)
        d1 = np.array(d1, copy=True)
        d2 = np.array(d2, copy=True)
        log_s[big] = m + np.log(sb)
        d1[big] = xa / sb
        d2[big] = xb / sb
    return -log_s / alpha, d1, d2, alpha * d1 * d2


def gumbel_terms(lu, lv, alpha):
    """Log-space terms of exp(-[(-ln u)^(1/a) + (-ln v)^(1/a)]^a)."""
    if alpha >= 1.0 - LIMIT_TOL:
        return independence_terms(lu, lv)
    lwx = np.log(-lu) / alpha
    lwy = np.log(-lv) / alpha
    m = np.logaddexp(lwx, lwy)
    logc = -np.exp(alpha * m)
    rx = np.exp(lwx - m)
    ry = np.exp(lwy - m)
    d1 = rx ** (1.0 - alpha)
    d2 = ry ** (1.0 - alpha)
    d12 = (1.0 - alpha) / alpha * np.exp((1.0 - alpha) * (lwx + lwy) - (2.0 - alpha) * m)
    return logc, d1, d2, d12


def plackett_terms(lu, lv, alpha):
    """Log-space terms of the Plackett copula with odds ratio 1 + alpha."""
    if abs(alpha) <= LIMIT_TOL:
        return independence_terms(lu, lv)
    u = np.exp(lu)
    v = np.exp(lv)
    p = 1.0 + alpha * (u + v)
    disc = p * p - 4.0 * alpha * (1.0 + alpha) * u * v
    if np.any(disc < 0.0):
        warnings.warn("Plackett discriminant negative; clamped to 0", RuntimeWarning, stacklevel=3)
        disc = np.maximum(disc, 0.0)
    r = np.sqrt(disc)
    # rationalized form avoids cancellation near the origin
    logc = np.log(2.0 * (1.0 + alpha)) + lu + lv - np.log(p + r)
    c = np.exp(logc)
    c1 = ((1.0 + alpha) * v - alpha * c) / r
    c2 = ((1.0 + alpha) * u - alpha * c) / r
    d1 = c1 * np.exp(lu - logc)
    d2 = c2 * np.exp(lv - logc)
    dens = (1.0 + alpha) * (1.0 + alpha * (u + v - 2.0 * u * v)) / r**3
    d12 = dens * np.exp(lu + lv - logc) - d1 * d2
    return logc, d1, d2, d12


def _pow_ratio(s, c):
    """(1 - (1 - s)**c) / s with its s -> 0 limit."""
    tiny = s < _TINY
    ss = np.where(tiny, 1.0, s)
    return np.where(tiny, c, -np.expm1(c * np.log1p(-ss)) / ss)


def _log1m_ratio(x):
    """-log(1 - x) / x with its x -> 0 limit."""
    tiny = x < _TINY
    xx = np.where(tiny, 0.5, x)
    return np.where(tiny, 1.0, -np.log1p(-xx) / xx)


def _expm1_ratio(q):
    tiny = np.abs(q) < _TINY
    qq = np.where(tiny, 1.0, q)
    return np.where(tiny, 1.0, np.expm1(qq) / qq)


def asym_terms(base_terms, lu, lv, theta, delta):
    logc, d1, d2, d12 = base_terms(theta * lu, delta * lv)
    return (
        (1.0 - theta) * lu + (1.0 - delta) * lv + logc,
        (1.0 - theta) + theta * d1,
        (1.0 - delta) + delta * d2,
        theta * delta * d12,
    )


def survival_clayton_terms(lu, lv, alpha, theta=1.0, delta=1.0):
    """Log-space terms of u + v - 1 + K(1-u, 1-v), K the asymmetrized Clayton.

    With s, t the arguments, p = 1-(1-s)^(a*theta), q = 1-(1-t)^(a*delta) and
    Q = -log(1 - p q)/a, the copula is s t + (1-s)(1-t) expm1(Q): a sum of
    two nonnegative terms, so no cancellation occurs in either tail.
    """
    if alpha <= LIMIT_TOL or theta <= LIMIT_TOL or delta <= LIMIT_TOL:
        return independence_terms(lu, lv)
    top = np.log1p(-1e-15)
    ls = np.minimum(lu, top)
    lt = np.minimum(lv, top)
    s = np.exp(ls)
    t = np.exp(lt)
    pt = _pow_ratio(s, alpha * theta)
    qt = _pow_ratio(t, alpha * delta)
    p = pt * s
    q = qt * t
    pq = p * q
    # 1 - pq from the complements keeps Q finite as both arguments approach 1
    comp_p = np.exp(alpha * theta * np.log1p(-s))
    comp_q = np.exp(alpha * delta * np.log1p(-t))
    one_m_pq = np.where(pq < 0.5, 1.0 - pq, comp_p + comp_q - comp_p * comp_q)
    f = np.where(pq < 0.5, _log1m_ratio(np.minimum(pq, 0.5)), -np.log(one_m_pq) / np.maximum(pq, 0.5))
    big_q = f * pq / alpha
    g = _expm1_ratio(big_q)
    eq = np.exp(big_q)
    r = 1.0 + (1.0 - s) * (1.0 - t) * g * f * pt * qt / alpha
    logc = ls + lt + np.log(r)
    c1t = 1.0 - (1.0 - t) * g * f * p * qt / alpha + (1.0 - t) * eq * theta * qt * comp_p / one_m_pq
    c2s = 1.0 - (1.0 - s) * g * f * q * pt / alpha + (1.0 - s) * eq * delta * pt * comp_q / one_m_pq
    d1 = c1t / r
    d2 = c2s / r
    lx = np.log1p(-s)
    ly = np.log1p(-t)
    k_logc, k1, k2, k12 = asym_terms(lambda a, b: clayton_terms(a, b, alpha), lx, ly, theta, delta)
    dens = np.exp(k_logc - lx - ly) * (k12 + k1 * k2)
    d12 = dens / r - d1 * d2
    return logc, d1, d2, d12


def _check_alpha_nonneg(alpha):
    if not np.isfinite(alpha) or alpha < 0.0:
        raise CopulaDomainError(f"alpha must be >= 0, got {alpha}")


@dataclass(frozen=True)
class Clayton(CopulaModel):
    """Clayton copula, lower tail index 2**(-1/alpha)."""

    alpha: float
    family: ClassVar[Family] = Family.CLAYTON

    def __post_init__(self):
        _check_alpha_nonneg(self.alpha)

    @property
    def params(self):
        return {"alpha": self.alpha}

    def log_terms(self, lu, lv):
        return clayton_terms(lu, lv, self.alpha)


@dataclass(frozen=True)
class ClaytonSurvival(CopulaModel):
    """Survival Clayton copula, upper tail index 2**(-1/alpha)."""

    alpha: float
    family: ClassVar[Family] = Family.CLAYTON_SURVIVAL

    def __post_init__(self):
        _check_alpha_nonneg(self.alpha)

    @property
    def params(self):
        return {"alpha": self.alpha}

    def log_terms(self, lu, lv):
        return survival_clayton_terms(lu, lv, self.alpha)


@dataclass(frozen=True)
class Gumbel(CopulaModel):
    """Gumbel copula in the 0 < alpha <= 1 parametrization (alpha=1 independence)."""

    alpha: float
    family: ClassVar[Family] = Family.GUMBEL
    max_stable: ClassVar[bool] = True

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise CopulaDomainError(f"Gumbel alpha must lie in (0, 1], got {self.alpha}")

    @property
    def params(self):
        return {"alpha": self.alpha}

    def log_terms(self, lu, lv):
        return gumbel_terms(lu, lv, self.alpha)


@dataclass(frozen=True)
class Plackett(CopulaModel):
    alpha: float
    family: ClassVar[Family] = Family.PLACKETT

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha <= -1.0:
            raise CopulaDomainError(f"Plackett alpha must exceed -1, got {self.alpha}")

    @property
    def params(self):
        return {"alpha": self.alpha}

    def log_terms(self, lu, lv):
        return plackett_terms(lu, lv, self.alpha)


class GeneratorKind(str, enum.Enum):
    GAMMA_LT = "gamma"
    POSITIVE_STABLE_LT = "positive_stable"


@dataclass(frozen=True)
class GeneratorSpec:
    """Archimedean generator phi with inverse phi^-1 the Laplace transform of the frailty."""

    kind: GeneratorKind
    param: float

    def __post_init__(self):
        if self.kind is GeneratorKind.GAMMA_LT and not self.param > 0.0:
            raise CopulaDomainError("Gamma generator needs a positive parameter")
        if self.kind is GeneratorKind.POSITIVE_STABLE_LT and not (0.0 < self.param <= 1.0):
            raise CopulaDomainError("positive-stable generator needs 0 < param <= 1")

    def phi(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            if self.kind is GeneratorKind.GAMMA_LT:
                out = np.expm1(-self.param * np.log(s))
            else:
                out = (-np.log(s)) ** (1.0 / self.param)
        return _scalarize(out, s)

    def phi_inv(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind is GeneratorKind.GAMMA_LT:
            out = np.exp(-np.log1p(t) / self.param)
        else:
            out = np.exp(-(t**self.param))
        return _scalarize(out, t)

    def archimedean(self) -> CopulaModel:
        if self.kind is GeneratorKind.GAMMA_LT:
            return Clayton(self.param)
        return Gumbel(self.param)


def clayton_cdf(u, v, alpha):
    return Clayton(alpha).cdf(u, v)


def clayton_survival_cdf(u, v, alpha):
    return ClaytonSurvival(alpha).cdf(u, v)


def gumbel_cdf(u, v, alpha):
    return Gumbel(alpha).cdf(u, v)


def plackett_cdf(u, v, alpha):
    return Plackett(alpha).cdf(u, v)


def density(model: CopulaModel, u, v):
    return model.density(u, v)


def conditional_cdf(model: CopulaModel, u, v):
    return model.conditional_cdf(u, v)


def fd_density(model: CopulaModel, u, v, h=None):
    """Central finite-difference mixed partial of the cdf (validation route)."""
    u, v = _as_arrays(u, v)
    if h is None:
        h = 1e-4 * np.minimum(np.minimum(u, 1 - u), np.minimum(v, 1 - v))
        h = np.maximum(h, 1e-6)
    cdf = model.cdf
    num = cdf(u + h, v + h) - cdf(u + h, v - h) - cdf(u - h, v + h) + cdf(u - h, v - h)
    return _scalarize(num / (4.0 * h * h), u)
