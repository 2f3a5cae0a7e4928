"""Tail-dependence indices, the logistic Pickands function and Kendall's tau."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .construct import Asymmetrized, FrailtyMixed, SurvivalAsymmetrizedClayton
from .core import (
    Clayton,
    ClaytonSurvival,
    CopulaDomainError,
    CopulaModel,
    Gumbel,
    Independence,
)

DEFAULT_LOWER_PROBES = (1e-2, 1e-4, 1e-6)
DEFAULT_UPPER_PROBES = (1 - 1e-2, 1 - 1e-4, 1 - 1e-6)


class NoClosedFormError(LookupError):
    """The requested quantity has no closed form for this model."""


class TailMethod(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    NUMERICAL_LIMIT = "numerical_limit"


@dataclass
class TailReport:
    lambda_upper: float | None = None
    lambda_lower: float | None = None
    method: TailMethod = TailMethod.CLOSED_FORM
    probe_points: list[tuple[float, float]] = field(default_factory=list)
    monotone: bool = True
    candidates: dict[str, float] = field(default_factory=dict)

    @property
    def last_ratio(self) -> float | None:
        return self.probe_points[-1][1] if self.probe_points else None

    def to_dict(self) -> dict:
        return {
            "lambda_upper": self.lambda_upper,
            "lambda_lower": self.lambda_lower,
            "method": self.method.value,
            "probe_points": [list(p) for p in self.probe_points],
            "monotone": self.monotone,
            "candidates": dict(self.candidates),
        }


def lambda_upper_clayton_survival(alpha: float) -> float:
    if not alpha > 0.0:
        raise CopulaDomainError(f"alpha must be positive, got {alpha}")
    if math.isinf(alpha):
        return 1.0
    return 2.0 ** (-1.0 / alpha)


def lambda_lower_clayton(alpha: float) -> float:
    return lambda_upper_clayton_survival(alpha)


def lambda_upper_gumbel(alpha: float) -> float:
    if not (0.0 < alpha <= 1.0):
        raise CopulaDomainError(f"Gumbel alpha must lie in (0, 1], got {alpha}")
    return 2.0 - 2.0**alpha


def frailty_gumbel_r(alpha: float, theta: float) -> float:
    """Diagonal exponent r with u^(1-theta) C_G(u^theta, u) = u^r."""
    return 1.0 - theta + (theta ** (1.0 / alpha) + 1.0) ** alpha


def _misprinted_r(alpha: float, theta: float) -> float:
    return 1.0 - theta + (theta**alpha + 1.0) ** (1.0 / alpha)


def lambda_lower_frailty_gumbel(
    alpha: float, theta: float, beta: float, probes=DEFAULT_LOWER_PROBES
) -> TailReport:
    """Lower tail of the Gamma-frailty mixture of u^(1-theta) C_G(u^theta, v).

    Under the (1+t)^(-1/beta) generator used throughout the package the limit
    is r^(-1/beta); the r^(-beta) variants belong to the (1+t)^(-beta)
    convention. All four combinations are returned, labelled, together with
    the diagonal probe sequence.
    """
    if not (0.0 < alpha <= 1.0):
        raise CopulaDomainError(f"alpha must lie in (0, 1], got {alpha}")
    if not (0.0 <= theta <= 1.0):
        raise CopulaDomainError(f"theta must lie in [0, 1], got {theta}")
    if not beta > 0.0:
        raise CopulaDomainError(f"beta must be positive, got {beta}")
    r = frailty_gumbel_r(alpha, theta)
    r_alt = _misprinted_r(alpha, theta)
    candidates = {
        "r": r,
        "r_alt": r_alt,
        "r^(-1/beta)": r ** (-1.0 / beta),
        "r^(-beta)": r ** (-beta),
        "r_alt^(-1/beta)": r_alt ** (-1.0 / beta),
        "r_alt^(-beta)": r_alt ** (-beta),
    }
    model = FrailtyMixed(Asymmetrized(Gumbel(alpha), theta, 1.0), beta) if alpha < 1.0 or theta < 1.0 else None
    if model is None:
        model = FrailtyMixed(Independence(), beta)
    probe = numerical_tail_probe(model, "lower", probes)
    return TailReport(
        lambda_lower=candidates["r^(-1/beta)"],
        method=TailMethod.CLOSED_FORM,
        probe_points=probe.probe_points,
        monotone=probe.monotone,
        candidates=candidates,
    )


def pickands_A_logistic(t, alpha: float, theta: float = 1.0, delta: float = 1.0):
    """Dependence function of u^(1-theta) v^(1-delta) C_G(u^theta, v^delta)."""
    if not (0.0 < alpha <= 1.0):
        raise CopulaDomainError(f"alpha must lie in (0, 1], got {alpha}")
    for name, x in (("theta", theta), ("delta", delta)):
        if not (0.0 <= x <= 1.0):
            raise CopulaDomainError(f"{name} must lie in [0, 1], got {x}")
    t = np.asarray(t, dtype=float)
    if np.any((t < 0.0) | (t > 1.0)):
        raise CopulaDomainError("t must lie in [0, 1]")
    a = (theta * t) ** (1.0 / alpha) + (delta * (1.0 - t)) ** (1.0 / alpha)
    out = (1.0 - theta) * t + (1.0 - delta) * (1.0 - t) + a**alpha
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TauValue:
    value: float
    is_bound: bool = False


def cuadras_auge_tau(theta: float, delta: float) -> float:
    den = theta + delta - theta * delta
    return 0.0 if den == 0.0 else theta * delta / den


def kendall_tau_closed(model: CopulaModel) -> TauValue:
    """Exact tau where available; the Cuadras-Auge ceiling for asymmetrized models."""
    if isinstance(model, Independence):
        return TauValue(0.0)
    if isinstance(model, (Clayton, ClaytonSurvival)):
        return TauValue(model.alpha / (model.alpha + 2.0))
    if isinstance(model, Gumbel):
        return TauValue(1.0 - model.alpha)
    if isinstance(model, (Asymmetrized, SurvivalAsymmetrizedClayton)):
        return TauValue(cuadras_auge_tau(model.theta, model.delta), is_bound=True)
    raise NoClosedFormError(f"no closed-form Kendall tau for {model.describe()}")


def kendall_tau_numeric(model: CopulaModel, n_nodes: int = 200) -> float:
    """tau = 1 - 4 * integral of dC/du * dC/dv over the unit square.

    Gauss-Legendre in a sine-squared substitution that clusters nodes at the
    edges, where the partial derivatives vary fastest.
    """
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    z = 0.5 * (x + 1.0)
    u = np.sin(0.5 * np.pi * z) ** 2
    wu = 0.5 * w * 0.5 * np.pi * np.sin(np.pi * z)
    uu, vv = np.meshgrid(u, u, indexing="ij")
    integrand = model.conditional_cdf(uu, vv) * model.partial_v(uu, vv)
    return float(1.0 - 4.0 * wu @ integrand @ wu)


def numerical_tail_probe(model: CopulaModel, side: str, probes=None) -> TailReport:
    """Diagonal ratios C(u,u)/u (lower) or (1-2u+C(u,u))/(1-u) (upper)."""
    if side not in ("lower", "upper"):
        raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")
    if probes is None:
        probes = DEFAULT_LOWER_PROBES if side == "lower" else DEFAULT_UPPER_PROBES
    probes = [float(p) for p in probes]
    if any(not (0.0 < p < 1.0) for p in probes):
        raise CopulaDomainError("probe points must lie strictly inside (0, 1)")
    pts = np.asarray(probes)
    if side == "lower":
        ratios = np.exp(np.asarray(model.log_cdf(pts, pts)) - np.log(pts))
    else:
        ratios = (1.0 - 2.0 * pts + np.asarray(model.cdf(pts, pts))) / (1.0 - pts)
    ratios = np.clip(ratios, 0.0, 1.0)
    diffs = np.diff(ratios)
    monotone = bool(np.all(diffs >= -1e-12) or np.all(diffs <= 1e-12))
    return TailReport(
        method=TailMethod.NUMERICAL_LIMIT,
        probe_points=[(p, float(r)) for p, r in zip(probes, ratios)],
        monotone=monotone,
    )
