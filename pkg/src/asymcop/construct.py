"""Asymmetrization and frailty-mixture transforms of base copulas."""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .core import (
    LIMIT_TOL,
    Clayton,
    CopulaDomainError,
    CopulaModel,
    Family,
    GeneratorKind,
    GeneratorSpec,
    asym_terms,
    survival_clayton_terms,
)


@dataclass(frozen=True)
class AsymmetryParams:
    theta: float = 1.0
    delta: float = 1.0

    def __post_init__(self):
        for name in ("theta", "delta"):
            x = getattr(self, name)
            if not (0.0 <= x <= 1.0):
                raise CopulaDomainError(f"{name} must lie in [0, 1], got {x}")

    @property
    def is_identity(self) -> bool:
        return self.theta >= 1.0 - LIMIT_TOL and self.delta >= 1.0 - LIMIT_TOL


@dataclass(frozen=True)
class MixtureParams:
    beta: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.beta) or self.beta < 0.0:
            raise CopulaDomainError(f"beta must be >= 0, got {self.beta}")

    @property
    def is_identity(self) -> bool:
        return self.beta <= LIMIT_TOL


@dataclass(frozen=True)
class Asymmetrized(CopulaModel):
    """Khoudraji product u^(1-theta) v^(1-delta) C(u^theta, v^delta)."""

    base: CopulaModel
    theta: float
    delta: float
    family: ClassVar[Family] = Family.ASYMMETRIZED

    def __post_init__(self):
        AsymmetryParams(self.theta, self.delta)

    @property
    def max_stable(self):
        return self.base.max_stable

    @property
    def inner(self):
        return self.base

    @property
    def params(self):
        return {"theta": self.theta, "delta": self.delta}

    def log_terms(self, lu, lv):
        return asym_terms(self.base.log_terms, lu, lv, self.theta, self.delta)


@dataclass(frozen=True)
class SurvivalAsymmetrizedClayton(CopulaModel):
    """u + v - 1 + S(1-u, 1-v) with S the asymmetrized Clayton copula.

    The exponents act on the survival arguments (1-u, 1-v); with
    theta = delta = 1 this is the survival Clayton copula.
    """

    alpha: float
    theta: float
    delta: float
    family: ClassVar[Family] = Family.ASYMMETRIZED

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha < 0.0:
            raise CopulaDomainError(f"alpha must be >= 0, got {self.alpha}")
        AsymmetryParams(self.theta, self.delta)

    @property
    def inner(self):
        return Clayton(self.alpha)

    @property
    def params(self):
        return {"theta": self.theta, "delta": self.delta, "alpha": self.alpha}

    def describe(self):
        return (
            f"survival_asymmetrized(theta={self.theta:.6g}, delta={self.delta:.6g})"
            f"[clayton(alpha={self.alpha:.6g})]"
        )

    def log_terms(self, lu, lv):
        return survival_clayton_terms(lu, lv, self.alpha, self.theta, self.delta)


@dataclass(frozen=True)
class FrailtyMixed(CopulaModel):
    """Gamma-frailty mixture phi^-1(-log K(exp(-phi(u)), exp(-phi(v)))).

    phi(s) = s^-beta - 1, so phi^-1(t) = (1+t)^(-1/beta). With K the
    independence copula this is Clayton(beta).
    """

    base: CopulaModel
    beta: float
    family: ClassVar[Family] = Family.FRAILTY_MIXED

    def __post_init__(self):
        MixtureParams(self.beta)
        if self.beta <= 0.0:
            raise CopulaDomainError("beta must be positive; use the inner model for beta = 0")

    @property
    def inner(self):
        return self.base

    @property
    def params(self):
        return {"beta": self.beta}

    @property
    def generator(self) -> GeneratorSpec:
        return GeneratorSpec(GeneratorKind.GAMMA_LT, self.beta)

    def log_terms(self, lu, lv):
        beta = self.beta
        gu = -np.expm1(-beta * lu)
        gv = -np.expm1(-beta * lv)
        logk, k1, k2, k12 = self.base.log_terms(gu, gv)
        big_l = -logk
        log1p_l = np.log1p(big_l)
        eu = np.exp(-beta * lu - log1p_l)
        ev = np.exp(-beta * lv - log1p_l)
        d1 = k1 * eu
        d2 = k2 * ev
        d12 = beta * eu * np.exp(-beta * lv) * (k12 + k1 * k2 / (1.0 + big_l))
        return -log1p_l / beta, d1, d2, d12


def asymmetrize(base: CopulaModel, p: AsymmetryParams) -> CopulaModel:
    if p.is_identity:
        return base
    return Asymmetrized(base, p.theta, p.delta)


def asymmetrize_one_sided(base: CopulaModel, delta: float, side: str = "v") -> CopulaModel:
    """v^(1-delta) C(u, v^delta); ``side="u"`` puts the exponent on u instead."""
    if side == "v":
        return asymmetrize(base, AsymmetryParams(1.0, delta))
    if side == "u":
        return asymmetrize(base, AsymmetryParams(delta, 1.0))
    raise ValueError(f"side must be 'u' or 'v', got {side!r}")


def asymmetrize_survival_clayton(alpha: float, theta: float, delta: float) -> CopulaModel:
    p = AsymmetryParams(theta, delta)
    model = SurvivalAsymmetrizedClayton(alpha, p.theta, p.delta)
    if p.is_identity:
        from .core import ClaytonSurvival

        return ClaytonSurvival(alpha)
    return model


def frailty_mix(inner: CopulaModel, m: MixtureParams) -> CopulaModel:
    if m.is_identity:
        return inner
    return FrailtyMixed(inner, m.beta)
