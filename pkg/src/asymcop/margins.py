"""Semi-parametric margins: empirical body, generalized Pareto tail.

The tail uses the shape sign where k > 0 gives a bounded (Weibull-type) tail:

    F(x) = 1 - (1 - u0) * [1 - k (x - x0) / sigma]_+ ** (1 / k),   x >= x0

which is the common GPD with xi = -k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CLIP = 1e-12
MIN_SAMPLE = 100
MIN_EXCEEDANCES = 30


class MarginFitError(ValueError):
    pass


@dataclass(frozen=True)
class MarginModel:
    threshold: float
    u0: float
    scale: float
    shape: float
    sorted_sample: np.ndarray

    @property
    def n(self) -> int:
        return len(self.sorted_sample)

    @property
    def upper_endpoint(self) -> float:
        if self.shape > 0.0:
            return self.threshold + self.scale / self.shape
        return np.inf

    def to_dict(self, include_sample: bool = True) -> dict:
        out = {
            "threshold": self.threshold,
            "u0": self.u0,
            "scale": self.scale,
            "shape": self.shape,
            "n": self.n,
        }
        if include_sample:
            out["sorted_sample"] = self.sorted_sample.tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> MarginModel:
        return cls(
            float(d["threshold"]),
            float(d["u0"]),
            float(d["scale"]),
            float(d["shape"]),
            np.asarray(d["sorted_sample"], dtype=float),
        )

    def cdf(self, x):
        return margin_cdf(self, x)

    def quantile(self, p):
        return margin_quantile(self, p)


def gpd_moments(excess) -> tuple[float, float]:
    """Moment estimates (sigma, k) from threshold excesses.

    With mean m and variance s2: sigma = m (m^2/s2 + 1) / 2, k = (m^2/s2 - 1) / 2.
    """
    excess = np.asarray(excess, dtype=float)
    m = excess.mean()
    s2 = excess.var(ddof=1)
    if not s2 > 0.0:
        raise MarginFitError("threshold excesses have zero variance")
    ratio = m * m / s2
    return 0.5 * m * (ratio + 1.0), 0.5 * (ratio - 1.0)


def gpd_tail_cdf(y, scale, shape):
    """P(Y <= y) for an excess y >= 0 (conditional on exceeding the threshold)."""
    y = np.asarray(y, dtype=float)
    if abs(shape) < 1e-12:
        return -np.expm1(-y / scale)
    base = np.maximum(1.0 - shape * y / scale, 0.0)
    with np.errstate(divide="ignore"):
        return -np.expm1(np.log(base) / shape)


def gpd_tail_quantile(p, scale, shape):
    p = np.asarray(p, dtype=float)
    if abs(shape) < 1e-12:
        return -scale * np.log1p(-p)
    return -scale * np.expm1(shape * np.log1p(-p)) / shape


def fit_margin(data, threshold_quantile: float = 0.90, dither_halfwidth: float = 0.0, rng=None) -> MarginModel:
    """Empirical cdf below the threshold, moment-fitted GPD above it.

    ``dither_halfwidth`` adds uniform noise on [-w, w] (use 0.5 for
    integer-recorded variables) before anything else.
    """
    x = np.asarray(data, dtype=float)
    x = x[np.isfinite(x)]
    if len(x) < MIN_SAMPLE:
        raise MarginFitError(f"need at least {MIN_SAMPLE} observations, got {len(x)}")
    if not (0.5 < threshold_quantile < 1.0):
        raise MarginFitError(f"threshold quantile must lie in (0.5, 1), got {threshold_quantile}")
    if dither_halfwidth < 0.0:
        raise MarginFitError("dither half-width must be nonnegative")
    if dither_halfwidth > 0.0:
        rng = np.random.default_rng(rng)
        x = x + rng.uniform(-dither_halfwidth, dither_halfwidth, size=len(x))
    xs = np.sort(x)
    n = len(xs)
    x0 = float(np.quantile(xs, threshold_quantile))
    excess = xs[xs > x0] - x0
    if len(excess) < MIN_EXCEEDANCES:
        raise MarginFitError(f"only {len(excess)} exceedances above the threshold (need {MIN_EXCEEDANCES})")
    scale, shape = gpd_moments(excess)
    u0 = np.searchsorted(xs, x0, side="right") / (n + 1.0)
    return MarginModel(x0, float(u0), float(scale), float(shape), xs)


def margin_cdf(m: MarginModel, x):
    x = np.asarray(x, dtype=float)
    body = np.searchsorted(m.sorted_sample, x, side="right") / (m.n + 1.0)
    body = np.minimum(body, m.u0)
    excess = np.maximum(x - m.threshold, 0.0)
    tail = m.u0 + (1.0 - m.u0) * gpd_tail_cdf(excess, m.scale, m.shape)
    out = np.where(x <= m.threshold, body, tail)
    out = np.clip(out, CLIP, 1.0 - CLIP)
    return float(out) if out.ndim == 0 else out


def margin_quantile(m: MarginModel, p):
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0.0) | (p >= 1.0)):
        raise ValueError("probabilities must lie in (0, 1)")
    idx = np.clip(np.ceil(p * (m.n + 1.0)).astype(int) - 1, 0, m.n - 1)
    body = m.sorted_sample[idx]
    tail_p = np.clip((p - m.u0) / (1.0 - m.u0), 0.0, 1.0)
    tail = m.threshold + gpd_tail_quantile(tail_p, m.scale, m.shape)
    out = np.where(p < m.u0, np.minimum(body, m.threshold), tail)
    return float(out) if out.ndim == 0 else out


def sample_gpd_excess(n: int, scale: float, shape: float, rng) -> np.ndarray:
    rng = np.random.default_rng(rng)
    return gpd_tail_quantile(rng.uniform(size=n), scale, shape)
