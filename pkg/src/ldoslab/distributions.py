"""Width estimation and (periodized) Lorentzian line shapes on the circle."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

WIDTH_FRACTION = 0.7


def wrap_angle(x):
    """Reduce angles into [-pi, pi)."""
    x = np.asarray(x, dtype=float)
    y = np.mod(x + np.pi, 2 * np.pi) - np.pi
    return np.where(y >= np.pi, -np.pi, y)


@dataclass(frozen=True, eq=False)
class WeightedCircularSample:
    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = wrap_angle(np.ravel(self.values))
        w = np.asarray(np.ravel(self.weights), dtype=float)
        if v.shape != w.shape:
            raise ValueError("values and weights differ in length")
        if v.size == 0:
            raise ValueError("empty sample")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if not w.sum() > 0:
            raise ValueError("total weight must be positive")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    @classmethod
    def unweighted(cls, values):
        values = np.ravel(values)
        return cls(values, np.ones(values.shape))

    @property
    def total(self):
        return float(self.weights.sum())


@dataclass(frozen=True)
class LorentzianParams:
    gamma: float
    center: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")


def circular_mean(sample: WeightedCircularSample) -> float:
    return float(np.angle(np.sum(sample.weights * np.exp(1j * sample.values))))


def width_70(sample: WeightedCircularSample, fraction: float = WIDTH_FRACTION) -> float:
    """Half-width of the arc around the circular mean holding ``fraction`` of the weight.

    Exact weighted quantile of |wrap(omega - mean)|, no interpolation: the
    sample that crosses the threshold is included.
    """
    mu = circular_mean(sample)
    dev = np.abs(wrap_angle(sample.values - mu))
    order = np.argsort(dev, kind="stable")
    cum = np.cumsum(sample.weights[order])
    # relative slack so an exact tie at the threshold does not depend on weight scale
    idx = int(np.searchsorted(cum, fraction * cum[-1] * (1 - 1e-12), side="left"))
    return float(dev[order][min(idx, len(dev) - 1)])


def lorentzian_pdf(params: LorentzianParams, omega):
    """Breit-Wigner density gamma / (pi ((omega - center)^2 + gamma^2))."""
    g = params.gamma
    x = np.asarray(omega, dtype=float) - params.center
    return g / (np.pi * (x * x + g * g))


def periodized_lorentzian_pdf(gamma, omega, center=0.0):
    """Lorentzian summed over all 2 pi images, in closed form (wrapped Cauchy)."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    x = np.asarray(omega, dtype=float) - center
    # sinh/(cosh - cos) in exp(-gamma) form: finite for large gamma, and the
    # expm1 / sin^2 split avoids cancellation for small gamma
    e = math.exp(-gamma)
    d = -math.expm1(-gamma)
    return -math.expm1(-2 * gamma) / (2 * np.pi * (d * d + 4 * e * np.sin(0.5 * x) ** 2))


def _periodized_mass(gamma, s):
    # symmetric about the peak, so integrate one side with the peak at an endpoint
    # breakpoints at multiples of gamma resolve a narrow peak
    pts = [c * gamma for c in (1.0, 10.0, 100.0) if c * gamma < s] or None
    val, _ = integrate.quad(lambda x: periodized_lorentzian_pdf(gamma, x), 0.0, s, epsabs=1e-14, epsrel=1e-11, limit=200, points=pts)
    return 2.0 * val


def periodized_width_exact(gamma: float, fraction: float = WIDTH_FRACTION) -> float:
    """70% half-width of the periodized Lorentzian, by inverting its integrated mass."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return optimize.brentq(lambda s: _periodized_mass(gamma, s) - fraction, 0.0, np.pi, xtol=1e-14, rtol=1e-14)


def histogram(sample: WeightedCircularSample, bins: int = 256):
    """Normalized density of the sample on [-pi, pi); returns (centers, density)."""
    edges = np.linspace(-np.pi, np.pi, bins + 1)
    h, _ = np.histogram(sample.values, bins=edges, weights=sample.weights)
    width = edges[1] - edges[0]
    return 0.5 * (edges[1:] + edges[:-1]), h / (h.sum() * width)


class FitError(RuntimeError):
    def __init__(self, msg, best):
        super().__init__(msg)
        self.best = best


@dataclass(frozen=True)
class PeriodizedFit:
    gamma: float
    center: float
    residual: float  # root-mean-square of density residuals

    def curve(self, omega):
        return periodized_lorentzian_pdf(self.gamma, omega, self.center)


def fit_periodized_lorentzian(centers, density, gamma0: float = 0.3, center0: float = 0.0, weights=None, max_nfev: int = 2000) -> PeriodizedFit:
    """Least-squares fit of a periodized Lorentzian to a normalized histogram."""
    centers = np.asarray(centers, dtype=float)
    density = np.asarray(density, dtype=float)
    if np.count_nonzero(density > 0) < 8:
        raise ValueError("need at least 8 bins with positive mass")
    sw = np.ones_like(density) if weights is None else np.sqrt(np.asarray(weights, dtype=float))

    def resid(x):
        return sw * (periodized_lorentzian_pdf(math.exp(x[0]), centers, x[1]) - density)

    # log-gamma keeps the width positive without bounds
    res = optimize.least_squares(resid, [math.log(gamma0), center0], max_nfev=max_nfev, xtol=1e-12, ftol=1e-12)
    g = math.exp(res.x[0])
    center = float(wrap_angle(res.x[1]))
    rms = float(np.sqrt(np.mean((periodized_lorentzian_pdf(g, centers, center) - density) ** 2)))
    fit = PeriodizedFit(g, center, rms)
    if not res.success:
        raise FitError(f"fit did not converge: {res.message}", fit)
    return fit


def periodized_lorentzian_cdf(gamma, omega, center=0.0):
    """Mass of the periodized Lorentzian on [center - pi, omega], omega within pi of center."""
    x = np.asarray(omega, dtype=float) - center
    c = 1.0 / math.tanh(0.5 * gamma)
    # atan2 keeps the branch continuous for |x| < 2 pi
    return 0.5 + np.arctan2(c * np.sin(0.5 * x), np.cos(0.5 * x)) / np.pi


def _cell_masses(params: LorentzianParams, x, h):
    xc = wrap_angle(x - params.center)
    return periodized_lorentzian_cdf(params.gamma, xc + 0.5 * h) - periodized_lorentzian_cdf(params.gamma, xc - 0.5 * h)


def convolve_circular(f: LorentzianParams, g: LorentzianParams, n: int = 2**12):
    """Circular convolution of two periodized Lorentzians on an n-point grid.

    Each density is discretized by its exact mass per grid cell, so a very
    narrow factor acts as the identity. Returns (omega, density) with
    omega ascending over [-pi, pi).
    """
    h = 2 * np.pi / n
    x = np.arange(n) * h
    a = _cell_masses(f, x, h)
    b = _cell_masses(g, x, h)
    conv = np.real(np.fft.ifft(np.fft.fft(a) * np.fft.fft(b))) / h
    # grid point m sits at m h; rotate to start at -pi
    omega = x - np.pi
    return omega, np.roll(conv, -(n // 2))
