"""Event-time distributions for the simulation scenarios.

Parameter conventions (each is pinned by a sampler-versus-CDF test, so the
code is the authoritative definition):

* ``Exponential(rate)``: hazard ``rate``, ``S(t) = exp(-rate*t)``.
* ``Weibull(shape, scale)``: ``S(t) = exp(-(t/scale)^shape)``.
* ``Gompertz(shape, rate)``: hazard ``rate * exp(shape*t)``, so
  ``S(t) = exp(-(rate/shape) * (exp(shape*t) - 1))``.
* ``LogNormal(meanlog, sdlog)``: log of the time is normal.
* ``PiecewiseExponential(breaks, rates)``: constant hazard per segment.
* ``WeibullUniformComposite``: one continuous survival function that
  follows a Weibull curve, then declines linearly with a uniform density
  over a middle window, then resumes the Weibull hazard (tail rescaled to
  keep the curve continuous).

All sampling is inverse-CDF based on the supplied generator, so a fixed
seed reproduces draws exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as _st

__all__ = [
    "EventDistribution",
    "Exponential",
    "Weibull",
    "Gompertz",
    "LogNormal",
    "PiecewiseExponential",
    "WeibullUniformComposite",
]


class EventDistribution:
    """Interface: sampling plus closed-form survival/CDF."""

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def survival(self, t):
        raise NotImplementedError

    def cdf(self, t):
        return 1.0 - self.survival(t)

    def quad_points(self) -> tuple[float, ...]:
        """Kink locations to pass to adaptive quadrature."""
        return ()

    def spec(self) -> dict:
        """Serializable description for the scenario manifest."""
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(EventDistribution):
    rate: float

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("rate must be positive")

    def sample(self, rng, size):
        return rng.exponential(1.0 / self.rate, size)

    def survival(self, t):
        return np.exp(-self.rate * np.asarray(t, dtype=np.float64))

    def spec(self):
        return {"family": "exponential", "rate": self.rate}


@dataclass(frozen=True)
class Weibull(EventDistribution):
    shape: float
    scale: float

    def __post_init__(self):
        if self.shape <= 0 or self.scale <= 0:
            raise ValueError("shape and scale must be positive")

    def sample(self, rng, size):
        return self.scale * rng.weibull(self.shape, size)

    def survival(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.exp(-np.power(np.maximum(t, 0.0) / self.scale, self.shape))

    def spec(self):
        return {"family": "weibull", "shape": self.shape, "scale": self.scale}


@dataclass(frozen=True)
class Gompertz(EventDistribution):
    shape: float
    rate: float

    def __post_init__(self):
        if self.shape <= 0 or self.rate <= 0:
            raise ValueError("shape and rate must be positive")

    def sample(self, rng, size):
        u = 1.0 - rng.random(size)  # in (0, 1]
        return np.log1p(-(self.shape / self.rate) * np.log(u)) / self.shape

    def survival(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.exp(-(self.rate / self.shape) * np.expm1(self.shape * t))

    def spec(self):
        return {"family": "gompertz", "shape": self.shape, "rate": self.rate}


@dataclass(frozen=True)
class LogNormal(EventDistribution):
    meanlog: float
    sdlog: float

    def __post_init__(self):
        if self.sdlog <= 0:
            raise ValueError("sdlog must be positive")

    def sample(self, rng, size):
        return rng.lognormal(self.meanlog, self.sdlog, size)

    def survival(self, t):
        t = np.asarray(t, dtype=np.float64)
        with np.errstate(divide="ignore"):
            z = (np.log(np.maximum(t, 0.0)) - self.meanlog) / self.sdlog
        return np.where(t <= 0, 1.0, _st.norm.sf(z))

    def spec(self):
        return {"family": "lognormal", "meanlog": self.meanlog, "sdlog": self.sdlog}


@dataclass(frozen=True)
class PiecewiseExponential(EventDistribution):
    """Constant hazard ``rates[k]`` on ``[breaks[k-1], breaks[k])``."""

    breaks: tuple[float, ...]
    rates: tuple[float, ...]

    def __post_init__(self):
        breaks = tuple(float(b) for b in self.breaks)
        rates = tuple(float(r) for r in self.rates)
        if len(rates) != len(breaks) + 1:
            raise ValueError("need one more rate than breaks")
        if any(r <= 0 for r in rates):
            raise ValueError("rates must be positive")
        if any(b <= 0 for b in breaks) or list(breaks) != sorted(breaks):
            raise ValueError("breaks must be positive and increasing")
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "rates", rates)

    def _cum_hazard_at_breaks(self):
        edges = np.concatenate(([0.0], np.asarray(self.breaks)))
        seg = np.diff(edges) * np.asarray(self.rates[:-1])
        return edges, np.concatenate(([0.0], np.cumsum(seg)))

    def cum_hazard(self, t):
        t = np.asarray(t, dtype=np.float64)
        edges, cumh = self._cum_hazard_at_breaks()
        idx = np.clip(np.searchsorted(edges, t, side="right") - 1, 0, len(edges) - 1)
        rates = np.asarray(self.rates)
        return cumh[idx] + rates[idx] * (t - edges[idx])

    def sample(self, rng, size):
        e = rng.exponential(1.0, size)
        edges, cumh = self._cum_hazard_at_breaks()
        idx = np.clip(np.searchsorted(cumh, e, side="right") - 1, 0, len(cumh) - 1)
        rates = np.asarray(self.rates)
        return edges[idx] + (e - cumh[idx]) / rates[idx]

    def survival(self, t):
        return np.exp(-self.cum_hazard(np.maximum(np.asarray(t, dtype=np.float64), 0.0)))

    def quad_points(self):
        return self.breaks

    def spec(self):
        return {
            "family": "piecewise-exponential",
            "breaks": list(self.breaks),
            "rates": list(self.rates),
        }


@dataclass(frozen=True)
class WeibullUniformComposite(EventDistribution):
    """Weibull head, linear (uniform-density) middle, rescaled Weibull tail.

    The middle segment runs on ``(seg_start, seg_end]`` with density
    ``1/(unif_hi - unif_lo)``; the tail keeps the Weibull hazard shape and
    is rescaled so the survival function stays continuous.
    """

    shape: float
    scale: float
    seg_start: float
    seg_end: float
    unif_lo: float
    unif_hi: float

    def __post_init__(self):
        if not 0 < self.seg_start < self.seg_end:
            raise ValueError("need 0 < seg_start < seg_end")
        if self.unif_hi <= self.unif_lo:
            raise ValueError("need unif_hi > unif_lo")
        if self._s_mid_end() <= 0:
            raise ValueError("middle segment exhausts all survival mass")

    def _weib(self):
        return Weibull(self.shape, self.scale)

    def _density(self) -> float:
        return 1.0 / (self.unif_hi - self.unif_lo)

    def _s_head_end(self) -> float:
        return float(self._weib().survival(self.seg_start))

    def _s_mid_end(self) -> float:
        return self._s_head_end() - self._density() * (self.seg_end - self.seg_start)

    def _tail_factor(self) -> float:
        return self._s_mid_end() / float(self._weib().survival(self.seg_end))

    def survival(self, t):
        t = np.asarray(t, dtype=np.float64)
        w = self._weib()
        head = w.survival(t)
        mid = self._s_head_end() - self._density() * (t - self.seg_start)
        tail = self._tail_factor() * w.survival(t)
        return np.where(
            t <= self.seg_start, head, np.where(t <= self.seg_end, mid, tail)
        )

    def sample(self, rng, size):
        u = 1.0 - rng.random(size)  # target survival level in (0, 1]
        q0 = self._s_head_end()
        q1 = self._s_mid_end()
        with np.errstate(divide="ignore"):
            head = self.scale * np.power(-np.log(u), 1.0 / self.shape)
            mid = self.seg_start + (q0 - u) / self._density()
            tail = self.scale * np.power(
                -np.log(u / self._tail_factor()), 1.0 / self.shape
            )
        return np.where(u >= q0, head, np.where(u >= q1, mid, tail))

    def quad_points(self):
        return (self.seg_start, self.seg_end)

    def spec(self):
        return {
            "family": "weibull-uniform-composite",
            "shape": self.shape,
            "scale": self.scale,
            "segment": [self.seg_start, self.seg_end],
            "uniform_support": [self.unif_lo, self.unif_hi],
        }
