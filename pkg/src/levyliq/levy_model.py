"""Spectrally negative Levy models: Brownian motion with drift minus compound
Poisson claims whose sizes are exponential, Erlang-2, or finite mixtures."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as P

from .numerics import NumericalError

__all__ = [
    "Exponential",
    "Erlang2",
    "Mixture",
    "JumpLaw",
    "LevyModel",
    "laplace_exponent",
    "laplace_exponent_prime",
    "safety_loading",
    "phi",
    "levy_tail",
    "levy_density",
    "rational_form",
]


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("Exponential rate must be positive")

    def terms(self):
        # density as sum of coef * t**power * exp(-rate * t)
        return ((self.rate, 0, self.rate),)


@dataclass(frozen=True)
class Erlang2:
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("Erlang2 rate must be positive")

    def terms(self):
        return ((self.rate ** 2, 1, self.rate),)


@dataclass(frozen=True)
class Mixture:
    components: tuple[tuple[float, "JumpLaw"], ...]

    def __post_init__(self):
        comps = tuple((float(w), law) for w, law in self.components)
        if not comps:
            raise ValueError("Mixture needs at least one component")
        if any(w < 0 for w, _ in comps):
            raise ValueError("Mixture weights must be nonnegative")
        if abs(sum(w for w, _ in comps) - 1.0) > 1e-12:
            raise ValueError("Mixture weights must sum to 1")
        object.__setattr__(self, "components", comps)

    def terms(self):
        out = []
        for w, law in self.components:
            if w == 0:
                continue
            out.extend((w * c, k, r) for c, k, r in law.terms())
        return tuple(out)


JumpLaw = Union[Exponential, Erlang2, Mixture]


def _density(terms, t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    tp = t[pos]
    for c, k, r in terms:
        out[pos] += c * tp ** k * np.exp(-r * tp)
    return out


def _tail(terms, t):
    # mass of (t, inf); t <= 0 gives the full mass
    t = np.maximum(np.asarray(t, dtype=float), 0.0)
    out = np.zeros_like(t)
    for c, k, r in terms:
        if k == 0:
            out += c * np.exp(-r * t) / r
        else:
            out += c * np.exp(-r * t) * (t / r + 1.0 / r ** 2)
    return out


def _tail_integral(terms, t):
    # integral of the tail over (t, inf)
    t = np.maximum(np.asarray(t, dtype=float), 0.0)
    out = np.zeros_like(t)
    for c, k, r in terms:
        if k == 0:
            out += c * np.exp(-r * t) / r ** 2
        else:
            out += c * np.exp(-r * t) * (t / r ** 2 + 2.0 / r ** 3)
    return out


def _laplace(terms, theta):
    # E exp(-theta Y); valid for Re(theta) > -min rate
    theta = np.asarray(theta, dtype=complex)
    out = np.zeros_like(theta)
    for c, k, r in terms:
        out += c * math.factorial(k) / (r + theta) ** (k + 1)
    return out


def _laplace_weighted(terms, theta):
    # E[Y exp(-theta Y)]
    theta = np.asarray(theta, dtype=float)
    out = np.zeros_like(theta)
    for c, k, r in terms:
        out += c * math.factorial(k + 1) / (r + theta) ** (k + 2)
    return out


def jump_density(law: JumpLaw, t):
    return _density(law.terms(), t)


def jump_tail(law: JumpLaw, t):
    return _tail(law.terms(), t)


def jump_mean(law: JumpLaw) -> float:
    return float(sum(c * math.factorial(k + 1) / r ** (k + 2) for c, k, r in law.terms()))


@dataclass(frozen=True)
class LevyModel:
    """``X_t = x + drift t + sigma B_t - (compound Poisson claims)``.

    ``drift`` is the observable premium rate, so the Laplace exponent is
    ``drift th + sigma^2 th^2 / 2 + jump_rate (E exp(-th Y) - 1)`` with no
    small-jump compensator.
    """

    drift: float
    gaussian_sigma: float = 0.0
    jump_rate: float = 0.0
    jump_law: JumpLaw | None = None

    def __post_init__(self):
        if self.gaussian_sigma < 0:
            raise ValueError("gaussian_sigma must be >= 0")
        if self.jump_rate < 0:
            raise ValueError("jump_rate must be >= 0")
        if self.jump_rate > 0 and self.jump_law is None:
            raise ValueError("a positive jump_rate needs a jump_law")
        monotone = self.gaussian_sigma == 0 and not (self.drift > 0 and self.jump_rate > 0)
        if monotone:
            raise ValueError("model has monotone paths; need sigma > 0 or (drift > 0 and jumps)")

    @classmethod
    def from_components(cls, drift: float, sigma: float,
                        components: Iterable[tuple[float, JumpLaw]]) -> "LevyModel":
        """Build from per-law intensities, e.g. ``[(3, Erlang2(2)), (2, Exponential(1))]``."""
        comps = [(float(rate), law) for rate, law in components if rate > 0]
        total = sum(rate for rate, _ in comps)
        if total == 0:
            return cls(drift, sigma, 0.0, None)
        if len(comps) == 1:
            return cls(drift, sigma, total, comps[0][1])
        return cls(drift, sigma, total, Mixture(tuple((rate / total, law) for rate, law in comps)))

    def measure_terms(self):
        """Levy density as ``sum coef * t**power * exp(-rate t)`` triples."""
        if self.jump_rate == 0:
            return ()
        return tuple((self.jump_rate * c, k, r) for c, k, r in self.jump_law.terms())

    @property
    def min_jump_rate(self) -> float:
        """Slowest exponential decay rate of the Levy tail (inf without jumps)."""
        terms = self.measure_terms()
        return min((r for _, _, r in terms), default=math.inf)


def laplace_exponent(model: LevyModel, theta):
    """psi(theta) for real theta >= 0 (vectorized)."""
    th = np.asarray(theta, dtype=float)
    out = model.drift * th + 0.5 * model.gaussian_sigma ** 2 * th ** 2
    if model.jump_rate > 0:
        out = out + model.jump_rate * (np.real(_laplace(model.jump_law.terms(), th)) - 1.0)
    return out if np.ndim(out) else float(out)


def laplace_exponent_prime(model: LevyModel, theta):
    th = np.asarray(theta, dtype=float)
    out = model.drift + model.gaussian_sigma ** 2 * th
    if model.jump_rate > 0:
        out = out - model.jump_rate * _laplace_weighted(model.jump_law.terms(), th)
    return out if np.ndim(out) else float(out)


def safety_loading(model: LevyModel) -> float:
    """psi'(0+) = drift - jump_rate * E[Y]."""
    mean = jump_mean(model.jump_law) if model.jump_rate > 0 else 0.0
    return float(model.drift - model.jump_rate * mean)


def phi(model: LevyModel, q: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Right inverse Phi_q = sup{theta >= 0 : psi(theta) = q}.

    Brackets the root by doubling, then runs Newton steps that fall back to
    bisection whenever a step leaves the bracket.
    """
    if q < 0:
        raise ValueError("q must be >= 0")
    psi = lambda t: laplace_exponent(model, t)
    if q == 0 and safety_loading(model) >= 0:
        return 0.0
    lo = 0.0
    if q == 0:
        # psi dips below zero first; step right until it is negative
        t = 1e-8
        while psi(t) >= 0:
            t *= 2.0
            if t > 1e12:
                raise NumericalError("could not locate the negative lobe of psi")
        lo = t
    hi = max(1.0, 2.0 * lo)
    while psi(hi) <= q:
        lo = hi
        hi *= 2.0
        if hi > 1e15:
            raise NumericalError("could not bracket Phi_q", best_estimate=hi)
    t = hi
    for _ in range(max_iter):
        f = psi(t) - q
        if abs(f) <= tol * max(1.0, q):
            return float(t)
        if f > 0:
            hi = t
        else:
            lo = t
        d = laplace_exponent_prime(model, t)
        step = t - f / d if d > 0 else 0.5 * (lo + hi)
        t = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 1e-15 * max(1.0, hi):
            return float(t)
    raise NumericalError(f"Phi_q solver did not converge for q={q}",
                         best_estimate=t, achieved_error=abs(psi(t) - q))


def levy_tail(model: LevyModel, y):
    """Levy measure of (y, inf): jump_rate * P(Y > y)."""
    terms = model.measure_terms()
    if not terms:
        return np.zeros_like(np.asarray(y, dtype=float)) if np.ndim(y) else 0.0
    out = _tail(terms, y)
    return out if np.ndim(y) else float(out)


def levy_density(model: LevyModel, y):
    terms = model.measure_terms()
    out = _density(terms, y) if terms else np.zeros_like(np.asarray(y, dtype=float))
    return out if np.ndim(y) else float(out)


def levy_tail_integral(model: LevyModel, y):
    terms = model.measure_terms()
    out = _tail_integral(terms, y) if terms else np.zeros_like(np.asarray(y, dtype=float))
    return out if np.ndim(y) else float(out)


def rational_form(model: LevyModel, q: float) -> tuple[np.ndarray, np.ndarray]:
    """Polynomials ``(N, D)`` (ascending coefficients) with psi(t) - q = N(t) / D(t).

    ``D`` is the product of ``(r + t)**m`` over the distinct claim rates ``r``
    with the largest power ``m`` that any component needs at that rate.
    """
    terms = model.measure_terms()
    powers: dict[float, int] = {}
    for _, k, r in terms:
        powers[r] = max(powers.get(r, 0), k + 1)
    D = np.array([1.0])
    for r, m in powers.items():
        D = P.polymul(D, P.polypow([r, 1.0], m))
    base = np.array([-model.jump_rate - q, model.drift, 0.5 * model.gaussian_sigma ** 2])
    N = P.polymul(base, D)
    for c, k, r in terms:
        # c * k! / (r + t)**(k+1) times D
        rest = np.array([1.0])
        for r2, m2 in powers.items():
            rest = P.polymul(rest, P.polypow([r2, 1.0], m2 - (k + 1) if r2 == r else m2))
        N = P.polyadd(N, c * math.factorial(k) * rest)
    N = P.polytrim(N, tol=0)
    return np.asarray(N, dtype=float), np.asarray(D, dtype=float)
