"""Gerber-Shiu functional, joint law and probability of liquidation.

The surplus ``U`` follows the solvent model ``X`` until it drops below ``b``,
then the insolvent model ``X~``. An insolvent spell ends with recovery above
``c``, with liquidation when ``U`` goes below ``a``, or with liquidation when
an exponential grace clock of rate ``lam`` rings first. ``T`` is the
liquidation time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from numpy.polynomial import Chebyshev

from .fluctuation import OmegaKernel
from .levy_model import LevyModel, safety_loading
from .numerics import (DEFAULT_SPEC, NumericalError, QuadratureSpec, central_diff, integrate,
                       integrate_semi_inf)
from .scale_functions import build_scale

__all__ = [
    "BarrierSystem",
    "LiquidationProblem",
    "PenaltyFunction",
    "AtomPointError",
    "gerber_shiu",
    "joint_cdf",
    "joint_cdf_grid",
    "atom_at_a",
    "joint_density_numeric",
    "liquidation_laplace",
    "exit_before_liquidation",
    "liquidation_probability",
]

# stand-in for q = 0 where a formula needs q > 0
Q_FLOOR = 1e-8


@dataclass(frozen=True)
class BarrierSystem:
    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.a < self.b < self.c):
            raise ValueError(f"barriers must satisfy a < b < c, got a={self.a}, b={self.b}, c={self.c}")
        if not self.c > 0:
            raise ValueError(f"safety barrier c must be positive, got c={self.c}")


@dataclass(frozen=True)
class LiquidationProblem:
    solvent: LevyModel
    insolvent: LevyModel
    barriers: BarrierSystem
    grace_rate: float
    discount: float = 0.0
    start: float = 0.0

    def __post_init__(self):
        if not self.grace_rate > 0:
            raise ValueError("grace_rate must be positive")
        if self.discount < 0:
            raise ValueError("discount must be >= 0")
        if not self.start > self.barriers.b:
            raise ValueError("start must exceed the rehabilitation barrier b")
        if not safety_loading(self.solvent) > 0:
            raise ValueError("solvent model needs a positive safety loading")

    def at(self, **changes) -> "LiquidationProblem":
        return replace(self, **changes)


@dataclass(frozen=True)
class PenaltyFunction:
    """Bounded penalty ``f`` applied to the surplus at liquidation.

    ``func`` is vectorized. ``kinks`` lists points where ``f`` is not smooth.
    ``moments(a, r, k)`` returns ``int_0^inf t**k exp(-r t) f(a - t) dt`` for
    ``k`` in {0, 1}; it is computed by quadrature unless supplied.
    """

    func: Callable[[np.ndarray], np.ndarray]
    kinks: tuple[float, ...] = ()
    moments: Callable[[float, float, int], float] | None = field(default=None, compare=False)

    def __call__(self, u):
        return np.asarray(self.func(np.asarray(u, dtype=float)), dtype=float)

    def moment(self, a: float, r: float, k: int, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
        if self.moments is not None:
            return float(self.moments(a, r, k))
        kinks = [a - u for u in self.kinks if u < a]
        f = lambda t: t ** k * np.exp(-r * t) * self(a - t)
        return integrate_semi_inf(f, 0.0, 0.9 * r, spec.with_kinks(kinks))[0]

    @classmethod
    def constant(cls, value: float) -> "PenaltyFunction":
        mom = lambda a, r, k: value / r if k == 0 else value / r ** 2
        return cls(lambda u: np.full_like(u, value, dtype=float), (), mom)

    @classmethod
    def indicator(cls, level: float) -> "PenaltyFunction":
        """``f(u) = 1`` for ``u <= level``, else 0."""
        def mom(a, r, k):
            t0 = max(a - level, 0.0)
            e = math.exp(-r * t0)
            return e / r if k == 0 else e * (t0 / r + 1.0 / r ** 2)
        return cls(lambda u: (u <= level).astype(float), (level,), mom)


class AtomPointError(ValueError):
    """Density requested at the liquidation barrier, where ``U_T`` has an atom."""


class _Liquidation:
    """Scale functions and Omega evaluators shared by the formulas for one problem."""

    def __init__(self, problem: LiquidationProblem, q: float | None = None,
                 spec: QuadratureSpec = DEFAULT_SPEC):
        self.p = problem
        self.q = problem.discount if q is None else q
        self.lam = problem.grace_rate
        self.spec = spec
        br = problem.barriers
        self.a, self.b, self.c = br.a, br.b, br.c
        self.kern = OmegaKernel(problem.solvent, problem.insolvent, self.q, self.lam, self.b, spec)
        self.sf = self.kern.sf
        self.sft = self.kern.sf_tilde
        self.half_var_tilde = 0.5 * problem.insolvent.gaussian_sigma ** 2

    def omega(self, kind, w, x, z):
        return self.kern.value(kind, w, x, z)

    def recovery_factor(self, x, z):
        """``Omega_W(a,b,x,z) / (W~(c-a) - Omega_W(a,b,c,z))``: weight of restarting from ``c``."""
        a, c = self.a, self.c
        return self.omega("W", a, x, z) / (float(self.sft.W(c - a)) - self.omega("W", a, c, z))

    # -- Gerber-Shiu building blocks --------------------------------------

    def _tail_penalty(self, model: LevyModel, f: PenaltyFunction, y):
        # int_{y-a}^inf f(y - theta) upsilon(d theta), from per-rate moments of f below a
        y = np.asarray(y, dtype=float)
        d = y - self.a
        out = np.zeros_like(y)
        for coef, k, r in model.measure_terms():
            m0 = f.moment(self.a, r, 0, self.spec)
            poly = m0 if k == 0 else d * m0 + f.moment(self.a, r, 1, self.spec)
            out = out + coef * np.exp(-r * d) * poly
        return out

    def creeping(self, x0, top, z):
        """Discounted mass of liquidation by creeping onto ``a``, first spell from ``x0``."""
        if self.half_var_tilde == 0:
            return 0.0
        a = self.a
        ratio = float(self.sft.W_prime(top - a)) / float(self.sft.W(top - a))
        return self.half_var_tilde * (self.omega("W_prime", a, x0, z) - self.omega("W", a, x0, z) * ratio)

    def block(self, f: PenaltyFunction, x0: float, top: float, z: float) -> float:
        """Penalty collected during the first solvent stretch and insolvent spell from ``x0``.

        ``top`` is the level ending the spell: ``c`` or ``z``, whichever is lower.
        """
        a, b, lam = self.a, self.b, self.lam
        sf, sft = self.sf, self.sft
        total = float(f(a)) * self.creeping(x0, top, z)

        om_a = self.omega("W", a, x0, z)
        w_top = float(sft.W(top - a))

        def spell_integrand(y):
            omega_y = np.array([self.omega("W", yi, x0, z) for yi in y])
            bracket = om_a * sft.W(top - y) / w_top - omega_y
            weight = self._tail_penalty(self.p.insolvent, f, y) + lam * f(y)
            return weight * bracket

        kinks = [b] + [k for k in f.kinks]
        total += integrate(spell_integrand, a, top, self.spec.with_kinks(kinks))[0]

        wx = float(sf.W(x0 - b))

        def jump_integrand(y):
            bracket = sf.W_ratio(z - y, z - b) * wx - sf.W(x0 - y)
            return self._tail_penalty(self.p.solvent, f, y) * bracket

        total += integrate(jump_integrand, b, z, self.spec.with_kinks([x0]))[0]
        return total

    def _spell_bracket(self, x0: float, top: float, z: float):
        a = self.a
        om_a = self.omega("W", a, x0, z)
        w_top = float(self.sft.W(top - a))

        def bracket(y):
            y = np.atleast_1d(np.asarray(y, dtype=float))
            omega_y = np.array([self.omega("W", yi, x0, z) for yi in y])
            return om_a * self.sft.W(top - y) / w_top - omega_y

        return bracket

    def indicator_blocks(self, levels: np.ndarray, x0: float, top: float, z: float) -> np.ndarray:
        """:meth:`block` for ``f = 1{u <= level}`` at many levels at once.

        The level enters only through the moments of ``f`` below ``a`` and
        through the cutoff of ``int_a^level bracket``, so the bracket is fitted
        once per smooth piece ``[a, b]``, ``[b, top]`` by Chebyshev series.
        """
        a, b, lam = self.a, self.b, self.lam
        levels = np.asarray(levels, dtype=float)
        bracket = self._spell_bracket(x0, top, z)
        fits = [_cheb_fit(bracket, a, b), _cheb_fit(bracket, b, top)]
        anti = [fit.integ(lbnd=lo) for fit, lo in zip(fits, (a, b))]
        first_piece = float(anti[0](b))

        def fitted(y):
            return np.where(y <= b, fits[0](y), fits[1](y))

        cut = np.clip(levels, a, top)
        spell_mass = np.where(cut <= b, anti[0](np.minimum(cut, b)),
                              first_piece + anti[1](np.maximum(cut, b)))
        total = np.where(levels >= a, self.creeping(x0, top, z), 0.0) + lam * spell_mass

        wx = float(self.sf.W(x0 - b))

        def jump_bracket(y):
            return self.sf.W_ratio(z - y, z - b) * wx - self.sf.W(x0 - y)

        pieces = ((self.p.insolvent, fitted, a, top, [b]), (self.p.solvent, jump_bracket, b, z, [x0]))
        for model, g, lo, hi, kinks in pieces:
            for coef, k, r in model.measure_terms():
                spec = self.spec.with_kinks(kinks)
                mom = [integrate(lambda y, j=j: coef * np.exp(-r * (y - a)) * (y - a) ** j * g(y),
                                 lo, hi, spec)[0] for j in range(k + 1)]
                m0 = np.array([PenaltyFunction.indicator(v).moment(a, r, 0) for v in levels])
                if k == 0:
                    total = total + m0 * mom[0]
                else:
                    m1 = np.array([PenaltyFunction.indicator(v).moment(a, r, 1) for v in levels])
                    total = total + m0 * mom[1] + m1 * mom[0]
        return total

    def gerber_shiu(self, f: PenaltyFunction, x: float, z: float) -> float:
        c = self.c
        val = self.block(f, x, min(c, z), z)
        if z > c:
            val += self.recovery_factor(x, z) * self.block(f, c, c, z)
        return val

    # -- Laplace transform of T -------------------------------------------

    def laplace(self, x: float, z: float) -> float:
        q, lam, a, b, c = self.q, self.lam, self.a, self.b, self.c
        sf, sft = self.sf, self.sft
        zc = float(sft.Z(c - a)) / float(sft.W(c - a))
        w_ca = float(sft.W(c - a))

        def piece(x0):
            om_w = self.omega("W", a, x0, z)
            om_z = self.omega("Z", a, x0, z)
            first = q / (q + lam) * (om_z - zc * om_w)
            second = lam / (q + lam) * (float(sf.Z(x0 - b)) - float(sf.Z(z - b)) * float(sf.W_ratio(x0 - b, z - b))
                                        - om_w / w_ca)
            return first + second

        return piece(x) + self.recovery_factor(x, z) * piece(c)


def _check_range(problem: LiquidationProblem, z: float) -> None:
    if not problem.start <= z:
        raise ValueError("need start <= z")


def gerber_shiu(problem: LiquidationProblem, f: PenaltyFunction, z: float,
                spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``E_x[exp(-q T) f(U_T); T < zeta_z^+]`` for ``b < x <= z``."""
    _check_range(problem, z)
    return _Liquidation(problem, spec=spec).gerber_shiu(f, problem.start, z)


def joint_cdf(problem: LiquidationProblem, u: float, z: float,
              spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``E_x[exp(-q T); U_T <= u, sup_{t<=T} U_t < z]``.

    Zero for ``z <= x``: the running maximum already equals ``x``.
    """
    if z <= problem.start:
        return 0.0
    level = min(u, problem.barriers.c, z)
    return gerber_shiu(problem, PenaltyFunction.indicator(level), z, spec)


def joint_cdf_grid(problem: LiquidationProblem, us, zs,
                   spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """:func:`joint_cdf` on the grid ``us x zs``; returns shape ``(len(us), len(zs))``."""
    us = np.atleast_1d(np.asarray(us, dtype=float))
    zs = np.atleast_1d(np.asarray(zs, dtype=float))
    out = np.zeros((us.size, zs.size))
    liq = _Liquidation(problem, spec=spec)
    x, c = problem.start, liq.c
    for j, z in enumerate(zs):
        if z <= x:
            continue
        levels = np.minimum(us, min(c, z))
        col = liq.indicator_blocks(levels, x, min(c, z), z)
        if z > c:
            col = col + liq.recovery_factor(x, z) * liq.indicator_blocks(levels, c, c, z)
        out[:, j] = col
    return out


def _cheb_fit(g, lo: float, hi: float, tol: float = 1e-13) -> Chebyshev:
    """Chebyshev interpolant of a smooth ``g`` on ``[lo, hi]``, degree doubled until the tail is negligible."""
    for deg in (16, 32, 64, 128):
        fit = Chebyshev.interpolate(g, deg, domain=[lo, hi])
        size = max(float(np.abs(fit.coef).max()), 1e-300)
        if float(np.abs(fit.coef[-3:]).max()) <= tol * size:
            return fit
    raise NumericalError(f"Chebyshev fit on [{lo}, {hi}] did not resolve the integrand",
                         best_estimate=fit, achieved_error=float(np.abs(fit.coef[-3:]).max()))


def atom_at_a(problem: LiquidationProblem, z: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``E_x[exp(-q T); U_T = a, sup U < z]``: liquidation by creeping onto ``a``."""
    if not z > problem.start:
        raise ValueError("atom_at_a needs z > start")
    liq = _Liquidation(problem, spec=spec)
    x, c = problem.start, liq.c
    val = liq.creeping(x, min(c, z), z)
    if z > c:
        val += liq.recovery_factor(x, z) * liq.creeping(c, c, z)
    return val


def joint_density_numeric(problem: LiquidationProblem, u: float, z: float, h: float = 1e-3,
                          spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Mixed central difference of :func:`joint_cdf` in ``u`` and ``z``."""
    if not h > 0:
        raise ValueError("h must be positive")
    if abs(u - problem.barriers.a) <= 2 * h:
        raise AtomPointError("U_T has an atom at a; use atom_at_a for that mass")
    if z - h <= problem.start:
        raise ValueError("z - h must exceed the start")

    def in_u(zz):
        return central_diff(lambda uu: joint_cdf(problem, uu, zz, spec), u, h)

    return central_diff(in_u, z, h)


def liquidation_laplace(problem: LiquidationProblem, z: float,
                        spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``E_x[exp(-q T); T < zeta_z^+]`` for ``c < z`` and ``b < x <= z``.

    ``q = 0`` is evaluated at ``q = 1e-8``.
    """
    if not z > problem.barriers.c:
        raise ValueError("liquidation_laplace needs z > c")
    _check_range(problem, z)
    q = problem.discount if problem.discount > 0 else Q_FLOOR
    return _Liquidation(problem, q=q, spec=spec).laplace(problem.start, z)


def exit_before_liquidation(problem: LiquidationProblem, z: float,
                            spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``E_x[exp(-q zeta_z^+); zeta_z^+ < T]`` for ``z > c``."""
    if not z > problem.barriers.c:
        raise ValueError("exit_before_liquidation needs z > c")
    _check_range(problem, z)
    liq = _Liquidation(problem, spec=spec)
    b, c, x = liq.b, liq.c, problem.start
    sf = liq.sf
    return float(sf.W_ratio(x - b, z - b) + liq.recovery_factor(x, z) * sf.W_ratio(c - b, z - b))


def liquidation_probability(problem: LiquidationProblem, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``P_x(T < inf)`` (undiscounted, no upper level)."""
    liq = _Liquidation(problem, q=0.0, spec=spec)
    a, b, c, x = liq.a, liq.b, liq.c, problem.start
    W = liq.sf.W
    om_x = liq.kern.value_inf("W", a, x)
    om_c = liq.kern.value_inf("W", a, c)
    denom = float(liq.sft.W(c - a)) - om_c
    if not denom > 0:
        raise NumericalError("recovery denominator is not positive", best_estimate=denom)
    val = 1.0 - safety_loading(problem.solvent) * (float(W(x - b)) + float(W(c - b)) * om_x / denom)
    # clip absorbs cancellation of order 1e-15 far above the barriers
    return min(max(val, 0.0), 1.0)
