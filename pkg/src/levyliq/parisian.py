"""Single-model specialization: the insolvent process equals the solvent one.

With ``b = 0`` and ``c -> 0`` the liquidation time becomes Parisian ruin with
exponential delays, optionally with a hard lower barrier ``a < 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fluctuation import convolve, ell_small, omega_big_scaleform, omega_small
from .levy_model import LevyModel, safety_loading
from .numerics import expm1_over
from .scale_functions import ExpSum, build_scale

__all__ = [
    "ParisianArgs",
    "k_function",
    "liquidation_laplace_single",
    "parisian_exit_laplace",
    "parisian_gs_density",
    "calH",
    "parisian_ruin_prob_barrier",
    "parisian_ruin_prob",
]


@dataclass(frozen=True)
class ParisianArgs:
    """``a = None`` means no lower barrier."""

    model: LevyModel
    q: float
    lam: float
    x: float
    a: float | None = None
    z: float | None = None

    def __post_init__(self):
        if self.q < 0:
            raise ValueError("q must be >= 0")
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if self.a is not None and not self.a < 0:
            raise ValueError("lower barrier a must be negative")
        if not self.x > 0:
            raise ValueError("x must be positive")
        if self.z is not None and not self.x <= self.z:
            raise ValueError("need x <= z")


def k_function(model: LevyModel, q: float, lam: float, a: float, b: float, x: float, z: float,
               c: float) -> float:
    """Scale-function form of the liquidation Laplace transform restricted to one spell."""
    if not (a < b < c < z and b < x <= z):
        raise ValueError("k_function needs a < b < c < z and b < x <= z")
    if not (q > 0 and lam > 0):
        raise ValueError("k_function needs q > 0 and lam > 0")
    sf = build_scale(model, q)
    sfp = build_scale(model, q + lam)
    om_w = omega_big_scaleform(model, a, b, x, z, q, lam, "W")
    om_z = omega_big_scaleform(model, a, b, x, z, q, lam, "Z")
    w_ca = float(sfp.W(c - a))
    first = q / (q + lam) * (om_z - float(sfp.Z(c - a)) / w_ca * om_w)
    second = lam / (q + lam) * (float(sf.Z(x - b)) - float(sf.Z(z - b)) * float(sf.W_ratio(x - b, z - b))
                                - om_w / w_ca)
    return first + second


def liquidation_laplace_single(model: LevyModel, q: float, lam: float, a: float, b: float, x: float,
                               z: float, c: float) -> float:
    """``E_x[exp(-q T); T < zeta_z^+]`` when both regimes follow ``model``."""
    sfp = build_scale(model, q + lam)
    om_x = omega_big_scaleform(model, a, b, x, z, q, lam, "W")
    om_c = omega_big_scaleform(model, a, b, c, z, q, lam, "W")
    restart = om_x / (float(sfp.W(c - a)) - om_c)
    return k_function(model, q, lam, a, b, x, z, c) + restart * k_function(model, q, lam, a, b, c, z, c)


def _kernels(args: ParisianArgs):
    if args.a is None or args.z is None:
        raise ValueError("this quantity needs both a lower barrier a and an upper level z")
    return build_scale(args.model, args.q), build_scale(args.model, args.q + args.lam)


def parisian_exit_laplace(args: ParisianArgs) -> tuple[float, float]:
    """Laplace transforms of Parisian ruin with lower barrier and of the up-exit.

    Returns ``(down, up)`` with
    ``down = E_x[exp(-q T_lam(a)); T_lam(a) < tau_z^+]`` and
    ``up = E_x[exp(-q tau_z^+); tau_z^+ < T_lam(a)]``.
    """
    sf, sfp = _kernels(args)
    q, lam, a, x, z = args.q, args.lam, args.a, args.x, args.z
    om_x = omega_small(sf, sfp, -a, x)
    om_z = omega_small(sf, sfp, -a, z)
    up = om_x / om_z
    down = (q / (q + lam) * (ell_small(sf, sfp, -a, x) - ell_small(sf, sfp, -a, z) * up)
            + lam / (q + lam) * (float(sf.Z(x)) - float(sf.Z(z)) * up))
    return float(down), float(up)


def parisian_gs_density(args: ParisianArgs, u: float) -> float:
    """Density in ``u`` of ``E_x[exp(-q tau_lam); X(tau_lam) in du, tau_lam < tau_a^- and tau_z^+]``.

    With ``a = None`` the lower barrier is removed and ``calH`` replaces the
    ``omega(-a, .)`` ratio.
    """
    if args.z is None:
        raise ValueError("parisian_gs_density needs an upper level z")
    model, q, lam, x, z = args.model, args.q, args.lam, args.x, args.z
    lo = -math.inf if args.a is None else args.a
    if not lo < u <= 0:
        raise ValueError("u must lie in (a, 0]")
    sf = build_scale(model, q)
    sfp = build_scale(model, q + lam)
    if args.a is None:
        ratio = calH(model, q, lam, x) / calH(model, q, lam, z)
    else:
        ratio = omega_small(sf, sfp, -args.a, x) / omega_small(sf, sfp, -args.a, z)
    return float(lam * (ratio * omega_small(sf, sfp, -u, z) - omega_small(sf, sfp, -u, x)))


def calH(model: LevyModel, q: float, lam: float, x: float) -> float:
    """``exp(P x) [1 - lam int_0^x exp(-P y) W_q(y) dy]`` with ``P = Phi_{q+lam}``."""
    if x < 0:
        raise ValueError("calH needs x >= 0")
    sf = build_scale(model, q)
    big_phi = build_scale(model, q + lam).phi
    # int_0^x exp((theta_j - P) y) dy = x phi1((theta_j - P) x)
    integral = (sf.coeffs * x * expm1_over((sf.roots - big_phi) * x)).sum().real
    return float(math.exp(big_phi * x) * (1.0 - lam * integral))


def parisian_ruin_prob_barrier(model: LevyModel, lam: float, a: float, x: float) -> float:
    """``P_x(T_lam(a) < inf) = 1 - psi'(0+) omega^{(0,lam)}(-a, x) / Z_lam(-a)``."""
    if not (a < 0 < x):
        raise ValueError("need a < 0 < x")
    loading = safety_loading(model)
    if not loading > 0:
        raise ValueError("needs a positive safety loading")
    sf = build_scale(model, 0.0)
    sfp = build_scale(model, lam)
    # clip absorbs cancellation of order 1e-15 far from the barrier
    return min(max(1.0 - loading * omega_small(sf, sfp, -a, x) / float(sfp.Z(-a)), 0.0), 1.0)


def parisian_ruin_prob(model: LevyModel, lam: float, x: float) -> float:
    """``P_x(tau_lam < inf)``: Parisian ruin with rate-``lam`` delays, no lower barrier.

    ``1 - psi'(0+) P / lam [exp(P x) - lam int_0^x exp(P s) W(x - s) ds]``
    with ``P = Phi_lam``.
    """
    if x < 0:
        raise ValueError("x must be >= 0")
    if not lam > 0:
        raise ValueError("lam must be positive")
    loading = safety_loading(model)
    if not loading > 0:
        raise ValueError("needs a positive safety loading")
    big_phi = build_scale(model, lam).phi
    W = build_scale(model, 0.0).W
    growth = ExpSum(np.array([1.0 + 0j]), np.array([big_phi + 0j]))
    bracket = math.exp(big_phi * x) - lam * convolve(growth, W, x)
    return min(max(1.0 - loading * big_phi / lam * bracket, 0.0), 1.0)
