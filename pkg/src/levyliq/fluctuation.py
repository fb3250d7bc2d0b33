"""Exit identities and convolution kernels built on the scale functions.

``omega_small`` / ``ell_small`` are the two-rate kernels
``W_p(w+x) - (p-q) int_0^x W_p(s+w) W_q(x-s) ds`` (and the ``Z_p`` analogue).
``omega_big`` is the discounted expectation of ``phi_{q+lam}(X(tau_b^-) - w)`` on
``{tau_b^- < tau_z^+}``, split into a creeping term and an overshoot integral
against the Levy measure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .levy_model import LevyModel, levy_tail
from .numerics import DEFAULT_SPEC, QuadratureSpec, expm1_over, integrate, integrate_semi_inf
from .scale_functions import ExpSum, ScaleFunction, build_scale

__all__ = [
    "PhiKind",
    "OmegaArgs",
    "OmegaKernel",
    "convolve",
    "omega_small",
    "ell_small",
    "exit_up",
    "exit_down",
    "resolvent_density",
    "omega_big",
    "omega_big_inf",
    "omega_big_scaleform",
]

PhiKind = Literal["W", "W_prime", "Z"]


def convolve(f: ExpSum, g: ExpSum, length, lead=0.0, lag=0.0):
    """``int_0^L f(s + lead) g(L - s + lag) ds`` in closed form.

    Requires ``L, lead, lag >= 0`` so neither factor leaves its exponential-sum
    branch. Each pair of terms contributes
    ``a b exp(alpha lead + beta (L + lag)) L phi1((alpha - beta) L)`` with
    ``phi1(t) = (exp(t) - 1) / t``; when ``Re(alpha) > Re(beta)`` the
    equivalent ``a b exp(alpha (L + lead) + beta lag) L phi1((beta - alpha) L)``
    is used so ``phi1`` never overflows.
    """
    L = np.asarray(length, dtype=float)
    lead = np.asarray(lead, dtype=float)
    lag = np.asarray(lag, dtype=float)
    if np.any(L < 0) or np.any(lead < 0) or np.any(lag < 0):
        raise ValueError("convolve needs nonnegative length, lead and lag")
    L, lead, lag = np.broadcast_arrays(L, lead, lag)
    alpha = f.rates[:, None]
    beta = g.rates[None, :]
    amp = f.coefs[:, None] * g.coefs[None, :]
    Le = L[..., None, None]
    le, lg = lead[..., None, None], lag[..., None, None]
    fwd = (alpha.real <= beta.real)
    expo = np.where(fwd, alpha * le + beta * (Le + lg), alpha * (Le + le) + beta * lg)
    gap = np.where(fwd, alpha - beta, beta - alpha) * Le
    terms = amp * np.exp(expo) * Le * expm1_over(gap)
    out = terms.sum(axis=(-2, -1)).real
    return out if out.ndim else float(out)


def _same_model(sf_q: ScaleFunction, sf_p: ScaleFunction) -> None:
    if sf_q.model != sf_p.model:
        raise ValueError("both scale functions must come from the same model")


def omega_small(sf_q: ScaleFunction, sf_p: ScaleFunction, w: float, x: float, form: int = 1) -> float:
    """Two-rate kernel ``omega^{(q,p)}(w, x)``.

    ``form=1`` integrates over ``(0, x)`` against ``W_p(. + w)``; ``form=2``
    writes it as ``W_q(x + w)`` plus an integral over ``(0, w)``. The two are
    algebraically equal and serve as cross-checks of each other.
    """
    _same_model(sf_q, sf_p)
    if not x > 0 or w < 0:
        raise ValueError("omega_small needs x > 0 and w >= 0")
    dp = sf_p.q - sf_q.q
    if form == 1:
        return sf_p.W(w + x) - dp * convolve(sf_p.W, sf_q.W, x, lead=w)
    if form == 2:
        return sf_q.W(x + w) + dp * convolve(sf_p.W, sf_q.W, w, lag=x)
    raise ValueError("form must be 1 or 2")


def ell_small(sf_q: ScaleFunction, sf_p: ScaleFunction, w: float, x: float, form: int = 1) -> float:
    """``ell^{(q,p)}(w, x)``: ``omega_small`` with ``Z_p`` in place of ``W_p``."""
    _same_model(sf_q, sf_p)
    if not x > 0 or w < 0:
        raise ValueError("ell_small needs x > 0 and w >= 0")
    dp = sf_p.q - sf_q.q
    if form == 1:
        return sf_p.Z(w + x) - dp * convolve(sf_p.Z, sf_q.W, x, lead=w)
    if form == 2:
        return sf_q.Z(x + w) + dp * convolve(sf_p.Z, sf_q.W, w, lag=x)
    raise ValueError("form must be 1 or 2")


def exit_up(model: LevyModel, q: float, x: float, w: float) -> float:
    """``E_x[exp(-q tau_w^+); tau_w^+ < tau_0^-] = W_q(x) / W_q(w)``."""
    if not w > 0 or x > w:
        raise ValueError("exit_up needs w > 0 and x <= w")
    if x < 0:
        return 0.0
    return float(build_scale(model, q).W_ratio(x, w))


def exit_down(model: LevyModel, q: float, x: float, w: float) -> float:
    """``E_x[exp(-q tau_0^-); tau_0^- < tau_w^+] = Z_q(x) - Z_q(w) W_q(x) / W_q(w)``."""
    if not w > 0 or x > w:
        raise ValueError("exit_down needs w > 0 and x <= w")
    sf = build_scale(model, q)
    if x < 0:
        return 1.0
    return float(sf.Z(x) - sf.Z(w) * sf.W_ratio(x, w))


def resolvent_density(model: LevyModel, q: float, x, y, w: float):
    """Discounted occupation density of ``y`` before leaving ``[0, w]`` from ``x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not w > 0 or np.any((x < 0) | (x > w) | (y < 0) | (y > w)):
        raise ValueError("resolvent_density needs 0 <= x, y <= w and w > 0")
    sf = build_scale(model, q)
    out = sf.W(x) * sf.W_ratio(w - y, w) - sf.W(x - y)
    return out if np.ndim(out) else float(out)


def _ramp(z):
    # int_0^1 v exp(z v) dv
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-3
    zs = z[small]
    out[small] = 0.5 + zs / 3.0 + zs ** 2 / 8.0 + zs ** 3 / 30.0
    zb = z[~small]
    out[~small] = (np.exp(zb) * (zb - 1.0) + 1.0) / zb ** 2
    return out


def overshoot_kernel(model: LevyModel, phi: ExpSum, s: float, y):
    """``g(y) = int_{(y, inf)} phi(y + s - theta) upsilon(d theta)`` in closed form.

    ``phi`` equals its constant ``below`` on negative arguments, so the
    measure beyond ``y + max(s, 0)`` contributes ``below`` times the tail.
    The remaining window ``(y, y + s)`` is integrated termwise against the
    ``coef * theta**k * exp(-r theta)`` pieces of the Levy density.
    """
    y = np.asarray(y, dtype=float)
    out = phi.below * levy_tail(model, y + max(s, 0.0)) if phi.below else np.zeros_like(y)
    if s > 0:
        for c, k, r in model.measure_terms():
            kappa = r + phi.rates
            # exp(eta s) int_0^s u**j exp(-kappa u) du, reflected u -> s - u when
            # Re(kappa) < 0 so no exponential factor exceeds the true size
            fwd = kappa.real >= 0
            arg = np.where(fwd, -kappa * s, kappa * s)
            pre = c * phi.coefs * np.where(fwd, np.exp(phi.rates * s), np.exp(-r * s))
            p1 = s * expm1_over(arg)
            lin = np.sum(pre * p1).real
            if k == 0:
                part = np.exp(-r * y) * lin
            else:
                ramp = s * s * _ramp(arg)
                const = np.sum(pre * np.where(fwd, ramp, s * p1 - ramp)).real
                part = np.exp(-r * y) * (y * lin + const)
            out = out + part
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class OmegaArgs:
    w: float
    b: float
    x: float
    z: float
    q: float
    lam: float
    phi_kind: PhiKind = "W"

    def __post_init__(self):
        if not self.b < self.x <= self.z:
            raise ValueError("OmegaArgs needs b < x <= z")
        if self.q < 0 or self.lam < 0:
            raise ValueError("q and lam must be >= 0")
        if self.phi_kind not in ("W", "W_prime", "Z"):
            raise ValueError("phi_kind must be 'W', 'W_prime' or 'Z'")


class OmegaKernel:
    """Evaluator of ``Omega_phi(w, b, x, z)`` for fixed models, rates and ``b``.

    Scale functions are built once; ``value`` may then be called many times,
    which is what the Gerber-Shiu integrals over ``w`` need.
    """

    def __init__(self, solvent: LevyModel, insolvent: LevyModel, q: float, lam: float, b: float,
                 spec: QuadratureSpec = DEFAULT_SPEC):
        self.solvent = solvent
        self.insolvent = insolvent
        self.q = float(q)
        self.lam = float(lam)
        self.b = float(b)
        self.spec = spec
        self.sf = build_scale(solvent, self.q)
        self.sf_tilde = build_scale(insolvent, self.q + self.lam)
        self.half_var = 0.5 * solvent.gaussian_sigma ** 2

    def phi_func(self, kind: PhiKind) -> ExpSum:
        return {"W": self.sf_tilde.W, "W_prime": self.sf_tilde.W_prime, "Z": self.sf_tilde.Z}[kind]

    def _creep_factor(self, kind: PhiKind, w: float) -> float:
        if self.half_var == 0:
            return 0.0
        s = self.b - w
        phi = self.phi_func(kind)
        return self.half_var * (float(phi(s)) if s >= 0 else phi.below)

    def value(self, kind: PhiKind, w: float, x: float, z: float) -> float:
        """``Omega_phi(w, b, x, z)``; ``z = inf`` gives the upper-level-free limit."""
        if math.isinf(z):
            return self.value_inf(kind, w, x)
        b, sf = self.b, self.sf
        if not b < x <= z:
            raise ValueError("Omega needs b < x <= z")
        xb, zb = x - b, z - b
        phi = self.phi_func(kind)
        s = b - w
        creep = self._creep_factor(kind, w)
        if creep:
            creep *= float(sf.W_prime(xb)) - float(sf.W(xb)) * float(sf.W_prime(zb)) / float(sf.W(zb))
        if not self.solvent.measure_terms():
            return creep

        def integrand(y):
            bracket = sf.W_ratio(zb - y, zb) * float(sf.W(xb)) - sf.W(xb - y)
            return overshoot_kernel(self.solvent, phi, s, y) * bracket

        val, _ = integrate(integrand, 0.0, zb, self.spec.with_kinks([xb]))
        return creep + val

    def value_inf(self, kind: PhiKind, w: float, x: float) -> float:
        """``lim_{z -> inf} Omega_phi(w, b, x, z)``."""
        b, sf = self.b, self.sf
        if not x > b:
            raise ValueError("Omega needs x > b")
        xb = x - b
        phi = self.phi_func(kind)
        s = b - w
        Wx = float(sf.W(xb))
        creep = self._creep_factor(kind, w)
        if creep:
            creep *= float(sf.W_prime(xb)) - sf.phi * Wx
        if not self.solvent.measure_terms():
            return creep

        def integrand(y):
            return overshoot_kernel(self.solvent, phi, s, y) * (np.exp(-sf.phi * y) * Wx - sf.W(xb - y))

        head, _ = integrate(integrand, 0.0, xb, self.spec)
        # beyond x-b the integrand is g(y) exp(-Phi y) W(x-b); g decays at the slowest claim rate
        rate = 0.9 * (sf.phi + self.solvent.min_jump_rate)
        tail, _ = integrate_semi_inf(integrand, xb, rate, self.spec)
        return creep + head + tail


def omega_big(solvent: LevyModel, insolvent: LevyModel, args: OmegaArgs,
              spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``E_x[exp(-q tau_b^-) phi_{q+lam}(X(tau_b^-) - w); tau_b^- < tau_z^+]``.

    ``X`` is the solvent model; ``phi`` is ``W``, ``W'`` or ``Z`` of the
    insolvent model at rate ``q + lam``.
    """
    kern = OmegaKernel(solvent, insolvent, args.q, args.lam, args.b, spec)
    return kern.value(args.phi_kind, args.w, args.x, args.z)


def omega_big_inf(solvent: LevyModel, insolvent: LevyModel, w: float, b: float, x: float,
                  q: float, lam: float, phi_kind: PhiKind = "W",
                  spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Limit of :func:`omega_big` as ``z -> inf``."""
    return OmegaKernel(solvent, insolvent, q, lam, b, spec).value_inf(phi_kind, w, x)


def omega_big_scaleform(model: LevyModel, w: float, b: float, x: float, z: float, q: float,
                        lam: float, phi_kind: Literal["W", "Z"] = "W") -> float:
    """Single-model ``Omega`` written with scale functions only.

    ``phi_{q+lam}(x-w) - lam int_b^x W_q(x-y) phi_{q+lam}(y-w) dy`` minus
    ``W_q(x-b)/W_q(z-b)`` times the same expression at ``z``. Needs ``w <= b``.
    """
    if math.isinf(z):
        raise ValueError("use omega_big_inf for z = inf")
    if not b < x <= z:
        raise ValueError("Omega needs b < x <= z")
    if w > b:
        raise ValueError("omega_big_scaleform needs w <= b")
    sf = build_scale(model, q)
    sfp = build_scale(model, q + lam)
    phi = sfp.W if phi_kind == "W" else sfp.Z
    s = b - w

    def part(level):
        return phi(level - w) - lam * convolve(phi, sf.W, level - b, lead=s)

    return float(part(x) - sf.W_ratio(x - b, z - b) * part(z))
