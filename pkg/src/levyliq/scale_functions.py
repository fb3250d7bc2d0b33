"""q-scale functions of the rational Levy family as finite exponential sums.

For these models ``1 / (psi(t) - q) = D(t) / N(t)`` with polynomials ``N`` and
``D``, ``deg D < deg N``. Partial fractions give

    W_q(x) = sum_j C_j exp(theta_j x),   C_j = D(theta_j) / N'(theta_j),

where ``theta_j`` are the (simple) zeros of ``N``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as P

from .levy_model import LevyModel, laplace_exponent, laplace_exponent_prime, rational_form
from .numerics import NumericalError, poly_roots

__all__ = [
    "DegenerateRoots",
    "ExpSum",
    "ScaleFunction",
    "LaplaceReport",
    "build_scale",
    "eval_W",
    "eval_W_prime",
    "eval_Z",
    "verify_laplace_transform",
]

DEGENERACY_TOL = 1e-7


class DegenerateRoots(NumericalError):
    """Two zeros of the characteristic polynomial nearly coincide.

    The residue formula needs simple zeros; perturbing ``q`` by about 1e-9
    and rebuilding is the usual way out.
    """


@dataclass(frozen=True)
class ExpSum:
    """``f(x) = Re sum_i coefs[i] exp(rates[i] x)`` on ``x >= 0``.

    ``below`` is the constant value used for ``x < 0``.
    """

    coefs: np.ndarray
    rates: np.ndarray
    below: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        xs = np.maximum(x, 0.0)
        # factor out the dominant growth so other terms cannot overflow
        top = float(self.rates.real.max()) if self.rates.size else 0.0
        scaled = np.exp(np.multiply.outer(xs, self.rates - top)) @ self.coefs
        with np.errstate(over="ignore", invalid="ignore"):
            vals = np.exp(top * xs) * scaled.real
        out = np.where(x < 0, self.below, vals)
        return out if out.ndim else float(out)

    def scaled(self, x, shift: float):
        """``exp(-shift x) f(x)`` without forming ``exp(shift x)``."""
        x = np.asarray(x, dtype=float)
        xs = np.maximum(x, 0.0)
        vals = (np.exp(np.multiply.outer(xs, self.rates - shift)) @ self.coefs).real
        out = np.where(x < 0, self.below * np.exp(-shift * x), vals)
        return out if out.ndim else float(out)

    def __add__(self, other: "ExpSum") -> "ExpSum":
        return ExpSum(np.concatenate([self.coefs, other.coefs]),
                      np.concatenate([self.rates, other.rates]), self.below + other.below)

    def scale(self, k: float) -> "ExpSum":
        return ExpSum(k * self.coefs, self.rates, k * self.below)


@dataclass(frozen=True, eq=False)
class ScaleFunction:
    """``W_q`` of one model as an exponential sum.

    Attributes
    ----------
    q : float
    roots : ndarray of complex
        Zeros ``theta_j`` of ``N``, sorted by decreasing real part, so
        ``roots[0]`` is ``Phi_q``.
    coeffs : ndarray of complex
        Residues ``C_j``.
    model : LevyModel
    """

    q: float
    roots: np.ndarray
    coeffs: np.ndarray
    model: LevyModel

    @property
    def phi(self) -> float:
        return float(self.roots[0].real)

    @property
    def W(self) -> ExpSum:
        return ExpSum(self.coeffs, self.roots, 0.0)

    @property
    def W_prime(self) -> ExpSum:
        return ExpSum(self.coeffs * self.roots, self.roots, 0.0)

    @property
    def Z(self) -> ExpSum:
        if self.q == 0:
            return ExpSum(np.array([1.0 + 0j]), np.array([0.0 + 0j]), 1.0)
        # q / theta -> psi'(0) when Phi_q underflows to zero for tiny q
        safe = np.where(self.roots == 0, 1.0, self.roots)
        amp = np.where(self.roots == 0, self.coeffs * laplace_exponent_prime(self.model, 0.0),
                       self.q * self.coeffs / safe)
        const = 1.0 - amp.sum()
        return ExpSum(np.concatenate([amp, [const]]), np.concatenate([self.roots, [0.0]]), 1.0)

    def W_ratio(self, x, y):
        """``W_q(x) / W_q(y)`` for ``y > 0`` without overflow at large arguments."""
        f = self.W
        return np.exp(self.phi * (np.asarray(x, float) - y)) * f.scaled(x, self.phi) / f.scaled(y, self.phi)


def _check_distinct(roots: np.ndarray) -> None:
    scale = float(np.max(np.abs(roots)))
    diff = np.abs(roots[:, None] - roots[None, :])
    np.fill_diagonal(diff, np.inf)
    gap = float(diff.min()) if roots.size > 1 else np.inf
    if gap < DEGENERACY_TOL * scale:
        raise DegenerateRoots(f"nearly repeated zeros: min gap {gap:.3e}", best_estimate=roots,
                              achieved_error=gap)


@lru_cache(maxsize=512)
def build_scale(model: LevyModel, q: float) -> ScaleFunction:
    """Roots and residues of ``W_q`` for ``model``.

    Raises
    ------
    ValueError
        ``q < 0``.
    DegenerateRoots
        Two zeros closer than ``1e-7 * max |theta|``.
    NumericalError
        Root polishing failed or the largest real zero is missing.
    """
    q = float(q)
    if q < 0:
        raise ValueError("q must be >= 0")
    N, D = rational_form(model, q)
    roots = poly_roots(N)
    _check_distinct(roots)
    if abs(roots[0].imag) > 0 or roots[0].real < -1e-12:
        raise NumericalError("no nonnegative real zero found for Phi_q", best_estimate=roots)
    if q == 0 and abs(roots[0].real) < 1e-10:
        roots[0] = 0.0
    dN = P.polyder(N)
    coeffs = P.polyval(roots, D) / P.polyval(roots, dN)
    return ScaleFunction(q, roots, coeffs.astype(complex), model)


def eval_W(sf: ScaleFunction, x):
    """``W_q(x)``; zero for ``x < 0``."""
    return sf.W(x)


def eval_W_prime(sf: ScaleFunction, x):
    """``W_q'(x)`` for ``x > 0``; at ``x = 0`` this is the right derivative."""
    return sf.W_prime(x)


def eval_Z(sf: ScaleFunction, x):
    """``Z_q(x) = 1 + q int_0^x W_q``; one for ``x <= 0``."""
    return sf.Z(x)


@dataclass(frozen=True)
class LaplaceReport:
    thetas: np.ndarray
    rel_errors: np.ndarray
    tol: float

    @property
    def max_rel_error(self) -> float:
        return float(np.max(self.rel_errors))

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tol


def verify_laplace_transform(sf: ScaleFunction, theta_grid, tol: float = 1e-8) -> LaplaceReport:
    """Compare ``sum_j C_j / (theta - theta_j)`` with ``1 / (psi(theta) - q)``."""
    th = np.asarray(theta_grid, dtype=float)
    if np.any(th <= sf.phi):
        raise ValueError("every theta must exceed Phi_q")
    transform = (sf.coeffs[None, :] / (th[:, None] - sf.roots[None, :])).sum(axis=1)
    target = laplace_exponent(sf.model, th) - sf.q
    rel = np.abs(transform * target - 1.0)
    return LaplaceReport(th, rel, tol)
