"""Shared numerical kernels: polynomial roots, adaptive quadrature, differencing."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "NumericalError",
    "QuadratureSpec",
    "poly_roots",
    "integrate",
    "integrate_semi_inf",
    "central_diff",
    "expm1_over",
]


class NumericalError(RuntimeError):
    """A numerical routine failed to meet its tolerance.

    ``best_estimate`` and ``achieved_error`` carry whatever the routine had
    when it gave up, so callers can decide whether the result is usable.
    """

    def __init__(self, message: str, best_estimate=None, achieved_error=None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.achieved_error = achieved_error


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    kinks: tuple[float, ...] = field(default_factory=tuple)
    max_depth: int = 40

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        object.__setattr__(self, "kinks", tuple(sorted(float(k) for k in self.kinks)))

    def with_kinks(self, kinks: Sequence[float]) -> "QuadratureSpec":
        return QuadratureSpec(self.abs_tol, self.rel_tol, tuple(kinks), self.max_depth)


DEFAULT_SPEC = QuadratureSpec()


# ---------------------------------------------------------------------------
# polynomial roots


def _companion(monic: np.ndarray) -> np.ndarray:
    # monic: ascending coefficients with leading 1 dropped, length n
    n = monic.size
    mat = np.zeros((n, n), dtype=float)
    if n > 1:
        mat[1:, :-1] = np.eye(n - 1)
    mat[:, -1] = -monic
    return mat


def poly_roots(coeffs: Sequence[float], polish: bool = True, residual_tol: float = 1e-10) -> np.ndarray:
    """Roots of a real polynomial from the eigenvalues of its companion matrix.

    Parameters
    ----------
    coeffs : sequence of float
        Coefficients in ascending order, ``coeffs[k]`` multiplies ``t**k``
        (the ``numpy.polynomial`` convention). Degree 1 to 8.
    polish : bool
        Apply Newton steps to each eigenvalue on the original polynomial.
    residual_tol : float
        Bound on the residual ``|p(r)| / sum_k |c_k| max(1, |r|)**k``.

    Returns
    -------
    ndarray of complex
        All roots, conjugate-closed, sorted by decreasing real part.

    Raises
    ------
    ValueError
        Leading coefficient is zero or the degree is outside 1..8.
    NumericalError
        A root fails the residual test after polishing.
    """
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1 or c.size < 2:
        raise ValueError("need at least a degree-1 polynomial")
    if c[-1] == 0.0:
        raise ValueError("leading coefficient must be nonzero")
    deg = c.size - 1
    if deg > 8:
        raise ValueError(f"degree {deg} exceeds the supported maximum of 8")

    roots = np.linalg.eigvals(_companion(c[:-1] / c[-1])).astype(complex)
    dc = np.polynomial.polynomial.polyder(c)
    absc = np.abs(c)

    def backward_error(r):
        # normwise: |p(r)| relative to sum_k |c_k| max(1, |r|)**k
        num = abs(np.polynomial.polynomial.polyval(r, c))
        return num / np.polynomial.polynomial.polyval(max(1.0, abs(r)), absc)

    if polish:
        for k, r in enumerate(roots):
            err = backward_error(r)
            for _ in range(3):
                d = np.polynomial.polynomial.polyval(r, dc)
                if d == 0:
                    break
                r_new = r - np.polynomial.polynomial.polyval(r, c) / d
                err_new = backward_error(r_new)
                if err_new >= err:
                    break
                r, err = r_new, err_new
            roots[k] = r

    # restore exact conjugate symmetry for a real polynomial
    scale = max(1.0, float(np.max(np.abs(roots))))
    out = []
    used = np.zeros(roots.size, dtype=bool)
    for i, r in enumerate(roots):
        if used[i]:
            continue
        used[i] = True
        if abs(r.imag) <= 1e-12 * scale:
            out.append(complex(r.real, 0.0))
            continue
        cand = [j for j in range(roots.size) if not used[j]]
        j = min(cand, key=lambda j: abs(roots[j] - np.conj(r))) if cand else None
        if j is None:
            out.append(complex(r.real, 0.0))
            continue
        used[j] = True
        mid = 0.5 * (r + np.conj(roots[j]))
        out.extend([mid, np.conj(mid)])
    roots = np.array(out, dtype=complex)

    worst = max(backward_error(r) for r in roots)
    if worst > residual_tol:
        raise NumericalError(
            f"polynomial root residual {worst:.3e} exceeds {residual_tol:.1e}",
            best_estimate=roots,
            achieved_error=worst,
        )
    order = np.lexsort((-roots.imag, -roots.real))
    return roots[order]


# ---------------------------------------------------------------------------
# adaptive Gauss-Kronrod (7, 15)

_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_WK_FULL = np.concatenate([_WK[:-1], _WK[::-1]])
_WG_FULL = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes
_WG_FULL[[1, 3, 5]] = _WG[:3]
_WG_FULL[7] = _WG[3]
_WG_FULL[[9, 11, 13]] = _WG[:3][::-1]


def _gk_batch(f, lo: np.ndarray, hi: np.ndarray):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    if not np.all(np.isfinite(fx)):
        raise NumericalError("integrand returned a non-finite value")
    k = half * (fx @ _WK_FULL)
    g = half * (fx @ _WG_FULL)
    return k, np.abs(k - g)


def integrate(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
              spec: QuadratureSpec | None = None) -> tuple[float, float]:
    """Adaptive Gauss-Kronrod integral of a vectorized integrand.

    ``f`` receives a 1-d array of abscissae and must return an array of the
    same shape. The interval is split first at ``spec.kinks`` lying strictly
    inside ``(lo, hi)``; every subinterval whose error exceeds its
    length-proportional share of the tolerance is then bisected, all of them
    in one vectorized batch per round.

    Returns ``(value, err_est)``; raises :class:`NumericalError` carrying the
    best estimate when ``spec.max_depth`` rounds do not suffice.
    """
    spec = spec or DEFAULT_SPEC
    lo = float(lo)
    hi = float(hi)
    if hi < lo:
        raise ValueError("integrate requires lo <= hi")
    if hi == lo:
        return 0.0, 0.0
    pts = [lo] + [k for k in spec.kinks if lo < k < hi] + [hi]
    a = np.array(pts[:-1])
    b = np.array(pts[1:])
    vals, errs = _gk_batch(f, a, b)
    width = hi - lo
    done_val = 0.0
    done_err = 0.0
    for _ in range(spec.max_depth):
        total = done_val + vals.sum()
        tol = max(spec.abs_tol, spec.rel_tol * abs(total))
        total_err = done_err + errs.sum()
        if total_err <= tol:
            return float(total), float(total_err)
        share = tol * (b - a) / width
        bad = errs > share
        # converged pieces are retired to keep batches small
        done_val += vals[~bad].sum()
        done_err += errs[~bad].sum()
        a, b = a[bad], b[bad]
        m = 0.5 * (a + b)
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
        vals, errs = _gk_batch(f, a, b)
    total = done_val + vals.sum()
    total_err = done_err + errs.sum()
    tol = max(spec.abs_tol, spec.rel_tol * abs(total))
    if total_err <= tol:
        return float(total), float(total_err)
    raise NumericalError(
        f"quadrature on [{lo}, {hi}] did not converge: err {total_err:.2e} > tol {tol:.2e}",
        best_estimate=float(total),
        achieved_error=float(total_err),
    )


def integrate_semi_inf(f: Callable[[np.ndarray], np.ndarray], lo: float, decay_rate: float,
                       spec: QuadratureSpec | None = None,
                       bound_const: float | None = None) -> tuple[float, float]:
    """Integral of ``f`` over ``[lo, inf)`` with a certified truncation.

    The caller asserts ``|f(y)| <= C exp(-decay_rate * y)``. If ``bound_const``
    is omitted, ``C`` is estimated as ten times the largest value of
    ``|f(y)| exp(decay_rate * y)`` over a probe grid covering forty e-folds.
    The cut ``Y`` is placed where the tail bound ``C exp(-rate Y) / rate``
    drops below ``abs_tol / 10``.
    """
    spec = spec or DEFAULT_SPEC
    if not decay_rate > 0:
        raise ValueError("decay_rate must be positive")
    lo = float(lo)
    if bound_const is None:
        probe = lo + np.linspace(0.0, 40.0 / decay_rate, 161)
        fv = np.abs(np.asarray(f(probe), dtype=float))
        with np.errstate(over="ignore"):
            scaled = fv * np.exp(decay_rate * (probe - lo))
        c_lo = 10.0 * float(np.max(scaled))
    else:
        c_lo = float(bound_const) * math.exp(-decay_rate * lo)
    target = spec.abs_tol / 10.0
    if c_lo <= 0.0:
        cut = lo + 1.0 / decay_rate
    else:
        cut = lo + max(math.log(c_lo / (decay_rate * target)), 1.0) / decay_rate
    value, err = integrate(f, lo, cut, spec)
    tail = c_lo * math.exp(-decay_rate * (cut - lo)) / decay_rate
    return value, err + tail


def central_diff(f: Callable[[float], float], x: float, h: float, richardson: bool = False) -> float:
    """Symmetric difference quotient; ``richardson`` adds one halving step."""
    if not h > 0:
        raise ValueError("step h must be positive")
    d1 = (f(x + h) - f(x - h)) / (2.0 * h)
    if not richardson:
        return d1
    h2 = 0.5 * h
    d2 = (f(x + h2) - f(x - h2)) / (2.0 * h2)
    return (4.0 * d2 - d1) / 3.0


def expm1_over(z):
    """``(exp(z) - 1) / z`` for complex arrays, finite at ``z = 0``."""
    z = np.asarray(z, dtype=complex)
    out = np.ones_like(z)
    small = np.abs(z) < 1e-4
    zs = z[small]
    out[small] = 1.0 + zs / 2.0 + zs * zs / 6.0 + zs ** 3 / 24.0
    zb = z[~small]
    out[~small] = np.expm1(zb) / zb
    return out
