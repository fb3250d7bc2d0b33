"""Monte Carlo oracle for the regime-switching surplus.

Each path follows the solvent model until it drops below ``b``, then the
insolvent model with a fresh exponential grace clock. Claim arrivals are
exact exponential times; the Brownian part moves on an adaptive grid whose
step shrinks to ``step`` near a barrier, and crossings between grid points
are detected with the exact Brownian-bridge crossing probability.

Every path owns a SplitMix64 stream keyed by ``(seed, path_index)``, so the
outcome of a path does not depend on thread count or scheduling.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numba
import numpy as np
from numba import njit, prange

from .levy_model import Erlang2, Exponential, LevyModel, Mixture, safety_loading
from .liquidation import LiquidationProblem
from .scale_functions import build_scale

__all__ = [
    "SimConfig",
    "PathOutcome",
    "SimEstimate",
    "CAUSES",
    "simulate_path",
    "simulate_outcomes",
    "estimate",
    "simulate_parisian",
    "simulate_exit",
]

HIT_A, GRACE_EXPIRED, EXITED_Z, CENSORED = 0, 1, 2, 3
CAUSES = ("hit_a", "grace_expired", "exited_z", "censored")

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_INV53 = 1.0 / 9007199254740992.0

# prefer layers that need no version probe; an outdated TBB only produces a warning
if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

_threads = os.environ.get("LEVYLIQ_THREADS")
if _threads:
    numba.set_num_threads(max(1, min(int(_threads), numba.config.NUMBA_NUM_THREADS)))


# ---------------------------------------------------------------------------
# per-path random stream


@njit(inline="always")
def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(inline="always")
def _seed_stream(seed, index):
    # returns (state, gamma); gamma odd so the Weyl sequence has full period
    h = _mix(np.uint64(seed) ^ _mix(np.uint64(index) + _GOLDEN))
    gamma = _mix(h + _GOLDEN) | _ONE
    return h, gamma


@njit(inline="always")
def _uniform(rng):
    # rng: uint64[2] = (state, gamma); value in (0, 1)
    rng[0] = rng[0] + rng[1]
    return (float(_mix(rng[0]) >> _S11) + 0.5) * _INV53


@njit(inline="always")
def _normal(rng):
    u1 = _uniform(rng)
    u2 = _uniform(rng)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@njit(inline="always")
def _exponential(rng, rate):
    return -math.log(_uniform(rng)) / rate


@njit(inline="always")
def _claim(rng, cum_w, kinds, rates):
    u = _uniform(rng)
    j = 0
    while j < cum_w.size - 1 and u > cum_w[j]:
        j += 1
    y = -math.log(_uniform(rng)) / rates[j]
    if kinds[j] == 1:
        y += -math.log(_uniform(rng)) / rates[j]
    return y


# ---------------------------------------------------------------------------
# one Brownian step with bridge-based crossing detection


@njit(inline="always")
def _cross_prob(u0, u1, level, var_h):
    # probability that a Brownian bridge from u0 to u1 touches level (both on the same side)
    if var_h <= 0.0:
        return 0.0
    return math.exp(-2.0 * (u0 - level) * (u1 - level) / var_h)


@njit(inline="always")
def _step_size(d, sigma, step, hmax):
    if sigma <= 0.0:
        return hmax
    h = (d / (5.0 * sigma)) ** 2
    return min(max(h, step), hmax)


@njit(cache=True)
def _run_path(x, a, b, c, z, lam, horizon, step, hmax, bridge,
              prm, cum_w, kinds, rates, nlaw, seed, index):
    """Returns (T, U_T, running_max, cause, exit_time).

    ``prm[r] = (drift, sigma, jump_rate)`` for regime r (0 solvent, 1 insolvent);
    claim laws for regime r occupy ``[nlaw[r], nlaw[r+1])`` in the law arrays.
    """
    rng = np.empty(2, dtype=np.uint64)
    st, gm = _seed_stream(seed, index)
    rng[0] = st
    rng[1] = gm
    t = 0.0
    u = x
    umax = x
    regime = 0
    deadline = math.inf
    jr = prm[0, 2]
    t_jump = t + _exponential(rng, jr) if jr > 0 else math.inf
    while True:
        drift = prm[regime, 0]
        sigma = prm[regime, 1]
        if regime == 0:
            lo = b
            hi = z
        else:
            lo = a
            hi = min(c, z)
        d = min(u - lo, hi - u)
        h = _step_size(d, sigma, step, hmax)
        t_end = min(t + h, t_jump, deadline, horizon)
        h = t_end - t
        var_h = sigma * sigma * h
        u1 = u + drift * h + math.sqrt(var_h) * _normal(rng)
        crossed_lo = u1 <= lo
        if not crossed_lo and bridge and lo > -1e300:
            crossed_lo = _uniform(rng) < _cross_prob(u, u1, lo, var_h)
        crossed_hi = False
        if not crossed_lo:
            crossed_hi = u1 >= hi
            if not crossed_hi and bridge and hi < 1e300:
                crossed_hi = _uniform(rng) < _cross_prob(u, u1, hi, var_h)
        t = t_end
        if crossed_lo:
            if regime == 1 or u1 <= a:
                # continuous passage below a: liquidation at a
                return t, a, umax, HIT_A, math.inf
            regime = 1
            deadline = t + _exponential(rng, lam)
            jr = prm[1, 2]
            t_jump = t + _exponential(rng, jr) if jr > 0 else math.inf
        elif crossed_hi:
            if hi >= z:
                return t, z, z, EXITED_Z, t
            umax = max(umax, hi)
            regime = 0
            deadline = math.inf
            jr = prm[0, 2]
            t_jump = t + _exponential(rng, jr) if jr > 0 else math.inf
        u = u1
        if u > umax:
            umax = u
        # a step that crossed one barrier may end beyond the other one
        if regime == 1 and u >= c:
            if u >= z:
                return t, z, z, EXITED_Z, t
            regime = 0
            deadline = math.inf
            jr = prm[0, 2]
            t_jump = t + _exponential(rng, jr) if jr > 0 else math.inf
        elif regime == 0 and u < b:
            regime = 1
            deadline = t + _exponential(rng, lam)
            jr = prm[1, 2]
            t_jump = t + _exponential(rng, jr) if jr > 0 else math.inf
        if regime == 1 and t >= deadline:
            return t, u, umax, GRACE_EXPIRED, math.inf
        if t >= horizon:
            return t, u, umax, CENSORED, math.inf
        if t >= t_jump:
            k0 = nlaw[regime]
            k1 = nlaw[regime + 1]
            u -= _claim(rng, cum_w[k0:k1], kinds[k0:k1], rates[k0:k1])
            if u < a:
                return t, u, umax, HIT_A, math.inf
            if regime == 0 and u < b:
                regime = 1
                deadline = t + _exponential(rng, lam)
            jr = prm[regime, 2]
            t_jump = t + _exponential(rng, jr) if jr > 0 else math.inf


@njit(parallel=True, cache=True)
def _run_paths(n, first, x, a, b, c, z, lam, horizon, step, hmax, bridge,
               prm, cum_w, kinds, rates, nlaw, seed):
    T = np.empty(n)
    UT = np.empty(n)
    M = np.empty(n)
    cause = np.empty(n, dtype=np.int8)
    tz = np.empty(n)
    for i in prange(n):
        r = _run_path(x, a, b, c, z, lam, horizon, step, hmax, bridge,
                      prm, cum_w, kinds, rates, nlaw, seed, first + i)
        T[i] = r[0]
        UT[i] = r[1]
        M[i] = r[2]
        cause[i] = r[3]
        tz[i] = r[4]
    return T, UT, M, cause, tz


@njit(cache=True)
def _exit_path(x, lower, upper, horizon, step, hmax, bridge, drift, sigma, jr,
               cum_w, kinds, rates, seed, index):
    # first exit of [lower, upper]: returns (time, side, position); side 0 below, 1 above, 2 censored
    rng = np.empty(2, dtype=np.uint64)
    st, gm = _seed_stream(seed, index)
    rng[0] = st
    rng[1] = gm
    t = 0.0
    u = x
    t_jump = _exponential(rng, jr) if jr > 0 else math.inf
    while True:
        h = _step_size(min(u - lower, upper - u), sigma, step, hmax)
        t_end = min(t + h, t_jump, horizon)
        h = t_end - t
        var_h = sigma * sigma * h
        u1 = u + drift * h + math.sqrt(var_h) * _normal(rng)
        t = t_end
        lo_hit = u1 <= lower or (bridge and _uniform(rng) < _cross_prob(u, u1, lower, var_h))
        if lo_hit:
            return t, 0, lower
        if u1 >= upper or (bridge and _uniform(rng) < _cross_prob(u, u1, upper, var_h)):
            return t, 1, upper
        u = u1
        if t >= horizon:
            return t, 2, u
        if t >= t_jump:
            u -= _claim(rng, cum_w, kinds, rates)
            if u < lower:
                return t, 0, u
            t_jump = t + _exponential(rng, jr)


@njit(parallel=True, cache=True)
def _exit_paths(n, first, x, lower, upper, horizon, step, hmax, bridge, drift, sigma, jr,
                cum_w, kinds, rates, seed):
    T = np.empty(n)
    side = np.empty(n, dtype=np.int8)
    pos = np.empty(n)
    for i in prange(n):
        r = _exit_path(x, lower, upper, horizon, step, hmax, bridge, drift, sigma, jr,
                       cum_w, kinds, rates, seed, first + i)
        T[i] = r[0]
        side[i] = r[1]
        pos[i] = r[2]
    return T, side, pos


# ---------------------------------------------------------------------------
# Python-facing API


@dataclass(frozen=True)
class SimConfig:
    paths: int = 100_000
    step: float = 1e-3
    horizon: float = 500.0
    seed: int = 20240601
    bridge_correction: bool = True
    max_step: float = 0.25

    def __post_init__(self):
        if self.paths <= 0:
            raise ValueError("paths must be positive")
        if not (self.step > 0 and self.horizon > 0 and self.max_step >= self.step):
            raise ValueError("need step > 0, horizon > 0 and max_step >= step")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class PathOutcome:
    liquidated: bool
    liquidation_time: float
    surplus_at_T: float
    running_max: float
    exit_time: float | None
    cause: str


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    std_err: float
    ci95: tuple[float, float]
    n: int
    censored_fraction: float
    seed: int
    tail_bound: float = 0.0

    def within(self, value: float, k: float = 3.0, allowance: float = 0.0) -> bool:
        """``|value - mean| <= k std_err + allowance + tail_bound``.

        ``tail_bound`` bounds the mass that censored paths could still
        contribute after the horizon.
        """
        return abs(value - self.mean) <= k * self.std_err + allowance + self.tail_bound


def _law_arrays(law):
    if isinstance(law, Exponential):
        return [1.0], [0], [law.rate]
    if isinstance(law, Erlang2):
        return [1.0], [1], [law.rate]
    if isinstance(law, Mixture):
        ws, ks, rs = [], [], []
        for w, sub in law.components:
            sw, sk, sr = _law_arrays(sub)
            ws += [w * v for v in sw]
            ks += sk
            rs += sr
        return ws, ks, rs
    raise TypeError(f"unsupported jump law {law!r}")


def _pack(models):
    prm = np.zeros((len(models), 3))
    ws, ks, rs, nlaw = [], [], [], [0]
    for i, m in enumerate(models):
        prm[i] = (m.drift, m.gaussian_sigma, m.jump_rate)
        if m.jump_rate > 0:
            w, k, r = _law_arrays(m.jump_law)
        else:
            w, k, r = [1.0], [0], [1.0]
        cw = np.cumsum(w)
        cw[-1] = 1.0
        ws += list(cw)
        ks += k
        rs += r
        nlaw.append(len(ws))
    return (prm, np.array(ws), np.array(ks, dtype=np.int64), np.array(rs, dtype=float),
            np.array(nlaw, dtype=np.int64))


def _raw(x, a, b, c, z, lam, solvent, insolvent, cfg: SimConfig, first, n):
    prm, cw, kinds, rates, nlaw = _pack([solvent, insolvent])
    zz = math.inf if z is None else float(z)
    return _run_paths(n, first, float(x), float(a), float(b), float(c), zz, float(lam),
                      cfg.horizon, cfg.step, cfg.max_step, cfg.bridge_correction,
                      prm, cw, kinds, rates, nlaw, np.uint64(cfg.seed))


def simulate_outcomes(problem: LiquidationProblem, z: float | None, cfg: SimConfig):
    """Raw per-path arrays ``(T, U_T, running_max, cause, exit_time)``."""
    br = problem.barriers
    return _raw(problem.start, br.a, br.b, br.c, z, problem.grace_rate, problem.solvent,
                problem.insolvent, cfg, 0, cfg.paths)


def simulate_path(problem: LiquidationProblem, z: float | None, cfg: SimConfig,
                  path_index: int) -> PathOutcome:
    br = problem.barriers
    T, U, M, cause, tz = _raw(problem.start, br.a, br.b, br.c, z, problem.grace_rate,
                              problem.solvent, problem.insolvent, cfg, path_index, 1)
    k = int(cause[0])
    liq = k in (HIT_A, GRACE_EXPIRED)
    return PathOutcome(liq, float(T[0]), float(U[0]), float(M[0]),
                       float(tz[0]) if k == EXITED_Z else None, CAUSES[k])


def _summarize(samples: np.ndarray, censored: np.ndarray, seed: int,
               tail: np.ndarray | None = None) -> SimEstimate:
    n = samples.size
    mean = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    bound = float(np.mean(np.where(censored, tail, 0.0))) if tail is not None else float(np.mean(censored))
    return SimEstimate(mean, se, (mean - 1.96 * se, mean + 1.96 * se), n,
                       float(np.mean(censored)), seed, bound)


def _ruin_bound(model: LevyModel, level: float, safe: float, u: np.ndarray) -> np.ndarray:
    """Per-path bound on eventually dropping below ``level`` from ``u``.

    ``1 - psi'(0+) W(u - level)`` for ``u >= safe``, where the path is known
    to follow ``model``; 1 otherwise.
    """
    sf = build_scale(model, 0.0)
    ruin = 1.0 - safety_loading(model) * np.atleast_1d(sf.W(np.maximum(u - level, 0.0)))
    return np.where(u >= safe, np.clip(ruin, 0.0, 1.0), 1.0)


def estimate(problem: LiquidationProblem, z: float | None, functional: str, cfg: SimConfig,
             u: float | None = None) -> SimEstimate:
    """Monte Carlo estimate of one liquidation functional.

    ``functional`` is one of ``liq_prob``, ``laplace``, ``joint_cdf``,
    ``exit_up`` or ``creeping_mass``. Discounting uses ``problem.discount``;
    ``joint_cdf`` needs ``u``. ``z = None`` removes the upper level.
    Censored paths count as neither liquidated nor exited.
    """
    T, U, M, cause, tz = simulate_outcomes(problem, z, cfg)
    q = problem.discount
    liq = (cause == HIT_A) | (cause == GRACE_EXPIRED)
    disc = np.exp(-q * T) if q > 0 else np.ones_like(T)
    if functional == "liq_prob":
        s = liq.astype(float)
    elif functional == "laplace":
        s = np.where(liq, disc, 0.0)
    elif functional == "joint_cdf":
        if u is None:
            raise ValueError("joint_cdf needs u")
        s = np.where(liq & (U <= u), disc, 0.0)
    elif functional == "exit_up":
        s = np.where(cause == EXITED_Z, np.exp(-q * np.where(cause == EXITED_Z, tz, 0.0)), 0.0)
    elif functional == "creeping_mass":
        s = np.where((cause == HIT_A) & (U == problem.barriers.a), disc, 0.0)
    else:
        raise ValueError(f"unknown functional {functional!r}")
    cens = cause == CENSORED
    tail = None
    if functional != "exit_up" and np.any(cens):
        br = problem.barriers
        tail = _ruin_bound(problem.solvent, br.b, br.c, np.where(cens, U, br.c))
    return _summarize(s, cens, cfg.seed, tail)


def simulate_parisian(model: LevyModel, lam: float, a: float | None, x: float, cfg: SimConfig,
                      q: float = 0.0, z: float | None = None, u_bin: tuple[float, float] | None = None
                      ) -> SimEstimate:
    """Parisian ruin with rate-``lam`` delays and optional lower barrier ``a``.

    Each excursion below 0 starts a fresh exponential clock. Returns the
    estimate of ``E_x[exp(-q T); T < tau_z^+]``; with ``u_bin = (lo, hi)`` only
    ruins by clock expiry with surplus in ``(lo, hi]`` count, divided by the
    bin width (a histogram density estimate).
    """
    lower = -math.inf if a is None else float(a)
    T, U, M, cause, tz = _raw(x, lower, 0.0, 0.0, z, lam, model, model, cfg, 0, cfg.paths)
    hit = (cause == HIT_A) | (cause == GRACE_EXPIRED)
    disc = np.exp(-q * T) if q > 0 else np.ones_like(T)
    if u_bin is None:
        s = np.where(hit, disc, 0.0)
    else:
        lo, hi = u_bin
        s = np.where((cause == GRACE_EXPIRED) & (U > lo) & (U <= hi), disc, 0.0) / (hi - lo)
    cens = cause == CENSORED
    tail = _ruin_bound(model, 0.0, 0.0, np.where(cens, U, 0.0)) if np.any(cens) else None
    if tail is not None and u_bin is not None:
        tail = tail / (u_bin[1] - u_bin[0])
    return _summarize(s, cens, cfg.seed, tail)


def simulate_exit(model: LevyModel, x: float, lower: float, upper: float, cfg: SimConfig):
    """Per-path first exit of ``[lower, upper]``: ``(time, side, position)``.

    ``side`` is 0 for exit below, 1 for exit above, 2 for censored.
    """
    w, k, r = _law_arrays(model.jump_law) if model.jump_rate > 0 else ([1.0], [0], [1.0])
    cw = np.cumsum(w)
    cw[-1] = 1.0
    return _exit_paths(cfg.paths, 0, float(x), float(lower), float(upper), cfg.horizon, cfg.step,
                       cfg.max_step, cfg.bridge_correction, model.drift, model.gaussian_sigma,
                       model.jump_rate, cw, np.array(k, dtype=np.int64), np.array(r, dtype=float),
                       np.uint64(cfg.seed))
