"""Path-wise simulation of the diffusion with semipermeable membranes.

The local-time drift at the membranes is never discretized directly.
Inside each strip the state is pushed through the strip chart, advanced
by one Euler-Maruyama step of the transformed (local-time-free) SDE and
mapped back; the skewness is carried entirely by the kink of the chart.
An independent Bernoulli-crossing scheme (side drawn afresh at every
membrane visit, then free diffusion) is provided for cross-validation
only.

Boundary hits are detected with a per-step Brownian-bridge crossing
probability for each strip edge; plain endpoint checks would miss
excursions inside a step and bias exit times high.  Detected crossings
are placed uniformly inside the step.

All kernels are vectorized over paths and draw their randomness from
counter-based streams (see :mod:`memdiff.rng`), so identical
(config, seed) reproduce results bit for bit regardless of scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .coefficients import CoefficientField
from .errors import HorizonExhaustedError, SmallnessError, WindowExhaustedError
from .membranes import MembraneLayout
from .rng import stream
from .transform import (NEWTON_MAX_ITER, NEWTON_TOL, forward_map,
                        inverse_map, skew_factor, transformed_coeffs_arrays)

__all__ = [
    "SimConfig", "CrossingEvent", "PathSample", "ExitRecord", "ExitBatch",
    "BatchPaths", "em_step_strip", "sample_exit", "sample_exit_batch",
    "bernoulli_crossing_step", "bernoulli_exit_batch", "simulate_path",
    "simulate_paths",
]

TAU_GUARD_FACTOR = 1.0e6   # excursions beyond this many eps^2 are a bug
COMPACT_THRESHOLD = 0.25   # compact the batch when fewer paths remain live
JUMP_GUARD = 0.5           # reject inverse-map results that teleport in y


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters for one interface spacing.

    The time step is ``dt_base * epsilon**2``, so one strip crossing is
    resolved by roughly ``d^2 / (Sigma00 * dt_base)`` steps regardless of
    epsilon.
    """

    epsilon: float
    dt_base: float = 0.01
    scheme: str = "transformed"
    horizon: float = 1.0
    box: tuple = (-100.0, 100.0)
    seed: int = 0
    path_count: int = 1
    launch_frac: float = 0.05

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.dt_base <= 0.0:
            raise ValueError("dt_base must be positive")
        if self.scheme not in ("transformed", "bernoulli"):
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def dt(self) -> float:
        return self.dt_base * self.epsilon ** 2

    def check_resolution(self, d_local: float, s00: float) -> None:
        cap = 0.1 * d_local ** 2 / s00
        if self.dt_base > cap + 1.0e-12:
            raise ValueError(
                f"dt_base={self.dt_base} too coarse: needs <= 0.1*d^2/Sigma00 "
                f"= {cap:.4g} to resolve strip crossings")


@dataclass
class CrossingEvent:
    time: float
    k: int               # membrane arrived at
    y: np.ndarray
    side: int            # direction of the crossing that led here
    sojourn: float       # duration spent in the strip just left


@dataclass
class PathSample:
    """Recorded trajectory with its membrane-crossing log."""

    times: np.ndarray           # (K,)
    states: np.ndarray          # (K, 1+n)
    events: list
    truncated: bool = False     # path left the spatial box and was frozen

    @property
    def x(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.states[:, 1:]


@dataclass
class ExitRecord:
    """One embedded-chain step: strip entry to strip exit."""

    start_k: int
    start_y: np.ndarray
    exit_side: int
    tau: float
    exit_x: float
    exit_y: np.ndarray


@dataclass
class ExitBatch:
    """Structure-of-arrays batch of strip exits from one start point."""

    start_k: int
    start_y: np.ndarray
    center: float
    epsilon: float
    side: np.ndarray       # (N,) +-1
    tau: np.ndarray        # (N,)
    exit_x: np.ndarray     # (N,) absolute
    exit_y: np.ndarray     # (N, n)
    sup_dy2: np.ndarray    # (N,) max_t |Y_t - y0|^2 up to exit
    inverse_fallbacks: int = 0

    def __len__(self) -> int:
        return len(self.tau)

    def record(self, i: int) -> ExitRecord:
        return ExitRecord(self.start_k, self.start_y.copy(),
                          int(self.side[i]), float(self.tau[i]),
                          float(self.exit_x[i]), self.exit_y[i].copy())

    def moments(self, level: float = 0.95):
        """Monte Carlo exit moments with normal-approximation CIs."""
        from scipy.stats import norm

        from .oracles import ExitMoments

        z = norm.ppf(0.5 + level / 2.0)
        npaths = len(self)
        root = math.sqrt(npaths)
        dx = self.exit_x - self.center
        dy = self.exit_y - self.start_y
        p_plus = float(np.mean(self.side > 0))
        cov = np.einsum("ki,kj->ij", dy, dy) / npaths
        cov_se = z * np.std(np.einsum("ki,kj->kij", dy, dy), axis=0, ddof=1) / root
        cross = np.mean(dx[:, None] * dy, axis=0)
        cross_se = z * np.std(dx[:, None] * dy, axis=0, ddof=1) / root
        return ExitMoments(
            p_plus=p_plus, p_minus=1.0 - p_plus,
            mean_x=float(np.mean(dx)), mean_x2=float(np.mean(dx ** 2)),
            mean_tau=float(np.mean(self.tau)),
            mean_dy=np.mean(dy, axis=0), cov_yy=cov, cross_xy=cross,
            se_p=z * math.sqrt(max(p_plus * (1.0 - p_plus), 1e-300) / npaths),
            se_x=z * float(np.std(dx, ddof=1)) / root,
            se_x2=z * float(np.std(dx ** 2, ddof=1)) / root,
            se_tau=z * float(np.std(self.tau, ddof=1)) / root,
            se_dy=z * np.std(dy, axis=0, ddof=1) / root,
            se_cov=cov_se, se_cross=cross_se,
        )


@dataclass
class BatchPaths:
    """Aggregate result of many long paths (final states + event counts)."""

    final_state: np.ndarray     # (N, 1+n)
    event_count: np.ndarray     # (N,)
    truncated: np.ndarray       # (N,) bool
    times: Optional[np.ndarray] = None      # (K,) recording grid
    states: Optional[np.ndarray] = None     # (N, K, 1+n)
    events: list = dc_field(default_factory=list)  # per-path lists if kept


# ---------------------------------------------------------------------------
# single transformed step (public op; the batch kernels inline the same math)
# ---------------------------------------------------------------------------

def em_step_strip(chart, state, dt: float, noise):
    """One Euler-Maruyama step of the strip dynamics in chart coordinates.

    ``state`` is ``(x_offset, y)``; ``noise`` an m-vector of independent
    centered Gaussians with variance ``dt``.  The step is performed on
    the transformed SDE and mapped back, so no local-time term appears.
    """
    x, y = state
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    noise = np.asarray(noise, dtype=float)
    u, v = forward_map(chart.field, chart.center, x, y, chart.epsilon)
    tc = transformed_coeffs_arrays(chart.field, chart.center, x, y, chart.epsilon)
    u2 = u + tc.drift_u * dt + tc.diff_u @ noise
    v2 = v + tc.drift_v * dt + tc.diff_v @ noise
    return inverse_map(chart.field, chart.center, u2, v2, chart.epsilon)


# ---------------------------------------------------------------------------
# inverse with branch continuation (kernel internal)
# ---------------------------------------------------------------------------

def _inverse_continuation(field, center, u, v, epsilon, y_warm):
    """Inverse map warm-started at the pre-step y, with a guarded fallback.

    Where the strip chart is not injective (possible for strongly
    y-dependent penetration directions at coarse spacings) Newton can
    land on a far branch; those columns fall back to the first-order
    inverse.  Returns (x, y, fallback_count).
    """
    n = field.n
    if n == 0:
        x, y = inverse_map(field, center, u, v, epsilon)
        return x, y, 0
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    right = u > 0.0
    uc = u[..., None]

    def residual(yy):
        theta = np.asarray(field.theta(center, yy), dtype=float)
        B = skew_factor(field, center, yy, epsilon)
        coef = np.where(right[..., None], theta / B[..., None], theta)
        return yy - coef * uc - v

    eye = np.eye(n)
    y = np.asarray(y_warm, dtype=float).copy()
    g = residual(y)
    gnorm = np.max(np.abs(g), axis=-1)
    converged = gnorm <= NEWTON_TOL
    for _ in range(NEWTON_MAX_ITER):
        if np.all(converged):
            break
        theta = np.asarray(field.theta(center, y), dtype=float)
        th_y = field.eval_theta_dy(center, y)
        B = skew_factor(field, center, y, epsilon)
        dB = -2.0 * epsilon / (1.0 + epsilon * np.asarray(field.beta(center, y))) ** 2
        B_y = dB[..., None] * field.eval_beta_dy(center, y)
        jac_right = (th_y / B[..., None, None]
                     - theta[..., :, None] * B_y[..., None, :]
                     / (B ** 2)[..., None, None])
        dcoef = np.where(right[..., None, None], jac_right, th_y)
        jac = eye - uc[..., None] * dcoef
        # Regularize near-singular rows so solve() cannot blow up; those
        # columns are handled by the fallback below if they fail to settle.
        det = np.linalg.det(jac)
        bad = np.abs(det) < 1.0e-10
        if np.any(bad):
            jac[bad] = eye
        step_vec = np.linalg.solve(jac, -g[..., None])[..., 0]
        lam = np.where(converged, 0.0, 1.0)
        y_new = y + lam[..., None] * step_vec
        g_new = residual(y_new)
        gnorm_new = np.max(np.abs(g_new), axis=-1)
        worse = gnorm_new > gnorm
        if np.any(worse & ~converged):
            for _ in range(6):
                lam = np.where(worse & ~converged, 0.5 * lam, lam)
                y_new = y + lam[..., None] * step_vec
                g_new = residual(y_new)
                gnorm_new = np.max(np.abs(g_new), axis=-1)
                worse = gnorm_new > gnorm
                if not np.any(worse & ~converged):
                    break
        y, g, gnorm = y_new, g_new, gnorm_new
        converged = gnorm <= NEWTON_TOL

    jumped = np.max(np.abs(y - y_warm), axis=-1) > JUMP_GUARD
    failed = (~converged) | jumped
    nfail = int(np.count_nonzero(failed))
    if nfail:
        theta_v = np.asarray(field.theta(center, v), dtype=float)
        y_lin = v + theta_v * uc
        y = np.where(failed[..., None], y_lin, y)
    B = skew_factor(field, center, y, epsilon)
    x = np.where(right, u / B, u)
    return x, y, nfail


# ---------------------------------------------------------------------------
# strip exit kernel (transformed scheme)
# ---------------------------------------------------------------------------

def _commit_exits(level, res, place, y0, lo, hi, exit_hi, exit_lo):
    """Write exit data for this step's crossed paths into result arrays."""
    x, y, x2, y2, t = level["x"], level["y"], level["x2"], level["y2"], level["t"]
    alive = level["alive"]
    dt = level["dt"]
    exited = (exit_hi | exit_lo) & alive
    if not np.any(exited):
        return exited
    gidx = level["idx"][exited]
    te = t[exited] + place[exited] * dt
    frac = place[exited][:, None]
    ye = y[exited] + frac * (y2[exited] - y[exited])
    res["side"][gidx] = np.where(exit_hi[exited], 1, -1)
    res["tau"][gidx] = te
    res["exit_x"][gidx] = np.where(exit_hi[exited], hi, lo)
    res["exit_y"][gidx] = ye
    res["sup_dy2"][gidx] = np.maximum(
        level["sup_dy2"][exited], np.sum((ye - y0) ** 2, axis=-1))
    return exited


def sample_exit_batch(field: CoefficientField, layout: MembraneLayout,
                      k: int, y, cfg: SimConfig, *, n_paths: int,
                      seed: int, tags: tuple = ()) -> ExitBatch:
    """Simulate ``n_paths`` strip exits from membrane ``k`` at fixed y.

    Transformed-coordinate scheme with Brownian-bridge edge detection.
    Raises :class:`HorizonExhaustedError` if any excursion outlives
    ``1e6 * epsilon^2`` (exit times have exponential tails, so this is a
    scheme bug, not a tail event).
    """
    n, m = field.n, field.m
    y0 = np.asarray(y, dtype=float).reshape(n)
    center = layout.position(k)
    lo, hi = layout.strip(k)
    eps = cfg.epsilon
    chart_beta = float(np.max(np.abs(field.beta(center, y0))))
    if eps * chart_beta > 0.25:
        raise SmallnessError(
            f"eps*|beta|={eps * chart_beta:.4g} > 0.25 at the start point; "
            "spacing too coarse for this scenario")
    s00_start = float(np.sum(np.asarray(field.sigma(center, y0))[0] ** 2))
    cfg.check_resolution(float(field.d(center)), s00_start)
    dt = cfg.dt
    sqdt = math.sqrt(dt)
    guard = TAU_GUARD_FACTOR * eps ** 2

    res = {
        "side": np.zeros(n_paths, dtype=np.int8),
        "tau": np.zeros(n_paths),
        "exit_x": np.zeros(n_paths),
        "exit_y": np.zeros((n_paths, n)),
        "sup_dy2": np.zeros(n_paths),
    }
    level = {
        "idx": np.arange(n_paths),
        "x": np.zeros(n_paths),
        "y": np.tile(y0, (n_paths, 1)),
        "t": np.zeros(n_paths),
        "sup_dy2": np.zeros(n_paths),
        "alive": np.ones(n_paths, dtype=bool),
        "dt": dt,
    }
    nfall = 0
    lvl = 0
    gen = stream(seed, "exit", *tags, "lvl", lvl)
    while level["idx"].size:
        W = level["idx"].size
        xi = gen.standard_normal((W, m)) * sqdt
        uni = gen.random((W, 3))
        x, yv, t = level["x"], level["y"], level["t"]
        u, v = forward_map(field, center, x, yv, eps)
        tc = transformed_coeffs_arrays(field, center, x, yv, eps)
        u2 = u + tc.drift_u * dt + np.einsum("...l,...l->...", tc.diff_u, xi)
        v2 = v + tc.drift_v * dt + np.einsum("...il,...l->...i", tc.diff_v, xi)
        x2, y2, nf = _inverse_continuation(field, center, u2, v2, eps, yv)
        nfall += nf
        xa1 = center + x
        xa2 = center + x2
        sig = np.asarray(field.sigma(xa1, yv), dtype=float)
        s00 = np.sum(sig[..., 0, :] ** 2, axis=-1)
        inv_s = 1.0 / (s00 * dt)
        p_hi = np.exp(np.minimum(-2.0 * (hi - xa1) * (hi - xa2) * inv_s, 0.0))
        p_lo = np.exp(np.minimum(-2.0 * (xa1 - lo) * (xa2 - lo) * inv_s, 0.0))
        over_hi = xa2 >= hi
        over_lo = xa2 <= lo
        bridge_hi = (~over_hi) & (~over_lo) & (uni[:, 0] < p_hi)
        bridge_lo = (~over_hi) & (~over_lo) & (uni[:, 1] < p_lo)
        both = bridge_hi & bridge_lo
        bridge_hi = bridge_hi & (~both | (p_hi >= p_lo))
        bridge_lo = bridge_lo & (~both | (p_lo > p_hi))
        exit_hi = over_hi | bridge_hi
        exit_lo = over_lo | bridge_lo

        level["x2"], level["y2"] = x2, y2
        exited = _commit_exits(level, res, uni[:, 2], y0, lo, hi,
                               exit_hi, exit_lo)
        alive = level["alive"] & ~exited
        level["alive"] = alive
        level["x"] = np.where(alive, x2, 0.0)
        level["y"] = np.where(alive[:, None], y2, y0)
        level["t"] = t + dt
        level["sup_dy2"] = np.where(
            alive,
            np.maximum(level["sup_dy2"], np.sum((y2 - y0) ** 2, axis=-1)),
            level["sup_dy2"])
        if np.any(alive & (level["t"] > guard)):
            raise HorizonExhaustedError(
                f"strip excursion exceeded {guard:.3g} time units at "
                f"eps={eps}; check the scenario and time step")
        n_alive = int(np.count_nonzero(alive))
        if n_alive == 0:
            break
        if n_alive < COMPACT_THRESHOLD * W:
            keep = alive
            level["idx"] = level["idx"][keep]
            level["x"] = level["x"][keep]
            level["y"] = level["y"][keep]
            level["t"] = level["t"][keep]
            level["sup_dy2"] = level["sup_dy2"][keep]
            level["alive"] = np.ones(n_alive, dtype=bool)
            lvl += 1
            gen = stream(seed, "exit", *tags, "lvl", lvl)
    return ExitBatch(start_k=int(k), start_y=y0, center=center, epsilon=eps,
                     side=res["side"], tau=res["tau"], exit_x=res["exit_x"],
                     exit_y=res["exit_y"], sup_dy2=res["sup_dy2"],
                     inverse_fallbacks=nfall)


def sample_exit(field: CoefficientField, layout: MembraneLayout, k: int, y,
                cfg: SimConfig, rng_or_seed=0) -> ExitRecord:
    """Single strip exit from membrane ``k``; see :func:`sample_exit_batch`."""
    seed = rng_or_seed if isinstance(rng_or_seed, (int, np.integer)) else \
        int(rng_or_seed.integers(2 ** 62))
    batch = sample_exit_batch(field, layout, k, y, cfg, n_paths=1,
                              seed=int(seed), tags=("single",))
    return batch.record(0)


# ---------------------------------------------------------------------------
# Bernoulli-crossing scheme (cross-validation only)
# ---------------------------------------------------------------------------

def bernoulli_exit_batch(field: CoefficientField, layout: MembraneLayout,
                         k: int, y, cfg: SimConfig, *, n_paths: int,
                         seed: int, tags: tuple = ()) -> ExitBatch:
    """Strip exits via the side-drawing scheme.

    At every visit to the central membrane the exit side is drawn with
    the penetration probabilities and the path restarts a small launch
    distance away along the penetration direction; between visits the
    membrane-free diffusion runs untouched.  The launch offset makes
    this scheme a documented approximation, used only to cross-check the
    transformed scheme.
    """
    n, m = field.n, field.m
    y0 = np.asarray(y, dtype=float).reshape(n)
    center = layout.position(k)
    lo, hi = layout.strip(k)
    eps = cfg.epsilon
    if eps * float(np.max(np.abs(field.beta(center, y0)))) > 0.25:
        raise SmallnessError("eps*|beta| > 0.25 at the start point")
    delta = cfg.launch_frac * eps
    if not (lo < center - delta and center + delta < hi):
        raise ValueError("launch offset does not fit inside the strip")
    dt = cfg.dt
    sqdt = math.sqrt(dt)
    guard = TAU_GUARD_FACTOR * eps ** 2

    res = {
        "side": np.zeros(n_paths, dtype=np.int8),
        "tau": np.zeros(n_paths),
        "exit_x": np.zeros(n_paths),
        "exit_y": np.zeros((n_paths, n)),
        "sup_dy2": np.zeros(n_paths),
    }
    idx = np.arange(n_paths)
    x = np.zeros(n_paths)          # offset from the central membrane
    yv = np.tile(y0, (n_paths, 1))
    t = np.zeros(n_paths)
    sup_dy2 = np.zeros(n_paths)
    at_membrane = np.ones(n_paths, dtype=bool)
    lvl = 0
    gen = stream(seed, "bernoulli", *tags, "lvl", lvl)
    while idx.size:
        W = idx.size
        xi = gen.standard_normal((W, m)) * sqdt
        uni = gen.random((W, 5))
        # Relaunch paths sitting on the membrane.
        if np.any(at_membrane):
            beta = np.asarray(field.beta(center, yv), dtype=float)
            theta = np.asarray(field.theta(center, yv), dtype=float)
            p_pos = 0.5 * (1.0 + eps * beta)
            s = np.where(uni[:, 0] < p_pos, 1.0, -1.0)
            x = np.where(at_membrane, s * delta, x)
            yv = np.where(at_membrane[:, None], yv + (s * delta)[:, None] * theta, yv)
            at_membrane[:] = False
        xa1 = center + x
        b = np.asarray(field.b(xa1, yv), dtype=float)
        sig = np.asarray(field.sigma(xa1, yv), dtype=float)
        drift = b
        inc = np.einsum("...il,...l->...i", sig, xi)
        x2 = x + drift[..., 0] * dt + inc[..., 0]
        y2 = yv + drift[..., 1:] * dt + inc[..., 1:]
        xa2 = center + x2
        s00 = np.sum(sig[..., 0, :] ** 2, axis=-1)
        inv_s = 1.0 / (s00 * dt)
        p_hi = np.exp(np.minimum(-2.0 * (hi - xa1) * (hi - xa2) * inv_s, 0.0))
        p_lo = np.exp(np.minimum(-2.0 * (xa1 - lo) * (xa2 - lo) * inv_s, 0.0))
        p_c = np.exp(np.minimum(-2.0 * x * x2 * inv_s, 0.0))
        over_hi = xa2 >= hi
        over_lo = xa2 <= lo
        inner = ~(over_hi | over_lo)
        bridge_hi = inner & (uni[:, 1] < p_hi)
        bridge_lo = inner & (uni[:, 2] < p_lo) & ~bridge_hi
        exit_hi = over_hi | bridge_hi
        exit_lo = over_lo | bridge_lo
        crossed_center = (np.sign(x2) != np.sign(x)) | (uni[:, 3] < p_c)
        hit_center = inner & ~bridge_hi & ~bridge_lo & crossed_center

        exited = exit_hi | exit_lo
        te = t + uni[:, 4] * dt
        frac = uni[:, 4][:, None]
        ye = yv + frac * (y2 - yv)
        if np.any(exited):
            g = idx[exited]
            res["side"][g] = np.where(exit_hi[exited], 1, -1)
            res["tau"][g] = te[exited]
            res["exit_x"][g] = np.where(exit_hi[exited], hi, lo)
            res["exit_y"][g] = ye[exited]
            res["sup_dy2"][g] = np.maximum(
                sup_dy2[exited], np.sum((ye[exited] - y0) ** 2, axis=-1))
        alive = ~exited
        # Center hits: restart on the membrane at the placed time.
        x = np.where(hit_center, 0.0, x2)
        yv = np.where(hit_center[:, None], ye, y2)
        t = np.where(hit_center, te, t + dt)
        at_membrane = hit_center
        sup_dy2 = np.maximum(sup_dy2, np.sum((yv - y0) ** 2, axis=-1))
        if np.any(alive & (t > guard)):
            raise HorizonExhaustedError(
                f"strip excursion exceeded {guard:.3g} time units")
        n_alive = int(np.count_nonzero(alive))
        if n_alive == 0:
            break
        if n_alive < COMPACT_THRESHOLD * W:
            idx = idx[alive]
            x, yv, t = x[alive], yv[alive], t[alive]
            sup_dy2 = sup_dy2[alive]
            at_membrane = at_membrane[alive]
            lvl += 1
            gen = stream(seed, "bernoulli", *tags, "lvl", lvl)
        else:
            x = np.where(alive, x, 0.0)
            yv = np.where(alive[:, None], yv, y0)
            at_membrane = at_membrane & alive
            t = np.where(alive, t, 0.0)
    return ExitBatch(start_k=int(k), start_y=y0, center=center, epsilon=eps,
                     side=res["side"], tau=res["tau"], exit_x=res["exit_x"],
                     exit_y=res["exit_y"], sup_dy2=res["sup_dy2"])


def bernoulli_crossing_step(field: CoefficientField, layout: MembraneLayout,
                            k: int, y, cfg: SimConfig, rng_or_seed=0) -> ExitRecord:
    """Single strip exit under the Bernoulli-crossing scheme."""
    seed = rng_or_seed if isinstance(rng_or_seed, (int, np.integer)) else \
        int(rng_or_seed.integers(2 ** 62))
    batch = bernoulli_exit_batch(field, layout, k, y, cfg, n_paths=1,
                                 seed=int(seed), tags=("single",))
    return batch.record(0)


# ---------------------------------------------------------------------------
# full-horizon path simulation
# ---------------------------------------------------------------------------

def simulate_paths(field: CoefficientField, layout: MembraneLayout,
                   x0: float, y0, T: float, cfg: SimConfig, *,
                   n_paths: int, seed: int, tags: tuple = (),
                   record_stride: int = 0,
                   record_events: bool = False) -> BatchPaths:
    """Run ``n_paths`` trajectories of the membrane system to horizon T.

    Strips tile the line, so every path always lives in the chart of its
    nearest membrane; on hitting a neighbouring membrane the chart is
    re-centered there (the process restarts afresh at a membrane point).
    Paths leaving the spatial box are frozen and flagged, never dropped.

    ``record_stride`` > 0 stores every stride-th state for all paths.
    ``record_events`` keeps the full crossing log (memory scales with
    the crossing count; leave off for large batches).
    """
    n, m = field.n, field.m
    y0 = np.asarray(y0, dtype=float).reshape(n)
    lo_box, hi_box = cfg.box
    if not (lo_box < x0 < hi_box):
        raise ValueError("start point outside the spatial box")
    eps = cfg.epsilon
    dt_full = cfg.dt
    n_steps = max(1, int(math.ceil(T / dt_full - 1.0e-9)))
    layout.ensure_cover(max(lo_box, -layout.max_abs_x + 1.0),
                        min(hi_box, layout.max_abs_x - 1.0))

    _, _, k_near = layout.bracketing(x0)
    k = np.full(n_paths, k_near, dtype=int)
    center = np.full(n_paths, layout.position(k_near))
    lo = np.full(n_paths, layout.position(k_near - 1))
    hi = np.full(n_paths, layout.position(k_near + 1))
    x = np.full(n_paths, x0 - center[0])
    yv = np.tile(y0, (n_paths, 1))
    live = np.ones(n_paths, dtype=bool)
    event_count = np.zeros(n_paths, dtype=np.int64)
    last_hit_t = np.zeros(n_paths)
    events = [[] for _ in range(n_paths)] if record_events else []

    rec_times = []
    rec_states = []
    if record_stride:
        rec_times.append(0.0)
        state0 = np.concatenate([(center + x)[:, None], yv], axis=1)
        rec_states.append(state0)

    gen = stream(seed, "paths", *tags)
    t_now = 0.0
    for step in range(n_steps):
        dt = min(dt_full, T - t_now)
        sqdt = math.sqrt(dt)
        xi = gen.standard_normal((n_paths, m)) * sqdt
        uni = gen.random((n_paths, 3))
        u, v = forward_map(field, center, x, yv, eps)
        tc = transformed_coeffs_arrays(field, center, x, yv, eps)
        u2 = u + tc.drift_u * dt + np.einsum("...l,...l->...", tc.diff_u, xi)
        v2 = v + tc.drift_v * dt + np.einsum("...il,...l->...i", tc.diff_v, xi)
        x2, y2, _ = _inverse_continuation(field, center, u2, v2, eps, yv)
        xa1 = center + x
        xa2 = center + x2
        sig = np.asarray(field.sigma(xa1, yv), dtype=float)
        s00 = np.sum(sig[..., 0, :] ** 2, axis=-1)
        inv_s = 1.0 / (s00 * dt)
        p_hi = np.exp(np.minimum(-2.0 * (hi - xa1) * (hi - xa2) * inv_s, 0.0))
        p_lo = np.exp(np.minimum(-2.0 * (xa1 - lo) * (xa2 - lo) * inv_s, 0.0))
        over_hi = xa2 >= hi
        over_lo = xa2 <= lo
        inner = ~(over_hi | over_lo)
        bridge_hi = inner & (uni[:, 0] < p_hi)
        bridge_lo = inner & (uni[:, 1] < p_lo) & ~bridge_hi
        cross_hi = (over_hi | bridge_hi) & live
        cross_lo = (over_lo | bridge_lo) & live & ~cross_hi

        crossed = cross_hi | cross_lo
        if np.any(crossed):
            te = t_now + uni[:, 2] * dt
            frac = uni[:, 2][:, None]
            ye = yv + frac * (y2 - yv)
            side = np.where(cross_hi, 1, -1)
            k_new = k + side
            event_count[crossed] += 1
            if record_events:
                for i in np.nonzero(crossed)[0]:
                    events[i].append(CrossingEvent(
                        time=float(te[i]), k=int(k_new[i]), y=ye[i].copy(),
                        side=int(side[i]),
                        sojourn=float(te[i] - last_hit_t[i])))
            last_hit_t = np.where(crossed, te, last_hit_t)
            k = np.where(crossed, k_new, k)
            new_center = layout.positions(k)
            new_lo = layout.positions(k - 1)
            new_hi = layout.positions(k + 1)
            # State after a crossing: exactly on the arrival membrane.
            x2 = np.where(crossed, 0.0, x2 + (center - new_center))
            yv_next = np.where(crossed[:, None], ye, y2)
            center, lo, hi = new_center, new_lo, new_hi
        else:
            yv_next = y2

        x = np.where(live, x2, x)
        yv = np.where(live[:, None], yv_next, yv)
        t_now += dt
        xa = center + x
        out = (xa <= lo_box) | (xa >= hi_box)
        if n > 0:
            out |= np.any(np.abs(yv) >= max(abs(lo_box), abs(hi_box)), axis=1)
        live &= ~out
        if record_stride and ((step + 1) % record_stride == 0 or step == n_steps - 1):
            rec_times.append(t_now)
            rec_states.append(np.concatenate([xa[:, None], yv], axis=1))

    final = np.concatenate([(center + x)[:, None], yv], axis=1)
    return BatchPaths(
        final_state=final,
        event_count=event_count,
        truncated=~live,
        times=np.asarray(rec_times) if record_stride else None,
        states=np.stack(rec_states, axis=1) if record_stride else None,
        events=events,
    )


def simulate_path(field: CoefficientField, layout: MembraneLayout,
                  x0: float, y0, T: float, cfg: SimConfig,
                  rng_or_seed=0) -> PathSample:
    """Single trajectory with every step recorded and full event log."""
    seed = rng_or_seed if isinstance(rng_or_seed, (int, np.integer)) else \
        int(rng_or_seed.integers(2 ** 62))
    batch = simulate_paths(field, layout, x0, y0, T, cfg, n_paths=1,
                           seed=int(seed), tags=("single",),
                           record_stride=1, record_events=True)
    return PathSample(times=batch.times, states=batch.states[0],
                      events=batch.events[0],
                      truncated=bool(batch.truncated[0]))
