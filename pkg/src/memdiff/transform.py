"""Strip-local change of coordinates that removes the local-time drift.

Around one membrane (taken as the origin of the chart's offset
coordinate) the process is mapped through

    u = x + max(x, 0) * (B(y) - 1),      B(y) = (1 - eps*beta) / (1 + eps*beta),
    v = y - x * theta(y),

with ``beta`` and ``theta`` frozen at the membrane abscissa.  In the new
coordinates the dynamics is an ordinary SDE whose drift and diffusion
pick up correction terms from the second-order chain rule; the
corrections are assembled in :func:`transformed_coeffs_arrays`.  The
inverse map is closed-form on the left half (x = u) and solved by damped
Newton on the right half, warm-started with the first-order expansion
``y ~ v + theta(v) * u``.

All functions broadcast: ``center``, ``x``, ``u`` may be scalars or
arrays of a common batch shape ``S``; ``y``, ``v`` then have shape
``S + (n,)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficients import CoefficientField
from .errors import NonConvergenceError, SmallnessError

__all__ = [
    "StripChart",
    "TransformedCoeffs",
    "b_factor",
    "forward",
    "inverse",
    "transformed_coeffs",
    "skew_factor",
    "forward_map",
    "inverse_map",
    "transformed_coeffs_arrays",
]

NEWTON_TOL = 1.0e-12
NEWTON_MAX_ITER = 50
SMALLNESS_LIMIT = 0.25  # eps * |beta| bound for the asymptotics to apply


def skew_factor(field: CoefficientField, center, y, epsilon: float) -> np.ndarray:
    """B(y) evaluated with beta frozen at the membrane abscissa."""
    beta = np.asarray(field.beta(center, y), dtype=float)
    if np.any(epsilon * np.abs(beta) >= 1.0):
        worst = float(np.max(epsilon * np.abs(beta)))
        raise SmallnessError(
            f"eps*|beta| = {worst:.4g} >= 1; penetration probabilities "
            "leave [0, 1] for this spacing")
    return (1.0 - epsilon * beta) / (1.0 + epsilon * beta)


def _skew_factor_derivs(field, center, y, epsilon):
    """B together with its first and second y-derivatives (chain rule)."""
    beta = np.asarray(field.beta(center, y), dtype=float)
    if np.any(epsilon * np.abs(beta) >= 1.0):
        worst = float(np.max(epsilon * np.abs(beta)))
        raise SmallnessError(f"eps*|beta| = {worst:.4g} >= 1")
    denom = 1.0 + epsilon * beta
    B = (1.0 - epsilon * beta) / denom
    dB = -2.0 * epsilon / denom ** 2
    d2B = 4.0 * epsilon ** 2 / denom ** 3
    bg = field.eval_beta_dy(center, y)          # (..., n)
    bh = field.eval_beta_dyy(center, y)         # (..., n, n)
    B_y = dB[..., None] * bg
    B_yy = (d2B[..., None, None] * bg[..., :, None] * bg[..., None, :]
            + dB[..., None, None] * bh)
    return B, B_y, B_yy


def forward_map(field: CoefficientField, center, x, y, epsilon: float):
    """(u, v) image of the offset state (x, y)."""
    x = np.asarray(x, dtype=float)
    B = skew_factor(field, center, y, epsilon)
    u = x + np.maximum(x, 0.0) * (B - 1.0)
    theta = np.asarray(field.theta(center, y), dtype=float)
    v = np.asarray(y, dtype=float) - x[..., None] * theta
    return u, v


def inverse_map(field: CoefficientField, center, u, v, epsilon: float,
                tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAX_ITER):
    """Offset state (x, y) whose forward image is (u, v).

    Solves ``y - theta(y) * u - v = 0`` for u <= 0 and
    ``y - theta(y)/B(y) * u - v = 0`` for u > 0, then recovers x from the
    sign branch.  Raises :class:`NonConvergenceError` if Newton stalls,
    which signals a point outside the chart's injectivity strip.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    n = field.n
    if n == 0:
        B = skew_factor(field, center, v, epsilon)
        x = np.where(u > 0.0, u / B, u)
        return x, v.copy()

    right = u > 0.0
    uc = u[..., None]

    def residual(y):
        theta = np.asarray(field.theta(center, y), dtype=float)
        B = skew_factor(field, center, y, epsilon)
        coef = np.where(right[..., None], theta / B[..., None], theta)
        return y - coef * uc - v

    theta_v = np.asarray(field.theta(center, v), dtype=float)
    y = v + theta_v * uc  # first-order warm start
    g = residual(y)
    gnorm = np.max(np.abs(g), axis=-1)
    eye = np.eye(n)
    for _ in range(max_iter):
        if np.all(gnorm <= tol):
            break
        theta = np.asarray(field.theta(center, y), dtype=float)
        th_y = field.eval_theta_dy(center, y)
        B, B_y, _ = _skew_factor_derivs(field, center, y, epsilon)
        jac_right = (th_y / B[..., None, None]
                     - theta[..., :, None] * B_y[..., None, :]
                     / (B ** 2)[..., None, None])
        dcoef = np.where(right[..., None, None], jac_right, th_y)
        jac = eye - uc[..., None] * dcoef
        step = np.linalg.solve(jac, -g[..., None])[..., 0]
        # Backtrack where the full step does not reduce the residual.
        lam = np.ones_like(gnorm)
        for _ in range(8):
            y_new = y + lam[..., None] * step
            g_new = residual(y_new)
            gnorm_new = np.max(np.abs(g_new), axis=-1)
            bad = gnorm_new > gnorm
            if not np.any(bad & (gnorm > tol)):
                break
            lam = np.where(bad, 0.5 * lam, lam)
        y, g, gnorm = y_new, g_new, gnorm_new
    else:
        worst = float(np.max(gnorm))
        raise NonConvergenceError(
            f"inverse-map Newton stalled (residual {worst:.3g}); "
            "the point likely left the injectivity strip")

    B = skew_factor(field, center, y, epsilon)
    x = np.where(right, u / B, u)
    return x, y


@dataclass(frozen=True)
class TransformedCoeffs:
    """Drift and diffusion of the transformed SDE at one offset state.

    The ``phi_*``/``psi_*`` entries are the correction terms alone; in
    the strip they are O(eps) and O(|x|) respectively.
    """

    drift_u: np.ndarray   # scalar component
    drift_v: np.ndarray   # (n,)
    diff_u: np.ndarray    # (m,)
    diff_v: np.ndarray    # (n, m)
    phi_drift: np.ndarray
    phi_diff: np.ndarray
    psi_drift: np.ndarray
    psi_diff: np.ndarray


def transformed_coeffs_arrays(field: CoefficientField, center, x, y,
                              epsilon: float):
    """Batched drift/diffusion of (U, V) at offset states (x, y).

    ``b`` and ``sigma`` are read at the true position ``center + x``;
    the membrane quantities (beta, theta and their y-derivatives) at the
    membrane abscissa.  Indicator terms use I(x > 0), so at x = 0 the
    left-side values apply and all corrections with an x+ factor vanish.
    """
    x = np.asarray(x, dtype=float)
    center = np.asarray(center, dtype=float)
    n, m = field.n, field.m
    x_abs = center + x
    b = np.asarray(field.b(x_abs, y), dtype=float)          # (..., 1+n)
    sig = np.asarray(field.sigma(x_abs, y), dtype=float)    # (..., 1+n, m)
    gram = sig @ np.swapaxes(sig, -1, -2)                   # (..., 1+n, 1+n)
    xp = np.maximum(x, 0.0)
    ind = (x > 0.0).astype(float)

    B, B_y, B_yy = _skew_factor_derivs(field, center, y, epsilon)
    theta = np.asarray(field.theta(center, y), dtype=float)
    th_y = field.eval_theta_dy(center, y)      # (..., n, n)
    th_yy = field.eval_theta_dyy(center, y)    # (..., n, n, n)

    b0 = b[..., 0]
    phi_drift = (B - 1.0) * b0 * ind
    if n > 0:
        phi_drift = phi_drift + np.einsum(
            "...i,...i->...", B_y, xp[..., None] * b[..., 1:]
            + gram[..., 0, 1:] * ind[..., None])
        phi_drift = phi_drift + 0.5 * xp * np.einsum(
            "...ij,...ij->...", B_yy, gram[..., 1:, 1:])
    phi_diff = ((B - 1.0) * ind)[..., None] * sig[..., 0, :]
    if n > 0:
        phi_diff = phi_diff + xp[..., None] * np.einsum(
            "...i,...il->...l", B_y, sig[..., 1:, :])

    if n > 0:
        psi_drift = (-np.einsum("...ij,...j->...i", th_y, x[..., None] * b[..., 1:])
                     - 0.5 * x[..., None] * np.einsum(
                         "...ijk,...jk->...i", th_yy, gram[..., 1:, 1:]))
        psi_diff = -x[..., None, None] * np.einsum(
            "...ij,...jl->...il", th_y, sig[..., 1:, :])
        drift_v = (b[..., 1:] - theta * b0[..., None]
                   - np.einsum("...ij,...j->...i", th_y, gram[..., 0, 1:])
                   + psi_drift)
        diff_v = (sig[..., 1:, :] - theta[..., :, None] * sig[..., 0:1, :]
                  + psi_diff)
    else:
        psi_drift = np.zeros(x.shape + (0,))
        psi_diff = np.zeros(x.shape + (0, m))
        drift_v = psi_drift
        diff_v = psi_diff

    return TransformedCoeffs(
        drift_u=b0 + phi_drift,
        drift_v=drift_v,
        diff_u=sig[..., 0, :] + phi_diff,
        diff_v=diff_v,
        phi_drift=phi_drift,
        phi_diff=phi_diff,
        psi_drift=psi_drift,
        psi_diff=psi_diff,
    )


@dataclass(frozen=True)
class StripChart:
    """Chart of the transform centered on one membrane.

    Coordinates are offsets from the membrane abscissa ``center``.
    Charts are immutable and all operations are pure, so they can be
    shared freely across workers.
    """

    center_k: int
    center: float
    epsilon: float
    field: CoefficientField

    @classmethod
    def at(cls, field: CoefficientField, layout, k: int) -> "StripChart":
        return cls(center_k=int(k), center=layout.position(k),
                   epsilon=layout.epsilon, field=field)

    def smallness_ok(self, y) -> bool:
        """Whether eps*|beta| stays within the asymptotic regime here."""
        beta = np.asarray(self.field.beta(self.center, y), dtype=float)
        return bool(np.all(self.epsilon * np.abs(beta) <= SMALLNESS_LIMIT))


def b_factor(chart: StripChart, y) -> np.ndarray:
    """Skew factor B(y) > 0; equals 1 for inert membranes."""
    return skew_factor(chart.field, chart.center, y, chart.epsilon)


def forward(chart: StripChart, x, y):
    """Map an offset state into transformed coordinates."""
    return forward_map(chart.field, chart.center, x, y, chart.epsilon)


def inverse(chart: StripChart, u, v):
    """Map transformed coordinates back to the offset state."""
    return inverse_map(chart.field, chart.center, u, v, chart.epsilon)


def transformed_coeffs(chart: StripChart, x, y) -> TransformedCoeffs:
    """Drift/diffusion of the transformed SDE at one offset state."""
    return transformed_coeffs_arrays(chart.field, chart.center, x, y,
                                     chart.epsilon)
