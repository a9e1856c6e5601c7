"""Closed-form and asymptotic reference values for exit statistics.

Two kinds of oracle live here: exact exit laws of a Brownian motion with
drift on an interval (scale-function formulas, used to cross-check the
simulators), and the leading-order expansions of the strip exit moments
in the interface spacing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coefficients import CoefficientField, sigma_gram
from .errors import SmallnessError
from .transform import SMALLNESS_LIMIT

__all__ = [
    "ExitMoments",
    "bm_exit_prob",
    "bm_exit_time",
    "asymptotic_exit_moments",
    "pseudo_generator_estimate",
]

# Below this value of |kappa*(a- + a+)| the exponential formula cancels
# catastrophically; switch to a 4th-order series in kappa.
KAPPA_SERIES_THRESHOLD = 1.0e-8


@dataclass
class ExitMoments:
    """Exit statistics of one strip crossing.

    Analytic instances carry zero CI half-widths; Monte Carlo instances
    carry normal-approximation half-widths at 95%.  ``mean_x`` and the
    cross moment are measured relative to the starting membrane, the
    ``mean_dy``/``cov_yy`` entries relative to the starting y.
    """

    p_plus: float
    p_minus: float
    mean_x: float
    mean_x2: float
    mean_tau: float
    mean_dy: np.ndarray
    cov_yy: np.ndarray
    cross_xy: np.ndarray
    se_p: float = 0.0
    se_x: float = 0.0
    se_x2: float = 0.0
    se_tau: float = 0.0
    se_dy: Optional[np.ndarray] = None
    se_cov: Optional[np.ndarray] = None
    se_cross: Optional[np.ndarray] = None

    def __post_init__(self):
        if not np.isclose(self.p_plus + self.p_minus, 1.0, atol=1.0e-12):
            raise ValueError("exit-side probabilities must sum to 1")

    def to_row(self) -> dict:
        row = {
            "p_plus": self.p_plus, "p_minus": self.p_minus,
            "mean_x": self.mean_x, "mean_x2": self.mean_x2,
            "mean_tau": self.mean_tau,
        }
        for i, v in enumerate(np.atleast_1d(self.mean_dy)):
            row[f"mean_dy{i + 1}"] = float(v)
        cov = np.atleast_2d(self.cov_yy)
        for i in range(cov.shape[0]):
            for j in range(i, cov.shape[1]):
                row[f"cov_y{i + 1}y{j + 1}"] = float(cov[i, j])
        for i, v in enumerate(np.atleast_1d(self.cross_xy)):
            row[f"cross_xy{i + 1}"] = float(v)
        return row


def _p_plus_series(a_minus: float, a_plus: float, kappa: float) -> float:
    # Ratio of 4th-order expansions of (exp(k a-) - 1) and
    # (exp(k a-) - exp(-k a+)) in kappa.
    am, ap = a_minus, a_plus
    num = am * (1.0 + kappa * am / 2.0 + kappa ** 2 * am ** 2 / 6.0
                + kappa ** 3 * am ** 3 / 24.0)
    s = am + ap
    den = (s + kappa * (am ** 2 - ap ** 2) / 2.0
           + kappa ** 2 * (am ** 3 + ap ** 3) / 6.0
           + kappa ** 3 * (am ** 4 - ap ** 4) / 24.0)
    return num / den


def bm_exit_prob(a_minus: float, a_plus: float, drift: float,
                 variance: float) -> tuple:
    """Exit-side law of a drifted Brownian motion from (-a_minus, a_plus).

    Uses the scale-function form with kappa = 2*drift/variance,

        p_plus = (e^{kappa a-} - 1) / (e^{kappa a-} - e^{-kappa a+}),

    evaluated in an overflow-free branch per drift sign and by a series
    for |kappa (a- + a+)| below the cancellation threshold.
    """
    if a_minus <= 0.0 or a_plus <= 0.0:
        raise ValueError("interval half-widths must be positive")
    if variance <= 0.0:
        raise ValueError("variance must be positive")
    kappa = 2.0 * drift / variance
    scale = abs(kappa) * (a_minus + a_plus)
    if scale < KAPPA_SERIES_THRESHOLD:
        p_plus = _p_plus_series(a_minus, a_plus, kappa)
    elif kappa > 0.0:
        p_plus = np.expm1(-kappa * a_minus) / np.expm1(-kappa * (a_minus + a_plus))
    else:
        p_plus = (np.exp(kappa * a_plus) * np.expm1(kappa * a_minus)
                  / np.expm1(kappa * (a_minus + a_plus)))
    p_plus = float(min(max(p_plus, 0.0), 1.0))
    return 1.0 - p_plus, p_plus


def bm_exit_time(a_minus: float, a_plus: float, drift: float,
                 variance: float) -> float:
    """Mean exit time of a drifted Brownian motion from (-a_minus, a_plus).

    Driftless case: a_minus * a_plus / variance.  With drift the optional
    stopping identity gives E tau = (a_plus p_plus - a_minus p_minus) / drift.
    """
    if a_minus <= 0.0 or a_plus <= 0.0:
        raise ValueError("interval half-widths must be positive")
    if variance <= 0.0:
        raise ValueError("variance must be positive")
    kappa = 2.0 * drift / variance
    if abs(kappa) * (a_minus + a_plus) < KAPPA_SERIES_THRESHOLD:
        return a_minus * a_plus / variance
    p_minus, p_plus = bm_exit_prob(a_minus, a_plus, drift, variance)
    return (a_plus * p_plus - a_minus * p_minus) / drift


def asymptotic_exit_moments(field: CoefficientField, k: int, y,
                            epsilon: float, *, layout=None) -> ExitMoments:
    """Leading-order strip exit moments at membrane ``k``.

    All coefficients are frozen at the membrane point (a_k, y); the
    density and its derivative are read at a_k.  Remainders are one order
    of epsilon smaller than each reported term (two orders for the exit
    probabilities) with scenario-dependent constants.
    """
    y = np.asarray(y, dtype=float).reshape(field.n)
    if layout is not None:
        a_k = layout.position(k)
    else:
        from .membranes import MembraneLayout
        a_k = MembraneLayout(field.d, epsilon).position(k)
    beta = float(field.beta(a_k, y))
    if epsilon * abs(beta) > SMALLNESS_LIMIT:
        raise SmallnessError(
            f"eps*|beta| = {epsilon * abs(beta):.4g} > {SMALLNESS_LIMIT}; "
            "the exit expansion does not apply")
    d_val = float(field.d(a_k))
    d_der = float(field.eval_d_prime(a_k))
    b = np.asarray(field.b(a_k, y), dtype=float)
    gram = sigma_gram(field, a_k, y)
    s00 = float(gram[0, 0])
    theta = np.asarray(field.theta(a_k, y), dtype=float)

    slope = b[0] * d_val / s00 + beta - d_der / (2.0 * d_val)
    p_plus = 0.5 + 0.5 * slope * epsilon
    mean_tau = d_val ** 2 * epsilon ** 2 / s00
    mean_x = (beta * d_val + b[0] * d_val ** 2 / s00) * epsilon ** 2
    mean_x2 = d_val ** 2 * epsilon ** 2
    limit_drift_y = b[1:] + theta * beta * s00 / d_val
    mean_dy = limit_drift_y * mean_tau
    cov_yy = gram[1:, 1:] * mean_tau
    cross_xy = gram[0, 1:] * mean_tau
    return ExitMoments(
        p_plus=p_plus, p_minus=1.0 - p_plus,
        mean_x=mean_x, mean_x2=mean_x2, mean_tau=mean_tau,
        mean_dy=mean_dy, cov_yy=cov_yy, cross_xy=cross_xy,
    )


def pseudo_generator_estimate(field: CoefficientField, layout, f, k: int, y,
                              epsilon: float, n_paths: int, seed: int,
                              *, cfg=None, level: float = 0.95) -> tuple:
    """Monte Carlo one-strip generator estimate acting on ``f``.

    Returns ``(value, half_width)`` where value is the ratio of the mean
    jump of f over one strip crossing to the mean crossing duration, and
    the half-width is a delta-method confidence interval for the ratio.
    """
    from scipy.stats import norm

    from .sim_membrane import SimConfig, sample_exit_batch

    y = np.asarray(y, dtype=float).reshape(field.n)
    if cfg is None:
        cfg = SimConfig(epsilon=epsilon, path_count=n_paths, seed=seed)
    batch = sample_exit_batch(field, layout, k, y, cfg,
                              n_paths=n_paths, seed=seed,
                              tags=("pseudo-gen", k))
    a_k = layout.position(k)
    f0 = float(np.asarray(f.value(a_k, y.reshape(1, -1) if field.n else
                                  np.zeros((1, 0))))[0] if field.n else
               np.asarray(f.value(a_k, np.zeros((0,)))))
    jumps = np.asarray(f.value(batch.exit_x, batch.exit_y), dtype=float) - f0
    taus = batch.tau
    num = float(np.mean(jumps))
    den = float(np.mean(taus))
    value = num / den
    n = len(taus)
    var_num = float(np.var(jumps, ddof=1))
    var_den = float(np.var(taus, ddof=1))
    cov = float(np.cov(jumps, taus, ddof=1)[0, 1])
    var_ratio = (var_num + value ** 2 * var_den - 2.0 * value * cov) / (den ** 2 * n)
    z = norm.ppf(0.5 + level / 2.0)
    return value, z * float(np.sqrt(max(var_ratio, 0.0)))
