"""Scenario coefficient fields and assumption checks.

A scenario is a set of functions on R x R^n: drift ``b`` (1+n components),
diffusion matrix ``sigma`` ((1+n) x m), membrane skewness ``beta``,
penetration direction ``theta`` (n components) and the membrane density
``d`` on the real line.  All callables are vectorized: ``x`` may have any
batch shape ``S`` and ``y`` the shape ``S + (n,)``; outputs carry the same
batch shape with the component axes appended.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ScenarioError

__all__ = [
    "CoefficientField",
    "ValidationReport",
    "AssumptionCheck",
    "build_scenario",
    "sigma_gram",
    "validate_assumptions",
    "grid_points",
]

# Central-difference step used by the transform for y-derivatives of
# beta/theta when a scenario does not supply closed forms.
FD_STEP_TRANSFORM = 1.0e-5
# Step used by the assumption checker (relative to 1 + |coordinate|).
FD_STEP_VALIDATE = 1.0e-4


@dataclass(frozen=True)
class CoefficientField:
    """Immutable bundle of scenario coefficients.

    ``n`` is the tangential dimension (``n = 0`` means a scalar diffusion
    with point interfaces), ``m`` the number of Brownian drivers.
    Optional closed-form derivative callables may be supplied; otherwise
    central differences with step ``FD_STEP_TRANSFORM`` are used.
    """

    n: int
    m: int
    b: Callable
    sigma: Callable
    beta: Callable
    theta: Callable
    d: Callable
    name: str = "custom"
    d_prime: Optional[Callable] = None
    beta_dy: Optional[Callable] = None
    beta_dyy: Optional[Callable] = None
    theta_dy: Optional[Callable] = None
    theta_dyy: Optional[Callable] = None
    params: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.n < 0:
            raise ScenarioError("tangential dimension n must be >= 0")
        if self.m < 1:
            raise ScenarioError("driver count m must be >= 1")

    # -- derivative access with finite-difference fallback ---------------

    def eval_d_prime(self, x):
        x = np.asarray(x, dtype=float)
        if self.d_prime is not None:
            return np.asarray(self.d_prime(x), dtype=float)
        h = 1.0e-6 * (1.0 + np.abs(x))
        return (np.asarray(self.d(x + h)) - np.asarray(self.d(x - h))) / (2.0 * h)

    def eval_beta_dy(self, x, y):
        if self.beta_dy is not None:
            return np.asarray(self.beta_dy(x, y), dtype=float)
        return _fd_grad_y(lambda yy: self.beta(x, yy), y, self.n)

    def eval_beta_dyy(self, x, y):
        if self.beta_dyy is not None:
            return np.asarray(self.beta_dyy(x, y), dtype=float)
        return _fd_hess_y(lambda yy: self.beta(x, yy), y, self.n)

    def eval_theta_dy(self, x, y):
        if self.theta_dy is not None:
            return np.asarray(self.theta_dy(x, y), dtype=float)
        return _fd_jac_y(lambda yy: self.theta(x, yy), y, self.n)

    def eval_theta_dyy(self, x, y):
        if self.theta_dyy is not None:
            return np.asarray(self.theta_dyy(x, y), dtype=float)
        return _fd_jac_hess_y(lambda yy: self.theta(x, yy), y, self.n)


def _fd_grad_y(f, y, n):
    y = np.asarray(y, dtype=float)
    out = np.empty(y.shape, dtype=float)
    for j in range(n):
        h = FD_STEP_TRANSFORM * (1.0 + np.abs(y[..., j]))
        yp, ym = y.copy(), y.copy()
        yp[..., j] += h
        ym[..., j] -= h
        out[..., j] = (np.asarray(f(yp)) - np.asarray(f(ym))) / (2.0 * h)
    return out


def _fd_hess_y(f, y, n):
    y = np.asarray(y, dtype=float)
    out = np.empty(y.shape + (n,), dtype=float)
    f0 = np.asarray(f(y), dtype=float)
    h = [FD_STEP_TRANSFORM * (1.0 + np.abs(y[..., j])) for j in range(n)]
    for j in range(n):
        yp, ym = y.copy(), y.copy()
        yp[..., j] += h[j]
        ym[..., j] -= h[j]
        out[..., j, j] = (np.asarray(f(yp)) - 2.0 * f0 + np.asarray(f(ym))) / h[j] ** 2
    for j in range(n):
        for k in range(j + 1, n):
            ypp, ypm, ymp, ymm = y.copy(), y.copy(), y.copy(), y.copy()
            ypp[..., j] += h[j]; ypp[..., k] += h[k]
            ypm[..., j] += h[j]; ypm[..., k] -= h[k]
            ymp[..., j] -= h[j]; ymp[..., k] += h[k]
            ymm[..., j] -= h[j]; ymm[..., k] -= h[k]
            mixed = (np.asarray(f(ypp)) - np.asarray(f(ypm))
                     - np.asarray(f(ymp)) + np.asarray(f(ymm))) / (4.0 * h[j] * h[k])
            out[..., j, k] = mixed
            out[..., k, j] = mixed
    return out


def _fd_jac_y(f, y, n):
    """Jacobian of a vector function of y: [..., i, j] = d f^i / d y^j."""
    y = np.asarray(y, dtype=float)
    out = np.empty(y.shape[:-1] + (n, n), dtype=float)
    for j in range(n):
        h = FD_STEP_TRANSFORM * (1.0 + np.abs(y[..., j]))
        yp, ym = y.copy(), y.copy()
        yp[..., j] += h
        ym[..., j] -= h
        out[..., :, j] = (np.asarray(f(yp)) - np.asarray(f(ym))) / (2.0 * h)[..., None]
    return out


def _fd_jac_hess_y(f, y, n):
    """Second y-derivatives of a vector function: [..., i, j, k]."""
    y = np.asarray(y, dtype=float)
    out = np.empty(y.shape[:-1] + (n, n, n), dtype=float)
    f0 = np.asarray(f(y), dtype=float)
    h = [FD_STEP_TRANSFORM * (1.0 + np.abs(y[..., j])) for j in range(n)]
    for j in range(n):
        yp, ym = y.copy(), y.copy()
        yp[..., j] += h[j]
        ym[..., j] -= h[j]
        out[..., :, j, j] = (np.asarray(f(yp)) - 2.0 * f0 + np.asarray(f(ym))) / (h[j] ** 2)[..., None]
    for j in range(n):
        for k in range(j + 1, n):
            ypp, ypm, ymp, ymm = y.copy(), y.copy(), y.copy(), y.copy()
            ypp[..., j] += h[j]; ypp[..., k] += h[k]
            ypm[..., j] += h[j]; ypm[..., k] -= h[k]
            ymp[..., j] -= h[j]; ymp[..., k] += h[k]
            ymm[..., j] -= h[j]; ymm[..., k] -= h[k]
            mixed = (np.asarray(f(ypp)) - np.asarray(f(ypm))
                     - np.asarray(f(ymp)) + np.asarray(f(ymm))) / (4.0 * h[j] * h[k])[..., None]
            out[..., :, j, k] = mixed
            out[..., :, k, j] = mixed
    return out


# -- Gram matrix ----------------------------------------------------------

def sigma_gram(field: CoefficientField, x, y) -> np.ndarray:
    """Gram matrix of the diffusion rows, ``sigma @ sigma.T``.

    Symmetric positive semidefinite by construction; uniform positive
    definiteness is a scenario assumption checked separately.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
        raise ValueError("sigma_gram requires finite coordinates")
    sig = np.asarray(field.sigma(x, y), dtype=float)
    return sig @ np.swapaxes(sig, -1, -2)


# -- scenario construction ------------------------------------------------

def _const_like(value):
    value = np.asarray(value, dtype=float)

    def f(x, y=None):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(value, x.shape + value.shape).copy()

    return f


def _zeros_fn(shape_tail):
    def f(x, y=None):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape + shape_tail, dtype=float)

    return f


def _constant_field(params: dict) -> CoefficientField:
    n = int(params.get("n", 0))
    m = int(params.get("m", max(1, 1 + n)))
    b = np.broadcast_to(np.asarray(params.get("b", 0.0), dtype=float), (1 + n,)).copy()
    sigma_default = np.eye(1 + n, m)
    sigma = np.asarray(params.get("sigma", sigma_default), dtype=float)
    if sigma.shape != (1 + n, m):
        raise ScenarioError(f"sigma table has shape {sigma.shape}, expected {(1 + n, m)}")
    beta = float(params.get("beta", 0.0))
    theta = np.broadcast_to(np.asarray(params.get("theta", np.zeros(n)), dtype=float), (n,)).copy()
    d_const = float(params.get("d", 1.0))
    if d_const <= 0.0:
        raise ScenarioError("constant membrane density must be positive")

    def beta_fn(x, y=None):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape, beta)

    return CoefficientField(
        n=n, m=m,
        b=_const_like(b),
        sigma=_const_like(sigma),
        beta=beta_fn,
        theta=_const_like(theta),
        d=lambda x: np.full(np.shape(np.asarray(x, dtype=float)), d_const),
        d_prime=lambda x: np.zeros(np.shape(np.asarray(x, dtype=float))),
        beta_dy=_zeros_fn((n,)),
        beta_dyy=_zeros_fn((n, n)),
        theta_dy=_zeros_fn((n, n)),
        theta_dyy=_zeros_fn((n, n, n)),
        name="constant",
        params=dict(params),
    )


def _oned_skew_field(params: dict) -> CoefficientField:
    merged = {"n": 0, "m": 1, "b": 0.0, "sigma": np.ones((1, 1)),
              "beta": float(params.get("beta", 0.5)), "d": 1.0}
    f = _constant_field(merged)
    object.__setattr__(f, "name", "oned-skew")
    return f


def _wavy_d_field(params: dict) -> CoefficientField:
    """Scalar driftless diffusion with membrane density 2 + sin(x)."""
    base = float(params.get("d_base", 2.0))
    amp = float(params.get("d_amp", 1.0))
    if base - abs(amp) <= 0.0:
        raise ScenarioError("wavy-d density must stay positive")
    merged = {"n": 0, "m": 1, "b": float(params.get("b", 0.0)),
              "sigma": np.ones((1, 1)), "beta": float(params.get("beta", 0.0))}
    f = _constant_field(merged)
    object.__setattr__(f, "name", "wavy-d")
    object.__setattr__(f, "params", dict(params))
    object.__setattr__(f, "d", lambda x: base + amp * np.sin(np.asarray(x, dtype=float)))
    object.__setattr__(f, "d_prime", lambda x: amp * np.cos(np.asarray(x, dtype=float)))
    return f


# Quintic smoothstep: C^2, flat to second order at both ends.
def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def _smoothstep_d1(t):
    inside = (t > 0.0) & (t < 1.0)
    t = np.clip(t, 0.0, 1.0)
    return np.where(inside, 30.0 * t * t * (1.0 - t) ** 2, 0.0)


def _smoothstep_d2(t):
    inside = (t > 0.0) & (t < 1.0)
    t = np.clip(t, 0.0, 1.0)
    return np.where(inside, 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t), 0.0)


def _fig2_field(params: dict) -> CoefficientField:
    """Rotating planar diffusion with strongly skewed vertical membranes.

    The skewness grows like 2y for moderate |y|, so the interface-induced
    drift roughly flips the rotation direction of the underlying flow.
    All coefficients are faded to zero outside a ball of radius
    ``r_trunc`` over a shell of width ``trunc_width`` to keep them bounded
    with bounded derivatives.
    """
    gamma = float(params.get("gamma", 1.0e-2))
    r_trunc = float(params.get("r_trunc", 10.0))
    width = float(params.get("trunc_width", 2.0))

    def bump(x, y1):
        r = np.sqrt(x * x + y1 * y1)
        return 1.0 - _smoothstep((r - r_trunc) / width)

    def bump_dy(x, y1):
        # d/dy of bump; zero inside the ball and outside the shell.
        r = np.sqrt(x * x + y1 * y1)
        r_safe = np.where(r > 0.0, r, 1.0)
        return -_smoothstep_d1((r - r_trunc) / width) / width * (y1 / r_safe)

    def bump_dyy(x, y1):
        r = np.sqrt(x * x + y1 * y1)
        r_safe = np.where(r > 0.0, r, 1.0)
        t = (r - r_trunc) / width
        s1 = _smoothstep_d1(t) / width
        s2 = _smoothstep_d2(t) / width ** 2
        return -(s2 * (y1 / r_safe) ** 2 + s1 * (1.0 / r_safe - y1 ** 2 / r_safe ** 3))

    def beta0(y1):
        return 2.0 * y1 ** 3 / (gamma + y1 * y1)

    def beta0_d1(y1):
        return (6.0 * gamma * y1 ** 2 + 2.0 * y1 ** 4) / (gamma + y1 * y1) ** 2

    def beta0_d2(y1):
        return 4.0 * gamma * y1 * (3.0 * gamma - y1 * y1) / (gamma + y1 * y1) ** 3

    def cfun(x):
        return -x ** 3 / (gamma ** 2 + x * x)

    def theta0(x, y1):
        return cfun(x) * y1 / (gamma + y1 * y1)

    def theta0_d1(x, y1):
        return cfun(x) * (gamma - y1 * y1) / (gamma + y1 * y1) ** 2

    def theta0_d2(x, y1):
        return cfun(x) * (-2.0 * y1) * (3.0 * gamma - y1 * y1) / (gamma + y1 * y1) ** 3

    def b(x, y):
        x = np.asarray(x, dtype=float)
        y1 = np.asarray(y, dtype=float)[..., 0]
        s = bump(x, y1)
        out = np.empty(x.shape + (2,), dtype=float)
        out[..., 0] = -y1 * s
        out[..., 1] = x * s
        return out

    def sigma(x, y):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.eye(2), x.shape + (2, 2)).copy()

    def beta(x, y):
        x = np.asarray(x, dtype=float)
        y1 = np.asarray(y, dtype=float)[..., 0]
        return bump(x, y1) * beta0(y1)

    def beta_dy(x, y):
        x = np.asarray(x, dtype=float)
        y1 = np.asarray(y, dtype=float)[..., 0]
        val = bump(x, y1) * beta0_d1(y1) + bump_dy(x, y1) * beta0(y1)
        return val[..., None]

    def beta_dyy(x, y):
        x = np.asarray(x, dtype=float)
        y1 = np.asarray(y, dtype=float)[..., 0]
        val = (bump(x, y1) * beta0_d2(y1)
               + 2.0 * bump_dy(x, y1) * beta0_d1(y1)
               + bump_dyy(x, y1) * beta0(y1))
        return val[..., None, None]

    def theta(x, y):
        x = np.asarray(x, dtype=float)
        y1 = np.asarray(y, dtype=float)[..., 0]
        return (bump(x, y1) * theta0(x, y1))[..., None]

    def theta_dy(x, y):
        x = np.asarray(x, dtype=float)
        y1 = np.asarray(y, dtype=float)[..., 0]
        val = bump(x, y1) * theta0_d1(x, y1) + bump_dy(x, y1) * theta0(x, y1)
        return val[..., None, None]

    def theta_dyy(x, y):
        x = np.asarray(x, dtype=float)
        y1 = np.asarray(y, dtype=float)[..., 0]
        val = (bump(x, y1) * theta0_d2(x, y1)
               + 2.0 * bump_dy(x, y1) * theta0_d1(x, y1)
               + bump_dyy(x, y1) * theta0(x, y1))
        return val[..., None, None, None]

    return CoefficientField(
        n=1, m=2, b=b, sigma=sigma, beta=beta, theta=theta,
        d=lambda x: np.ones(np.shape(np.asarray(x, dtype=float))),
        d_prime=lambda x: np.zeros(np.shape(np.asarray(x, dtype=float))),
        beta_dy=beta_dy, beta_dyy=beta_dyy,
        theta_dy=theta_dy, theta_dyy=theta_dyy,
        name="fig2",
        params={"gamma": gamma, "r_trunc": r_trunc, "trunc_width": width},
    )


def _table_field(params: dict) -> CoefficientField:
    """Scenario from sampled tables with multilinear interpolation."""
    from scipy.interpolate import RegularGridInterpolator

    tables = params["tables"]
    n = int(params.get("n", len(tables.get("y_axes", []))))
    m = int(params["m"])
    x_axis = np.asarray(tables["x"], dtype=float)
    y_axes = [np.asarray(a, dtype=float) for a in tables.get("y_axes", [])]
    if len(y_axes) != n:
        raise ScenarioError(f"{len(y_axes)} y-axes supplied for n={n}")
    axes = (x_axis, *y_axes)
    grid_shape = tuple(len(a) for a in axes)

    def interp(values, tail_shape, label):
        values = np.asarray(values, dtype=float)
        if values.shape != grid_shape + tail_shape:
            raise ScenarioError(
                f"table '{label}' has shape {values.shape}, "
                f"expected {grid_shape + tail_shape}")
        itp = RegularGridInterpolator(axes, values, method="linear",
                                      bounds_error=False, fill_value=None)

        def f(x, y):
            x = np.asarray(x, dtype=float)
            pts = np.concatenate(
                [x[..., None], np.broadcast_to(np.asarray(y, dtype=float), x.shape + (n,))],
                axis=-1)
            return itp(pts.reshape(-1, 1 + n)).reshape(x.shape + tail_shape)

        return f

    d_table = tables["d"]
    dx = np.asarray(d_table["x"], dtype=float)
    dv = np.asarray(d_table["values"], dtype=float)

    def d(x):
        return np.interp(np.asarray(x, dtype=float), dx, dv)

    return CoefficientField(
        n=n, m=m,
        b=interp(tables["b"], (1 + n,), "b"),
        sigma=interp(tables["sigma"], (1 + n, m), "sigma"),
        beta=interp(tables["beta"], (), "beta"),
        theta=interp(tables["theta"], (n,), "theta") if n > 0 else _zeros_fn((0,)),
        d=d,
        name=params.get("name", "table"),
        params={},
    )


_BUILTINS = {
    "constant": _constant_field,
    "fig2": _fig2_field,
    "oned-skew": _oned_skew_field,
    "wavy-d": _wavy_d_field,
}


def build_scenario(spec) -> CoefficientField:
    """Build a coefficient field from a name or a scenario description.

    ``spec`` is either a built-in name ("constant", "fig2", "oned-skew",
    "wavy-d") or a dict ``{"name": ..., **params}``; a dict with a
    ``tables`` entry defines a sampled-table scenario.
    """
    if isinstance(spec, str):
        name, params = spec, {}
    elif isinstance(spec, dict):
        params = dict(spec)
        name = params.pop("name", None)
        if "tables" in params:
            return _table_field(params)
        if name is None:
            raise ScenarioError("scenario dict needs a 'name' or 'tables' entry")
    else:
        raise ScenarioError(f"unsupported scenario spec: {spec!r}")
    try:
        builder = _BUILTINS[name]
    except KeyError:
        raise ScenarioError(
            f"unknown scenario {name!r}; built-ins: {sorted(_BUILTINS)}") from None
    return builder(params)


# -- assumption validation -------------------------------------------------

@dataclass
class AssumptionCheck:
    name: str
    passed: bool
    measured: dict
    witness: Optional[tuple] = None

    def __post_init__(self):
        if not self.passed and self.witness is None:
            raise ValueError("failed checks must carry a witness point")


@dataclass
class ValidationReport:
    checks: list
    grid_description: str

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "grid": self.grid_description,
            "checks": [
                {"name": c.name, "passed": c.passed, "measured": c.measured,
                 "witness": None if c.witness is None else list(c.witness)}
                for c in self.checks
            ],
        }

    def to_text(self) -> str:
        lines = [f"validation on {self.grid_description}: "
                 f"{'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            vals = ", ".join(f"{k}={v:.6g}" for k, v in c.measured.items())
            line = f"  [{status}] {c.name}: {vals}"
            if c.witness is not None:
                line += f" (witness {tuple(round(float(w), 6) for w in c.witness)})"
            lines.append(line)
        return "\n".join(lines)


def grid_points(lo: Sequence[float], hi: Sequence[float], num: int, n: int) -> np.ndarray:
    """Regular grid of points in R^{1+n} as an (N, 1+n) array."""
    axes = [np.linspace(lo[i], hi[i], num) for i in range(1 + n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _deriv_sups(fn, pts, n):
    """Sup norms of value and central-difference 1st/2nd derivatives."""
    x, y = pts[:, 0], pts[:, 1:]
    h = FD_STEP_VALIDATE * (1.0 + np.abs(pts))
    val = np.asarray(fn(x, y), dtype=float)
    sup_val = float(np.max(np.abs(val), initial=0.0))
    sup_g = 0.0
    sup_h = 0.0
    for j in range(1 + n):
        pp, pm = pts.copy(), pts.copy()
        pp[:, j] += h[:, j]
        pm[:, j] -= h[:, j]
        fp = np.asarray(fn(pp[:, 0], pp[:, 1:]), dtype=float)
        fm = np.asarray(fn(pm[:, 0], pm[:, 1:]), dtype=float)
        grad = (fp - fm) / (2.0 * h[:, j]).reshape((-1,) + (1,) * (val.ndim - 1))
        hess = (fp - 2.0 * val + fm) / (h[:, j] ** 2).reshape((-1,) + (1,) * (val.ndim - 1))
        sup_g = max(sup_g, float(np.max(np.abs(grad), initial=0.0)))
        sup_h = max(sup_h, float(np.max(np.abs(hess), initial=0.0)))
    return sup_val, sup_g, sup_h


def validate_assumptions(field: CoefficientField, grid, *,
                         d_min_tol: float = 0.0,
                         lambda_min_tol: float = 0.0,
                         bound_cap: float = np.inf) -> ValidationReport:
    """Check the scenario assumptions on a sampling grid.

    Failures are report entries, never exceptions.  The smoothness check
    is a finite-difference proxy for twice continuous differentiability
    with bounded derivatives; it cannot prove smoothness, only flag
    blow-ups on the grid.
    """
    pts = np.asarray(grid, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.size == 0 or not np.all(np.isfinite(pts)):
        raise ValueError("validation grid must be non-empty and finite")
    if pts.shape[1] != 1 + field.n:
        raise ValueError(f"grid points have dimension {pts.shape[1]}, "
                         f"expected {1 + field.n}")
    n = field.n
    checks = []

    xs = np.unique(pts[:, 0])
    dvals = np.asarray(field.d(xs), dtype=float)
    i0 = int(np.argmin(dvals))
    d_min = float(dvals[i0])
    checks.append(AssumptionCheck(
        name="membrane_density_positive",
        passed=bool(d_min > d_min_tol),
        measured={"d_min": d_min},
        witness=None if d_min > d_min_tol else (xs[i0],) + (0.0,) * n,
    ))

    gram = sigma_gram(field, pts[:, 0], pts[:, 1:])
    eigs = np.linalg.eigvalsh(gram)
    j0 = int(np.argmin(eigs[:, 0]))
    lam_min = float(eigs[j0, 0])
    checks.append(AssumptionCheck(
        name="uniform_ellipticity",
        passed=bool(lam_min > lambda_min_tol),
        measured={"lambda_min": lam_min},
        witness=None if lam_min > lambda_min_tol else tuple(pts[j0]),
    ))

    measured = {}
    worst = -np.inf
    for label, fn in (("b", field.b), ("sigma", field.sigma),
                      ("beta", field.beta), ("theta", field.theta)):
        if label == "theta" and n == 0:
            continue
        sv, sg, sh = _deriv_sups(fn, pts, n)
        measured[f"{label}_sup"] = sv
        measured[f"{label}_grad_sup"] = sg
        measured[f"{label}_hess_sup"] = sh
        worst = max(worst, sv, sg, sh)
    smooth_ok = np.isfinite(worst) and worst <= bound_cap
    checks.append(AssumptionCheck(
        name="coefficient_smoothness",
        passed=bool(smooth_ok),
        measured=measured,
        witness=None if smooth_ok else tuple(pts[0]),
    ))

    desc = (f"{pts.shape[0]} points, x in [{pts[:, 0].min():.4g}, "
            f"{pts[:, 0].max():.4g}]")
    return ValidationReport(checks=checks, grid_description=desc)
