"""Membrane abscissas computed from the density function.

The interfaces sit at the cumulative integrals of the density ``d`` over
consecutive intervals of length ``epsilon``, so consecutive spacings lie
between ``epsilon * d_min`` and ``epsilon * d_max``.  Positions are built
incrementally outward from index 0, each one as the previous plus one
adaptive-Simpson increment, which keeps the table exactly monotone.
"""

from __future__ import annotations

import threading

import numpy as np

from .errors import QuadratureError, WindowExhaustedError

__all__ = ["MembraneLayout", "adaptive_simpson"]

HIT_RTOL = 1.0e-14  # |x - a_k| <= HIT_RTOL * (1 + |a_k|) counts as a hit


def adaptive_simpson(f, a: float, b: float, tol: float = 1.0e-12,
                     max_depth: int = 48) -> float:
    """Adaptive Simpson integral of ``f`` over [a, b], absolute tolerance."""
    if a == b:
        return 0.0
    if a > b:
        return -adaptive_simpson(f, b, a, tol, max_depth)

    def simpson(fa, fm, fb, h):
        return h / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(lo, hi, flo, fmid, fhi, whole, tol, depth):
        mid = 0.5 * (lo + hi)
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        flm = float(f(lm))
        frm = float(f(rm))
        left = simpson(flo, flm, fmid, mid - lo)
        right = simpson(fmid, frm, fhi, hi - mid)
        err = (left + right - whole) / 15.0
        if abs(err) <= tol:
            return left + right + err
        if depth >= max_depth:
            raise QuadratureError(
                f"Simpson recursion exceeded depth {max_depth} on "
                f"[{lo:.6g}, {hi:.6g}]; density may be pathological")
        return (recurse(lo, mid, flo, flm, fmid, left, tol / 2.0, depth + 1)
                + recurse(mid, hi, fmid, frm, fhi, right, tol / 2.0, depth + 1))

    mid = 0.5 * (a + b)
    fa, fm, fb = float(f(a)), float(f(mid)), float(f(b))
    whole = simpson(fa, fm, fb, b - a)
    return recurse(a, b, fa, fm, fb, whole, tol, 0)


class MembraneLayout:
    """Ordered table of membrane positions for one interface spacing.

    The table is extended lazily; lookups beyond ``max_abs_x`` raise
    :class:`WindowExhaustedError` (a path escaped the configured spatial
    range).  Extension is serialized by a lock so concurrent readers can
    share one layout.
    """

    def __init__(self, d, epsilon: float, *, quad_tol: float = 1.0e-12,
                 max_abs_x: float = 1.0e3, margin_strips: int = 10):
        if epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        self.d = d
        self.epsilon = float(epsilon)
        self.quad_tol = float(quad_tol)
        self.max_abs_x = float(max_abs_x)
        self.margin_strips = int(margin_strips)
        self._lock = threading.Lock()
        self._k_min = 0
        self._pos = np.zeros(1)  # positions for k in [k_min, k_min + len - 1]

    # -- window management -------------------------------------------------

    @property
    def k_min(self) -> int:
        return self._k_min

    @property
    def k_max(self) -> int:
        return self._k_min + len(self._pos) - 1

    def _increment(self, k_from: int) -> float:
        eps = self.epsilon
        val = adaptive_simpson(self.d, eps * k_from, eps * (k_from + 1),
                               tol=self.quad_tol)
        if val <= 0.0:
            raise QuadratureError(
                f"non-positive membrane spacing at k={k_from}; "
                "density must be strictly positive")
        return val

    def _extend_to(self, k: int) -> None:
        with self._lock:
            while k > self.k_max:
                top = self.k_max
                nxt = self._pos[-1] + self._increment(top)
                if abs(nxt) > self.max_abs_x:
                    raise WindowExhaustedError(
                        f"membrane {top + 1} lies beyond |x| <= {self.max_abs_x}")
                self._pos = np.append(self._pos, nxt)
            while k < self._k_min:
                bot = self._k_min
                prv = self._pos[0] - self._increment(bot - 1)
                if abs(prv) > self.max_abs_x:
                    raise WindowExhaustedError(
                        f"membrane {bot - 1} lies beyond |x| <= {self.max_abs_x}")
                self._pos = np.insert(self._pos, 0, prv)
                self._k_min -= 1

    def ensure_cover(self, x_lo: float, x_hi: float) -> None:
        """Extend the table until it covers [x_lo, x_hi] plus margin strips."""
        if x_lo > x_hi:
            x_lo, x_hi = x_hi, x_lo
        while self._pos[-1] < x_hi:
            self._extend_to(self.k_max + 1)
        while self._pos[0] > x_lo:
            self._extend_to(self._k_min - 1)
        self._extend_to(self.k_max + self.margin_strips)
        self._extend_to(self._k_min - self.margin_strips)

    # -- queries -------------------------------------------------------------

    def position(self, k: int) -> float:
        """Abscissa of membrane ``k`` (cached, computed on demand)."""
        k = int(k)
        if k > self.k_max or k < self._k_min:
            self._extend_to(k)
        return float(self._pos[k - self._k_min])

    def positions(self, ks) -> np.ndarray:
        """Vectorized :meth:`position` over an integer array."""
        ks = np.asarray(ks, dtype=int)
        if ks.size:
            self._extend_to(int(ks.max()))
            self._extend_to(int(ks.min()))
        return self._pos[ks - self._k_min]

    def strip(self, k: int) -> tuple:
        """Open interval between the two neighbours of membrane ``k``."""
        return self.position(k - 1), self.position(k + 1)

    def bracketing(self, x: float) -> tuple:
        """Indices ``(k_lo, k_hi, nearest)`` with a_{k_lo} <= x <= a_{k_hi}.

        If ``x`` lies on a membrane (within the hit tolerance) all three
        indices coincide.
        """
        x = float(x)
        if abs(x) > self.max_abs_x:
            raise WindowExhaustedError(f"|x|={abs(x):.4g} beyond the window cap")
        while x > self._pos[-1]:
            self._extend_to(self.k_max + 1)
        while x < self._pos[0]:
            self._extend_to(self._k_min - 1)
        idx = int(np.searchsorted(self._pos, x, side="right")) - 1
        k_lo = self._k_min + idx
        a_lo = self._pos[idx]
        if abs(x - a_lo) <= HIT_RTOL * (1.0 + abs(a_lo)):
            return k_lo, k_lo, k_lo
        a_hi = self.position(k_lo + 1)
        if abs(x - a_hi) <= HIT_RTOL * (1.0 + abs(a_hi)):
            return k_lo + 1, k_lo + 1, k_lo + 1
        nearest = k_lo if (x - a_lo) <= (a_hi - x) else k_lo + 1
        return k_lo, k_lo + 1, nearest

    # -- export ---------------------------------------------------------------

    def to_csv(self, path) -> None:
        """Dump the computed window as ``k,a_k`` rows."""
        with open(path, "w") as fh:
            fh.write("k,a_k\n")
            for i, p in enumerate(self._pos):
                fh.write(f"{self._k_min + i},{p!r}\n")
