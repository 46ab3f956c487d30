"""Left/right window moments and the derived local estimators.

For a window size ``h`` and a time ``t`` in ``[h, T - h]`` the left window holds
the 1-based indices ``t - h + 1, ..., t`` and the right window
``t + 1, ..., t + h``. All moments use the divisor ``h``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numba
import numpy as np

from .errors import ConfigurationError, DegenerateWindowError, WindowRangeError
from .series import Series

RHO_EPS = 1e-6

# Windows up to this size are computed two-pass; the O(T*h) cost is negligible.
EXACT_MAX_H = 32
REFRESH_EVERY = 2048

_EPS = np.finfo(np.float64).eps


def validate_windows(windows: Iterable[int], T: int) -> tuple:
    """Check a window set against a series length and return it as a tuple.

    Every window must be an integer in ``{2, ..., floor(T / 2)}`` and the set
    strictly increasing.
    """
    hs = tuple(int(h) for h in windows)
    if not hs:
        raise ConfigurationError("the window set is empty")
    if any(b <= a for a, b in zip(hs, hs[1:])):
        raise ConfigurationError(f"windows must be strictly increasing: {hs}")
    if hs[0] < 2 or hs[-1] > T // 2:
        raise ConfigurationError(f"windows must lie in [2, {T // 2}] for T={T}: {hs}")
    return hs


def window_indices(t: int, h: int, T: int | None = None):
    """1-based index ranges ``(left, right)`` of the two windows at time ``t``."""
    t, h = int(t), int(h)
    if h < 1 or t < h or (T is not None and t > T - h):
        upper = "T - h" if T is None else str(T - h)
        raise WindowRangeError(f"t={t} outside [h, {upper}] for h={h}")
    return range(t - h + 1, t + 1), range(t + 1, t + h + 1)


@numba.njit(cache=True)
def _exact_window(x, s, h):
    total = 0.0
    big = 0.0
    for i in range(s, s + h):
        total += x[i]
        ax = abs(x[i])
        if ax > big:
            big = ax
    mean = total / h
    c2 = 0.0
    c3 = 0.0
    c4 = 0.0
    for i in range(s, s + h):
        d = x[i] - mean
        d2 = d * d
        c2 += d2
        c3 += d2 * d
        c4 += d2 * d2
    m2 = c2 / h
    m3 = c3 / h
    m4 = c4 / h
    tol = 16.0 * 2.220446049250313e-16 * big
    if m2 <= tol * tol:
        return mean, 0.0, 0.0, 0.0, 0.0
    nu2 = m4 - m2 * m2
    if nu2 <= 64.0 * 2.220446049250313e-16 * m2 * m2:
        nu2 = 0.0
    return mean, m2, m3, m4, nu2


@numba.njit(cache=True)
def _window_moments(x, h, exact, refresh):
    n = x.shape[0] - h + 1
    out = np.empty((5, n))
    K = 0.0
    S1 = 0.0
    S2 = 0.0
    S3 = 0.0
    S4 = 0.0
    scale2 = 0.0
    for s in range(n):
        if exact:
            mean, m2, m3, m4, nu2 = _exact_window(x, s, h)
        else:
            if s % refresh == 0:
                K = 0.0
                for i in range(s, s + h):
                    K += x[i]
                K /= h
                S1 = 0.0
                S2 = 0.0
                S3 = 0.0
                S4 = 0.0
                scale2 = 0.0
                for i in range(s, s + h):
                    d = x[i] - K
                    d2 = d * d
                    S1 += d
                    S2 += d2
                    S3 += d2 * d
                    S4 += d2 * d2
                    if d2 > scale2:
                        scale2 = d2
            else:
                d = x[s + h - 1] - K
                d2 = d * d
                e = x[s - 1] - K
                e2 = e * e
                S1 += d - e
                S2 += d2 - e2
                S3 += d2 * d - e2 * e
                S4 += d2 * d2 - e2 * e2
                if d2 > scale2:
                    scale2 = d2
            a = S1 / h
            r2 = S2 / h
            r3 = S3 / h
            r4 = S4 / h
            a2 = a * a
            m2 = r2 - a2
            m3 = r3 - 3.0 * a * r2 + 2.0 * a * a2
            m4 = r4 - 4.0 * a * r3 + 6.0 * a2 * r2 - 3.0 * a2 * a2
            nu2 = m4 - m2 * m2
            mean = K + a
            # near-degenerate windows lose all precision to cancellation
            if m2 <= 1e-6 * scale2 or nu2 <= 1e-6 * scale2 * scale2:
                mean, m2, m3, m4, nu2 = _exact_window(x, s, h)
        out[0, s] = mean
        out[1, s] = m2
        out[2, s] = m3
        out[3, s] = m4
        out[4, s] = nu2
    return out


@dataclass(frozen=True)
class WindowMoments:
    """Moments of one side (left or right) for every ``t`` on the grid."""

    mean: np.ndarray
    sigma2: np.ndarray
    mu3: np.ndarray
    mu4: np.ndarray
    nu2: np.ndarray

    def raw(self, k: int) -> np.ndarray:
        """Raw moment ``E[X^k]`` of the window, rebuilt from the centered ones."""
        m = self.mean
        if k == 1:
            return m
        if k == 2:
            return self.sigma2 + m * m
        if k == 3:
            return self.mu3 + 3.0 * m * self.sigma2 + m**3
        if k == 4:
            return self.mu4 + 4.0 * m * self.mu3 + 6.0 * m * m * self.sigma2 + m**4
        raise ValueError("k must be 1, 2, 3 or 4")


@dataclass(frozen=True)
class LocalMoments:
    """Window moments of a series for a single window size ``h``.

    ``stats[:, s]`` holds (mean, sigma2, mu3, mu4, nu2) of the window of 0-based
    positions ``s, ..., s + h - 1``. The left window at ``t`` starts at ``t - h``
    and the right window at ``t``.
    """

    h: int
    T: int
    stats: np.ndarray

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.h, self.T - self.h + 1)

    def _side(self, start):
        n = self.T - 2 * self.h + 1
        block = self.stats[:, start : start + n]
        return WindowMoments(*block)

    @property
    def left(self) -> WindowMoments:
        return self._side(0)

    @property
    def right(self) -> WindowMoments:
        return self._side(self.h)

    def at(self, t: int):
        """``(left, right)`` moment dicts at a single time ``t``."""
        window_indices(t, self.h, self.T)
        cols = (t - self.h, t)
        names = ("mean", "sigma2", "mu3", "mu4", "nu2")
        return tuple({k: float(self.stats[i, c]) for i, k in enumerate(names)} for c in cols)


def compute_moments(series, h: int, *, refresh: int = REFRESH_EVERY) -> LocalMoments:
    """Window moments for every ``t`` in ``[h, T - h]``.

    Sums of the first four powers are carried along as the window slides, around
    an anchor which is reset (with an exact recomputation) every ``refresh``
    steps. Windows whose variance is tiny next to the recent spread of the data
    are recomputed two-pass. Small windows are always computed two-pass.
    """
    x = series.values if isinstance(series, Series) else np.ascontiguousarray(series, dtype=np.float64)
    T = int(x.size)
    h = int(h)
    if h < 2 or h > T // 2:
        raise ConfigurationError(f"window {h} must lie in [2, {T // 2}] for T={T}")
    if refresh < 1:
        raise ConfigurationError("refresh must be positive")
    stats = _window_moments(np.ascontiguousarray(x), h, h <= EXACT_MAX_H, int(refresh))
    stats.flags.writeable = False
    return LocalMoments(h, T, stats)


def rho_from_parts(mu3_l, mu3_r, s2_l, s2_r, nu2_l, nu2_r, eps: float = RHO_EPS):
    """Local skewness correlation, clamped to ``[-1 + eps, 1 - eps]``.

    Works on scalars or arrays; entries with a zero denominator come back as NaN.
    """
    den = np.sqrt(np.asarray(s2_l) + s2_r) * np.sqrt(np.asarray(nu2_l) + nu2_r)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = (np.asarray(mu3_l) + mu3_r) / den
    rho = np.where(den > 0, np.clip(rho, -1.0 + eps, 1.0 - eps), np.nan)
    return rho


def rho_hat(moments: LocalMoments, t: int) -> float:
    left, right = moments.at(t)
    if left["sigma2"] + right["sigma2"] <= 0 or left["nu2"] + right["nu2"] <= 0:
        raise DegenerateWindowError(f"zero spread in both windows at t={t}, h={moments.h}")
    return float(
        rho_from_parts(
            left["mu3"], right["mu3"], left["sigma2"], right["sigma2"], left["nu2"], right["nu2"]
        )
    )
