"""Strength, type and contour regions of detected changes.

At a change point the joint statistic ``J`` is approximately bivariate normal
with a correlation matrix whose eigenvectors are the diagonals ``(1, +-1)``.
Its contour ellipses ("dartboards") therefore have principal axes along the
diagonals with half-lengths ``sqrt(q (1 +- rho))``, where ``q`` is the
chi-square(2) quantile of the contour level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DegenerateEstimateError, DomainError
from .mosum import MosumField, gamma_matrices
from .series import SegmentSpec

LEVELS = (0.66, 0.95)
CLASS_BAND = math.pi / 8
_DIAG = 1.0 / math.sqrt(2.0)
AXIS_DIRS = ((_DIAG, _DIAG), (_DIAG, -_DIAG))

_AXES = (
    (0.0, "expectation_up"),
    (math.pi / 2, "variance_up"),
    (math.pi, "expectation_down"),
    (3 * math.pi / 2, "variance_down"),
    (2 * math.pi, "expectation_up"),
)


def chi2_2_quantile(level: float) -> float:
    """Quantile of the chi-square distribution with two degrees of freedom."""
    if not 0.0 < level < 1.0:
        raise ConfigurationError(f"level must lie in (0, 1), got {level}")
    return -2.0 * math.log1p(-level)


def angle(E: float, V: float) -> float:
    """``atan2(V, E)`` mapped to ``[0, 2 pi)``."""
    w = math.atan2(V, E)
    if w < 0:
        w += 2 * math.pi
    return 0.0 if w >= 2 * math.pi else w


def classify(omega: float, band: float = CLASS_BAND) -> str:
    for axis, name in _AXES:
        if abs(omega - axis) <= band:
            return name
    return "mixed"


@dataclass(frozen=True)
class Contour:
    level: float
    center: tuple
    half_lengths: tuple
    axis_dirs: tuple = AXIS_DIRS

    def polyline(self, n: int = 64) -> np.ndarray:
        """``n`` points along the ellipse; the last point repeats the first."""
        th = np.linspace(0.0, 2 * math.pi, n)
        a, b = self.half_lengths
        (u1, u2), (v1, v2) = self.axis_dirs
        x = self.center[0] + a * np.cos(th) * u1 + b * np.sin(th) * v1
        y = self.center[1] + a * np.cos(th) * u2 + b * np.sin(th) * v2
        pts = np.column_stack([x, y])
        pts[-1] = pts[0]
        return pts

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "center": list(self.center),
            "axis_dirs": [list(d) for d in self.axis_dirs],
            "half_lengths": list(self.half_lengths),
        }


def contour(center, rho: float, level: float) -> Contour:
    if not -1.0 < rho < 1.0:
        raise DomainError(f"correlation must lie in (-1, 1), got {rho}")
    q = chi2_2_quantile(level)
    return Contour(level, (float(center[0]), float(center[1])),
                   (math.sqrt(q * (1.0 + rho)), math.sqrt(q * (1.0 - rho))))


@dataclass(frozen=True)
class EffectSummary:
    t: int
    window: int
    E: float
    V: float
    strength: float
    omega: float
    omega_class: str
    rho_c_hat: float
    contours: tuple

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "window": self.window,
            "E": self.E,
            "V": self.V,
            "strength": self.strength,
            "omega_radians": self.omega,
            "omega_class": self.omega_class,
            "rho_c_hat": self.rho_c_hat,
            "contours": [c.to_dict() for c in self.contours],
        }


def summarize(t, h, E, V, rho, levels=LEVELS) -> EffectSummary:
    omega = angle(E, V)
    return EffectSummary(
        t=int(t),
        window=int(h),
        E=float(E),
        V=float(V),
        strength=math.hypot(E, V) / math.sqrt(h),
        omega=omega,
        omega_class=classify(omega),
        rho_c_hat=float(rho),
        contours=tuple(contour((E, V), rho, lv) for lv in levels),
    )


def effect_from_detection(field: MosumField, estimate: int, h: int, levels=LEVELS) -> EffectSummary:
    """Effect summary read off the field at ``(h, estimate)``."""
    sl = field[h]
    i = sl.index(estimate)
    if sl.missing[i]:
        raise DegenerateEstimateError(f"statistic is missing at t={estimate}, h={h}")
    return summarize(estimate, h, float(sl.E[i]), float(sl.V[i]), float(sl.rho[i]), levels)


@dataclass(frozen=True)
class TheoreticalEffect:
    h: int
    j: tuple
    rho_c: float

    @property
    def gamma(self):
        return gamma_matrices(self.rho_c)

    def contour(self, level: float) -> Contour:
        return contour(self.j, self.rho_c, level)


def theoretical_center(seg1: SegmentSpec, seg2: SegmentSpec, h: int) -> TheoreticalEffect:
    """Asymptotic center of ``J_{h,c}`` and correlation at a change from ``seg1`` to ``seg2``."""
    a, b = seg1.population(), seg2.population()
    s2 = a.sigma2 + b.sigma2
    n2 = a.nu2 + b.nu2
    if n2 <= 0 or s2 <= 0:
        raise DomainError("both segments need positive spread")
    j = (
        math.sqrt(h) * (b.mu - a.mu) / math.sqrt(s2),
        math.sqrt(h) * (b.sigma2 - a.sigma2) / math.sqrt(n2),
    )
    rho_c = (b.mu3 + a.mu3) / (math.sqrt(s2) * math.sqrt(n2))
    return TheoreticalEffect(int(h), j, rho_c)
