"""The bivariate moving-sum field and the planar distances it is judged by."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .moments import compute_moments, rho_from_parts, validate_windows
from .series import Series


@dataclass(frozen=True)
class FieldSlice:
    """``E``, ``V`` and local ``rho_hat`` for one window over ``t = h..T-h``.

    Missing grid points (both windows without spread) hold NaN in ``E``, ``V``
    and ``rho``.
    """

    h: int
    t: np.ndarray
    E: np.ndarray
    V: np.ndarray
    rho: np.ndarray
    missing: np.ndarray

    def index(self, t: int) -> int:
        i = int(t) - self.h
        if i < 0 or i >= self.t.size:
            raise ConfigurationError(f"t={t} outside [{self.h}, {int(self.t[-1])}]")
        return i

    def J(self, t: int):
        i = self.index(t)
        return float(self.E[i]), float(self.V[i])


@dataclass(frozen=True)
class MosumField:
    T: int
    slices: dict

    @property
    def windows(self) -> tuple:
        return tuple(self.slices)

    def __getitem__(self, h) -> FieldSlice:
        return self.slices[int(h)]

    def __iter__(self):
        return iter(self.slices.values())

    @property
    def any_missing(self) -> bool:
        return any(bool(s.missing.any()) for s in self)


def field_slice(series, h: int) -> FieldSlice:
    m = compute_moments(series, h)
    left, right = m.left, m.right
    s2 = left.sigma2 + right.sigma2
    n2 = left.nu2 + right.nu2
    missing = (s2 <= 0) | (n2 <= 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        E = (right.mean - left.mean) / np.sqrt(s2 / h)
        V = (right.sigma2 - left.sigma2) / np.sqrt(n2 / h)
    rho = rho_from_parts(left.mu3, right.mu3, left.sigma2, right.sigma2, left.nu2, right.nu2)
    E[missing] = np.nan
    V[missing] = np.nan
    rho[missing] = np.nan
    for a in (E, V, rho, missing):
        a.flags.writeable = False
    return FieldSlice(h, m.t, E, V, rho, missing)


def mosum_field(series: Series, windows) -> MosumField:
    """The joint statistic ``J = (E, V)`` for every window and every admissible t."""
    x = series if isinstance(series, Series) else Series(series)
    hs = validate_windows(windows, x.T)
    return MosumField(x.T, {h: field_slice(x, h) for h in hs})


def _check_rho(rho):
    rho = float(rho)
    if not (-1.0 < rho < 1.0) or math.isnan(rho):
        raise DomainError(f"correlation must lie in (-1, 1), got {rho!r}")
    return rho


@dataclass(frozen=True)
class CorrMatrix:
    """``Gamma = [[1, rho], [rho, 1]]`` with its root, inverse root and inverse.

    All entries come from the eigen-decomposition along the diagonals, whose
    eigenvalues are ``1 + rho`` and ``1 - rho``.
    """

    rho: float
    gamma: np.ndarray
    root: np.ndarray
    inv_root: np.ndarray
    inv: np.ndarray


def _sym(diag, off):
    return np.array([[diag, off], [off, diag]])


def gamma_matrices(rho: float) -> CorrMatrix:
    rho = _check_rho(rho)
    sp, sm = math.sqrt(1.0 + rho), math.sqrt(1.0 - rho)
    ip, im = 1.0 / sp, 1.0 / sm
    det = (1.0 - rho) * (1.0 + rho)
    return CorrMatrix(
        rho=rho,
        gamma=_sym(1.0, rho),
        root=_sym(0.5 * (sp + sm), 0.5 * (sp - sm)),
        inv_root=_sym(0.5 * (ip + im), 0.5 * (ip - im)),
        inv=_sym(1.0 / det, -rho / det),
    )


def d_euclid(x, y):
    return np.hypot(x, y)


def d_max(x, y):
    return np.maximum(np.abs(x), np.abs(y))


def d_mahalanobis(x, y, rho):
    """``sqrt((x^2 - 2 rho x y + y^2) / (1 - rho^2))``; ``rho`` may be an array."""
    rho_arr = np.asarray(rho, dtype=float)
    finite = rho_arr[np.isfinite(rho_arr)]
    if finite.size and np.any(np.abs(finite) >= 1.0):
        raise DomainError("correlation must lie in (-1, 1)")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    q = (x * x - 2.0 * rho_arr * x * y + y * y) / ((1.0 - rho_arr) * (1.0 + rho_arr))
    return np.sqrt(np.maximum(q, 0.0))


METRICS = ("euclid", "mahalanobis", "max")


def distance(point, metric: str = "euclid", rho: float | None = None) -> float:
    """Distance of a planar point from the origin.

    ``metric`` is one of ``"euclid"``, ``"mahalanobis"`` (requires ``rho``) or
    ``"max"``.
    """
    x, y = (float(v) for v in point)
    if metric == "euclid":
        return float(d_euclid(x, y))
    if metric == "max":
        return float(d_max(x, y))
    if metric == "mahalanobis":
        if rho is None:
            raise ConfigurationError("the mahalanobis metric needs rho")
        return float(d_mahalanobis(x, y, _check_rho(rho)))
    raise ConfigurationError(f"unknown metric {metric!r}; expected one of {METRICS}")
