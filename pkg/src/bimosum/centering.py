"""Deterministic centering of the joint statistic near change points.

For a known change configuration, each window's estimators converge to
mixtures of the population parameters of the segments the window overlaps.
With overlap weights ``w_u`` (fraction of the window in segment ``u``) and
errors ``e_u = mu~ - mu_u``::

    mu~   = sum w_u mu_u
    s2~   = sum w_u (sigma_u^2 + e_u^2)
    mu3~  = sum w_u (mu3_u - 3 sigma_u^2 e_u - e_u^3)
    nu2~  = sum w_u (mu4_u - 4 mu3_u e_u + 6 sigma_u^2 e_u^2 + e_u^4) - s2~^2

The centering ``(e, v)`` is the joint statistic evaluated on these limits.
``D~`` rescales to unit variance: the asymptotic variance of ``sqrt(h) mu^``
is ``sum w_u sigma_u^2``, and by the delta method that of ``sqrt(h) sigma^2^``
is ``sum w_u (nu_u^2 - 4 mu3_u e_u + 4 sigma_u^2 e_u^2)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, WindowRangeError
from .moments import compute_moments
from .mosum import field_slice
from .series import ChangeConfig, generate

TILDE_FIELDS = ("mu", "sigma2", "mu3", "mu4", "nu2")


def check_separation(config: ChangeConfig, h: int) -> None:
    """Raise unless consecutive change points are at least ``2h`` apart."""
    cps = config.change_points
    for a, b in zip(cps, cps[1:]):
        if b - a < 2 * h:
            raise ConfigurationError(
                f"change points {a} and {b} are closer than 2h={2 * h}; "
                "the centering is only defined for separated change points"
            )


def _segment_params(config: ChangeConfig):
    pops = config.populations()
    return {
        "mu": np.array([p.mu for p in pops]),
        "sigma2": np.array([p.sigma2 for p in pops]),
        "nu2": np.array([p.nu2 for p in pops]),
        "mu3": np.array([p.mu3 for p in pops]),
    }


def _overlap(bounds, a, h):
    """Weights of segments ``(B_u, B_{u+1}]`` in windows ``(a, a + h]``; shape ``(U, n)``."""
    lo = np.asarray(bounds[:-1])[:, None]
    hi = np.asarray(bounds[1:])[:, None]
    ov = np.minimum(a[None, :] + h, hi) - np.maximum(a[None, :], lo)
    return np.clip(ov, 0, None) / h


def _mixture(w, par):
    mu = par["mu"][:, None]
    s2 = par["sigma2"][:, None]
    m3 = par["mu3"][:, None]
    nu2 = par["nu2"][:, None]
    # anchored at segment 0 so a constant expectation gives exactly zero errors
    ref = par["mu"][0]
    mt = ref + np.sum(w * (mu - ref), axis=0)
    e = mt[None, :] - mu
    s = s2 + e * e
    st = np.sum(w * s, axis=0)
    m3t = np.sum(w * (m3 - 3.0 * s2 * e - e**3), axis=0)
    var_sq = nu2 - 4.0 * m3 * e + 4.0 * s2 * e * e
    spread = np.sum(w * (s - st[None, :]) ** 2, axis=0)
    nu2t = np.sum(w * var_sq, axis=0) + spread
    return {
        "mu": mt,
        "sigma2": st,
        "mu3": m3t,
        "mu4": nu2t + st * st,
        "nu2": nu2t,
        "avar_mean": np.sum(w * s2, axis=0),
        "avar_var": np.sum(w * var_sq, axis=0),
    }


@dataclass(frozen=True)
class CenteringSlice:
    """Centering of one window over ``t = h..T-h``."""

    h: int
    t: np.ndarray
    left: dict
    right: dict
    e: np.ndarray
    v: np.ndarray
    D1: np.ndarray
    D2: np.ndarray

    def index(self, t: int) -> int:
        i = int(t) - self.h
        if i < 0 or i >= self.t.size:
            raise WindowRangeError(f"t={t} outside [{self.h}, {int(self.t[-1])}]")
        return i

    @property
    def j(self) -> np.ndarray:
        return np.stack([self.e, self.v], axis=1)


CenteringField = CenteringSlice


def centering_field(config: ChangeConfig, h: int) -> CenteringSlice:
    """``(e, v)`` and ``D~`` for every ``t`` in ``[h, T - h]``."""
    h = int(h)
    if h < 1 or 2 * h > config.T:
        raise ConfigurationError(f"window {h} is not admissible for T={config.T}")
    check_separation(config, h)
    par = _segment_params(config)
    t = np.arange(h, config.T - h + 1)
    L = _mixture(_overlap(config.bounds, t - h, h), par)
    R = _mixture(_overlap(config.bounds, t, h), par)
    ssum = L["sigma2"] + R["sigma2"]
    nsum = L["nu2"] + R["nu2"]
    e = (R["mu"] - L["mu"]) / np.sqrt(ssum / h)
    v = (R["sigma2"] - L["sigma2"]) / np.sqrt(nsum / h)
    D1 = np.sqrt(ssum / (L["avar_mean"] + R["avar_mean"]))
    D2 = np.sqrt(nsum / (L["avar_var"] + R["avar_var"]))
    left = {k: L[k] for k in TILDE_FIELDS}
    right = {k: R[k] for k in TILDE_FIELDS}
    return CenteringSlice(h, t, left, right, e, v, D1, D2)


def tilde_params(config: ChangeConfig, h: int, t: int) -> dict:
    """Limits of the left and right window estimators at a single ``t``."""
    h, t = int(h), int(t)
    if not h <= t <= config.T - h:
        raise WindowRangeError(f"t={t} outside [{h}, {config.T - h}]")
    check_separation(config, h)
    par = _segment_params(config)
    out = {}
    for side, a in (("left", t - h), ("right", t)):
        mix = _mixture(_overlap(config.bounds, np.array([a]), h), par)
        out[side] = {k: float(mix[k][0]) for k in TILDE_FIELDS}
    return out


def deviation_sup(series, config: ChangeConfig, h: int, cf: CenteringSlice | None = None) -> float:
    """``sup_t d_I(D~ (J - Delta j))`` with ``Delta`` from the realized estimators."""
    cf = centering_field(config, h) if cf is None else cf
    sl = field_slice(series, h)
    m = compute_moments(series, h)
    s_hat = m.left.sigma2 + m.right.sigma2
    n_hat = m.left.nu2 + m.right.nu2
    s_til = cf.left["sigma2"] + cf.right["sigma2"]
    n_til = cf.left["nu2"] + cf.right["nu2"]
    ok = ~sl.missing
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = np.sqrt(s_til / s_hat)
        d2 = np.sqrt(n_til / n_hat)
        x = cf.D1 * (sl.E - d1 * cf.e)
        y = cf.D2 * (sl.V - d2 * cf.v)
    d = np.hypot(x[ok], y[ok])
    return float(d.max()) if d.size else 0.0


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    sups: np.ndarray

    def summary(self) -> dict:
        s = self.sups
        return {
            "n": self.n,
            "seeds": int(s.size),
            "median": float(np.median(s)),
            "q95": float(np.quantile(s, 0.95)),
            "max": float(s.max()),
        }


def empirical_vs_centering(config: ChangeConfig, h: int, seeds, ns=(1, 10, 100)) -> list:
    """Distribution over seeds of the sup-deviation at ``n`` points per unit time."""
    seeds = [int(s) for s in seeds]
    rows = []
    for n in ns:
        cfg = config.scaled(n)
        cf = centering_field(cfg, h * n)
        sups = np.array([deviation_sup(generate(cfg, s), cfg, h * n, cf) for s in seeds])
        rows.append(ConvergenceRow(int(n), sups))
    return rows


def write_centering_csv(slices, path) -> None:
    """Rows ``(h, t, e, v, D1, D2)`` for one or several centering slices."""
    if isinstance(slices, CenteringSlice):
        slices = [slices]
    if hasattr(path, "write"):
        _centering_rows(slices, path)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _centering_rows(slices, fh)


def _centering_rows(slices, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["h", "t", "e", "v", "D1", "D2"])
    for cf in slices:
        for i, t in enumerate(cf.t):
            w.writerow([cf.h, int(t)] + [repr(float(a[i])) for a in (cf.e, cf.v, cf.D1, cf.D2)])


def excursion_max(cf: CenteringSlice, c: int) -> tuple:
    """``(t, d_I)`` of the maximum Euclidean norm of ``(e, v)`` within the ``h``-neighborhood of ``c``."""
    lo, hi = max(cf.h, c - cf.h + 1), min(int(cf.t[-1]), c + cf.h - 1)
    i0, i1 = cf.index(lo), cf.index(hi)
    d = np.hypot(cf.e[i0 : i1 + 1], cf.v[i0 : i1 + 1])
    k = int(np.argmax(d))
    return lo + k, float(math.hypot(cf.e[i0 + k], cf.v[i0 + k]))
