"""Monte Carlo rejection quantiles from the Gaussian limit process.

The limit of the joint statistic under "no change" is built from a planar
Brownian motion ``(W1, W2)``::

    L_{h,t} = ((W_{t+h} - W_t) - (W_t - W_{t-h})) / sqrt(2h)     (componentwise)

and the rejection threshold ``Q`` is the ``1 - alpha`` quantile of
``max_{h in H} max_t |L_{h,t}|``. Paths are simulated on a grid of step
``grid_step`` (1 by default, the integer grid the data statistics live on).
"""

from __future__ import annotations

import json
import logging
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np
from scipy import stats

from . import _seeding
from .errors import CacheIntegrityError, ConfigurationError
from .moments import validate_windows

log = logging.getLogger(__name__)

ALGORITHM_VERSION = "limit-mc/1"
BLOCK = 512
MIN_REPLICAS = 1000
STATISTICS = ("euclid", "component")


@dataclass(frozen=True)
class QuantileRequest:
    """What to simulate. ``statistic="component"`` takes the maximum of the
    absolute first component only (the univariate boundary)."""

    T: int
    windows: tuple
    alpha: float = 0.05
    replicas: int = 200_000
    grid_step: float = 1.0
    seed: int = 0
    statistic: str = "euclid"

    def __post_init__(self):
        object.__setattr__(self, "T", int(self.T))
        object.__setattr__(self, "windows", validate_windows(self.windows, int(self.T)))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "replicas", int(self.replicas))
        object.__setattr__(self, "grid_step", float(self.grid_step))
        object.__setattr__(self, "seed", int(self.seed))
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.replicas < MIN_REPLICAS:
            raise ConfigurationError(f"need at least {MIN_REPLICAS} replicas, got {self.replicas}")
        if self.statistic not in STATISTICS:
            raise ConfigurationError(f"statistic must be one of {STATISTICS}")
        self.substeps  # validates grid_step

    @property
    def substeps(self) -> int:
        """Grid points per unit time."""
        if not self.grid_step > 0:
            raise ConfigurationError("grid_step must be positive")
        k = round(1.0 / self.grid_step)
        if k < 1 or abs(k * self.grid_step - 1.0) > 1e-9:
            raise ConfigurationError(f"1/grid_step must be a positive integer, got {self.grid_step}")
        return int(k)

    def key(self) -> dict:
        return {
            "algorithm": ALGORITHM_VERSION,
            "T": self.T,
            "windows": list(self.windows),
            "alpha": self.alpha,
            "replicas": self.replicas,
            "grid_step": self.grid_step,
            "seed": self.seed,
            "statistic": self.statistic,
        }

    def to_dict(self) -> dict:
        d = self.key()
        del d["algorithm"]
        return d


@dataclass(frozen=True)
class QuantileResult:
    Q: float
    se: float
    replicas: int
    request: QuantileRequest
    cached: bool = field(default=False, compare=False)

    @property
    def key(self) -> str:
        return cache_key(self.request)

    def to_dict(self) -> dict:
        return {"Q": self.Q, "se": self.se, "replicas": self.replicas, "request": self.request.to_dict()}


def cache_key(request: QuantileRequest) -> str:
    return json.dumps(request.key(), sort_keys=True, separators=(",", ":"))


@numba.njit(cache=True)
def _path_maxima(W1, W2, hs, lo, hi):
    nrep = W1.shape[0]
    out = np.empty((nrep, 2))
    for r in range(nrep):
        best = 0.0
        best1 = 0.0
        for j in range(hs.shape[0]):
            h = hs[j]
            s = 1.0 / (2.0 * h)
            for t in range(lo[j], hi[j] + 1):
                a = W1[r, t + h] - 2.0 * W1[r, t] + W1[r, t - h]
                b = W2[r, t + h] - 2.0 * W2[r, t] + W2[r, t - h]
                a2 = a * a * s
                d = a2 + b * b * s
                if d > best:
                    best = d
                if a2 > best1:
                    best1 = a2
        out[r, 0] = math.sqrt(best)
        out[r, 1] = math.sqrt(best1)
    return out


def _block_paths(request: QuantileRequest, block: int, count: int):
    """Brownian paths of ``count`` replicas from block ``block``.

    Normals are drawn replica by replica, so the first ``count`` replicas of a
    block do not depend on how many replicas the block holds.
    """
    k = request.substeps
    n_steps = request.T * k
    rng = _seeding.generator(request.seed, _seeding.LIMIT, block)
    z = rng.standard_normal((count, 2, n_steps))
    W = np.zeros((2, count, n_steps + 1))
    np.cumsum(z[:, 0, :], axis=1, out=W[0, :, 1:])
    np.cumsum(z[:, 1, :], axis=1, out=W[1, :, 1:])
    return W


def _blocks(replicas):
    done = 0
    b = 0
    while done < replicas:
        count = min(BLOCK, replicas - done)
        yield b, count
        done += count
        b += 1


def simulate_limit_max(request: QuantileRequest) -> np.ndarray:
    """One maximum statistic per replica, in replica order."""
    k = request.substeps
    hs = np.array([h * k for h in request.windows], dtype=np.int64)
    lo = hs.copy()
    hi = request.T * k - hs
    col = 0 if request.statistic == "euclid" else 1
    out = np.empty(request.replicas)
    pos = 0
    for b, count in _blocks(request.replicas):
        W = _block_paths(request, b, count)
        out[pos : pos + count] = _path_maxima(W[0], W[1], hs, lo, hi)[:, col]
        pos += count
    return out


def simulate_limit_points(request: QuantileRequest, points) -> np.ndarray:
    """``L_{h,t}`` at the given ``(h, t)`` points for every replica.

    Uses the same streams as `simulate_limit_max`; returns an array of shape
    ``(replicas, len(points), 2)``.
    """
    k = request.substeps
    pts = [(int(h), int(t)) for h, t in points]
    for h, t in pts:
        if h not in request.windows or not h <= t <= request.T - h:
            raise ConfigurationError(f"point (h={h}, t={t}) is not on the grid")
    out = np.empty((request.replicas, len(pts), 2))
    pos = 0
    for b, count in _blocks(request.replicas):
        W = _block_paths(request, b, count)
        for j, (h, t) in enumerate(pts):
            hk, tk = h * k, t * k
            dd = W[:, :, tk + hk] - 2.0 * W[:, :, tk] + W[:, :, tk - hk]
            out[pos : pos + count, j, :] = (dd / math.sqrt(2.0 * hk)).T
        pos += count
    return out


def quantile_of_sample(sample: np.ndarray, alpha: float):
    """``(Q, se)``: the linear-interpolation ``1 - alpha`` order statistic and its
    asymptotic standard error ``sqrt(alpha (1 - alpha) / n) / f(Q)`` with ``f``
    a Gaussian kernel density estimate."""
    sample = np.asarray(sample, dtype=float)
    Q = float(np.quantile(sample, 1.0 - alpha, method="linear"))
    dens = float(stats.gaussian_kde(sample)(Q)[0])
    se = math.sqrt(alpha * (1.0 - alpha) / sample.size) / dens if dens > 0 else math.inf
    return Q, se


def quantile(request: QuantileRequest) -> QuantileResult:
    sample = simulate_limit_max(request)
    Q, se = quantile_of_sample(sample, request.alpha)
    log.info("simulated Q=%.4f (se %.4f) for %s", Q, se, cache_key(request))
    return QuantileResult(Q, se, request.replicas, request)


class QuantileCache:
    """Line-delimited JSON records, one per request key.

    Unparseable lines are skipped with a warning and dropped when the file is
    next written. Two records with the same key but different payloads raise
    `CacheIntegrityError`.
    """

    def __init__(self, path):
        self.path = Path(path)

    def _load(self):
        records = {}
        corrupt = 0
        if not self.path.exists():
            return records, corrupt
        with open(self.path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    doc = json.loads(line)
                    key = json.dumps(doc["key"], sort_keys=True, separators=(",", ":"))
                    payload = (float(doc["Q"]), float(doc["se"]), int(doc["replicas"]))
                except (ValueError, KeyError, TypeError):
                    corrupt += 1
                    warnings.warn(f"{self.path}:{lineno}: ignoring corrupt cache record", stacklevel=3)
                    continue
                if key in records and records[key][1] != payload:
                    raise CacheIntegrityError(f"{self.path}: conflicting records for key {key}")
                records[key] = (doc["key"], payload)
        return records, corrupt

    def get(self, request: QuantileRequest) -> QuantileResult | None:
        records, _ = self._load()
        hit = records.get(cache_key(request))
        if hit is None:
            return None
        Q, se, replicas = hit[1]
        return QuantileResult(Q, se, replicas, request, cached=True)

    def put(self, result: QuantileResult) -> None:
        records, corrupt = self._load()
        key = result.key
        payload = (result.Q, result.se, result.replicas)
        if key in records:
            if records[key][1] != payload:
                raise CacheIntegrityError(f"{self.path}: conflicting records for key {key}")
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        line = _record_line(result.request.key(), payload)
        if corrupt:
            tmp = self.path.with_suffix(self.path.suffix + ".tmp")
            with open(tmp, "w", encoding="utf-8") as fh:
                for doc_key, pl in records.values():
                    fh.write(_record_line(doc_key, pl))
                fh.write(line)
            os.replace(tmp, self.path)
        else:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line)


def _record_line(key_doc, payload):
    Q, se, replicas = payload
    doc = {"key": key_doc, "Q": Q, "se": se, "replicas": replicas}
    return json.dumps(doc, separators=(",", ":")) + "\n"


def cache_get_or_compute(request: QuantileRequest, cache_path=None) -> QuantileResult:
    """Return the cached quantile for ``request`` or simulate and store it."""
    if cache_path is None:
        return quantile(request)
    cache = QuantileCache(cache_path)
    hit = cache.get(request)
    if hit is not None:
        return hit
    result = quantile(request)
    cache.put(result)
    return result
