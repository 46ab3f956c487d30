"""Observed sequences and synthetic piecewise i.i.d. data.

A sequence of length ``T`` is split by change points ``c_1 < ... < c_m`` into
``m + 1`` segments; segment ``u`` covers the 1-based indices
``c_{u-1} + 1, ..., c_u`` (with ``c_0 = 0`` and ``c_{m+1} = T``) and is drawn
i.i.d. from its own distribution.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from . import _seeding
from .errors import ConfigurationError, DataFormatError


@dataclass(frozen=True)
class Population:
    """Closed-form population parameters of a segment distribution."""

    mu: float
    sigma2: float
    nu2: float
    mu3: float
    mu4: float

    @property
    def rho(self) -> float:
        return self.mu3 / math.sqrt(self.sigma2 * self.nu2)

    def as_tuple(self):
        return (self.mu, self.sigma2, self.nu2, self.mu3, self.rho)


def _positive(name, value):
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ConfigurationError(f"{name} must be positive and finite, got {value!r}")
    return value


@dataclass(frozen=True)
class Normal:
    mu: float
    sigma: float

    family = "normal"

    def __post_init__(self):
        if not math.isfinite(float(self.mu)):
            raise ConfigurationError(f"mu must be finite, got {self.mu!r}")
        _positive("sigma", self.sigma)

    def population(self) -> Population:
        s2 = float(self.sigma) ** 2
        return Population(float(self.mu), s2, 2.0 * s2 * s2, 0.0, 3.0 * s2 * s2)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.mu + self.sigma * rng.standard_normal(n)

    def to_dict(self):
        return {"family": "normal", "mu": float(self.mu), "sigma": float(self.sigma)}


@dataclass(frozen=True)
class Gamma:
    """Gamma distribution with shape ``p`` and rate ``lam``."""

    shape: float
    rate: float

    family = "gamma"

    def __post_init__(self):
        _positive("shape", self.shape)
        _positive("rate", self.rate)

    @classmethod
    def from_moments(cls, mu: float, sigma: float) -> "Gamma":
        mu = _positive("mu", mu)
        sigma = _positive("sigma", sigma)
        return cls(mu * mu / (sigma * sigma), mu / (sigma * sigma))

    def population(self) -> Population:
        p, lam = float(self.shape), float(self.rate)
        return Population(
            mu=p / lam,
            sigma2=p / lam**2,
            nu2=2.0 * (p * p + 3.0 * p) / lam**4,
            mu3=2.0 * p / lam**3,
            mu4=3.0 * p * (p + 2.0) / lam**4,
        )

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.gamma(self.shape, 1.0 / self.rate, n)

    def to_dict(self):
        return {"family": "gamma", "shape": float(self.shape), "rate": float(self.rate)}


@dataclass(frozen=True)
class Exponential:
    rate: float

    family = "exponential"

    def __post_init__(self):
        _positive("rate", self.rate)

    def population(self) -> Population:
        return Gamma(1.0, self.rate).population()

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.exponential(1.0 / self.rate, n)

    def to_dict(self):
        return {"family": "exponential", "rate": float(self.rate)}


SegmentSpec = Union[Normal, Gamma, Exponential]


def segment_population(spec: SegmentSpec):
    """Return ``(mu, sigma2, nu2, mu3, rho)`` for a segment distribution."""
    return spec.population().as_tuple()


def segment_from_dict(doc: dict) -> SegmentSpec:
    """Build a segment distribution from a document such as
    ``{"family": "gamma", "mu": 2, "sigma": 1}``.

    Gamma accepts either ``shape``/``rate`` or ``mu``/``sigma``.
    """
    try:
        family = str(doc["family"]).lower()
        if family == "normal":
            return Normal(float(doc["mu"]), float(doc["sigma"]))
        if family == "gamma":
            if "shape" in doc:
                return Gamma(float(doc["shape"]), float(doc["rate"]))
            return Gamma.from_moments(float(doc["mu"]), float(doc["sigma"]))
        if family == "exponential":
            return Exponential(float(doc["rate"]))
    except KeyError as exc:
        raise ConfigurationError(f"segment is missing field {exc.args[0]!r}: {doc!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"bad segment {doc!r}: {exc}") from None
    raise ConfigurationError(f"unknown family {doc.get('family')!r}")


@dataclass(frozen=True)
class ChangeConfig:
    """Ground-truth change configuration: length, change points and segments."""

    T: int
    change_points: tuple
    segments: tuple

    def __post_init__(self):
        T = int(self.T)
        cps = tuple(int(c) for c in self.change_points)
        segs = tuple(self.segments)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "change_points", cps)
        object.__setattr__(self, "segments", segs)
        if T < 4:
            raise ConfigurationError(f"T must be at least 4, got {T}")
        if len(segs) != len(cps) + 1:
            raise ConfigurationError(
                f"{len(cps)} change points need {len(cps) + 1} segments, got {len(segs)}"
            )
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise ConfigurationError(f"change points must be strictly increasing: {cps}")
        if cps and (cps[0] < 1 or cps[-1] > T - 1):
            raise ConfigurationError(f"change points must lie in [1, {T - 1}]: {cps}")
        pops = [s.population() for s in segs]
        for u, (a, b) in enumerate(zip(pops, pops[1:])):
            if a.mu == b.mu and a.sigma2 == b.sigma2:
                raise ConfigurationError(
                    f"segments {u} and {u + 1} share expectation and variance; "
                    "a change point needs a change in at least one of them"
                )

    @property
    def bounds(self) -> tuple:
        """Segment boundaries ``(0, c_1, ..., c_m, T)``."""
        return (0,) + self.change_points + (self.T,)

    def populations(self):
        return [s.population() for s in self.segments]

    def scaled(self, n: int) -> "ChangeConfig":
        """The same configuration with ``n`` observations per unit time."""
        n = int(n)
        return ChangeConfig(self.T * n, tuple(c * n for c in self.change_points), self.segments)

    def to_dict(self):
        return {
            "T": self.T,
            "change_points": list(self.change_points),
            "segments": [s.to_dict() for s in self.segments],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ChangeConfig":
        try:
            return cls(
                int(doc["T"]),
                tuple(doc.get("change_points", ())),
                tuple(segment_from_dict(s) for s in doc["segments"]),
            )
        except KeyError as exc:
            raise ConfigurationError(f"change configuration is missing {exc.args[0]!r}") from None


@dataclass(frozen=True)
class Series:
    """An observed sequence, optionally with the configuration that produced it."""

    values: np.ndarray
    truth: ChangeConfig | None = field(default=None, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ConfigurationError("a series must be one-dimensional")
        if values.size < 4:
            raise ConfigurationError(f"a series needs at least 4 values, got {values.size}")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0]) + 1
            raise ConfigurationError(f"non-finite value at index {bad}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def T(self) -> int:
        return int(self.values.size)

    def __len__(self):
        return self.T


def generate(config: ChangeConfig, seed: int) -> Series:
    """Draw a series from ``config``.

    Segment ``u`` is drawn from its own stream ``(seed, u)``, so the values of
    one segment do not depend on the other segments.
    """
    bounds = config.bounds
    parts = []
    for u, spec in enumerate(config.segments):
        rng = _seeding.generator(seed, _seeding.SERIES, u)
        parts.append(spec.sample(rng, bounds[u + 1] - bounds[u]))
    return Series(np.concatenate(parts), truth=config)


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def read_csv(source: Union[str, Path, io.TextIOBase]) -> Series:
    """Read one numeric value per line.

    A non-numeric first line is taken as a header and skipped. Blank lines are
    ignored. Anything else that does not parse raises `DataFormatError` with
    the 1-based line number.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    else:
        lines = source.read().splitlines()
    values = []
    for lineno, raw in enumerate(lines, start=1):
        token = raw.strip()
        if token.startswith("\ufeff"):
            token = token[1:]
        if not token:
            continue
        if "," in token or ";" in token:
            raise DataFormatError(f"expected a single value, got {raw!r}", lineno)
        if not _is_number(token):
            if lineno == 1:
                continue
            raise DataFormatError(f"not a number: {raw!r}", lineno)
        value = float(token)
        if not math.isfinite(value):
            raise DataFormatError(f"non-finite value {raw!r}", lineno)
        values.append(value)
    if len(values) < 4:
        raise DataFormatError(f"need at least 4 values, found {len(values)}")
    return Series(np.asarray(values))


def write_csv(series: Union[Series, Sequence[float]], path, header: str = "x") -> None:
    values = series.values if isinstance(series, Series) else np.asarray(series, dtype=float)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for v in values:
            fh.write(repr(float(v)) + "\n")
