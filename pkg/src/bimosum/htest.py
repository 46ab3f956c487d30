"""Testing the null hypothesis "no change point".

Three rejection regions share one simulated threshold ``Q``:

* ``circle``  -- Euclidean distance of ``J`` (assumes symmetric data),
* ``ellipse`` -- Mahalanobis distance with the local ``rho_hat`` at each (h, t),
* ``square``  -- maximum norm; conservative for skewed data.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .limit import QuantileResult
from .mosum import FieldSlice, MosumField, d_euclid, d_mahalanobis, d_max


class Variant(str, enum.Enum):
    CIRCLE = "circle"
    ELLIPSE = "ellipse"
    SQUARE = "square"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigurationError(
                f"unknown rejection region {value!r}; expected circle, ellipse or square"
            ) from None


@dataclass(frozen=True)
class RejectionRule:
    variant: Variant
    Q: float
    alpha: float
    quantile: QuantileResult | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if not self.Q > 0:
            raise ConfigurationError(f"Q must be positive, got {self.Q}")

    @classmethod
    def from_quantile(cls, variant, result: QuantileResult) -> "RejectionRule":
        return cls(Variant.parse(variant), result.Q, result.request.alpha, result)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "Q": self.Q,
            "alpha": self.alpha,
            "quantile": None if self.quantile is None else self.quantile.to_dict(),
        }


def slice_distance(sl: FieldSlice, variant: Variant) -> np.ndarray:
    """Rule distance along one window; missing points count as 0."""
    E = np.where(sl.missing, 0.0, sl.E)
    V = np.where(sl.missing, 0.0, sl.V)
    if variant is Variant.CIRCLE:
        d = d_euclid(E, V)
    elif variant is Variant.SQUARE:
        d = d_max(E, V)
    else:
        d = d_mahalanobis(E, V, np.where(sl.missing, 0.0, sl.rho))
    return d


def euclid_distance(sl: FieldSlice) -> np.ndarray:
    return slice_distance(sl, Variant.CIRCLE)


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # not a pytest class

    variant: Variant
    M: float
    Q: float
    alpha: float
    rejected: bool
    distances: dict
    exceedance: dict

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "M": self.M,
            "Q": self.Q,
            "alpha": self.alpha,
            "decision": "reject" if self.rejected else "retain",
            "exceedance_runs": exceedance_runs(self),
        }


def _check_match(field: MosumField, rule: RejectionRule):
    if rule.quantile is None:
        return
    req = rule.quantile.request
    if req.T != field.T or tuple(req.windows) != tuple(field.windows):
        raise ConfigurationError(
            f"rule was simulated for T={req.T}, H={list(req.windows)} "
            f"but the field has T={field.T}, H={list(field.windows)}"
        )


def mosum_test(field: MosumField, rule: RejectionRule) -> TestResult:
    """Global statistic ``M = max_h max_t d(J_{h,t})`` against ``rule.Q``."""
    _check_match(field, rule)
    distances = {}
    exceed = {}
    M = 0.0
    for sl in field:
        d = slice_distance(sl, rule.variant)
        d.flags.writeable = False
        distances[sl.h] = d
        mask = d > rule.Q
        mask.flags.writeable = False
        exceed[sl.h] = mask
        if d.size:
            M = max(M, float(d.max()))
    return TestResult(rule.variant, M, rule.Q, rule.alpha, M > rule.Q, distances, exceed)


def exceedance_set(result: TestResult) -> set:
    """All ``(h, t)`` grid points inside the rejection region."""
    out = set()
    for h, mask in result.exceedance.items():
        for i in np.flatnonzero(mask):
            out.add((h, int(i) + h))
    return out


def exceedance_runs(result: TestResult) -> list:
    """Maximal runs of consecutive exceeding ``t`` per window, as closed intervals."""
    runs = []
    for h, mask in result.exceedance.items():
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            continue
        breaks = np.flatnonzero(np.diff(idx) > 1)
        starts = np.concatenate(([idx[0]], idx[breaks + 1]))
        ends = np.concatenate((idx[breaks], [idx[-1]]))
        for a, b in zip(starts, ends):
            runs.append({"window": int(h), "start": int(a) + h, "end": int(b) + h})
    return runs
