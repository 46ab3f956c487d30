"""Simulation studies: empirical level, detection performance and quantile sweeps.

A study is a list of cells. Each cell names a change configuration and a
window set; replica ``r`` of cell ``k`` draws its series from the stream
``(seed, k, r)``, so adding cells or replicas leaves existing ones unchanged.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _seeding
from .detect import detect_multi
from .errors import ConfigurationError
from .htest import RejectionRule, Variant, mosum_test
from .limit import QuantileRequest, cache_get_or_compute
from .mosum import mosum_field
from .series import ChangeConfig, generate

MIN_REPLICAS = 50


class Scenario(str, enum.Enum):
    LEVEL_VS_WINDOWS = "level_vs_windows"
    LEVEL_GRID = "level_grid"
    QUANTILE_SWEEP = "quantile_sweep"
    PERFORMANCE = "performance"

    @classmethod
    def parse(cls, value) -> "Scenario":
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(s.value for s in cls)
            raise ConfigurationError(f"unknown scenario {value!r}; expected one of {names}") from None


LEVEL_SCENARIOS = (Scenario.LEVEL_VS_WINDOWS, Scenario.LEVEL_GRID)


@dataclass(frozen=True)
class Cell:
    """One grid cell. ``labels`` overrides the change points used for matching."""

    name: str
    windows: tuple
    config: ChangeConfig | None = None
    T: int | None = None
    labels: tuple | None = None
    variant: Variant | None = None

    def __post_init__(self):
        if self.variant is not None:
            object.__setattr__(self, "variant", Variant.parse(self.variant))

    @property
    def length(self) -> int:
        return self.config.T if self.config is not None else int(self.T)

    @property
    def truth(self) -> tuple:
        if self.labels is not None:
            return tuple(self.labels)
        return self.config.change_points if self.config is not None else ()

    def to_dict(self) -> dict:
        doc = {"name": self.name, "windows": list(self.windows)}
        if self.config is not None:
            doc["config"] = self.config.to_dict()
        else:
            doc["T"] = self.T
        if self.labels is not None:
            doc["labels"] = list(self.labels)
        if self.variant is not None:
            doc["variant"] = self.variant.value
        return doc

    @classmethod
    def from_dict(cls, doc: dict, k: int = 0) -> "Cell":
        try:
            windows = tuple(int(h) for h in doc["windows"])
        except KeyError:
            raise ConfigurationError(f"cell {k} is missing 'windows'") from None
        config = ChangeConfig.from_dict(doc["config"]) if "config" in doc else None
        T = None if config is not None else doc.get("T")
        if config is None and T is None:
            raise ConfigurationError(f"cell {k} needs either 'config' or 'T'")
        labels = tuple(int(c) for c in doc["labels"]) if "labels" in doc else None
        variant = Variant.parse(doc["variant"]) if "variant" in doc else None
        return cls(str(doc.get("name", f"cell{k}")), windows, config, None if T is None else int(T), labels, variant)


@dataclass(frozen=True)
class StudySpec:
    scenario: Scenario
    cells: tuple
    replicas: int = 200
    seed: int = 0
    variant: Variant = Variant.CIRCLE
    alpha: float = 0.05
    match_radius: int = 25
    q_replicas: int = 200_000
    q_grid_step: float = 1.0
    q_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario.parse(getattr(self.scenario, "value", self.scenario)))
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        object.__setattr__(self, "cells", tuple(self.cells))
        if not self.cells:
            raise ConfigurationError("a study needs at least one cell")
        if self.scenario is not Scenario.QUANTILE_SWEEP and self.replicas < MIN_REPLICAS:
            raise ConfigurationError(f"need at least {MIN_REPLICAS} replicas, got {self.replicas}")
        if self.match_radius < 1:
            raise ConfigurationError("match_radius must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha}")
        for c in self.cells:
            if self.scenario is not Scenario.QUANTILE_SWEEP and c.config is None:
                raise ConfigurationError(f"cell {c.name!r} needs a change configuration")
            if self.scenario in LEVEL_SCENARIOS and c.config.change_points:
                raise ConfigurationError(f"level cell {c.name!r} must not contain change points")

    def request(self, cell: Cell) -> QuantileRequest:
        return QuantileRequest(
            cell.length, cell.windows, self.alpha, self.q_replicas, self.q_grid_step, self.q_seed
        )

    def rule_variant(self, cell: Cell) -> Variant:
        return cell.variant or self.variant

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.value,
            "replicas": self.replicas,
            "seed": self.seed,
            "variant": self.variant.value,
            "alpha": self.alpha,
            "match_radius": self.match_radius,
            "quantile": {"replicas": self.q_replicas, "grid_step": self.q_grid_step, "seed": self.q_seed},
            "cells": [c.to_dict() for c in self.cells],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "StudySpec":
        if "scenario" not in doc or "cells" not in doc:
            raise ConfigurationError("a study document needs 'scenario' and 'cells'")
        q = doc.get("quantile", {})
        return cls(
            scenario=doc["scenario"],
            cells=tuple(Cell.from_dict(c, k) for k, c in enumerate(doc["cells"])),
            replicas=int(doc.get("replicas", 200)),
            seed=int(doc.get("seed", 0)),
            variant=doc.get("variant", "circle"),
            alpha=float(doc.get("alpha", 0.05)),
            match_radius=int(doc.get("match_radius", 25)),
            q_replicas=int(q.get("replicas", 200_000)),
            q_grid_step=float(q.get("grid_step", 1.0)),
            q_seed=int(q.get("seed", 0)),
        )


def replica_seed(seed: int, cell: int, replica: int) -> int:
    return _seeding.derive_seed(seed, _seeding.STUDY, cell, replica)


def binomial_se(k: int, n: int) -> float:
    p = k / n
    return math.sqrt(p * (1.0 - p) / n)


def match_estimates(estimates, truth, radius: int = 25) -> dict:
    """Greedy nearest-first matching of estimates to true change points.

    Pairs within ``radius`` are visited by increasing distance (ties by true
    point, then estimate), and each true point and each estimate is used at
    most once. Returns ``{true point: matched estimate}``.
    """
    pairs = sorted(
        (abs(e - c), c, e) for c in set(truth) for e in set(estimates) if abs(e - c) <= radius
    )
    used_c, used_e, out = set(), set(), {}
    for _, c, e in pairs:
        if c in used_c or e in used_e:
            continue
        used_c.add(c)
        used_e.add(e)
        out[c] = e
    return out


@dataclass
class StudyReport:
    scenario: Scenario
    spec: StudySpec
    cells: list
    pooled: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.value,
            "spec": self.spec.to_dict(),
            "cells": self.cells,
            "pooled": self.pooled,
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        if not self.cells:
            return ""
        cols = [k for k in self.cells[0] if not isinstance(self.cells[0][k], (dict, list))]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for row in self.cells:
            w.writerow([row[k] for k in cols])
        return buf.getvalue()


class _Quantiles:
    def __init__(self, spec: StudySpec, cache_path=None, overrides=None):
        self.spec = spec
        self.cache_path = cache_path
        self.memo = {}
        self.overrides = overrides or {}

    def __call__(self, cell: Cell):
        req = self.spec.request(cell)
        key = (req.T, req.windows)
        if key in self.overrides:
            return self.overrides[key]
        if key not in self.memo:
            self.memo[key] = cache_get_or_compute(req, self.cache_path)
        return self.memo[key]


def _provenance(spec: StudySpec, quantiles: dict) -> dict:
    from . import __version__

    return {"package_version": __version__, "seed": spec.seed, "quantiles": quantiles}


def run_level_study(spec: StudySpec, cache_path=None, quantiles=None) -> StudyReport:
    """Rejection frequency under "no change" for every cell."""
    if spec.scenario not in LEVEL_SCENARIOS:
        raise ConfigurationError(f"{spec.scenario.value} is not a level study")
    qs = _Quantiles(spec, cache_path, quantiles)
    rows, used = [], {}
    total_rej = total_n = 0
    for k, cell in enumerate(spec.cells):
        qr = qs(cell)
        rule = RejectionRule.from_quantile(spec.rule_variant(cell), qr)
        rej = 0
        for r in range(spec.replicas):
            x = generate(cell.config, replica_seed(spec.seed, k, r))
            rej += mosum_test(mosum_field(x, cell.windows), rule).rejected
        n = spec.replicas
        rows.append(
            {
                "cell": cell.name,
                "variant": rule.variant.value,
                "windows": list(cell.windows),
                "replicas": n,
                "rejections": rej,
                "f_R": rej / n,
                "se": binomial_se(rej, n),
                "Q": qr.Q,
            }
        )
        used[cell.name] = qr.to_dict()
        total_rej += rej
        total_n += n
    pooled = {"rejections": total_rej, "replicas": total_n, "f_R": total_rej / total_n,
              "se": binomial_se(total_rej, total_n)}
    return StudyReport(spec.scenario, spec, rows, pooled, _provenance(spec, used))


def run_performance_study(spec: StudySpec, cache_path=None, quantiles=None) -> StudyReport:
    """Per-change-point correct counts and incorrect detections for every cell."""
    if spec.scenario is not Scenario.PERFORMANCE:
        raise ConfigurationError(f"{spec.scenario.value} is not a performance study")
    qs = _Quantiles(spec, cache_path, quantiles)
    rows, used = [], {}
    for k, cell in enumerate(spec.cells):
        qr = qs(cell)
        rule = RejectionRule.from_quantile(spec.rule_variant(cell), qr)
        truth = cell.truth
        correct = {c: 0 for c in truth}
        total = rejected = 0
        for r in range(spec.replicas):
            x = generate(cell.config, replica_seed(spec.seed, k, r))
            fld = mosum_field(x, cell.windows)
            rejected += mosum_test(fld, rule).rejected
            est = detect_multi(fld, rule).estimates
            total += len(est)
            for c in match_estimates(est, truth, spec.match_radius):
                correct[c] += 1
        n = spec.replicas
        n_correct = sum(correct.values())
        incorrect = total - n_correct
        row = {
            "cell": cell.name,
            "variant": rule.variant.value,
            "windows": list(cell.windows),
            "replicas": n,
            "rejections": rejected,
            "total": total,
            "correct_total": n_correct,
            "incorrect": incorrect,
            "incorrect_fraction": incorrect / total if total else 0.0,
            "incorrect_fraction_se": binomial_se(incorrect, total) if total else 0.0,
            "Q": qr.Q,
            "correct": {str(c): v for c, v in correct.items()},
            "correct_rate": {str(c): v / n for c, v in correct.items()},
            "correct_rate_se": {str(c): binomial_se(v, n) for c, v in correct.items()},
        }
        for c, v in correct.items():
            row[f"correct_{c}"] = v
        rows.append(row)
        used[cell.name] = qr.to_dict()
    return StudyReport(spec.scenario, spec, rows, {}, _provenance(spec, used))


def run_quantile_sweep(spec: StudySpec, cache_path=None) -> StudyReport:
    """``Q`` with its standard error for every ``(T, H)`` cell."""
    if spec.scenario is not Scenario.QUANTILE_SWEEP:
        raise ConfigurationError(f"{spec.scenario.value} is not a quantile sweep")
    rows, used = [], {}
    for cell in spec.cells:
        qr = cache_get_or_compute(spec.request(cell), cache_path)
        rows.append(
            {
                "cell": cell.name,
                "T": cell.length,
                "windows": list(cell.windows),
                "n_windows": len(cell.windows),
                "Q": qr.Q,
                "se": qr.se,
                "replicas": qr.replicas,
            }
        )
        used[cell.name] = qr.to_dict()
    return StudyReport(spec.scenario, spec, rows, {}, _provenance(spec, used))


def run_study(spec: StudySpec, cache_path=None) -> StudyReport:
    if spec.scenario in LEVEL_SCENARIOS:
        return run_level_study(spec, cache_path)
    if spec.scenario is Scenario.PERFORMANCE:
        return run_performance_study(spec, cache_path)
    return run_quantile_sweep(spec, cache_path)


def window_sweep(k: int) -> tuple:
    """``H_k = {10(1+k), 10(3+k), ..., 10(11+k)}``."""
    return tuple(10 * (2 * i + 1 + k) for i in range(6))


def level_cells(segments, windows, T: int = 1000, prefix: str = "cell") -> list:
    """Level-study cells over a list of segment distributions."""
    return [
        Cell(f"{prefix}{i}", tuple(windows), ChangeConfig(T, (), (seg,))) for i, seg in enumerate(segments)
    ]


def thin(values, count: int) -> list:
    """``count`` evenly spaced entries of ``values``, endpoints included."""
    values = list(values)
    if count >= len(values):
        return values
    idx = np.unique(np.round(np.linspace(0, len(values) - 1, count)).astype(int))
    return [values[i] for i in idx]
