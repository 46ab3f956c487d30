"""Analysis orchestration and the plot-ready files derived from a report."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .centering import centering_field, write_centering_csv
from .detect import detect_multi
from .effects import Contour, effect_from_detection
from .errors import ConfigurationError
from .htest import RejectionRule, Variant, mosum_test
from .limit import MIN_REPLICAS, QuantileRequest, cache_get_or_compute
from .moments import validate_windows
from .mosum import MosumField, mosum_field
from .series import ChangeConfig, Series, generate, read_csv

POLYLINE_POINTS = 64
FIELD_CSV = "field.csv"
ESTIMATES_JSON = "estimates.json"
SEGMENTS_CSV = "segments.csv"


def dumps(doc) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


@dataclass
class RunConfig:
    windows: tuple
    input: str | None = None
    generator: ChangeConfig | None = None
    seed: int | None = None
    alpha: float = 0.05
    variant: Variant = Variant.CIRCLE
    replicas: int = 200_000
    grid_step: float = 1.0
    q_seed: int = 0
    cache: str | None = None
    force_detect: bool = False
    dump_field: str | None = None
    dump_centering: str | None = None
    plot_dir: str | None = None

    def __post_init__(self):
        self.variant = Variant.parse(self.variant)
        self.windows = tuple(int(h) for h in self.windows)
        if (self.input is None) == (self.generator is None):
            raise ConfigurationError("give exactly one of an input file or a generator config")
        if self.generator is not None and self.seed is None:
            raise ConfigurationError("generating data needs a seed")
        if not 0.0 < float(self.alpha) < 1.0:
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if int(self.replicas) < MIN_REPLICAS:
            raise ConfigurationError(f"need at least {MIN_REPLICAS} replicas, got {self.replicas}")
        if self.dump_centering and self.generator is None:
            raise ConfigurationError("--dump-centering needs a generator config with known change points")

    def to_dict(self) -> dict:
        return {
            "windows": list(self.windows),
            "input": None if self.input is None else os.path.basename(self.input),
            "generator": None if self.generator is None else self.generator.to_dict(),
            "seed": self.seed,
            "alpha": float(self.alpha),
            "variant": self.variant.value,
            "replicas": int(self.replicas),
            "grid_step": float(self.grid_step),
            "q_seed": int(self.q_seed),
            "force_detect": bool(self.force_detect),
        }


def load_series(cfg: RunConfig) -> Series:
    if cfg.generator is not None:
        return generate(cfg.generator, cfg.seed)
    return read_csv(cfg.input)


def segment_summary(values: np.ndarray, estimates) -> list:
    """Empirical mean and standard deviation between consecutive boundaries
    ``{0} + estimates + {T}``, with the deltas to the next segment."""
    values = np.asarray(values, dtype=float)
    bounds = [0] + sorted(int(c) for c in estimates) + [values.size]
    segs = []
    for a, b in zip(bounds, bounds[1:]):
        x = values[a:b]
        sd = float(np.std(x, ddof=1)) if x.size > 1 else None
        segs.append({"start": a + 1, "end": b, "n": int(x.size), "mean": float(x.mean()), "sd": sd})
    for s, nxt in zip(segs, segs[1:] + [None]):
        s["delta_mean"] = None if nxt is None else nxt["mean"] - s["mean"]
        s["delta_sd"] = None if nxt is None or s["sd"] is None or nxt["sd"] is None else nxt["sd"] - s["sd"]
    return segs


def _versions() -> dict:
    import numba
    import scipy

    from . import __version__

    return {"bimosum": __version__, "numpy": np.__version__, "numba": numba.__version__, "scipy": scipy.__version__}


def quantile_for(cfg: RunConfig, T: int):
    req = QuantileRequest(T, cfg.windows, cfg.alpha, cfg.replicas, cfg.grid_step, cfg.q_seed)
    return cache_get_or_compute(req, cfg.cache)


@dataclass
class Analysis:
    report: dict
    series: Series
    field: MosumField
    rule: RejectionRule
    detection: object = None
    artifacts: list = field(default_factory=list)


def run_analysis(cfg: RunConfig, stage: str = "analyze") -> Analysis:
    """Series, quantile, test and (after rejection or when forced) detection
    with effect summaries and segment means. ``stage`` is ``"test"``,
    ``"detect"`` or ``"analyze"``."""
    series = load_series(cfg)
    validate_windows(cfg.windows, series.T)
    qr = quantile_for(cfg, series.T)
    rule = RejectionRule.from_quantile(cfg.variant, qr)
    fld = mosum_field(series, cfg.windows)
    res = mosum_test(fld, rule)
    report = {
        "T": series.T,
        "test": res.to_dict(),
        "provenance": {
            "config": cfg.to_dict(),
            "versions": _versions(),
            "quantile": {"key": qr.key, "Q": qr.Q, "se": qr.se, "replicas": qr.replicas},
        },
    }
    det = None
    if stage != "test":
        if res.rejected or cfg.force_detect:
            det = detect_multi(fld, rule)
            block = det.to_dict(audit=True)
            if stage == "analyze":
                block["effects"] = [
                    effect_from_detection(fld, c.t, c.window).to_dict() for c in det.accepted
                ]
            report["detection"] = block
        else:
            report["detection"] = {"estimates": [], "accepted": [], "skipped": "test retained the null"}
        if stage == "analyze":
            report["segments"] = segment_summary(series.values, report["detection"]["estimates"])
    out = Analysis(report, series, fld, rule, det)
    if cfg.dump_field:
        write_field_csv(fld, cfg.dump_field)
        out.artifacts.append(cfg.dump_field)
    if cfg.dump_centering:
        write_centering_table(cfg.generator, cfg.windows, cfg.dump_centering)
        out.artifacts.append(cfg.dump_centering)
    if cfg.plot_dir and stage == "analyze":
        out.artifacts.extend(emit_plot_data(report, fld, cfg.plot_dir))
    return out


def write_field_csv(fld: MosumField, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["h", "t", "E", "V", "rho"])
        for sl in fld:
            for i, t in enumerate(sl.t):
                if sl.missing[i]:
                    w.writerow([sl.h, int(t), "", "", ""])
                else:
                    w.writerow([sl.h, int(t), repr(float(sl.E[i])), repr(float(sl.V[i])), repr(float(sl.rho[i]))])


def write_centering_table(config: ChangeConfig, windows, path) -> None:
    write_centering_csv([centering_field(config, h) for h in windows], path)


def estimates_plot_doc(report: dict, n_points: int = POLYLINE_POINTS) -> dict:
    """Estimates with dartboard polylines, rebuilt from the report alone."""
    effects = report.get("detection", {}).get("effects", [])
    items = []
    for eff in effects:
        contours = []
        for c in eff["contours"]:
            con = Contour(c["level"], tuple(c["center"]), tuple(c["half_lengths"]),
                          tuple(tuple(d) for d in c["axis_dirs"]))
            contours.append({"level": c["level"], "polyline": con.polyline(n_points).tolist()})
        items.append(
            {
                "estimate": eff["t"],
                "window": eff["window"],
                "J": [eff["E"], eff["V"]],
                "strength": eff["strength"],
                "omega_radians": eff["omega_radians"],
                "omega_class": eff["omega_class"],
                "contours": contours,
            }
        )
    return {"Q": report["test"]["Q"], "variant": report["test"]["variant"], "estimates": items}


def segments_csv_text(report: dict) -> str:
    cols = ["start", "end", "n", "mean", "sd", "delta_mean", "delta_sd"]
    lines = [",".join(cols)]
    for s in report.get("segments", []):
        lines.append(",".join("" if s[c] is None else repr(s[c]) for c in cols))
    return "\n".join(lines) + "\n"


def emit_plot_data(report: dict, fld: MosumField | None, out_dir) -> list:
    """Write the field CSV (when a field is given), the estimates JSON and the
    segment-summary CSV into ``out_dir``; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fld is not None:
        write_field_csv(fld, out / FIELD_CSV)
        written.append(str(out / FIELD_CSV))
    (out / ESTIMATES_JSON).write_text(dumps(estimates_plot_doc(report)), encoding="utf-8")
    (out / SEGMENTS_CSV).write_text(segments_csv_text(report), encoding="utf-8")
    written += [str(out / ESTIMATES_JSON), str(out / SEGMENTS_CSV)]
    return written
