"""``bimosum`` command-line interface.

Exit codes::

    0  success
    1  any other library error
    2  invalid configuration or arguments
    3  input/output failure
    4  malformed input data (message carries the line number)
    5  quantile cache integrity failure
    6  numerical degeneracy
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ._seeding import CENTERING, derive_seed
from .centering import centering_field, empirical_vs_centering, write_centering_csv
from .errors import (
    CacheIntegrityError,
    ConfigurationError,
    DataFormatError,
    DegenerateEstimateError,
    DegenerateWindowError,
    DomainError,
    MosumError,
)
from .limit import STATISTICS, QuantileRequest, cache_get_or_compute
from .report import RunConfig, dumps, emit_plot_data, run_analysis
from .series import ChangeConfig, generate, write_csv
from .studies import StudySpec, run_study

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DATA = 4
EXIT_CACHE = 5
EXIT_DEGENERATE = 6

log = logging.getLogger("bimosum")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigurationError(message)


def _int_list(text: str) -> list:
    try:
        return [int(v) for v in str(text).replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _load_doc(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON ({exc.msg})", exc.lineno) from None


def _emit(text: str, output) -> None:
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


def _add_rule_args(p, analysis=True):
    p.add_argument("--windows", type=_int_list, help="window sizes, e.g. 50,100,150")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--replicas", type=int, default=None, help="Monte Carlo replicas for Q (>= 1000)")
    p.add_argument("--grid-step", type=float, default=None)
    p.add_argument("--q-seed", type=int, default=None, help="seed of the quantile simulation")
    p.add_argument("--cache", default=None, help="quantile cache file (JSON lines)")
    if analysis:
        p.add_argument("--variant", choices=["circle", "ellipse", "square"], default=None)
        p.add_argument("--input", default=None, help="CSV with one value per line")
        p.add_argument("--generator", default=None, help="change configuration document to simulate from")
        p.add_argument("--seed", type=int, default=None, help="seed for --generator")
        p.add_argument("--run-config", default=None, help="document holding any of these options")
        p.add_argument("--force-detect", action="store_true", default=None)
        p.add_argument("--dump-field", default=None, help="write the (h, t, E, V) field CSV here")
        p.add_argument("--dump-centering", default=None, help="write the centering CSV here (needs --generator)")
        p.add_argument("--plot-dir", default=None, help="directory for plot-ready files")
    p.add_argument("--output", "-o", default=None, help="output path (stdout by default)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="bimosum", description="Joint change point detection in expectation and variance.")
    ap.add_argument("--verbose", "-v", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, hlp in (
        ("analyze", "test, detect, effects and segment summary"),
        ("test", "test the null hypothesis of no change"),
        ("detect", "test and estimate change points"),
    ):
        _add_rule_args(sub.add_parser(name, help=hlp))

    q = sub.add_parser("quantile", help="simulate the rejection quantile Q")
    q.add_argument("--T", type=int, required=True, dest="T")
    q.add_argument("--statistic", choices=list(STATISTICS), default="euclid")
    _add_rule_args(q, analysis=False)

    s = sub.add_parser("simulate", help="draw a series from a change configuration")
    s.add_argument("--generator", required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--output", "-o", default=None)

    st = sub.add_parser("study", help="run a simulation study document")
    st.add_argument("--spec", required=True)
    st.add_argument("--seed", type=int, required=True)
    st.add_argument("--cache", default=None)
    st.add_argument("--output", "-o", default=None, help="report JSON")
    st.add_argument("--csv", default=None, help="flat per-cell CSV")

    d = sub.add_parser("diagnostics", help="oracle diagnostics")
    dsub = d.add_subparsers(dest="diagnostic", required=True, parser_class=_Parser)
    c = dsub.add_parser("centering", help="deterministic centering of a change configuration")
    c.add_argument("--generator", required=True)
    c.add_argument("--windows", type=_int_list, required=True)
    c.add_argument("--output", "-o", default=None, help="centering CSV")
    c.add_argument("--convergence-seeds", type=int, default=0,
                   help="also report sup-deviations over this many seeds")
    c.add_argument("--ns", type=_int_list, default=[1, 10, 100])
    c.add_argument("--seed", type=int, default=None)

    pd = sub.add_parser("plot-data", help="regenerate plot files from a report document")
    pd.add_argument("--report", required=True)
    pd.add_argument("--out-dir", required=True)
    return ap


_RUN_DEFAULTS = {
    "alpha": 0.05,
    "replicas": 200_000,
    "grid_step": 1.0,
    "q_seed": 0,
    "variant": "circle",
    "force_detect": False,
}
_RUN_KEYS = (
    "windows", "input", "generator", "seed", "alpha", "variant", "replicas", "grid_step",
    "q_seed", "cache", "force_detect", "dump_field", "dump_centering", "plot_dir",
)


def run_config_from_args(args) -> RunConfig:
    """Merge ``--run-config`` with explicit flags; flags win."""
    doc = dict(_RUN_DEFAULTS)
    if args.run_config:
        base = _load_doc(args.run_config)
        unknown = set(base) - set(_RUN_KEYS) - {"output"}
        if unknown:
            raise ConfigurationError(f"unknown run-config keys: {sorted(unknown)}")
        doc.update(base)
    for k in _RUN_KEYS:
        v = getattr(args, k, None)
        if v is not None:
            doc[k] = v
    if "windows" not in doc:
        raise ConfigurationError("--windows is required")
    gen = doc.get("generator")
    if gen is not None:
        doc["generator"] = ChangeConfig.from_dict(gen if isinstance(gen, dict) else _load_doc(gen))
    if args.output is None and "output" in doc:
        args.output = doc["output"]
    return RunConfig(**{k: doc[k] for k in _RUN_KEYS if k in doc})


def _cmd_analysis(args) -> int:
    cfg = run_config_from_args(args)
    an = run_analysis(cfg, stage=args.command)
    _emit(dumps(an.report), args.output)
    return EXIT_OK


def _cmd_quantile(args) -> int:
    req = QuantileRequest(
        args.T,
        tuple(args.windows or ()),
        0.05 if args.alpha is None else args.alpha,
        200_000 if args.replicas is None else args.replicas,
        1.0 if args.grid_step is None else args.grid_step,
        0 if args.q_seed is None else args.q_seed,
        args.statistic,
    )
    res = cache_get_or_compute(req, args.cache)
    _emit(dumps(res.to_dict()), args.output)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    cfg = ChangeConfig.from_dict(_load_doc(args.generator))
    x = generate(cfg, args.seed)
    if args.output in (None, "-"):
        for v in x.values:
            sys.stdout.write(repr(float(v)) + "\n")
    else:
        write_csv(x, args.output)
    return EXIT_OK


def _cmd_study(args) -> int:
    doc = _load_doc(args.spec)
    doc["seed"] = args.seed
    spec = StudySpec.from_dict(doc)
    rep = run_study(spec, args.cache)
    _emit(rep.to_json(), args.output)
    if args.csv:
        Path(args.csv).write_text(rep.to_csv(), encoding="utf-8")
    return EXIT_OK


def _cmd_centering(args) -> int:
    cfg = ChangeConfig.from_dict(_load_doc(args.generator))
    slices = [centering_field(cfg, h) for h in args.windows]
    summary = None
    if args.convergence_seeds:
        if args.seed is None:
            raise ConfigurationError("--convergence-seeds needs --seed")
        seeds = [derive_seed(args.seed, CENTERING, i) for i in range(args.convergence_seeds)]
        summary = {
            "config": cfg.to_dict(),
            "convergence": {
                str(h): [r.summary() for r in empirical_vs_centering(cfg, h, seeds, args.ns)]
                for h in args.windows
            },
        }
    if args.output in (None, "-"):
        if summary is None:
            write_centering_csv(slices, sys.stdout)
    else:
        write_centering_csv(slices, args.output)
    if summary is not None:
        sys.stdout.write(dumps(summary))
    return EXIT_OK


def _cmd_plot_data(args) -> int:
    report = _load_doc(args.report)
    for path in emit_plot_data(report, None, args.out_dir):
        log.info("wrote %s", path)
    return EXIT_OK


_COMMANDS = {
    "analyze": _cmd_analysis,
    "test": _cmd_analysis,
    "detect": _cmd_analysis,
    "quantile": _cmd_quantile,
    "simulate": _cmd_simulate,
    "study": _cmd_study,
    "diagnostics": _cmd_centering,
    "plot-data": _cmd_plot_data,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return _COMMANDS[args.command](args)
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except CacheIntegrityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CACHE
    except (ConfigurationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateWindowError, DegenerateEstimateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except MosumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
