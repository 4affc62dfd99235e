"""Command line interface: ``iim impute``, ``iim learn``, ``iim bench``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .config import METHODS, RunConfig, make_imputer
from .dataset import read_relation, write_relation
from .estimator import IIMImputer
from .evalbench import MaskPlan, run_bench, two_segments
from .exceptions import DataError, NumericError
from .impute import impute_relation
from .learner import load_models, save_models

logger = logging.getLogger("iim")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _ell(text):
    if text == "adaptive":
        return text
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a positive integer or 'adaptive'") from None
    if v < 1:
        raise argparse.ArgumentTypeError("ell must be >= 1")
    return v


def _csv_list(text):
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _common(p, defaults: RunConfig):
    p.add_argument("--config", help="JSON file with run settings; flags override it")
    p.add_argument("--input", required=True, help="input CSV (header row required)")
    p.add_argument("--k", type=int, help=f"imputation neighbours (default {defaults.k})")
    p.add_argument("--ell", type=_ell, help="learning neighbours: integer or 'adaptive' (default)")
    p.add_argument("--step", type=int, help="adaptive grid stride (default 1 up to 1000 tuples, else ceil(n/200))")
    p.add_argument("--alpha", type=float, help=f"ridge penalty (default {defaults.alpha})")
    p.add_argument("--weight-mode", choices=("vote", "uniform"))
    p.add_argument("--normalize", action="store_true", default=None,
                   help="z-score attributes for distance computations")
    p.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    p.add_argument("--missing-markers", type=_csv_list,
                   help="comma-separated tokens read as missing besides the empty field")


def build_parser() -> argparse.ArgumentParser:
    d = RunConfig()
    parser = argparse.ArgumentParser(prog="iim", description="Imputation via individual models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("impute", help="fill missing cells of a CSV")
    _common(p, d)
    p.add_argument("--output", required=True, help="imputed CSV")
    p.add_argument("--method", choices=METHODS, help="imputation method (default iim)")
    p.add_argument("--models", help="model file from 'iim learn'; skips relearning")
    p.add_argument("--save-models", help="also write the learned models here")
    p.add_argument("--explain-path", help="per-cell CSV with neighbours, candidates and weights")

    p = sub.add_parser("learn", help="learn individual models and save them")
    _common(p, d)
    p.add_argument("--models", required=True, help="output model file")

    p = sub.add_parser("bench", help="mask a complete CSV and compare methods")
    p.add_argument("--synthetic", type=int, metavar="N",
                   help="use N tuples of the built-in two-segment generator instead of --input")
    _common(p, d)
    p.add_argument("--methods", type=_csv_list, help=f"comma-separated subset of {','.join(METHODS)}")
    p.add_argument("--seed", type=int, help="mask seed (default 0)")
    p.add_argument("--missing-rate", type=float, help="fraction of tuples made incomplete (default 0.05)")
    p.add_argument("--cluster-size", type=int, help="incomplete tuples per cluster (default 1)")
    p.add_argument("--mask-attribute", type=int, help="always mask this column index")
    p.add_argument("--report-path", help="report file; .json gives the structured form, else CSV")
    # --input is optional when --synthetic is given
    for action in p._actions:
        if action.dest == "input":
            action.required = False
    return parser


_FLAG_FIELDS = {
    "k": "k", "ell": "ell", "step": "step", "alpha": "alpha", "weight_mode": "weight_mode",
    "normalize": "normalize", "threads": "threads", "missing_markers": "missing_markers",
    "method": "method", "methods": "methods", "seed": "seed", "missing_rate": "missing_rate",
    "cluster_size": "cluster_size", "mask_attribute": "mask_attribute",
}


def effective_config(args) -> RunConfig:
    cfg = RunConfig.from_json(args.config) if getattr(args, "config", None) else RunConfig()
    for flag, name in _FLAG_FIELDS.items():
        v = getattr(args, flag, None)
        if v is not None:
            setattr(cfg, name, v)
    if cfg.threads is None:
        cfg.threads = os.cpu_count() or 1
    cfg.paths = {k: getattr(args, k) for k in
                 ("input", "output", "models", "save_models", "explain_path", "report_path")
                 if getattr(args, k, None)}
    return cfg.validate()


def _emit_config(cfg):
    print("iim: config " + json.dumps(cfg.to_dict(), sort_keys=True), file=sys.stderr)


def _atomic_write(path, write):
    """Write via a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".iim-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _write_explain(fh, results, rel, complete_rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["row", "attribute", "neighbor_rows", "candidates", "spreads", "weights", "value"])
    for r in results:
        w.writerow([
            r.row, rel.column_names[r.attribute],
            " ".join(str(int(complete_rows[i])) for i in r.neighbor_ids),
            " ".join(repr(float(v)) for v in r.candidates),
            " ".join(repr(float(v)) for v in r.spreads),
            " ".join(repr(float(v)) for v in r.weights),
            repr(r.value),
        ])


def cmd_impute(args) -> int:
    cfg = effective_config(args)
    _emit_config(cfg)
    rel = read_relation(args.input, cfg.missing_markers)
    if args.models and cfg.method != "iim":
        raise UsageError("--models only applies to --method iim")
    imputer = None
    if cfg.method == "iim" and rel.mask.any():
        sets = None
        if args.models:
            with open(args.models) as fh:
                sets = load_models(fh)
        imputer = make_imputer(cfg, "iim").fit(rel.values, models=sets)
    out, results = impute_relation(rel, cfg, imputer)
    _atomic_write(args.output, lambda fh: write_relation(out, fh))
    if args.explain_path:
        rows = imputer.complete_rows_ if imputer is not None else _complete_rows(rel)
        _atomic_write(args.explain_path, lambda fh: _write_explain(fh, results, rel, rows))
    if args.save_models and isinstance(imputer, IIMImputer):
        _atomic_write(args.save_models, lambda fh: save_models(imputer.model_sets_.values(), fh))
    logger.info("imputed %d cells", len(results))
    return EXIT_OK


def _complete_rows(rel):
    return np.flatnonzero(~rel.mask.any(axis=1))


def cmd_learn(args) -> int:
    cfg = effective_config(args)
    _emit_config(cfg)
    rel = read_relation(args.input, cfg.missing_markers)
    imputer = make_imputer(cfg, "iim").fit(rel.values)
    _atomic_write(args.models, lambda fh: save_models(imputer.model_sets_.values(), fh))
    logger.info("learned %d model sets", len(imputer.model_sets_))
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = effective_config(args)
    _emit_config(cfg)
    if args.synthetic:
        rel = two_segments(args.synthetic, seed=cfg.seed)
    elif args.input:
        rel = read_relation(args.input, cfg.missing_markers)
    else:
        raise UsageError("bench needs --input or --synthetic")
    plan = MaskPlan(cfg.seed, cfg.missing_rate, cfg.mask_attribute, cfg.cluster_size)
    report = run_bench(rel, plan, cfg.methods, cfg)
    buf = io.StringIO()
    as_json = bool(args.report_path and args.report_path.endswith(".json"))
    (report.write_json if as_json else report.write_csv)(buf)
    if args.report_path:
        _atomic_write(args.report_path, lambda fh: fh.write(buf.getvalue()))
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


COMMANDS = {"impute": cmd_impute, "learn": cmd_learn, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="iim: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except DataError as e:
        print(f"iim: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (UsageError, ValueError) as e:
        print(f"iim: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as e:
        print(f"iim: numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as e:
        print(f"iim: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
