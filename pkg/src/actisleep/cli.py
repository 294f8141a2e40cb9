"""Batch command-line interface.

Subcommands cover the whole pipeline: ``simulate`` writes a synthetic
recording with ground truth, ``fit`` estimates HMM parameters from an
epoch CSV, ``score`` decodes and smooths sleep/wake labels, ``as-score``
runs the threshold-based comparator, ``compare`` evaluates predictions
against reference labels, and ``verify`` runs the brute-force oracle
self-checks.

Exit codes: 0 success, 1 verification/validation failure, 2 I/O or
format error, 3 invalid flags.  Diagnostics go to stderr; stdout stays
empty unless ``--json`` asks for a machine-readable summary.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import hmm, metrics, postprocess
from .actiwatch import AsConfig, as_score
from .errors import (
    ActisleepError,
    ConfigError,
    FormatError,
    InputError,
    UndefinedStatisticError,
)
from .series import (
    log_transform,
    parse_timestamp,
    read_epoch_csv,
    read_label_csv,
    read_window_file,
    write_epoch_csv,
    write_label_csv,
)
from .simulate import DEFAULT_START_TIME, SimSpec, reference_params, simulate
from .verify import run_verification

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_USAGE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _emit_json(args, payload: dict) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, sort_keys=True))


def _cmd_simulate(args) -> int:
    params = hmm.read_params(args.params) if args.params else reference_params()
    spec = SimSpec(
        params=params,
        t_epochs=args.t,
        epoch_seconds=args.epoch_seconds,
        seed=args.seed,
        start_time=parse_timestamp(args.start) if args.start else DEFAULT_START_TIME,
    )
    series, states = simulate(spec)
    prefix = Path(args.out_prefix)
    epoch_path = prefix.with_name(prefix.name + ".epochs.csv")
    label_path = prefix.with_name(prefix.name + ".labels.csv")
    params_path = prefix.with_name(prefix.name + ".params.txt")
    write_epoch_csv(series, epoch_path)
    write_label_csv(states, label_path)
    hmm.write_params(params, params_path)
    _log(f"wrote {epoch_path}, {label_path}, {params_path}")
    _emit_json(
        args,
        {
            "command": "simulate",
            "epochs": str(epoch_path),
            "labels": str(label_path),
            "params": str(params_path),
            "t_epochs": args.t,
            "seed": args.seed,
        },
    )
    return EXIT_OK


def _cmd_fit(args) -> int:
    series = read_epoch_csv(args.epoch_csv)
    obs = log_transform(series)
    report = hmm.baum_welch(
        obs, hmm.default_init(obs), tol=args.tol, max_iter=args.max_iter
    )
    hmm.write_params(report.params, args.out_params)
    log_path = Path(args.out_log) if args.out_log else Path(args.out_params).with_suffix(
        ".log"
    )
    with open(log_path, "w") as fh:
        fh.write(f"iterations={report.iterations}\n")
        fh.write(f"final_log_likelihood={report.log_likelihood_trace[-1]:.17g}\n")
        fh.write(f"converged={str(report.converged).lower()}\n")
        fh.write(f"states_swapped={str(report.swapped).lower()}\n")
    _log(
        f"fit {args.epoch_csv}: {report.iterations} iterations, "
        f"converged={report.converged}"
    )
    _emit_json(
        args,
        {
            "command": "fit",
            "iterations": report.iterations,
            "final_log_likelihood": report.log_likelihood_trace[-1],
            "converged": report.converged,
            "params": str(args.out_params),
            "log": str(log_path),
        },
    )
    return EXIT_OK


def _cmd_score(args) -> int:
    series = read_epoch_csv(args.epoch_csv)
    obs = log_transform(series)
    if args.params:
        params = hmm.read_params(args.params)
    else:
        params = hmm.baum_welch(
            obs, hmm.default_init(obs), tol=args.tol, max_iter=args.max_iter
        ).params
    decoded = hmm.viterbi(obs, params)
    if args.min_minutes > 0:
        decoded = postprocess.smooth(decoded, args.min_minutes)
    write_label_csv(decoded, args.out)
    _log(f"wrote {args.out} ({len(decoded)} epochs)")
    _emit_json(
        args,
        {
            "command": "score",
            "labels": str(args.out),
            "epochs": len(decoded),
            "sleep_epochs": int(np.sum(decoded.states == 0)),
        },
    )
    return EXIT_OK


def _cmd_as_score(args) -> int:
    series = read_epoch_csv(args.epoch_csv)
    window = read_window_file(args.window, series)
    cfg = AsConfig(
        immobility_start_cpm=args.immobility_start_cpm,
        immobility_end_cpm=args.immobility_end_cpm,
        start_window_minutes=args.start_window_min,
        end_window_minutes=args.end_window_min,
        end_tolerance_epochs=args.end_tolerance_epochs,
        raw_thresholds=args.as_raw_thresholds,
    )
    result = as_score(series, window, cfg)
    write_label_csv(result.states, args.out)
    diag_path = Path(str(args.out) + ".diag")
    with open(diag_path, "w") as fh:
        fh.write(f"sleep_start={result.sleep_start}\n")
        fh.write(f"sleep_end={result.sleep_end}\n")
        fh.write(f"all_wake_fallback={str(result.all_wake_fallback).lower()}\n")
    _log(
        f"wrote {args.out}; sleep_start={result.sleep_start} "
        f"sleep_end={result.sleep_end} fallback={result.all_wake_fallback}"
    )
    _emit_json(
        args,
        {
            "command": "as-score",
            "labels": str(args.out),
            "sleep_start": result.sleep_start,
            "sleep_end": result.sleep_end,
            "all_wake_fallback": result.all_wake_fallback,
        },
    )
    return EXIT_OK


_METRIC_COLUMNS = (
    "accuracy",
    "sensitivity_sleep",
    "specificity_sleep",
    "ppv_sleep",
    "ppv_wake",
    "tp_sleep",
    "fn_sleep",
    "fp_sleep",
    "tn_sleep",
    "tst_min",
    "latency_min",
    "waso_min",
    "efficiency_pct",
)


def _fmt(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def _metric_values(em: metrics.EpochMetrics, sv: metrics.SleepVariables) -> list:
    c = em.confusion
    return [
        em.accuracy,
        em.sensitivity_sleep,
        em.specificity_sleep,
        em.ppv_sleep,
        em.ppv_wake,
        c.tp_sleep,
        c.fn_sleep,
        c.fp_sleep,
        c.tn_sleep,
        sv.total_sleep_time_min,
        sv.sleep_latency_min,
        sv.waso_min,
        sv.sleep_efficiency_pct,
    ]


def _cmd_compare(args) -> int:
    series = read_epoch_csv(args.epochs)
    n = len(series)
    window = read_window_file(args.window, series)
    truth = read_label_csv(args.truth, n, series.epoch_seconds)
    pred_names: list[str] = []
    pred_values: list[list] = []
    for pred_path in args.pred:
        name = Path(pred_path).stem
        if name in pred_names:
            name = f"{name}_{len(pred_names)}"
        try:
            pred = read_label_csv(pred_path, n, series.epoch_seconds)
        except FormatError as exc:
            raise FormatError(f"prediction file {pred_path}: {exc}") from exc
        em = metrics.epoch_metrics(metrics.confusion(pred, truth))
        sv = metrics.sleep_variables(pred, window)
        pred_names.append(name)
        pred_values.append(_metric_values(em, sv))
    truth_sv = metrics.sleep_variables(truth, window)

    header = ["recording", "total_epochs_min", "truth_tst_min", "truth_latency_min",
              "truth_waso_min", "truth_efficiency_pct"]
    for name in pred_names:
        header.extend(f"{name}_{col}" for col in _METRIC_COLUMNS)
    data_row = [
        Path(args.epochs).stem,
        truth_sv.total_epochs_min,
        truth_sv.total_sleep_time_min,
        truth_sv.sleep_latency_min,
        truth_sv.waso_min,
        truth_sv.sleep_efficiency_pct,
    ]
    for values in pred_values:
        data_row.extend(values)

    rows = [data_row]
    summary_rows = []
    for label, fn in (("mean", np.mean), ("min", np.min), ("max", np.max)):
        row = [label]
        for col in range(1, len(header)):
            column = [r[col] for r in rows if r[col] is not None]
            row.append(float(fn(column)) if column else None)
        summary_rows.append(row)

    with open(args.out, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows + summary_rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    _log(f"wrote {args.out} ({len(pred_names)} predictor(s))")
    _emit_json(
        args,
        {
            "command": "compare",
            "report": str(args.out),
            "predictors": pred_names,
        },
    )
    return EXIT_OK


def _cmd_verify(args) -> int:
    report = run_verification(trials=args.trials, max_t=args.max_t, seed=args.seed)
    width = max(len(c.name) for c in report.checks)
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        _log(f"{check.name:<{width}}  {status}  {check.detail}")
    _emit_json(
        args,
        {
            "command": "verify",
            "seed": report.seed,
            "passed": report.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail}
                for c in report.checks
            ],
        },
    )
    return EXIT_OK if report.passed else EXIT_VALIDATION


def build_parser() -> _Parser:
    parser = _Parser(prog="actisleep", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic recording with truth labels")
    p.add_argument("--params", help="parameter file (default: reference parameters)")
    p.add_argument("--t", type=int, default=2880, help="number of epochs")
    p.add_argument("--epoch-seconds", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", help="ISO-8601 start timestamp")
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="fit HMM parameters to an epoch CSV")
    p.add_argument("epoch_csv")
    p.add_argument("--out-params", required=True)
    p.add_argument("--out-log", help="fit log path (default: params path with .log)")
    p.add_argument("--tol", type=float, default=hmm.DEFAULT_TOL)
    p.add_argument("--max-iter", type=int, default=hmm.DEFAULT_MAX_ITER)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("score", help="decode sleep/wake labels (Viterbi + smoothing)")
    p.add_argument("epoch_csv")
    p.add_argument("--params", help="parameter file; omitted = fit inline")
    p.add_argument("--out", required=True)
    p.add_argument("--min-minutes", type=float, default=15.0)
    p.add_argument("--tol", type=float, default=hmm.DEFAULT_TOL)
    p.add_argument("--max-iter", type=int, default=hmm.DEFAULT_MAX_ITER)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("as-score", help="threshold-based comparator scoring")
    p.add_argument("epoch_csv")
    p.add_argument("--window", required=True, help="window sidecar file")
    p.add_argument("--out", required=True)
    p.add_argument("--immobility-start-cpm", type=float, default=4.0)
    p.add_argument("--immobility-end-cpm", type=float, default=6.0)
    p.add_argument("--start-window-min", type=float, default=10.0)
    p.add_argument("--end-window-min", type=float, default=6.0)
    p.add_argument("--end-tolerance-epochs", type=int, default=2)
    p.add_argument("--as-raw-thresholds", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_as_score)

    p = sub.add_parser("compare", help="evaluate predictions against reference labels")
    p.add_argument("--truth", required=True)
    p.add_argument("--pred", action="append", required=True)
    p.add_argument("--epochs", required=True, help="epoch CSV (timing and length)")
    p.add_argument("--window", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("verify", help="run brute-force oracle self-checks")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--max-t", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        _log(f"error: {exc}")
        return EXIT_IO
    except (FormatError, OSError) as exc:
        _log(f"error: {exc}")
        return EXIT_IO
    except (InputError, ConfigError, UndefinedStatisticError, ActisleepError) as exc:
        _log(f"error: {exc}")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
