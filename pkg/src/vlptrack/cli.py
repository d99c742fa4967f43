"""Command line front end.

Subcommands mirror the experiment stages: `calibrate` builds the
mean-error table, `sweep-blocking` and `sweep-leds` run the Monte Carlo
RMSE sweeps, `trace-route` dumps one route step by step, and
`eval-models` tabulates mean error per layout class. Results go to CSV
or JSON on stdout or --out; --plot additionally renders a figure next to
the data. Exit codes: 0 on success, 1 for configuration problems, 2 for
I/O failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from contextlib import contextmanager
from dataclasses import replace

import numpy as np

from . import calibration, harness, report
from .availability import BlockingConfig
from .errors import ConfigError, DomainError

# sub-stream tag for auto-calibration, disjoint from sweep route seeds
_CAL_STREAM = 7


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; 2 is reserved for I/O here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_list(raw: str) -> list[int]:
    return [int(v) for v in raw.split(",") if v.strip()]


def _float_list(raw: str) -> list[float]:
    return [float(v) for v in raw.split(",") if v.strip()]


def _scheme_list(raw: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in raw.split(",") if s.strip())


@contextmanager
def _open_out(path):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _build_parser() -> _Parser:
    parser = _Parser(prog="vlptrack",
                     description="Visible-light positioning tracking simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt=True):
        p.add_argument("--config", help="key = value parameter file")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--out", default="-", help="output path, '-' for stdout")
        if fmt:
            p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--plot", help="also render a figure to this path")

    p = sub.add_parser("calibrate", help="estimate the mean-error table")
    common(p, fmt=False)
    p.add_argument("--leds", type=_int_list, help="comma list of LED counts")
    p.add_argument("--grid-spacing", type=float, default=0.25)
    p.add_argument("--draws", type=int, default=10)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("sweep-blocking", help="RMSE versus blocking probability")
    common(p)
    p.add_argument("--block-prob", type=_float_list, help="comma list of probabilities")
    p.add_argument("--routes", type=int)
    p.add_argument("--leds", type=int, help="LEDs per AP for the whole sweep")
    p.add_argument("--schemes", type=_scheme_list)
    p.add_argument("--table", help="calibration table CSV (else auto-calibrated)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--grid-spacing", type=float, default=0.25)
    p.add_argument("--draws", type=int, default=10)
    p.set_defaults(func=_cmd_sweep_blocking)

    p = sub.add_parser("sweep-leds", help="RMSE versus LEDs per AP")
    common(p)
    p.add_argument("--leds", type=_int_list, help="comma list of LED counts")
    p.add_argument("--block-prob", type=float, help="blocking probability")
    p.add_argument("--routes", type=int)
    p.add_argument("--schemes", type=_scheme_list)
    p.add_argument("--table", help="calibration table CSV (else auto-calibrated)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--grid-spacing", type=float, default=0.25)
    p.add_argument("--draws", type=int, default=10)
    p.set_defaults(func=_cmd_sweep_leds)

    p = sub.add_parser("trace-route", help="per-step dump of one route")
    common(p)
    p.add_argument("--route-index", type=int, default=0)
    p.add_argument("--block-prob", type=float)
    p.add_argument("--leds", type=int)
    p.add_argument("--schemes", type=_scheme_list)
    p.add_argument("--table", help="calibration table CSV (else auto-calibrated)")
    p.add_argument("--grid-spacing", type=float, default=0.25)
    p.add_argument("--draws", type=int, default=10)
    p.set_defaults(func=_cmd_trace_route)

    p = sub.add_parser("eval-models", help="mean error per layout class")
    common(p)
    p.add_argument("--leds", type=_int_list, help="comma list of LED counts")
    p.add_argument("--table", help="reuse an existing calibration table CSV")
    p.add_argument("--grid-spacing", type=float, default=0.25)
    p.add_argument("--draws", type=int, default=10)
    p.set_defaults(func=_cmd_eval_models)

    return parser


def _load_cfg(args) -> harness.ExperimentConfig:
    cfg = harness.default_config()
    if args.config:
        cfg = harness.apply_config(cfg, harness.load_config_file(args.config))
    if args.seed is not None:
        cfg = harness.apply_config(cfg, {"seed": str(args.seed)})
    return cfg


def _override(cfg, args, **named) -> harness.ExperimentConfig:
    out = cfg
    if getattr(args, "routes", None) is not None:
        out = replace(out, routes=args.routes)
    if getattr(args, "schemes", None):
        out = replace(out, schemes=args.schemes)
    for key, value in named.items():
        if value is not None:
            out = replace(out, **{key: value})
    return out


def _calibration_rng(cfg):
    return np.random.default_rng(np.random.SeedSequence((cfg.master_seed, _CAL_STREAM)))


def _resolve_table(args, cfg, counts):
    """Load the table if given, otherwise calibrate the needed LED counts."""
    needs = any(s in ("calibrated", "asymptotic") for s in cfg.schemes)
    if not needs:
        return None
    if args.table:
        return calibration.load_calibration_table(args.table)
    wanted = sorted(set(counts)
                    | ({calibration.SATURATION_LEDS}
                       if "asymptotic" in cfg.schemes else set()))
    print(f"no --table given; calibrating LED counts {wanted} "
          f"(grid {args.grid_spacing} m, {args.draws} draws)", file=sys.stderr)
    return calibration.calibrate_mean_errors(
        cfg.room, wanted, cfg.noise, args.grid_spacing, args.draws,
        _calibration_rng(cfg), height_m=cfg.height_prior_m,
        rx_area_m2=cfg.rx_area_m2, rx_fov_rad=cfg.rx_fov_rad,
        apply_receiver_fov=cfg.apply_receiver_fov)


def _cmd_calibrate(args) -> int:
    cfg = _load_cfg(args)
    counts = args.leds if args.leds else list(cfg.led_counts)
    table = calibration.calibrate_mean_errors(
        cfg.room, counts, cfg.noise, args.grid_spacing, args.draws,
        _calibration_rng(cfg), height_m=cfg.height_prior_m,
        rx_area_m2=cfg.rx_area_m2, rx_fov_rad=cfg.rx_fov_rad,
        apply_receiver_fov=cfg.apply_receiver_fov)
    with _open_out(args.out) as fh:
        calibration.save_calibration_table(table, fh)
    if args.plot:
        report.plot_calibration(table, args.plot)
    return 0


def _cmd_sweep_blocking(args) -> int:
    cfg = _load_cfg(args)
    cfg = _override(cfg, args)
    if args.leds is not None:
        cfg = replace(cfg, room=replace(cfg.room, leds_per_ap=args.leds))
    probs = args.block_prob if args.block_prob else None
    table = _resolve_table(args, cfg, [cfg.room.leds_per_ap])
    rows = harness.sweep_blocking(cfg, probs=probs, table=table, jobs=args.jobs)
    with _open_out(args.out) as fh:
        harness.emit_results(rows, fh, args.format)
    if args.plot:
        report.plot_sweep(rows, "blocking probability", args.plot)
    return 0


def _cmd_sweep_leds(args) -> int:
    cfg = _load_cfg(args)
    cfg = _override(cfg, args)
    if args.block_prob is not None:
        cfg = replace(cfg, blocking=BlockingConfig(args.block_prob))
    counts = args.leds if args.leds else list(cfg.led_counts)
    table = _resolve_table(args, cfg, counts)
    rows = harness.sweep_leds(cfg, counts=counts, table=table, jobs=args.jobs)
    with _open_out(args.out) as fh:
        harness.emit_results(rows, fh, args.format)
    if args.plot:
        report.plot_sweep(rows, "LEDs per AP", args.plot)
    return 0


def _cmd_trace_route(args) -> int:
    cfg = _load_cfg(args)
    cfg = _override(cfg, args)
    if args.block_prob is not None:
        cfg = replace(cfg, blocking=BlockingConfig(args.block_prob))
    if args.leds is not None:
        cfg = replace(cfg, room=replace(cfg.room, leds_per_ap=args.leds))
    table = _resolve_table(args, cfg, [cfg.room.leds_per_ap])
    schemes = harness.build_schemes(cfg.schemes, table, cfg.room.leds_per_ap)
    trace = harness.trace_route(cfg, schemes,
                                (cfg.master_seed, 0, args.route_index))
    with _open_out(args.out) as fh:
        _write_trace(trace, cfg, fh, args.format)
    if args.plot:
        report.plot_trace(trace, cfg.room, args.plot)
    return 0


def _write_trace(trace, cfg, fh, fmt: str) -> None:
    names = list(trace.estimates)
    truth = trace.route.step_points
    if fmt == "csv":
        writer = csv.writer(fh, lineterminator="\n")
        head = ["step", "true_x", "true_y", "true_z", "layout",
                "meas_x", "meas_y", "meas_z"]
        for name in names:
            head += [f"{name}_x", f"{name}_y", f"{name}_z"]
        writer.writerow(head)
        for t in range(len(truth)):
            row = [t] + [f"{v:.6g}" for v in truth[t]] + [int(trace.layouts[t])]
            row += [_nan_str(v) for v in trace.measured[t]]
            for name in names:
                row += [_nan_str(v) for v in trace.estimates[name][t]]
            writer.writerow(row)
    else:
        steps = []
        for t in range(len(truth)):
            entry = {"step": t,
                     "true": [round(float(v), 6) for v in truth[t]],
                     "layout": int(trace.layouts[t]),
                     "measured": _nan_list(trace.measured[t])}
            entry.update({name: _nan_list(trace.estimates[name][t]) for name in names})
            steps.append(entry)
        json.dump(steps, fh, indent=2)
        fh.write("\n")


def _nan_str(v: float) -> str:
    return "" if math.isnan(v) else f"{v:.6g}"


def _nan_list(vec):
    return None if math.isnan(float(vec[0])) else [round(float(v), 6) for v in vec]


def _cmd_eval_models(args) -> int:
    cfg = _load_cfg(args)
    counts = args.leds if args.leds else list(cfg.led_counts)
    if args.table:
        table = calibration.load_calibration_table(args.table)
    else:
        table = calibration.calibrate_mean_errors(
            cfg.room, counts, cfg.noise, args.grid_spacing, args.draws,
            _calibration_rng(cfg), height_m=cfg.height_prior_m,
            rx_area_m2=cfg.rx_area_m2, rx_fov_rad=cfg.rx_fov_rad,
            apply_receiver_fov=cfg.apply_receiver_fov)
    with _open_out(args.out) as fh:
        _write_model_table(table, fh, args.format)
    if args.plot:
        report.plot_calibration(table, args.plot)
    return 0


_MODEL_COLUMNS = ("single", "side_pair", "diagonal_pair", "triple", "full")


def _write_model_table(table, fh, fmt: str) -> None:
    counts = table.led_counts()
    if fmt == "csv":
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("n_leds",) + _MODEL_COLUMNS)
        for n in counts:
            writer.writerow([n] + [f"{table.mean_error_m[(j, n)]:.6g}"
                                   for j in range(1, 6)])
    else:
        payload = [{"n_leds": n, **{col: round(table.mean_error_m[(j, n)], 6)
                                    for j, col in enumerate(_MODEL_COLUMNS, start=1)}}
                   for n in counts]
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"vlptrack: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"vlptrack: i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
