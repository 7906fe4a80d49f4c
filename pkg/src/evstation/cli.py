"""Command line entry point: ``evstation <command> [options]``.

Exit codes: 0 success, 2 configuration error, 3 data error,
4 runtime contract violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .config import load_config
from .errors import ConfigError, DataError, EVStationError
from .exogenous import EUR_PER_KWH, KWH, UNITS, fit_levels, load_hourly_series, to_points
from .harness import (
    TABLE_FILE,
    RunReport,
    build_exogenous,
    compare,
    estimate_arrival_rates,
    evaluation_seed,
    make_controller,
    run_evaluation,
    train_controller,
)
from .learner import QTable
from .policies import POLICY_NAMES

log = logging.getLogger("evstation")


def _config(args):
    return load_config(args.config, seed=args.seed)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_table(path):
    if path is None:
        return None
    if not Path(path).is_file():
        raise DataError(f"table file not found: {path}")
    return QTable.load(path)


def cmd_train(args) -> None:
    config = _config(args)
    out = _out(args)
    controller = train_controller(config)
    controller.table_.save(out / TABLE_FILE)
    summary = {
        "config_digest": config.digest(),
        "seed": config.seed,
        "train_steps": controller.n_steps_,
        "table_pairs": len(controller.table_),
        "episode_income_eur": controller.episode_income_,
        "renewable_levels": controller.codec_r_._asdict(),
        "price_levels": controller.codec_p_._asdict(),
    }
    with open(out / "train.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
    log.info("trained %d steps, %d table entries -> %s", controller.n_steps_, len(controller.table_), out)


def cmd_evaluate(args) -> None:
    config = _config(args)
    out = _out(args)
    table = _load_table(args.table)
    if args.policy == "learned" and table is None:
        raise ConfigError("--policy learned needs --table")
    X_train, X_eval = build_exogenous(config)
    controller = make_controller(config).untrained(X_train if len(X_train) else X_eval)
    if table is not None:
        controller.table_ = table
    daily = {args.policy: run_evaluation(args.policy, controller, X_eval, evaluation_seed(config))}
    report = RunReport(daily=daily, config_digest=config.digest(), seed=config.seed)
    report.write(out)
    log.info("%s: total income %.4f EUR over %d days", args.policy, report.totals[args.policy], config.eval_days)


def cmd_compare(args) -> None:
    config = _config(args)
    out = _out(args)
    report, controller = compare(config, _load_table(args.table))
    report.write(out)
    controller.table_.save(out / TABLE_FILE)
    for name, total in report.totals.items():
        print(f"{name:8s} {total:12.4f} EUR")
    if report.uplift is not None:
        print(f"uplift   {report.uplift:12.4f}")


def cmd_estimate_rates(args) -> None:
    events = []
    try:
        with open(args.events, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"day", "hour"} <= set(reader.fieldnames):
                raise DataError(f"{args.events}: expected header with day,hour")
            for rowno, row in enumerate(reader, start=2):
                try:
                    events.append((int(row["day"]), float(row["hour"])))
                except (TypeError, ValueError) as exc:
                    raise DataError(f"{args.events}: row {rowno}: {exc}") from None
    except OSError as exc:
        raise DataError(str(exc)) from None
    rates = estimate_arrival_rates(events, args.days)
    out = _out(args)
    with open(out / "rates.json", "w", encoding="utf-8") as fh:
        json.dump({"lam": rates}, fh, indent=2)
    print(" ".join(f"{r:.4f}" for r in rates))


def cmd_fit_levels(args) -> None:
    try:
        series = load_hourly_series(args.series, args.unit)
    except OSError as exc:
        raise DataError(str(exc)) from None
    codec = fit_levels(to_points(series, args.battery_kwh), args.levels)
    out = _out(args)
    result = {"unit": "soc-points" if args.unit == KWH else "euro-per-soc-point", **codec._asdict()}
    with open(out / "levels.json", "w", encoding="utf-8") as fh:
        json.dump(result, fh, indent=2)
    print(json.dumps(result))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evstation", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, policy=False, table=False):
        p.add_argument("--config", help="YAML experiment config")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--out", default="out", help="output directory")
        if policy:
            p.add_argument("--policy", choices=POLICY_NAMES, default="learned")
        if table:
            p.add_argument("--table", help=f"Q-table snapshot ({TABLE_FILE})")

    common(sub.add_parser("train", help="train a Q-table"))
    common(sub.add_parser("evaluate", help="evaluate one policy"), policy=True, table=True)
    common(sub.add_parser("compare", help="train and compare learned/random/myopic"), table=True)

    p = sub.add_parser("estimate-rates", help="hourly arrival rates from an arrival log")
    p.add_argument("--events", required=True, help="CSV with day,hour columns")
    p.add_argument("--days", type=int, help="number of observed days")
    p.add_argument("--out", default="out")

    p = sub.add_parser("fit-levels", help="fit discretization levels to a series")
    p.add_argument("--series", required=True, help="CSV with day,hour,value columns")
    p.add_argument("--unit", choices=UNITS, default=EUR_PER_KWH)
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--battery-kwh", type=float, default=24.0)
    p.add_argument("--out", default="out")
    return parser


COMMANDS = {
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "estimate-rates": cmd_estimate_rates,
    "fit-levels": cmd_fit_levels,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        COMMANDS[args.command](args)
    except EVStationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
