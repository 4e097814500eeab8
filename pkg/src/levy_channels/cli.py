"""
Command-line interface: ``levy-channels <command> [options]``.

Commands
--------
describe CHANNEL      print the channel card
immle                 derivative of mutual information vs minimum mean loss
dmle                  output relative entropy vs integrated cost of mismatch
entropy               SNR integral of the minimum mean loss vs H(X)
relent                SNR integral of the excess loss vs D(P || Q)
bregman-curve         tabulate the representative loss l(x_ref, x)
verify-all            run a battery of identity checks

Configuration is a JSON object (``--config``); unknown keys are rejected.
Results go to ``<out>/<command>.csv`` and ``<out>/<command>.json`` once all
computation has finished.  Exit status: 0 all checks passed, 1 an identity
check failed, 2 bad configuration, 3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .channels import DomainError, get_channel
from .identities import (MUTATIONS, Mutation, check_dmle, check_entropy,
                         check_immle, check_relent, default_battery,
                         run_suite, validate_check)
from .information import AbsoluteContinuityError, mutual_information
from .montecarlo import GENERATOR, mc_expected_loss, mc_mutual_information
from .posterior import DiscretePrior
from .quadrature import DivergenceError, QuadratureError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid run configuration."""


def fmt(v) -> str:
    """17 significant digits, so values round-trip exactly."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def _binary(channel, q=0.5):
    atoms = [-1.0, 1.0] if get_channel(channel).name == "gaussian" else [1.0, 2.0]
    return {"atoms": atoms, "weights": [q, 1 - q]}


DEFAULTS = {
    "immle": lambda ch: {"channel": ch, "prior": _binary(ch),
                         "gammas": [0.5, 1.0, 2.0], "tol": 1e-6,
                         "slack": 10.0, "mc_samples": 0},
    "dmle": lambda ch: {"channel": ch, "P": _binary(ch),
                        "Q": _binary(ch, 0.8), "gammas": [0.5, 2.0],
                        "tol": 1e-6, "slack": 10.0},
    "entropy": lambda ch: {"channel": ch, "prior": _binary(ch), "tol": 1e-4,
                           "slack": 10.0},
    "relent": lambda ch: {"channel": ch, "P": _binary(ch),
                          "Q": _binary(ch, 0.9), "tol": 1e-4, "slack": 10.0},
    "bregman-curve": lambda ch: {"channel": ch, "x_ref": 1.0,
                                 "x_grid": None,
                                 "x_range": {"lo": 0.05, "hi": 5.0,
                                             "num": 100}},
    "verify-all": lambda ch: {"checks": None},
}


def load_config(command: str, path, channel=None, tol=None) -> dict:
    """Merge a JSON config over the command defaults, strictly."""
    base = DEFAULTS[command](channel or "gaussian")
    user = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        try:
            user = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(user) - set(base)
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: "
                              f"{sorted(unknown)}")
        if "channel" in user and channel is None and command != "verify-all":
            # priors default to the requested channel's natural atoms
            base = DEFAULTS[command](user["channel"])
    cfg = dict(base, **user)
    if channel is not None and "channel" in cfg:
        cfg["channel"] = channel
    if tol is not None and "tol" in cfg:
        cfg["tol"] = tol
    _validate(command, cfg)
    return cfg


def _prior(item, ch, what):
    try:
        prior = DiscretePrior(np.asarray(item["atoms"], float),
                              np.asarray(item["weights"], float))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad {what}: {exc}") from exc
    try:
        prior.check_domain(ch)
    except DomainError as exc:
        raise ConfigError(f"{what}: {exc}") from exc
    return prior


def _validate(command, cfg):
    if "channel" in cfg:
        try:
            ch = get_channel(cfg["channel"])
        except (ValueError, AttributeError) as exc:
            raise ConfigError(str(exc)) from exc
        for key in ("prior", "P", "Q"):
            if key in cfg:
                _prior(cfg[key], ch, key)
    for key in ("gammas",):
        if key in cfg:
            g = cfg[key]
            if (not isinstance(g, list) or not g
                    or not all(isinstance(v, (int, float)) and v > 0
                               for v in g)):
                raise ConfigError("gammas must be a non-empty list of "
                                  "positive numbers")
    if "tol" in cfg and not (isinstance(cfg["tol"], (int, float))
                             and cfg["tol"] > 0):
        raise ConfigError("tol must be a positive number")
    if command == "verify-all" and cfg["checks"] is not None:
        if not isinstance(cfg["checks"], list):
            raise ConfigError("checks must be a list")
        for item in cfg["checks"]:
            try:
                validate_check(item)
            except (ValueError, KeyError) as exc:
                raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _report_rows(reports):
    return [{"gap": r.abs_gap, "budget": r.error_budget, "passed": r.passed}
            for r in reports]


def cmd_immle(cfg, seed, mutation=None):
    ch = get_channel(cfg["channel"])
    prior = _prior(cfg["prior"], ch, "prior")
    rows, details = [], []
    for g in cfg["gammas"]:
        r = check_immle(ch, prior, g, cfg["tol"], slack=cfg["slack"],
                        mutation=mutation)
        mi = mutual_information(ch, prior, g)
        row = {"gamma": g, "mi": mi.value, "dmi_dgamma": r.lhs,
               "expected_loss": r.rhs, "abs_gap": r.abs_gap,
               "error_budget": r.error_budget, "passed": r.passed}
        rows.append(row)
        detail = r.to_dict()
        if cfg.get("mc_samples"):
            n = int(cfg["mc_samples"])
            mm = mc_mutual_information(ch, prior, g, seed, n)
            ml = mc_expected_loss(ch, prior, prior, g, seed + 1, n)
            detail["monte_carlo"] = {
                "generator": GENERATOR, "seed": seed, "n": n,
                "mi": [mm.value, mm.std_error],
                "expected_loss": [ml.value, ml.std_error]}
        details.append(detail)
    cols = ["gamma", "mi", "dmi_dgamma", "expected_loss", "abs_gap",
            "error_budget", "passed"]
    return cols, rows, details


def cmd_dmle(cfg, seed, mutation=None):
    ch = get_channel(cfg["channel"])
    P, Q = _prior(cfg["P"], ch, "P"), _prior(cfg["Q"], ch, "Q")
    rows, details = [], []
    for g in cfg["gammas"]:
        r = check_dmle(ch, P, Q, g, cfg["tol"], slack=cfg["slack"],
                       mutation=mutation)
        rows.append({"gamma": g, "relent": r.lhs, "integral_rhs": r.rhs,
                     "abs_gap": r.abs_gap, "error_budget": r.error_budget,
                     "passed": r.passed})
        details.append(r.to_dict())
    cols = ["gamma", "relent", "integral_rhs", "abs_gap", "error_budget",
            "passed"]
    return cols, rows, details


def cmd_entropy(cfg, seed, mutation=None):
    ch = get_channel(cfg["channel"])
    prior = _prior(cfg["prior"], ch, "prior")
    r = check_entropy(ch, prior, cfg["tol"], slack=cfg["slack"],
                      mutation=mutation)
    row = {"integral": r.lhs, "entropy": r.rhs, "abs_gap": r.abs_gap,
           "error_budget": r.error_budget, "passed": r.passed}
    return list(row), [row], [r.to_dict()]


def cmd_relent(cfg, seed, mutation=None):
    ch = get_channel(cfg["channel"])
    P, Q = _prior(cfg["P"], ch, "P"), _prior(cfg["Q"], ch, "Q")
    r = check_relent(ch, P, Q, cfg["tol"], slack=cfg["slack"],
                     mutation=mutation)
    row = {"integral": r.lhs, "relative_entropy": r.rhs,
           "abs_gap": r.abs_gap, "error_budget": r.error_budget,
           "passed": r.passed}
    return list(row), [row], [r.to_dict()]


def bregman_grid(cfg):
    if cfg.get("x_grid") is not None:
        return np.asarray(cfg["x_grid"], dtype=float)
    rng = cfg["x_range"]
    try:
        grid = np.linspace(float(rng["lo"]), float(rng["hi"]),
                           int(rng["num"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad x_range: {exc}") from exc
    # always include the reference point, where the curve vanishes
    return np.union1d(grid, [float(cfg["x_ref"])])


def cmd_bregman_curve(cfg, seed, mutation=None):
    ch = get_channel(cfg["channel"])
    x = bregman_grid(cfg)
    try:
        loss = ch.bregman(float(cfg["x_ref"]), x)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    rows = [{"x": xi, "loss": li} for xi, li in zip(x, loss)]
    return ["x", "loss"], rows, []


def cmd_verify_all(cfg, seed, mutation=None, jobs=1):
    checks = cfg["checks"]
    reports = run_suite(default_battery() if checks is None else checks,
                        jobs=jobs, mutation=mutation)
    rows = [{"identity_id": r.identity_id, "config_hash": r.config_hash,
             "lhs": r.lhs, "rhs": r.rhs, "abs_gap": r.abs_gap,
             "error_budget": r.error_budget, "slack": r.slack,
             "passed": r.passed} for r in reports]
    cols = ["identity_id", "config_hash", "lhs", "rhs", "abs_gap",
            "error_budget", "slack", "passed"]
    return cols, rows, [r.to_dict() for r in reports]


COMMANDS = {
    "immle": cmd_immle,
    "dmle": cmd_dmle,
    "entropy": cmd_entropy,
    "relent": cmd_relent,
    "bregman-curve": cmd_bregman_curve,
    "verify-all": cmd_verify_all,
}


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def to_csv(cols, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([row[c] if isinstance(row[c], str) else fmt(row[c])
                    for c in cols])
    return buf.getvalue()


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def to_json(command, cfg, rows, details, passed, extra) -> str:
    doc = {"command": command, "config": cfg, "passed": passed,
           "rows": rows, "reports": details, **extra}
    return json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="JSON configuration file")
    common.add_argument("--out", metavar="DIR",
                        help="directory for CSV and JSON results")
    common.add_argument("--tol", type=float, help="override tolerance")
    common.add_argument("--seed", type=int, default=20240101,
                        help="seed for Monte Carlo cross-checks")
    common.add_argument("--jobs", type=int, default=1,
                        help="worker processes for verify-all")
    common.add_argument("--channel", help="override the configured channel")
    common.add_argument("--mutate", choices=MUTATIONS,
                        help="deliberately corrupt one side of each check")
    common.add_argument("--mutate-factor", type=float, default=1.01)

    p = argparse.ArgumentParser(
        prog="levy-channels",
        description="Information-estimation identities of Levy channels")
    sub = p.add_subparsers(dest="command", required=True)
    d = sub.add_parser("describe", help="print a channel card")
    d.add_argument("channel")
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.command == "describe":
        try:
            print(get_channel(args.channel).describe())
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK

    try:
        if args.channel is not None:
            get_channel(args.channel)
        cfg = load_config(args.command, args.config, args.channel, args.tol)
        mutation = (Mutation(args.mutate, args.mutate_factor)
                    if args.mutate else None)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    fn = COMMANDS[args.command]
    kwargs = {"jobs": args.jobs} if args.command == "verify-all" else {}
    try:
        cols, rows, details = fn(cfg, args.seed, mutation, **kwargs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, DivergenceError) as exc:
        kind = ("divergence" if isinstance(exc, (DivergenceError,
                                                 AbsoluteContinuityError))
                else "non-convergence")
        print(f"numerical {kind}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    passed = all(r.get("passed", True) for r in rows)
    csv_text = to_csv(cols, rows)
    extra = {"generator": GENERATOR, "seed": args.seed,
             "mutation": args.mutate}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        stem = args.command.replace("-", "_")
        json_text = to_json(args.command, cfg, rows, details, passed, extra)
        (out / f"{stem}.csv").write_text(csv_text)
        (out / f"{stem}.json").write_text(json_text)
    sys.stdout.write(csv_text)
    return EXIT_OK if passed else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
