"""Batch command-line front door.

Subcommands: estimate, check, frontier, matrices, oracle. Configuration can
come from a flat JSON file (--config) with individual flags overriding file
values; the fully resolved configuration is echoed into every report. All
numbers are serialized with 17 significant digits so repeated runs are
byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import model, oracle, solver
from .certify import DEFAULT_TOL, Certificate, certify_all
from .lmi import build_feasibility_systems

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_DISAGREE = 3


class CliError(Exception):
    pass


def _fmt_float(x: float) -> str:
    if x != x:
        return "null"
    if x in (float("inf"), float("-inf")):
        return "null"
    return format(float(x), ".17g")


def _dumps(obj) -> str:
    """Deterministic JSON with 17-significant-digit floats."""
    if isinstance(obj, dict):
        items = ", ".join(f"{json.dumps(k)}: {_dumps(v)}" for k, v in obj.items())
        return "{" + items + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_dumps(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return _dumps(obj.tolist())
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if obj is None:
        return "null"
    return json.dumps(obj)


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise CliError(f"could not parse number list {text!r}: {exc}") from None


def _parse_grid(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise CliError("--tau-grid expects start:stop:step")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise CliError(f"could not parse --tau-grid {text!r}") from None
    if step <= 0.0:
        raise CliError("--tau-grid step must be positive")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    if count < 1:
        raise CliError("--tau-grid is empty")
    return [start + i * step for i in range(count)]


_CONFIG_KEYS = (
    "data",
    "kind",
    "delta_b",
    "delta_e",
    "delta_p",
    "shift_mags",
    "mu0",
    "tau",
    "tau_grid",
    "shift_convention",
    "seed",
    "tol",
    "samples",
    "weights",
)


def _resolve_config(args) -> dict:
    config = {
        "shift_convention": model.ShiftConvention.UNIT_SET.value,
        "seed": 0,
        "tol": DEFAULT_TOL,
        "samples": 10_000,
    }
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"could not read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise CliError("config file must hold a flat JSON object")
        unknown = set(loaded) - set(_CONFIG_KEYS)
        if unknown:
            raise CliError(f"unknown config keys: {sorted(unknown)}")
        config.update(loaded)
    overrides = {
        "data": getattr(args, "data", None),
        "kind": getattr(args, "kind", None),
        "delta_b": getattr(args, "delta_b", None),
        "delta_e": getattr(args, "delta_e", None),
        "delta_p": getattr(args, "delta_p", None),
        "shift_mags": getattr(args, "shift_mags", None),
        "mu0": getattr(args, "mu0", None),
        "tau": getattr(args, "tau", None),
        "tau_grid": getattr(args, "tau_grid", None),
        "seed": getattr(args, "seed", None),
        "tol": getattr(args, "tol", None),
        "samples": getattr(args, "samples", None),
        "weights": getattr(args, "weights", None),
    }
    for key, value in overrides.items():
        if value is not None:
            config[key] = value
    if getattr(args, "scale_shifts", False):
        config["shift_convention"] = model.ShiftConvention.SCALE_BY_RADIUS.value
    if config.get("tau") is not None and config.get("tau_grid") is not None:
        raise CliError("exactly one of tau and tau_grid may be given")
    return config


def _load_estimates(config) -> tuple[model.ReturnHistory, model.MarketEstimates]:
    path = config.get("data")
    if not path:
        raise CliError("a return-history CSV is required (--data)")
    history = model.load_history_csv(path)
    return history, model.estimate(history)


def _build_spec(config, estimates: model.MarketEstimates) -> model.UncertaintySpec:
    kind_text = config.get("kind")
    if not kind_text:
        raise CliError("an uncertainty kind is required (--kind)")
    try:
        kind = model.Kind(kind_text)
    except ValueError:
        valid = ", ".join(k.value for k in model.Kind)
        raise CliError(f"unknown kind {kind_text!r}; choose one of: {valid}") from None
    mags = config.get("shift_mags")
    if mags is None:
        raise CliError("per-asset shift magnitudes are required (--shift-mags)")
    if isinstance(mags, str):
        mags = _parse_floats(mags)
    mu0 = config.get("mu0")
    if isinstance(mu0, str):
        mu0 = _parse_floats(mu0)
    if mu0 is None:
        mu0 = estimates.mu
    spec = model.UncertaintySpec(
        kind=kind,
        mu0=np.asarray(mu0, dtype=float),
        shifts=model.make_diagonal_shifts(mags),
        delta_b=config.get("delta_b"),
        delta_e=config.get("delta_e"),
        delta_p=config.get("delta_p"),
        diagonal_shifts=True,
    )
    convention = model.ShiftConvention(config["shift_convention"])
    return model.resolve_shift_convention(spec, convention)


def _portfolio(config) -> model.Portfolio:
    weights = config.get("weights")
    if weights is None:
        raise CliError("portfolio weights are required (--weights)")
    if isinstance(weights, str):
        weights = _parse_floats(weights)
    return model.validate_portfolio(np.asarray(weights, dtype=float))


def _require_tau(config) -> float:
    tau = config.get("tau")
    if tau is None:
        raise CliError("a required return level is needed (--tau)")
    return float(tau)


def cmd_estimate(args, out) -> int:
    config = _resolve_config(args)
    history, est = _load_estimates(config)
    report = {
        "mu": est.mu,
        "sigma": est.sigma,
        "n": history.n_assets,
        "T": history.n_periods,
        "labels": list(history.asset_labels),
        "config": config,
    }
    out.write(_dumps(report) + "\n")
    return EXIT_OK


def _certificate_dict(cert: Certificate) -> dict:
    return {
        "feasible": cert.feasible,
        "lambda": cert.lambda_star,
        "min_eig": cert.min_eig_at_lambda,
        "label": cert.label_text,
        "iterations": cert.iterations,
        "warning": cert.warning,
    }


def cmd_check(args, out) -> int:
    config = _resolve_config(args)
    _, est = _load_estimates(config)
    spec = _build_spec(config, est)
    port = _portfolio(config)
    tau = _require_tau(config)
    instance = model.ProblemInstance(est, tau, spec)
    systems = build_feasibility_systems(port, instance)
    verdict = certify_all(systems, tol=float(config["tol"]))
    comparison = oracle.compare_verdicts(
        port,
        instance,
        verdict.feasible,
        samples=int(config["samples"]),
        seed=int(config["seed"]),
    )
    winner = next((c for c in verdict.certificates if c.feasible), None)
    best = winner or max(
        verdict.certificates, key=lambda c: c.min_eig_at_lambda
    )
    report = {
        "feasible": verdict.feasible,
        "lambda": best.lambda_star,
        "min_eig": best.min_eig_at_lambda,
        "label": best.label_text,
        "iterations": best.iterations,
        "feasible_count": verdict.feasible_count,
        "certificates": [_certificate_dict(c) for c in verdict.certificates],
        "oracle": {
            "agree": comparison.agree,
            "certificate_only": comparison.certificate_only,
            "oracle_only": comparison.oracle_only,
            "worst_case_return": comparison.worst_case_return,
            "quadratic_worst_case": comparison.quadratic_worst_case,
            "tau": comparison.tau,
            "seed": int(config["seed"]),
        },
        "config": config,
    }
    out.write(_dumps(report) + "\n")
    if not comparison.agree:
        return EXIT_DISAGREE
    return EXIT_OK if verdict.feasible else EXIT_INFEASIBLE


def cmd_matrices(args, out) -> int:
    config = _resolve_config(args)
    _, est = _load_estimates(config)
    spec = _build_spec(config, est)
    port = _portfolio(config)
    tau = _require_tau(config)
    systems = build_feasibility_systems(
        port, model.ProblemInstance(est, tau, spec)
    )
    report = {
        "systems": [
            {
                "label": s.label.describe(),
                "A": s.a.reshape(-1),
                "B": s.b.reshape(-1),
                "n": s.n,
            }
            for s in systems
        ],
        "config": config,
    }
    out.write(_dumps(report) + "\n")
    return EXIT_OK


def cmd_oracle(args, out) -> int:
    config = _resolve_config(args)
    _, est = _load_estimates(config)
    spec = _build_spec(config, est)
    port = _portfolio(config)
    seed = int(config["seed"])
    samples = int(config["samples"])
    sampled = oracle.worst_case_sampled(port, spec, samples=samples, seed=seed)
    if spec.kind in model.COMBINED_KINDS:
        closed = None
    else:
        closed = oracle.worst_case_return(port, spec).value
    report = {
        "closed_form": closed,
        "sampled": sampled.value,
        "argmin_zeta": sampled.argmin_zeta,
        "seed": seed,
        "config": config,
    }
    out.write(_dumps(report) + "\n")
    return EXIT_OK


def cmd_frontier(args, out) -> int:
    config = _resolve_config(args)
    _, est = _load_estimates(config)
    spec = _build_spec(config, est)
    grid = config.get("tau_grid")
    if grid is None:
        raise CliError("a tau grid is required (--tau-grid start:stop:step)")
    if isinstance(grid, str):
        grid = _parse_grid(grid)
    points = solver.frontier(
        est,
        spec,
        grid,
        samples=int(config["samples"]),
        seed=int(config["seed"]),
    )
    n = est.n_assets
    header = ["tau", "mode", "variance", "return", "status"]
    header += [f"w{i}" for i in range(n)]
    out.write(",".join(header) + "\n")
    for p in points:
        weights = p.x.x if p.x is not None else [float("nan")] * n
        row = [
            format(p.tau, ".17g"),
            "robust" if p.robust else "nominal",
            format(p.variance, ".17g"),
            format(p.expected_return, ".17g"),
            p.status.value,
        ]
        row += [format(float(w), ".17g") for w in weights]
        out.write(",".join(row) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustcert",
        description=(
            "Certify robust feasibility of Markowitz portfolios under box, "
            "ellipsoidal, polyhedral, and combined uncertainty sets."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "estimate": cmd_estimate,
        "check": cmd_check,
        "frontier": cmd_frontier,
        "matrices": cmd_matrices,
        "oracle": cmd_oracle,
    }
    for name, func in commands.items():
        p = sub.add_parser(name)
        p.set_defaults(func=func)
        p.add_argument("--data", help="return-history CSV path")
        p.add_argument("--config", help="flat JSON config file")
        p.add_argument("--weights", help="comma-separated portfolio weights")
        p.add_argument("--tau", type=float, help="required return level")
        p.add_argument("--tau-grid", help="start:stop:step return levels")
        p.add_argument("--kind", help="uncertainty geometry")
        p.add_argument("--delta-b", type=float, help="box radius")
        p.add_argument("--delta-e", type=float, help="ellipsoidal radius")
        p.add_argument("--delta-p", type=float, help="polyhedral radius")
        p.add_argument("--shift-mags", help="comma-separated shift magnitudes")
        p.add_argument("--mu0", help="override for the nominal mean vector")
        p.add_argument(
            "--scale-shifts",
            action="store_true",
            help="multiply shifts by the set radius before building anything",
        )
        p.add_argument("--seed", type=int, help="sampling seed")
        p.add_argument("--tol", type=float, help="certification tolerance")
        p.add_argument("--samples", type=int, help="oracle sample count")
        p.add_argument("--json", action="store_true", help="JSON output (default)")
        p.add_argument("--csv", action="store_true", help="CSV output (frontier)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, sys.stdout)
    except (CliError, model.InvalidDataError, model.InvalidParameterError,
            model.ConstraintViolationError, model.DimensionMismatchError,
            OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
