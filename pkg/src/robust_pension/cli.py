"""Command-line front end: ``robust-pension --command <name> [--scenario file.json]``.

Every run writes its artifacts plus a ``manifest.json`` with the resolved
scenario and a sha256 for each artifact.  On an error the files written so far
are removed.  ``verify`` exits with status 1 when any check fails.
"""

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from datetime import datetime, timezone
from importlib import metadata

import numpy as np

from .demography import dependency_ratio, life_table
from .exceptions import PensionModelError
from .plan import FundState, liability_branches, target_liability, with_params
from .policy import PRESETS, coeff_g, coeff_PQ, counts, realized_policy
from .scenario import emit, load_scenario, validate
from .simulation import (
    SWEEP_PARAMETERS,
    format_float,
    simulate_paths,
    standard_normals,
    summarize,
    sweep_config,
)
from .verification import verification_report

log = logging.getLogger("robust_pension")

COMMANDS = ("life-table", "liability", "policy-at", "verify", "simulate", "sweep", "figure-pack")

# figure families: name -> list of (labels, flat overrides or preset)
FIGURE_FAMILIES = {
    "spread-parameters": [({}, {})],
    "kappa-sensitivity": [({"kappa": v}, {"kappa": v}) for v in (0.01, 0.0, -0.005, -0.01)],
    "T-sensitivity": [({"T": v}, {"T": v}) for v in (10.0, 20.0, 30.0)],
    "xr-omega": [
        ({"xr": xr, "omega": om}, {"xr": xr, "omega": om}) for xr in (60.0, 65.0, 70.0) for om in (4.0, 20.0)
    ],
    "xr-kappa": [
        ({"xr": xr, "kappa": ka}, {"xr": xr, "kappa": ka}) for xr in (60.0, 70.0) for ka in (-0.01, 0.0, 0.01)
    ],
    "gamma1-gamma2": [
        ({"gamma1": g1, "gamma2": g2}, {"gamma1": g1, "gamma2": g2}) for g1, g2 in
        ((1.0, 2.0), (2.0, 2.0), (4.0, 2.0), (2.0, 1.0), (2.0, 4.0))
    ],
    "special-cases": [({"preset": p}, p) for p in ("baseline",) + PRESETS],
}


def tool_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return value


class Run:
    """Tracks written artifacts so they can be hashed or rolled back."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.artifacts = []

    def path(self, name):
        os.makedirs(self.out_dir, exist_ok=True)
        full = os.path.join(self.out_dir, name)
        self.artifacts.append(full)
        return full

    def write_csv(self, name, header, rows):
        with open(self.path(name), "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])

    def write_json(self, name, payload):
        with open(self.path(name), "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")

    def rollback(self):
        for path in self.artifacts:
            if os.path.exists(path):
                os.remove(path)
        self.artifacts = []

    def manifest(self, scenario, command, started):
        entries = []
        for path in self.artifacts:
            with open(path, "rb") as fh:
                digest = hashlib.sha256(fh.read()).hexdigest()
            entries.append({"path": os.path.basename(path), "sha256": digest})
        payload = {
            "command": command,
            "scenario": scenario,
            "seed": scenario["seed"],
            "tool_version": tool_version(),
            "started": started,
            "finished": datetime.now(timezone.utc).isoformat(),
            "artifacts": entries,
        }
        self.write_json("manifest.json", payload)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def summary_rows(summary, labels=None):
    labels = labels or {}
    cols = summary.columns()
    names = list(cols)
    header = list(labels) + names
    rows = [list(labels.values()) + list(row) for row in zip(*(cols[n] for n in names))]
    return header, rows


def cmd_life_table(config, spec, args, run):
    times = np.arange(0.0, config.rules.T + 1e-9, 1.0)
    rows = life_table(config.population, times, age_step=1.0)
    run.write_csv("life_table.csv", ["age", "t", "hazard", "survival"], rows)
    return 0


def cmd_liability(config, spec, args, run):
    active, retired = liability_branches(config)
    L = active + retired
    t = np.linspace(0.0, config.rules.T, 201)
    nc, nb = counts(config, t)
    g1, g2, g3 = coeff_g(config, t, nc, nb)
    P, Q = coeff_PQ(config, t, nc, nb)
    ratio = dependency_ratio(config.population, t, config.age_step)
    run.write_csv(
        "coefficients.csv", ["t", "NC", "NB", "dependency_ratio", "g1", "g2", "g3", "P", "Q"],
        zip(t, nc, nb, ratio, g1, g2, np.full(t.shape, g3), P, Q),
    )
    run.write_json("liability.json", {
        "L": L, "active_branch": active, "retired_branch": retired,
        "initial_surplus": config.rules.a0 - L,
    })
    return 0


def cmd_policy_at(config, spec, args, run):
    if args.t is None:
        raise PensionModelError("policy-at needs --t")
    a = config.rules.a0 if args.a is None else args.a
    decision = realized_policy(config, FundState(args.t, a), L=target_liability(config))
    payload = decision.to_dict()
    run.write_json("policy.json", payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def cmd_verify(config, spec, args, run):
    report = verification_report(config)
    run.write_json("verification.json", report)
    for name, check in report["checks"].items():
        print(f"{name}: {'PASS' if check['passed'] else 'FAIL'}")
    return 0 if report["passed"] else 1


def cmd_simulate(config, spec, args, run):
    summary = summarize(simulate_paths(config, spec))
    header, rows = summary_rows(summary)
    run.write_csv("simulation.csv", header, rows)
    run.write_json("simulation_meta.json", {
        "n_valid": summary.n_valid, "n_invalid": summary.n_invalid,
        "config_hash": summary.config_hash, **summary.metadata,
    })
    return 0


def _parse_values(parameter, text):
    if text is None:
        raise PensionModelError("sweep needs --values")
    items = [v.strip() for v in text.split(",") if v.strip()]
    if parameter == "longevity-preset":
        return items
    try:
        return [float(v) for v in items]
    except ValueError as exc:
        raise PensionModelError(f"--values must be numbers for {parameter}: {text}") from exc


def _variant_config(config, overrides):
    if isinstance(overrides, str):
        return sweep_config(config, "longevity-preset", overrides)
    return with_params(config, **overrides)


def _family_rows(config, spec, variants, Z):
    header, rows = None, []
    for labels, overrides in variants:
        summary = summarize(simulate_paths(_variant_config(config, overrides), spec, increments=Z))
        h, r = summary_rows(summary, labels)
        header = header or h
        rows.extend(r)
    return header, rows


def cmd_sweep(config, spec, args, run):
    if args.parameter not in SWEEP_PARAMETERS:
        raise PensionModelError(
            f"unknown sweep parameter {args.parameter!r}; expected one of {sorted(SWEEP_PARAMETERS)}"
        )
    values = _parse_values(args.parameter, args.values)
    Z = standard_normals(spec.seed, range(spec.paths), spec.steps)
    variants = [({args.parameter: v}, sweep_config(config, args.parameter, v)) for v in values]
    header, rows = None, []
    for labels, cfg in variants:
        h, r = summary_rows(summarize(simulate_paths(cfg, spec, increments=Z)), labels)
        header = header or h
        rows.extend(r)
    run.write_csv(f"sweep_{args.parameter}.csv", header, rows)
    return 0


def cmd_figure_pack(config, spec, args, run):
    Z = standard_normals(spec.seed, range(spec.paths), spec.steps)
    for name, variants in FIGURE_FAMILIES.items():
        header, rows = _family_rows(config, spec, variants, Z)
        run.write_csv(f"{name}.csv", header, rows)
    return 0


HANDLERS = {
    "life-table": cmd_life_table,
    "liability": cmd_liability,
    "policy-at": cmd_policy_at,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "figure-pack": cmd_figure_pack,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="robust-pension", description="Robust investment and risk-sharing policy for a hybrid pension plan."
    )
    parser.add_argument("--command", required=True, choices=COMMANDS)
    parser.add_argument("--scenario", help="JSON scenario file; omitted keys take baseline defaults")
    parser.add_argument("--seed", type=int, help="override the scenario seed")
    parser.add_argument("--out", help="output directory (overrides the scenario's output_dir)")
    parser.add_argument("--t", type=float, help="time for policy-at")
    parser.add_argument("--a", type=float, help="fund value for policy-at (default a0)")
    parser.add_argument("--parameter", help=f"sweep parameter, one of {sorted(SWEEP_PARAMETERS)}")
    parser.add_argument("--values", help="comma-separated sweep values")
    parser.add_argument("--paths", type=int, help="override the number of simulated paths")
    parser.add_argument("--steps", type=int, help="override the number of time steps")
    parser.add_argument("--n-jobs", type=int, help="worker threads for the simulation")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    started = datetime.now(timezone.utc).isoformat()
    try:
        raw = load_scenario(args.scenario) if args.scenario else {}
        overrides = {"seed": args.seed, "paths": args.paths, "steps": args.steps, "n_jobs": args.n_jobs}
        raw.update({k: v for k, v in overrides.items() if v is not None})
        config, spec, out_dir = validate(raw)
    except PensionModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out or out_dir
    run = Run(out_dir)
    try:
        status = HANDLERS[args.command](config, spec, args, run)
        run.manifest(emit(config, spec, out_dir), args.command, started)
    except (PensionModelError, OSError) as exc:
        run.rollback()
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BaseException:
        run.rollback()
        raise
    return status


if __name__ == "__main__":
    sys.exit(main())
