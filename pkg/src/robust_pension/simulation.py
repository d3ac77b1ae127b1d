"""Monte Carlo simulation of the fund under the closed-loop optimal policy.

Each path is driven by its own counter-based Philox stream keyed by
``(seed, path)``, so results do not depend on how paths are split across
workers.  The policy is applied at the left end of every subinterval and the
fund advanced by one Euler-Maruyama step.
"""

import csv
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import AllPathsInvalidError, InvalidParameterError
from .plan import flat_params, target_benefit, target_contribution, target_liability, with_params
from .policy import (
    PRESETS,
    coeff_PQ,
    counts,
    investment_coefficient,
    special_case_preset,
    worst_case_drift,
)

MEASURES = ("reference", "worst-case")
QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)
SUMMARY_FIELDS = ("c", "b", "pi_over_A", "A", "alpha", "beta")


@dataclass(frozen=True)
class SimulationSpec:
    steps: int = 1000
    paths: int = 1000
    seed: int = 20230101
    measure: str = "reference"
    overflow_guard: float = 1e12
    n_jobs: int = 1
    zero_investment: bool = False

    def __post_init__(self):
        if self.steps < 1 or self.paths < 1:
            raise InvalidParameterError("steps and paths must both be >= 1")
        if self.measure not in MEASURES:
            raise InvalidParameterError(f"measure must be one of {MEASURES}")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidParameterError("seed must be an unsigned 64-bit integer")


def standard_normals(seed, path_ids, steps):
    """``(len(path_ids), steps)`` standard normals; row ``i`` depends only on ``(seed, path_ids[i])``."""
    out = np.empty((len(path_ids), steps))
    for i, p in enumerate(path_ids):
        bitgen = np.random.Philox(key=(int(seed) << 64) | int(p))
        out[i] = np.random.Generator(bitgen).standard_normal(steps)
    return out


@dataclass(frozen=True)
class PathRecord:
    t: np.ndarray
    A: np.ndarray
    pi: np.ndarray
    c: np.ndarray
    b: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    Z: np.ndarray
    valid: bool


@dataclass
class PathSet:
    """Simulated paths on the time grid ``t`` (``steps + 1`` points).

    ``A`` has ``steps + 1`` columns; the decision arrays have ``steps`` columns,
    one per subinterval, taken at its left end ``t[:-1]``.
    """

    t: np.ndarray
    A: np.ndarray
    pi: np.ndarray
    c: np.ndarray
    b: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    Z: np.ndarray
    valid: np.ndarray
    liability: float
    spec: SimulationSpec = None
    config_hash: str = ""

    def __len__(self):
        return self.A.shape[0]

    def record(self, i):
        return PathRecord(
            t=self.t[:-1], A=self.A[i, :-1], pi=self.pi[i], c=self.c[i], b=self.b[i],
            lambda1=self.lambda1[i], lambda2=self.lambda2[i], Z=self.Z[i], valid=bool(self.valid[i]),
        )


def config_hash(config):
    payload = json.dumps(flat_params(config), sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _policy_grid(config, t):
    nc, nb = counts(config, t)
    P, Q = coeff_PQ(config, t, nc, nb)
    return nc, nb, P, Q


def _run_block(config, spec, t, grid, L, Z):
    nc, nb, P, Q = grid
    m, w = config.market, config.weights
    dt = np.diff(t)
    n_paths, steps = Z.shape
    k_pi = 0.0 if spec.zero_investment else investment_coefficient(config)
    k1 = (w.gamma3 / w.gamma1) * nc * P
    k2 = (w.gamma3 / w.gamma2) * nb * P
    c_target = target_contribution(config.rules, t)
    b_target = target_benefit(config.rules, t)
    phi = worst_case_drift(config) if spec.measure == "worst-case" else 0.0

    A = np.empty((n_paths, steps + 1))
    A[:, 0] = config.rules.a0
    valid = np.ones(n_paths, dtype=bool)
    for i in range(steps):
        a = A[:, i]
        gap = a + Q[i]
        pi = k_pi * gap
        c_now = c_target[i] - k1[i] * gap
        b_now = b_target[i] + k2[i] * gap
        drift = pi * (m.mu - m.r) + a * m.r + nc[i] * c_now - nb[i] * b_now + m.sigma * pi * phi
        nxt = a + drift * dt[i] + m.sigma * pi * math.sqrt(dt[i]) * Z[:, i]
        bad = ~np.isfinite(nxt) | (np.abs(nxt) > spec.overflow_guard)
        if bad.any():
            valid &= ~bad
            nxt = np.where(bad, np.nan, nxt)
        A[:, i + 1] = nxt

    # decisions are taken at the left end of each subinterval
    a = A[:, :-1]
    gap = a + Q[:-1]
    pi = k_pi * gap
    lam1 = k1[:-1] * gap
    lam2 = k2[:-1] * gap
    with np.errstate(divide="ignore", invalid="ignore"):
        sp = a - L
        alpha = lam1 * nc[:-1] / sp
        beta = lam2 * nb[:-1] / sp
    return A, pi, c_target[:-1] - lam1, b_target[:-1] + lam2, lam1, lam2, alpha, beta, valid


def simulate_paths(config, spec=SimulationSpec(), increments=None, liability=None):
    """Simulate ``spec.paths`` fund trajectories over ``[0, T]``.

    ``spec.zero_investment`` pins the risky holding at zero, which makes the
    fund a deterministic ODE solved by the Euler scheme.

    ``increments`` optionally supplies the ``(paths, steps)`` standard normals,
    e.g. aggregated from a finer grid for convergence studies.
    """
    t = np.linspace(0.0, config.rules.T, spec.steps + 1)
    if increments is None:
        Z = standard_normals(spec.seed, range(spec.paths), spec.steps)
    else:
        Z = np.asarray(increments, dtype=float)
        if Z.shape != (spec.paths, spec.steps):
            raise InvalidParameterError(f"increments must have shape {(spec.paths, spec.steps)}")
    L = target_liability(config) if liability is None else liability
    grid = _policy_grid(config, t)

    n_blocks = max(1, min(spec.n_jobs, spec.paths))
    bounds = np.linspace(0, spec.paths, n_blocks + 1).astype(int)
    blocks = [Z[lo:hi] for lo, hi in zip(bounds[:-1], bounds[1:])]
    if n_blocks == 1:
        parts = [_run_block(config, spec, t, grid, L, blocks[0])]
    else:
        with ThreadPoolExecutor(max_workers=n_blocks) as pool:
            parts = list(pool.map(lambda z: _run_block(config, spec, t, grid, L, z), blocks))
    A, pi, c, b, lam1, lam2, alpha, beta, valid = (np.concatenate(x) for x in zip(*parts))
    return PathSet(
        t=t, A=A, pi=pi, c=c, b=b, lambda1=lam1, lambda2=lam2, alpha=alpha, beta=beta,
        Z=Z, valid=valid, liability=L, spec=spec, config_hash=config_hash(config),
    )


@dataclass
class SimulationSummary:
    """Per-time means and quantiles over the valid paths, at the decision times."""

    t: np.ndarray
    means: dict
    quantiles: dict
    n_valid: int
    n_invalid: int
    spec: SimulationSpec = None
    config_hash: str = ""
    metadata: dict = field(default_factory=dict)

    def mean(self, name, t=None):
        """Mean trajectory of ``name``, or its value at the grid time nearest ``t``."""
        values = self.means[name]
        if t is None:
            return values
        return float(values[int(np.argmin(np.abs(self.t - t)))])

    def columns(self):
        cols = {"t": self.t}
        for name in SUMMARY_FIELDS:
            cols[f"mean_{name}"] = self.means[name]
        for name in SUMMARY_FIELDS:
            for q, values in zip(QUANTILES, self.quantiles[name]):
                cols[f"q{int(round(q * 100)):02d}_{name}"] = values
        return cols

    def to_csv(self, path):
        cols = self.columns()
        names = list(cols)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(names)
            for row in zip(*(cols[n] for n in names)):
                writer.writerow([format_float(v) for v in row])


def format_float(value):
    return f"{float(value):.12g}"


def summarize(paths):
    """Means and quantile bands of c*, b*, pi*/A*, A, alpha, beta per time step."""
    valid = np.asarray(paths.valid, dtype=bool)
    n_valid = int(valid.sum())
    if n_valid == 0:
        raise AllPathsInvalidError("every path exceeded the overflow guard")
    with np.errstate(divide="ignore", invalid="ignore"):
        series = {
            "c": paths.c, "b": paths.b, "pi_over_A": paths.pi / paths.A[:, :-1], "A": paths.A[:, :-1],
            "alpha": paths.alpha, "beta": paths.beta,
        }
    means, quantiles = {}, {}
    for name, values in series.items():
        v = values[valid]
        means[name] = v.mean(axis=0)
        quantiles[name] = np.quantile(v, QUANTILES, axis=0)
    terminal = paths.A[valid, -1]
    return SimulationSummary(
        t=paths.t[:-1], means=means, quantiles=quantiles, n_valid=n_valid,
        n_invalid=int(len(valid) - n_valid), spec=paths.spec, config_hash=paths.config_hash,
        metadata={
            "liability": paths.liability,
            "terminal_mean_A": float(terminal.mean()),
            "terminal_quantiles_A": [float(q) for q in np.quantile(terminal, QUANTILES)],
        },
    )


SWEEP_PARAMETERS = {
    "kappa": "kappa", "T": "T", "x_r": "xr", "xr": "xr", "omega": "omega",
    "gamma1": "gamma1", "gamma2": "gamma2", "k": "k", "longevity-preset": None,
}


def sweep_config(config, parameter, value):
    if parameter not in SWEEP_PARAMETERS:
        raise InvalidParameterError(
            f"unknown sweep parameter {parameter!r}; expected one of {sorted(SWEEP_PARAMETERS)}"
        )
    if parameter == "longevity-preset":
        if value == "baseline":
            return config
        if value not in PRESETS:
            raise InvalidParameterError(f"preset must be 'baseline' or one of {PRESETS}")
        return special_case_preset(config, value)
    return with_params(config, **{SWEEP_PARAMETERS[parameter]: value})


def sensitivity_sweep(config, spec, parameter, values):
    """One summary per value, all driven by the same normal draws."""
    Z = standard_normals(spec.seed, range(spec.paths), spec.steps)
    return {
        value: summarize(simulate_paths(sweep_config(config, parameter, value), spec, increments=Z))
        for value in values
    }
