"""Experiment harness: dataset ingestion, seeded trial execution, and
parameter sweeps with CSV emission.

A sweep varies exactly one axis (t, k, d, n or eps) while every other
parameter stays at its configured value.  Per sweep point the blanket
probability is recalibrated; for the d, n and eps axes the quantization
level is re-chosen as well (unless pinned via auto_k=False), since a k
tuned for one operating point is far from optimal elsewhere and would
distort the dependency being measured.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .accuracy import (
    TrialResult,
    bound_mse_general,
    bound_mse_t1,
    empirical_mse,
    fit_power_law,
)
from .aggregation import analyze_arrays
from .calibration import (
    PrivacyBudget,
    ProtocolParams,
    calibrate_gamma_general,
    calibrate_gamma_t1,
    choose_k_general,
    choose_k_t1,
)
from .exceptions import InfeasibleParametersError
from .randomizer import randomize_batch

SWEEP_AXES = ("t", "k", "d", "n", "eps")
FITTED_AXES = ("d", "n", "eps")
LONG_HEADER = (
    "axis",
    "value",
    "trial",
    "seed",
    "total_sq_err",
    "normalized_mse",
    "bound_mse",
)
SUMMARY_HEADER = (
    "axis",
    "value",
    "status",
    "k",
    "gamma",
    "trials",
    "mean_normalized_mse",
    "stderr_normalized_mse",
    "bound_mse",
    "reason",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Sweep configuration; defaults follow the reference operating point."""

    d: int = 100
    k: int = 3
    n: int = 50000
    t: int = 1
    eps: float = 0.95
    delta: float = 0.5
    axis: str | None = None
    values: tuple = ()
    trials: int = 30
    seed: int = 0
    dataset: str | None = None
    drop_label: bool = False
    normalize: str = "clamp"  # clamp | minmax
    calibration: str = "auto"  # auto | general | t1 | manual
    gamma: float | None = None
    auto_k: bool | None = None
    out_dir: str | None = None

    def __post_init__(self):
        if self.axis is not None:
            if self.axis not in SWEEP_AXES:
                raise ValueError(f"axis must be one of {SWEEP_AXES}, got {self.axis!r}")
            if len(self.values) == 0:
                raise ValueError("a sweep axis needs a non-empty value list")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.normalize not in ("clamp", "minmax"):
            raise ValueError(f"normalize must be clamp or minmax, got {self.normalize!r}")
        if self.calibration not in ("auto", "general", "t1", "manual"):
            raise ValueError(f"unknown calibration mode {self.calibration!r}")
        if self.calibration == "manual" and self.gamma is None:
            raise ValueError("manual calibration requires an explicit gamma")


@dataclass(frozen=True)
class DatasetMatrix:
    """Ingested user vectors plus a record of how they were produced."""

    values: np.ndarray
    provenance: str


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    exponent: float | None = None
    r_squared: float | None = None
    amplitude: float | None = None


def ingest_csv(
    path,
    drop_label: bool = False,
    normalize: str = "clamp",
    has_header: bool = False,
) -> DatasetMatrix:
    """Read a CSV of real-valued rows into a [0, 1] matrix.

    drop_label removes the trailing column.  normalize="clamp" clips into
    [0, 1]; "minmax" rescales by the global min/max.  Unparseable cells
    are reported with their row/column position.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for i, row in enumerate(reader):
            if has_header and i == 0:
                continue
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            parsed = []
            for j, cell in enumerate(row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"{path}: unparseable cell at row {i + 1}, column {j + 1}: {cell!r}"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise ValueError(f"{path}: empty dataset")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: ragged rows (widths {sorted(widths)})")
    matrix = np.asarray(rows, dtype=float)
    steps = [f"read {matrix.shape[0]}x{matrix.shape[1]} from {path}"]
    if drop_label:
        if matrix.shape[1] < 2:
            raise ValueError(f"{path}: cannot drop label from single-column data")
        matrix = matrix[:, :-1]
        steps.append("dropped trailing label column")
    if normalize == "minmax":
        lo, hi = matrix.min(), matrix.max()
        if hi == lo:
            raise ValueError(f"{path}: constant data, min-max normalization undefined")
        matrix = (matrix - lo) / (hi - lo)
        steps.append(f"min-max normalized from [{lo:g}, {hi:g}]")
    elif normalize == "clamp":
        clipped = int(np.sum((matrix < 0) | (matrix > 1)))
        matrix = np.clip(matrix, 0.0, 1.0)
        if clipped:
            steps.append(f"clamped {clipped} entries into [0, 1]")
    else:
        raise ValueError(f"normalize must be clamp or minmax, got {normalize!r}")
    return DatasetMatrix(values=matrix, provenance="; ".join(steps))


def fit_matrix(matrix, n: int, d: int) -> np.ndarray:
    """Adapt a raw matrix to (n, d): rows are truncated or recycled
    cyclically, columns truncated or zero-padded."""
    matrix = np.asarray(matrix, dtype=float)
    rows, cols = matrix.shape
    out = matrix[np.arange(n) % rows]
    if cols >= d:
        return np.ascontiguousarray(out[:, :d])
    padded = np.zeros((n, d))
    padded[:, :cols] = out
    return padded


def trial_seed(master_seed: int, point_index: int, trial_index: int) -> int:
    """Deterministic 64-bit seed for one (sweep point, trial) cell."""
    ss = np.random.SeedSequence([int(master_seed), int(point_index), int(trial_index)])
    return int(ss.generate_state(1, np.uint64)[0])


def run_trial(matrix, params: ProtocolParams, rng: np.random.Generator) -> TrialResult:
    """One full protocol round: randomize every user, shuffle, analyze,
    and score against the sampled-coordinate true sums."""
    coords, values = randomize_batch(matrix, params, rng)
    sampled_true = np.take_along_axis(np.asarray(matrix, dtype=float), coords, axis=1)
    truth = np.bincount(
        coords.ravel(), weights=sampled_true.ravel(), minlength=params.d
    )
    perm = rng.permutation(params.n)  # the trusted shuffler
    est = analyze_arrays(coords[perm], values[perm], params)
    return empirical_mse(est, truth, params)


def _point_config(config: ExperimentConfig, value):
    if config.axis is None or value is None:
        return config
    if config.axis == "eps":
        return replace(config, eps=float(value))
    return replace(config, **{config.axis: int(value)})


def resolve_point(config: ExperimentConfig, value=None):
    """Calibrate one sweep point.  Returns (params, budget, mode)."""
    pc = _point_config(config, value)
    budget = PrivacyBudget(pc.eps, pc.delta)
    mode = pc.calibration
    if mode == "auto":
        mode = "t1" if pc.t == 1 else "general"
    if mode == "t1" and pc.t != 1:
        raise ValueError("t1 calibration requires t = 1")
    auto_k = config.auto_k
    if auto_k is None:
        auto_k = config.axis in FITTED_AXES and mode != "manual"
    k = pc.k
    if auto_k:
        if mode == "t1":
            k = choose_k_t1(budget, pc.d, pc.n)
        else:
            k = choose_k_general(budget, pc.d, pc.n, pc.t)
    if mode == "manual":
        gamma = pc.gamma
    elif mode == "t1":
        gamma = calibrate_gamma_t1(budget, pc.d, k, pc.n)
    else:
        gamma = calibrate_gamma_general(budget, pc.d, k, pc.n, pc.t)
    if gamma >= 1.0:
        raise InfeasibleParametersError(
            f"gamma = {gamma:.6g} leaves no truthful signal"
        )
    params = ProtocolParams(d=pc.d, k=k, n=pc.n, t=pc.t, gamma=gamma)
    return params, budget, mode


def _point_bound(params: ProtocolParams, budget: PrivacyBudget) -> float:
    report = (
        bound_mse_t1(params, budget)
        if params.t == 1
        else bound_mse_general(params, budget)
    )
    return report.mse_bound


def run_sweep(config: ExperimentConfig, matrix=None) -> SweepResult:
    """Execute all sweep points.  `matrix` overrides config.dataset with an
    already-normalized raw matrix (rows x features, entries in [0, 1])."""
    if matrix is None:
        if config.dataset is None:
            raise ValueError("no dataset: pass a matrix or set config.dataset")
        matrix = ingest_csv(
            config.dataset, drop_label=config.drop_label, normalize=config.normalize
        ).values
    if config.delta >= 1.0 / config.n:
        warnings.warn(
            f"delta = {config.delta:g} is large relative to 1/n = {1.0 / config.n:g}",
            stacklevel=2,
        )
    points = list(config.values) if config.axis is not None else [None]
    result = SweepResult(config=config)
    fit_x, fit_y = [], []
    for pi, value in enumerate(points):
        try:
            params, budget, _mode = resolve_point(config, value)
        except InfeasibleParametersError as exc:
            result.skipped.append((value, str(exc)))
            result.summary.append(
                {
                    "axis": config.axis or "none",
                    "value": value if value is not None else "",
                    "status": "skipped",
                    "k": "",
                    "gamma": "",
                    "trials": 0,
                    "mean_normalized_mse": "",
                    "stderr_normalized_mse": "",
                    "bound_mse": "",
                    "reason": str(exc),
                }
            )
            continue
        bound = _point_bound(params, budget)
        data = fit_matrix(matrix, params.n, params.d)
        mses = []
        for ti in range(config.trials):
            seed = trial_seed(config.seed, pi, ti)
            tr = run_trial(data, params, np.random.default_rng(seed))
            mses.append(tr.normalized_mse)
            result.rows.append(
                {
                    "axis": config.axis or "none",
                    "value": value if value is not None else "",
                    "trial": ti,
                    "seed": seed,
                    "total_sq_err": tr.total_squared_error,
                    "normalized_mse": tr.normalized_mse,
                    "bound_mse": bound,
                }
            )
        mses = np.asarray(mses)
        mean = float(mses.mean())
        stderr = float(mses.std(ddof=1) / math.sqrt(len(mses))) if len(mses) > 1 else 0.0
        result.summary.append(
            {
                "axis": config.axis or "none",
                "value": value if value is not None else "",
                "status": "ok",
                "k": params.k,
                "gamma": params.gamma,
                "trials": config.trials,
                "mean_normalized_mse": mean,
                "stderr_normalized_mse": stderr,
                "bound_mse": bound,
                "reason": "",
            }
        )
        if config.axis in FITTED_AXES:
            fit_x.append(float(value))
            fit_y.append(mean)
    if not any(s["status"] == "ok" for s in result.summary):
        raise InfeasibleParametersError("no feasible sweep points")
    if len(fit_x) >= 3:
        slope, r2 = fit_power_law(fit_x, fit_y)
        result.exponent, result.r_squared = slope, r2
        logs = np.log(fit_y) - slope * np.log(fit_x)
        result.amplitude = float(np.exp(logs.mean()))
    return result


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(row[h]) for h in header])


def emit_outputs(result: SweepResult, out_dir, formats=("long", "summary", "plot")):
    """Write the results tables under out_dir.  Returns the file paths.

    long.csv holds one row per (point, trial) with the seed needed to
    replay it; summary.csv one row per point (skipped points included);
    plot.csv the per-point mean/stderr plus the fitted power-law curve
    when an exponent was fitted.
    """
    import os

    if not result.rows:
        raise ValueError("nothing to emit: empty results")
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    if "long" in formats:
        paths["long"] = os.path.join(out_dir, "long.csv")
        _write_csv(paths["long"], LONG_HEADER, result.rows)
    if "summary" in formats:
        paths["summary"] = os.path.join(out_dir, "summary.csv")
        _write_csv(paths["summary"], SUMMARY_HEADER, result.summary)
    if "plot" in formats and result.exponent is not None:
        paths["plot"] = os.path.join(out_dir, "plot.csv")
        header = ("value", "mean_normalized_mse", "stderr_normalized_mse", "fitted")
        rows = []
        for s in result.summary:
            if s["status"] != "ok":
                continue
            x = float(s["value"])
            rows.append(
                {
                    "value": s["value"],
                    "mean_normalized_mse": s["mean_normalized_mse"],
                    "stderr_normalized_mse": s["stderr_normalized_mse"],
                    "fitted": result.amplitude * x**result.exponent,
                }
            )
        _write_csv(paths["plot"], header, rows)
    return paths


def read_long_csv(path):
    """Parse a long-form results CSV back into row dicts (round-trip aid)."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != LONG_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            out.append(
                {
                    "axis": row["axis"],
                    "value": row["value"],
                    "trial": int(row["trial"]),
                    "seed": int(row["seed"]),
                    "total_sq_err": float(row["total_sq_err"]),
                    "normalized_mse": float(row["normalized_mse"]),
                    "bound_mse": float(row["bound_mse"]),
                }
            )
    return out
