"""Experiment runner: parses configs, dispatches sweeps, writes CSV/JSON.

One subcommand per experiment family; every sweep point becomes an
independently seeded task, so results are byte-identical for a given
(config, master_seed) regardless of the worker-pool size.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .channels import PauliNoise, amplitude_damping
from .encoding import LayeredNoisy
from .ensembles import AlternatingLayered, HaarGlobal, Ising, NoiseInterleaved, SeedPath
from .linalg import PauliString
from .metrics import (
    EnsembleSpec,
    erasure_decay_reference,
    encoding_deviation_trajectory,
    delay_task_experiment,
    hypothesis_power,
    mean_with_se,
    memory_indicator_hidden_curve,
    memory_indicator_input_curve,
    MetricsRow,
    nonunital_erasure_trajectory,
    random_full_rank_pair,
    unital_erasure_trajectory,
    variance_curve,
)
from .unroll import compare_direct_vs_unrolled

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

CSV_COLUMNS = (
    "experiment",
    "n_a",
    "n_h",
    "t",
    "param",
    "estimate",
    "std_error",
    "n_samples",
    "analytic_ref",
    "seed",
)

EXPERIMENTS = (
    "variance",
    "memory-input",
    "memory-hidden",
    "erasure-unital",
    "erasure-nonunital",
    "encoding-noise",
    "layered",
    "ising",
    "unroll-check",
    "train",
    "hypothesis",
)


class ConfigError(Exception):
    pass


class NumericalError(Exception):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "variance"
    n_a: Tuple[int, ...] = (1,)
    n_h: Tuple[int, ...] = (2,)
    t_max: int = 10
    n_reservoirs: int = 200
    n_inner: int = 32
    observable: Optional[str] = None
    variant: str = "haar"
    layers: Tuple[int, ...] = (2,)
    coupling: float = -1.0
    field_x: float = 0.7
    field_z: float = 1.5
    dt_list: Tuple[float, ...] = (0.25, 0.6, 0.9)
    q_list: Tuple[float, ...] = (0.8, 0.9, 0.95)
    gamma: float = 0.1
    n_pairs: int = 50
    n_instances: int = 100
    enc_layers: Tuple[int, ...] = (1, 2, 4)
    enc_q: float = 0.9
    shots: Optional[int] = None
    trials: int = 100000
    unroll_trials: int = 20
    hypotheses: Tuple[Tuple[int, float], ...] = ((1, 0.5), (100, 0.001), (1000, 0.001))
    n_train_series: int = 8
    n_test_series: int = 4
    series_length: int = 40
    washout: int = 5
    delay: int = 1
    ridge: Optional[float] = None
    master_seed: int = 2024
    out: str = "results.csv"
    format: str = "csv"
    threads: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not self.n_a or not self.n_h:
            raise ConfigError("qubit ranges must be non-empty")
        if max(self.n_a) + max(self.n_h) > 12:
            raise ConfigError("n_a + n_h exceeds the 12-qubit register cap")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown output format {self.format!r}")
        if self.t_max < 1:
            raise ConfigError("t_max must be at least 1")


_TUPLE_KEYS = {"n_a", "n_h", "layers", "dt_list", "q_list", "enc_layers", "hypotheses"}


def load_config(path: Optional[str], overrides: dict) -> ExperimentConfig:
    """Flat JSON file plus CLI overrides; unknown keys are config errors."""
    values: dict = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(values, dict):
            raise ConfigError("config file must hold a JSON object with flat keys")
    values.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in _TUPLE_KEYS & set(values):
        raw = values[key]
        if not isinstance(raw, (list, tuple)):
            raw = [raw]
        if key == "hypotheses":
            values[key] = tuple((int(n), float(e)) for n, e in raw)
        elif key in ("dt_list", "q_list"):
            values[key] = tuple(float(v) for v in raw)
        else:
            values[key] = tuple(int(v) for v in raw)
    try:
        return ExperimentConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _default_observable(cfg: ExperimentConfig, n: int) -> PauliString:
    if cfg.observable is None:
        return PauliString("Z" + "I" * (n - 1))
    letters = cfg.observable.upper()
    if len(letters) == 1:
        letters = letters + "I" * (n - 1)
    if len(letters) != n:
        raise ConfigError(f"observable {cfg.observable!r} does not cover {n} qubits")
    return PauliString(letters)


def _hidden_observable(n_a: int, n_h: int) -> PauliString:
    return PauliString("I" * n_a + "Z" + "I" * (n_h - 1))


def _seed_path(cfg: ExperimentConfig, *parts) -> SeedPath:
    return SeedPath(cfg.master_seed).derive(cfg.experiment, *parts)


# ---------------------------------------------------------------------------
# Task bodies (module-level so the process pool can pickle them)
# ---------------------------------------------------------------------------


def _rows_to_dicts(cfg: ExperimentConfig, rows: Sequence[MetricsRow]) -> List[dict]:
    out = []
    for r in rows:
        out.append(
            {
                "experiment": cfg.experiment,
                "n_a": r.n_a,
                "n_h": r.n_h,
                "t": r.t,
                "param": r.param,
                "estimate": r.estimate,
                "std_error": r.std_error,
                "n_samples": r.n_samples,
                "analytic_ref": r.analytic_ref,
                "seed": cfg.master_seed,
            }
        )
    return out


def _reservoir_for(cfg: ExperimentConfig, n_a: int, n_h: int, layers=None, dt=None):
    if cfg.variant == "haar":
        return HaarGlobal(n_a, n_h)
    if cfg.variant == "layered":
        return AlternatingLayered(n_a, n_h, layers if layers is not None else cfg.layers[0])
    if cfg.variant == "ising":
        return Ising(n_a, n_h, cfg.coupling, cfg.field_x, cfg.field_z,
                     dt if dt is not None else cfg.dt_list[0])
    raise ConfigError(f"unknown reservoir variant {cfg.variant!r}")


def _task_variance(cfg: ExperimentConfig, n_a: int, n_h: int, layers=None, dt=None) -> List[dict]:
    reservoir = _reservoir_for(cfg, n_a, n_h, layers=layers, dt=dt)
    spec = EnsembleSpec(reservoir, n_reservoirs=cfg.n_reservoirs, n_inner=cfg.n_inner)
    obs = _default_observable(cfg, n_a + n_h)
    seed = _seed_path(cfg, n_a, n_h, layers, dt)
    rows = variance_curve(spec, list(range(1, cfg.t_max + 1)), obs, seed)
    param = float(layers) if layers is not None else (float(dt) if dt is not None else None)
    if param is not None:
        rows = [replace(r, param=param) for r in rows]
    return _rows_to_dicts(cfg, rows)


def _task_memory(cfg: ExperimentConfig, n_a: int, n_h: int, vary: str, dt=None) -> List[dict]:
    reservoir = _reservoir_for(cfg, n_a, n_h, dt=dt)
    spec = EnsembleSpec(reservoir, n_reservoirs=cfg.n_reservoirs, n_inner=cfg.n_inner)
    obs = _hidden_observable(n_a, n_h)
    seed = _seed_path(cfg, n_a, n_h, dt)
    t_list = list(range(1, cfg.t_max + 1))
    if vary == "input":
        rows = memory_indicator_input_curve(spec, 1, t_list, obs, seed, param=dt)
    else:
        rows = memory_indicator_hidden_curve(spec, t_list, obs, seed, param=dt)
    return _rows_to_dicts(cfg, rows)


def _task_erasure_unital(cfg: ExperimentConfig, q: float) -> List[dict]:
    n_a, n_h = cfg.n_a[0], cfg.n_h[0]
    noise = PauliNoise(q, q, q)
    obs = _default_observable(cfg, n_a + n_h)
    deltas = np.empty((cfg.n_pairs, cfg.t_max))
    for i in range(cfg.n_pairs):
        seed = _seed_path(cfg, q, i)
        rng = seed.derive("pair").rng()
        rho, sigma = random_full_rank_pair(n_a, n_h, rng)
        deltas[i], _ = unital_erasure_trajectory(
            HaarGlobal(n_a, n_h), noise, cfg.t_max, rho, sigma, obs, seed
        )
    rows = []
    for t in range(1, cfg.t_max + 1):
        est, se = mean_with_se(deltas[:, t - 1])
        rows.append(
            MetricsRow(
                n_a=n_a, n_h=n_h, t=t, param=q, estimate=est, std_error=se,
                n_samples=cfg.n_pairs, analytic_ref=erasure_decay_reference(t, q),
            )
        )
    return _rows_to_dicts(cfg, rows)


def _task_erasure_nonunital(cfg: ExperimentConfig) -> List[dict]:
    n_a, n_h = cfg.n_a[0], cfg.n_h[0]
    n = n_a + n_h
    layers = cfg.layers[0] if cfg.layers else 2 * n
    spec = NoiseInterleaved(AlternatingLayered(n_a, n_h, layers), amplitude_damping(cfg.gamma))
    distances = np.empty((cfg.n_pairs, cfg.t_max))
    for i in range(cfg.n_pairs):
        seed = _seed_path(cfg, cfg.gamma, i)
        rng = seed.derive("pair").rng()
        rho, sigma = random_full_rank_pair(n_a, n_h, rng)
        distances[i] = nonunital_erasure_trajectory(cfg.t_max, spec, rho, sigma, seed)
    rows = []
    for t in range(1, cfg.t_max + 1):
        est, se = mean_with_se(distances[:, t - 1])
        rows.append(
            MetricsRow(
                n_a=n_a, n_h=n_h, t=t, param=cfg.gamma, estimate=est,
                std_error=se, n_samples=cfg.n_pairs, analytic_ref=None,
            )
        )
    return _rows_to_dicts(cfg, rows)


def _task_encoding_noise(cfg: ExperimentConfig, enc_layers: int) -> List[dict]:
    n_a, n_h = cfg.n_a[0], cfg.n_h[0]
    encoding = LayeredNoisy(n_a, enc_layers, PauliNoise(cfg.enc_q, cfg.enc_q, cfg.enc_q))
    obs = _default_observable(cfg, n_a + n_h)
    devs = np.empty((cfg.n_instances, cfg.t_max))
    bounds = None
    for i in range(cfg.n_instances):
        seed = _seed_path(cfg, enc_layers, i)
        devs[i], bounds = encoding_deviation_trajectory(
            HaarGlobal(n_a, n_h), encoding, cfg.t_max, obs, seed
        )
    rows = []
    for t in range(1, cfg.t_max + 1):
        est, se = mean_with_se(devs[:, t - 1])
        rows.append(
            MetricsRow(
                n_a=n_a, n_h=n_h, t=t, param=float(enc_layers), estimate=est,
                std_error=se, n_samples=cfg.n_instances,
                analytic_ref=float(bounds[t - 1]),
            )
        )
    return _rows_to_dicts(cfg, rows)


def _task_unroll(cfg: ExperimentConfig) -> List[dict]:
    seed = _seed_path(cfg)
    worst = compare_direct_vs_unrolled(cfg.unroll_trials, seed, steps=(2, 3))
    row = MetricsRow(
        n_a=1, n_h=1, t=3, param=None, estimate=worst, std_error=0.0,
        n_samples=cfg.unroll_trials, analytic_ref=0.0,
    )
    return _rows_to_dicts(cfg, [row])


def _task_train(cfg: ExperimentConfig) -> List[dict]:
    n_a, n_h = cfg.n_a[0], cfg.n_h[0]
    n = n_a + n_h
    obs = ["I" * n]
    for q in range(min(n, 4)):
        for p in "ZXY":
            obs.append("I" * q + p + "I" * (n - q - 1))
    result = delay_task_experiment(
        HaarGlobal(n_a, n_h),
        tuple(PauliString(s) for s in obs),
        _seed_path(cfg),
        shots=cfg.shots,
        delay=cfg.delay,
        n_train_series=cfg.n_train_series,
        n_test_series=cfg.n_test_series,
        series_length=cfg.series_length,
        washout=cfg.washout,
        ridge=cfg.ridge,
    )
    row = MetricsRow(
        n_a=n_a, n_h=n_h, t=cfg.series_length,
        param=float(cfg.shots) if cfg.shots is not None else None,
        estimate=result.test_mse, std_error=0.0,
        n_samples=result.n_test_rows, analytic_ref=result.baseline_mse,
    )
    return _rows_to_dicts(cfg, [row])


def _task_hypothesis(cfg: ExperimentConfig, n_per_batch: int, eps: float) -> List[dict]:
    empirical, bound = hypothesis_power(
        0.5, eps, n_per_batch, cfg.trials, _seed_path(cfg, n_per_batch, eps)
    )
    row = MetricsRow(
        n_a=0, n_h=0, t=n_per_batch, param=eps, estimate=empirical,
        std_error=math.sqrt(0.25 / cfg.trials), n_samples=cfg.trials,
        analytic_ref=bound,
    )
    return _rows_to_dicts(cfg, [row])


def _run_task(task) -> List[dict]:
    fn, cfg, args = task
    return fn(cfg, *args)


def build_tasks(cfg: ExperimentConfig) -> List[tuple]:
    exp = cfg.experiment
    if exp == "variance":
        return [(_task_variance, cfg, (n_a, n_h)) for n_a in cfg.n_a for n_h in cfg.n_h]
    if exp == "layered":
        lay_cfg = replace(cfg, variant="layered")
        return [
            (_task_variance, lay_cfg, (n_a, n_h, L))
            for L in cfg.layers
            for n_a in cfg.n_a
            for n_h in cfg.n_h
        ]
    if exp == "memory-input":
        return [(_task_memory, cfg, (n_a, n_h, "input")) for n_a in cfg.n_a for n_h in cfg.n_h]
    if exp == "memory-hidden":
        return [(_task_memory, cfg, (n_a, n_h, "hidden")) for n_a in cfg.n_a for n_h in cfg.n_h]
    if exp == "ising":
        ising_cfg = replace(cfg, variant="ising")
        return [
            (_task_memory, ising_cfg, (n_a, n_h, "input", dt))
            for dt in cfg.dt_list
            for n_a in cfg.n_a
            for n_h in cfg.n_h
        ]
    if exp == "erasure-unital":
        return [(_task_erasure_unital, cfg, (q,)) for q in cfg.q_list]
    if exp == "erasure-nonunital":
        return [(_task_erasure_nonunital, cfg, ())]
    if exp == "encoding-noise":
        return [(_task_encoding_noise, cfg, (L,)) for L in cfg.enc_layers]
    if exp == "unroll-check":
        return [(_task_unroll, cfg, ())]
    if exp == "train":
        return [(_task_train, cfg, ())]
    if exp == "hypothesis":
        return [(_task_hypothesis, cfg, (n, eps)) for n, eps in cfg.hypotheses]
    raise ConfigError(f"unknown experiment {exp!r}")


# ---------------------------------------------------------------------------
# Output writing
# ---------------------------------------------------------------------------


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _atomic_write(path: str, payload: str):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_rows(path: str, rows: List[dict], fmt: str):
    if fmt == "csv":
        lines = [",".join(CSV_COLUMNS)]
        for row in rows:
            lines.append(",".join(_format_value(row[c]) for c in CSV_COLUMNS))
        _atomic_write(path, "\n".join(lines) + "\n")
    else:
        _atomic_write(path, json.dumps(rows, indent=2) + "\n")


def _validate_rows(rows: List[dict]):
    for row in rows:
        est = row["estimate"]
        if not math.isfinite(est):
            raise NumericalError(f"non-finite estimate in row {row}")
        if row["std_error"] < 0 or not math.isfinite(row["std_error"]):
            raise NumericalError(f"invalid std_error in row {row}")


def run_experiment(cfg: ExperimentConfig) -> List[dict]:
    tasks = build_tasks(cfg)
    print(f"qrp-lab: {cfg.experiment}: {len(tasks)} task(s), seed {cfg.master_seed}", file=sys.stderr)
    rows: List[dict] = []
    if cfg.threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            for k, chunk in enumerate(pool.map(_run_task, tasks), start=1):
                rows.extend(chunk)
                print(f"qrp-lab: task {k}/{len(tasks)} done", file=sys.stderr)
    else:
        for k, task in enumerate(tasks, start=1):
            rows.extend(_run_task(task))
            print(f"qrp-lab: task {k}/{len(tasks)} done", file=sys.stderr)
    _validate_rows(rows)
    return rows


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qrp-lab",
        description="Reservoir-processing experiment harness (CSV/JSON sweep tables)",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat JSON config file")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--out", help="output path (overrides config)")
        p.add_argument("--format", choices=("csv", "json"), help="output format")
        p.add_argument("--threads", type=int, help="worker count (QRP_LAB_THREADS fallback)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {
        "experiment": args.experiment,
        "master_seed": args.seed,
        "out": args.out,
        "format": args.format,
        "threads": args.threads,
    }
    if overrides["threads"] is None and os.environ.get("QRP_LAB_THREADS"):
        try:
            overrides["threads"] = int(os.environ["QRP_LAB_THREADS"])
        except ValueError:
            print("qrp-lab: invalid QRP_LAB_THREADS", file=sys.stderr)
            return EXIT_CONFIG
    try:
        cfg = load_config(args.config, overrides)
        rows = run_experiment(cfg)
        write_rows(cfg.out, rows, cfg.format)
    except ConfigError as exc:
        print(f"qrp-lab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"qrp-lab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"qrp-lab: wrote {len(rows)} row(s) to {cfg.out}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
