"""Experiment harness: config-driven sweeps with reproducible fan-out.

Subcommands ``simulate``, ``analytic``, ``excursion``, ``phase``,
``conserve``, ``diagnostic`` each accept ``--config <json>`` plus field
overrides (CLI > file > defaults).  Every run directory receives a
manifest echoing the exact configuration, the package version, and the
master seed.  Replications are keyed by (cell, seed) index, so results are
byte-identical regardless of worker count.

Exit codes: 0 success, 1 runtime failure, 2 config parse error,
3 validation error; failures print a one-line JSON object to stderr.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import dataclasses
import json
import logging
import math
import os
import subprocess
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

from .analytic import online_scaling_table
from .errors import ConfigurationError
from .excursion import (
    ExcursionConfig,
    diversion_idling_diagnostic,
    estimate_event_probs,
    reference_queue,
)
from .sim import run_simulation
from .stream import ModelParams, generate_stream, replication_seed

logger = logging.getLogger("qadmit")

EXPERIMENT_KINDS = ("simulate", "analytic", "excursion", "phase", "conserve", "diagnostic")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3


@dataclass
class RunConfig:
    """One experiment's full description; JSON keys mirror the field names."""

    kind: str
    p: float
    lambdas: tuple[float, ...]
    window_rule: str = "zero"
    policy: str = "threshold:auto"
    horizon: float = 100_000.0
    seeds: int = 8
    master_seed: int = 0
    out_dir: str = "qadmit-out"
    q0: int = 0
    burn_in: float = 0.1
    workers: int | None = None
    n_samples: int = 1000
    k: float = 1.0
    epsilon: float = 0.05
    zeta: float = 1.0
    phi: float = 1.0
    q_ref: float | None = None
    c_values: tuple[float, ...] = (0.0, 1.0, 2.0, 4.0, 8.0)
    per_sample_csv: bool = False
    trajectory_csv: bool = False


_REQUIRED_FIELDS = ("kind", "p", "lambdas")


def config_from_mapping(data: dict) -> RunConfig:
    """Build and validate a RunConfig from a parsed JSON mapping."""
    for name in _REQUIRED_FIELDS:
        if name not in data:
            raise ConfigurationError(f"missing required field `{name}`")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
    if data.get("kind") == "conserve" and "policy" not in data:
        data = data | {"policy": "auto"}  # pick by window: online at W=0, lookahead otherwise
    cfg = RunConfig(**{k: _coerce(k, v) for k, v in data.items()})
    validate_config(cfg)
    return cfg


def _coerce(key: str, value):
    if key in ("lambdas", "c_values"):
        if not isinstance(value, (list, tuple)):
            raise ConfigurationError(f"field `{key}` must be a list of numbers")
        return tuple(float(v) for v in value)
    return value


def validate_config(cfg: RunConfig) -> None:
    if cfg.kind not in EXPERIMENT_KINDS:
        raise ConfigurationError(f"unknown experiment kind `{cfg.kind}`")
    if not (0.0 < cfg.p < 1.0):
        raise ConfigurationError(f"field `p` must be in (0,1), got {cfg.p}")
    if not cfg.lambdas:
        raise ConfigurationError("field `lambdas` must be a non-empty list")
    feasible = [lam for lam in cfg.lambdas if 1.0 - cfg.p < lam < 1.0]
    if cfg.kind in ("phase", "conserve"):
        if not feasible:
            raise ConfigurationError("field `lambdas` has no overload-feasible entries")
    elif len(feasible) != len(cfg.lambdas):
        raise ConfigurationError(
            f"field `lambdas` must lie in ({1.0 - cfg.p}, 1) for kind `{cfg.kind}`"
        )
    _parse_window_rule(cfg.window_rule)
    if cfg.seeds < 1:
        raise ConfigurationError(f"field `seeds` must be >= 1, got {cfg.seeds}")
    if cfg.horizon <= 0 or not math.isfinite(cfg.horizon):
        raise ConfigurationError(f"field `horizon` must be positive, got {cfg.horizon}")
    if not (0.0 <= cfg.burn_in < 1.0):
        raise ConfigurationError(f"field `burn_in` must be in [0,1), got {cfg.burn_in}")
    if cfg.q0 < 0:
        raise ConfigurationError(f"field `q0` must be >= 0, got {cfg.q0}")
    if cfg.workers is not None and cfg.workers < 1:
        raise ConfigurationError(f"field `workers` must be >= 1, got {cfg.workers}")
    if any(c < 0 for c in cfg.c_values):
        raise ConfigurationError("field `c_values` must be nonnegative")


def _parse_window_rule(rule: str):
    """Rules: `zero`, `constant:<c>`, `log:<c>` (W = c * ln(1/(1-lambda)))."""
    if rule == "zero":
        return lambda lam: 0.0
    for prefix in ("constant:", "log:"):
        if rule.startswith(prefix):
            try:
                c = float(rule.removeprefix(prefix))
            except ValueError:
                raise ConfigurationError(f"bad window rule `{rule}`") from None
            if c < 0:
                raise ConfigurationError(f"window rule coefficient must be >= 0: `{rule}`")
            if prefix == "constant:":
                return lambda lam: c
            return lambda lam: c * math.log(1.0 / (1.0 - lam))
    raise ConfigurationError(f"bad window rule `{rule}` (use zero | constant:c | log:c)")


def _fmt(value) -> str:
    """Full round-trip numeric formatting for CSV cells."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(row.get(col)) for col in header])


def _version_string() -> str:
    try:
        version = metadata.version("qadmit")
    except metadata.PackageNotFoundError:
        version = "0+unknown"
    describe = ""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0:
            describe = out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return f"qadmit {version}" + (f" ({describe})" if describe else "")


def _write_manifest(cfg: RunConfig, out_dir: Path) -> None:
    manifest = {
        "config": dataclasses.asdict(cfg),
        "version": _version_string(),
        "master_seed": cfg.master_seed,
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cell_seed(master_seed: int, cell_idx: int, rep_idx: int):
    return replication_seed(master_seed, cell_idx, rep_idx)


def _simulate_cell(task: dict) -> dict:
    """One (cell, seed) simulation; module-level so worker pools can pickle it."""
    params = ModelParams(task["lambda"], task["p"], task["window"])
    stream = generate_stream(
        params,
        task["horizon"] + task["window"],
        _cell_seed(task["master_seed"], task["cell_idx"], task["rep_idx"]),
    )
    traj, trace, m = run_simulation(
        stream, task["policy"], q0=task["q0"], t_end=task["horizon"], burn_in=task["burn_in"]
    )
    return {
        "cell_idx": task["cell_idx"],
        "rep_idx": task["rep_idx"],
        "n_events": m.n_events,
        "mean_queue_event": m.mean_queue_event,
        "mean_queue_time": m.mean_queue_time,
        "diversion_rate": m.diversion_rate,
        "wasted_rate": m.wasted_rate,
        "wasted_count": m.wasted_count,
    }


def _run_tasks(tasks: list[dict], workers: int | None) -> list[dict]:
    if workers is None:
        workers = os.cpu_count() or 1
    workers = min(workers, max(len(tasks), 1))
    if workers <= 1 or len(tasks) <= 1:
        results = [_simulate_cell(t) for t in tasks]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_simulate_cell, tasks, chunksize=1))
    results.sort(key=lambda r: (r["cell_idx"], r["rep_idx"]))
    return results


def _aggregate(values: list[float]) -> tuple[float, float | None]:
    mean = sum(values) / len(values)
    if len(values) < 2:
        return mean, None
    var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, 1.96 * math.sqrt(var / len(values))


PHASE_COLUMNS = [
    "lambda", "p", "window_rule", "window", "policy", "seed", "n_events",
    "mean_queue_event", "mean_queue_time", "diversion_rate", "wasted_rate",
    "ci_halfwidth", "aggregate_flag",
]


def phase_sweep(cfg: RunConfig) -> list[dict]:
    """Per-(lambda, seed) simulation rows plus one aggregate row per cell."""
    rule = _parse_window_rule(cfg.window_rule)
    cells = []
    for lam in cfg.lambdas:
        if not (1.0 - cfg.p < lam < 1.0):
            logger.warning("skipping infeasible cell lambda=%s (needs > %s)", lam, 1.0 - cfg.p)
            continue
        cells.append((lam, rule(lam)))
    tasks = [
        {
            "lambda": lam, "p": cfg.p, "window": window, "policy": cfg.policy,
            "horizon": cfg.horizon, "q0": cfg.q0, "burn_in": cfg.burn_in,
            "master_seed": cfg.master_seed, "cell_idx": ci, "rep_idx": ri,
        }
        for ci, (lam, window) in enumerate(cells)
        for ri in range(cfg.seeds)
    ]
    results = _run_tasks(tasks, cfg.workers)

    rows: list[dict] = []
    for ci, (lam, window) in enumerate(cells):
        cell_rows = [r for r in results if r["cell_idx"] == ci]
        base = {
            "lambda": lam, "p": cfg.p, "window_rule": cfg.window_rule,
            "window": window, "policy": cfg.policy,
        }
        for r in cell_rows:
            rows.append(base | {
                "seed": r["rep_idx"], "n_events": r["n_events"],
                "mean_queue_event": r["mean_queue_event"],
                "mean_queue_time": r["mean_queue_time"],
                "diversion_rate": r["diversion_rate"],
                "wasted_rate": r["wasted_rate"],
                "ci_halfwidth": None, "aggregate_flag": 0,
            })
        mean_q, ci_hw = _aggregate([r["mean_queue_event"] for r in cell_rows])
        rows.append(base | {
            "seed": None,
            "n_events": sum(r["n_events"] for r in cell_rows) / len(cell_rows),
            "mean_queue_event": mean_q,
            "mean_queue_time": sum(r["mean_queue_time"] for r in cell_rows) / len(cell_rows),
            "diversion_rate": sum(r["diversion_rate"] for r in cell_rows) / len(cell_rows),
            "wasted_rate": sum(r["wasted_rate"] for r in cell_rows) / len(cell_rows),
            "ci_halfwidth": ci_hw, "aggregate_flag": 1,
        })
    return rows


CONSERVE_COLUMNS = [
    "lambda", "p", "c", "window", "policy", "seed", "n_events",
    "mean_queue_event", "q_plus_w", "ratio", "ci_halfwidth", "aggregate_flag",
]


def conservation_sweep(cfg: RunConfig) -> list[dict]:
    """Mean queue plus window against the log term, over a (lambda, c) grid.

    With the policy set to ``auto``, zero-window cells run the online
    threshold policy and positive windows run the lookahead heuristic.
    """
    cells = []
    for lam in cfg.lambdas:
        if not (1.0 - cfg.p < lam < 1.0):
            logger.warning("skipping infeasible cell lambda=%s (needs > %s)", lam, 1.0 - cfg.p)
            continue
        for c in cfg.c_values:
            window = c * math.log(1.0 / (1.0 - lam))
            if cfg.policy == "auto":
                policy = "threshold:auto" if window == 0.0 else "windowed-drain"
            else:
                policy = cfg.policy
            cells.append((lam, c, window, policy))
    tasks = [
        {
            "lambda": lam, "p": cfg.p, "window": window, "policy": policy,
            "horizon": cfg.horizon, "q0": cfg.q0, "burn_in": cfg.burn_in,
            "master_seed": cfg.master_seed, "cell_idx": ci, "rep_idx": ri,
        }
        for ci, (lam, c, window, policy) in enumerate(cells)
        for ri in range(cfg.seeds)
    ]
    results = _run_tasks(tasks, cfg.workers)

    rows: list[dict] = []
    min_ratio_by_lambda: dict[float, float] = {}
    for ci, (lam, c, window, policy) in enumerate(cells):
        cell_rows = [r for r in results if r["cell_idx"] == ci]
        log_term = math.log(1.0 / (1.0 - lam))
        base = {"lambda": lam, "p": cfg.p, "c": c, "window": window, "policy": policy}
        for r in cell_rows:
            qw = r["mean_queue_event"] + window
            rows.append(base | {
                "seed": r["rep_idx"], "n_events": r["n_events"],
                "mean_queue_event": r["mean_queue_event"],
                "q_plus_w": qw, "ratio": qw / log_term,
                "ci_halfwidth": None, "aggregate_flag": 0,
            })
        mean_q, ci_hw = _aggregate([r["mean_queue_event"] for r in cell_rows])
        qw = mean_q + window
        ratio = qw / log_term
        rows.append(base | {
            "seed": None,
            "n_events": sum(r["n_events"] for r in cell_rows) / len(cell_rows),
            "mean_queue_event": mean_q, "q_plus_w": qw, "ratio": ratio,
            "ci_halfwidth": ci_hw, "aggregate_flag": 1,
        })
        cur = min_ratio_by_lambda.get(lam)
        min_ratio_by_lambda[lam] = ratio if cur is None else min(cur, ratio)
    for lam, ratio in sorted(min_ratio_by_lambda.items()):
        rows.append({
            "lambda": lam, "p": cfg.p, "c": "min", "window": None, "policy": cfg.policy,
            "seed": None, "n_events": None, "mean_queue_event": None,
            "q_plus_w": None, "ratio": ratio, "ci_halfwidth": None, "aggregate_flag": 2,
        })
    return rows


_PLOT_STUB = """\
#!/usr/bin/env python3
# Auto-generated plotting stub: reads {csv_name} and draws the aggregate rows.
import csv
from collections import defaultdict

import matplotlib.pyplot as plt

series = defaultdict(list)
with open({csv_name!r}) as fh:
    for row in csv.DictReader(fh):
        if row["aggregate_flag"] == "1" and row["{y_col}"]:
            series[row.get("{group_col}", "")].append(
                (float(row["lambda"]), float(row["{y_col}"]))
            )
for label, pts in sorted(series.items()):
    pts.sort()
    plt.plot([x for x, _ in pts], [y for _, y in pts], marker="o",
             label=f"{group_col}={{label}}")
plt.xlabel("lambda")
plt.ylabel("{y_col}")
plt.legend()
plt.show()
"""


def _write_plot_stub(out_dir: Path, csv_name: str, y_col: str, group_col: str) -> None:
    stub = _PLOT_STUB.format(csv_name=csv_name, y_col=y_col, group_col=group_col)
    (out_dir / f"plot_{csv_name.removesuffix('.csv')}.py").write_text(stub)


def _run_simulate(cfg: RunConfig, out_dir: Path) -> None:
    rule = _parse_window_rule(cfg.window_rule)
    windows = {li: rule(lam) for li, lam in enumerate(cfg.lambdas)}
    tasks = [
        {
            "lambda": lam, "p": cfg.p, "window": windows[li], "policy": cfg.policy,
            "horizon": cfg.horizon, "q0": cfg.q0, "burn_in": cfg.burn_in,
            "master_seed": cfg.master_seed, "cell_idx": li, "rep_idx": rep,
        }
        for li, lam in enumerate(cfg.lambdas)
        for rep in range(cfg.seeds)
    ]
    for r in _run_tasks(tasks, cfg.workers):
        li, rep = r["cell_idx"], r["rep_idx"]
        summary = {
            "lambda": cfg.lambdas[li], "p": cfg.p, "window": windows[li],
            "policy": cfg.policy, "seed": rep, "n_events": r["n_events"],
            "mean_queue_event": r["mean_queue_event"],
            "mean_queue_time": r["mean_queue_time"],
            "diversion_rate": r["diversion_rate"],
            "wasted_rate": r["wasted_rate"], "q0": cfg.q0,
        }
        with open(out_dir / f"run_lam{li}_seed{rep}.json", "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        if cfg.trajectory_csv:
            _dump_trajectory(cfg, cfg.lambdas[li], windows[li], rep, out_dir, li)


def _dump_trajectory(cfg: RunConfig, lam: float, window: float, rep: int,
                     out_dir: Path, cell_idx: int) -> None:
    params = ModelParams(lam, cfg.p, window)
    stream = generate_stream(
        params, cfg.horizon + window, _cell_seed(cfg.master_seed, cell_idx, rep)
    )
    traj, trace, _ = run_simulation(
        stream, cfg.policy, q0=cfg.q0, t_end=cfg.horizon, burn_in=cfg.burn_in
    )
    n = traj.pre_event_queue.size
    rows = [
        {
            "n": i + 1,
            "time": float(stream.times[i]),
            "mark": int(stream.marks[i]),
            "H": int(trace.decisions[i]),
            "Q_pre": int(traj.pre_event_queue[i]),
            "Q_post": int(traj.post_event_queue[i]),
        }
        for i in range(n)
    ]
    _write_csv(out_dir / f"trajectory_lam{cell_idx}_seed{rep}.csv",
               ["n", "time", "mark", "H", "Q_pre", "Q_post"], rows)


def _run_analytic(cfg: RunConfig, out_dir: Path) -> None:
    rows = online_scaling_table(cfg.p, cfg.lambdas)
    table = [
        {
            "lambda": r.arrival_rate, "x_star": r.x_star, "q_opt": r.q_opt,
            "log_term": r.log_term, "ratio": r.ratio, "diversion_rate": r.diversion_rate,
        }
        for r in rows
    ]
    _write_csv(out_dir / "scaling.csv",
               ["lambda", "x_star", "q_opt", "log_term", "ratio", "diversion_rate"], table)


def _excursion_config(cfg: RunConfig, lam: float, q_ref: float) -> ExcursionConfig:
    rule = _parse_window_rule(cfg.window_rule)
    params = ModelParams(lam, cfg.p, rule(lam))
    return ExcursionConfig(
        params=params, k=cfg.k, epsilon=cfg.epsilon, zeta=cfg.zeta, phi=cfg.phi, q_ref=q_ref
    )


PER_SAMPLE_COLUMNS = ["sample", "e1", "e3", "e4", "e5", "z", "Y", "V", "J", "L0"]


def _run_excursion(cfg: RunConfig, out_dir: Path) -> None:
    lam = cfg.lambdas[0]
    config = _excursion_config(cfg, lam, cfg.q_ref if cfg.q_ref is not None else 0.0)
    report, indicators = estimate_event_probs(config, cfg.n_samples, cfg.master_seed)
    payload = {
        "lambda": lam, "p": cfg.p, "window": config.params.window,
        "k": cfg.k, "epsilon": cfg.epsilon, "zeta": cfg.zeta, "phi": cfg.phi,
        "q_ref": config.q_ref,
        "n_samples": report.n_samples,
        "estimates": {
            name: {"mean": e.mean, "se": e.se, "hits": e.hits, "n": e.n}
            for name, e in report.estimates.items()
        },
        "correlations": report.correlations,
        "e5_log_prob_per_window": report.e5_log_prob_per_window,
        "z_given_hit": dataclasses.asdict(report.z_given_hit) if report.z_given_hit else None,
    }
    with open(out_dir / "excursion.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if cfg.per_sample_csv:
        rows = [
            {"sample": i, "e1": int(r[0]), "e3": int(r[1]), "e4": int(r[2]), "e5": int(r[3])}
            for i, r in enumerate(indicators)
        ]
        _write_csv(out_dir / "excursion_samples.csv", PER_SAMPLE_COLUMNS, rows)


def _run_diagnostic(cfg: RunConfig, out_dir: Path) -> None:
    lam = cfg.lambdas[0]
    rule = _parse_window_rule(cfg.window_rule)
    params = ModelParams(lam, cfg.p, rule(lam))
    if cfg.q_ref is None:
        q_ref, source = reference_queue(params, cfg.policy, seed=cfg.master_seed)
    else:
        q_ref, source = cfg.q_ref, "config"
    config = ExcursionConfig(
        params=params, k=cfg.k, epsilon=cfg.epsilon, zeta=cfg.zeta, phi=cfg.phi, q_ref=q_ref
    )
    report = diversion_idling_diagnostic(
        config, cfg.policy, cfg.n_samples, cfg.master_seed, q_ref_source=source
    )
    payload = {
        "lambda": lam, "p": cfg.p, "window": params.window, "policy": cfg.policy,
        "q_ref": report.q_ref, "q_ref_source": report.q_ref_source,
        "n_samples": report.n_samples, "warmup_time": report.warmup_time,
        "p_e1": dataclasses.asdict(report.p_e1),
        "p_e2": dataclasses.asdict(report.p_e2),
        "n_conditional": report.n_conditional,
        "low_conditional": report.low_conditional,
        "y_over_b": dataclasses.asdict(report.y_over_b),
        "v_last_low": dataclasses.asdict(report.v_last_low),
        "wasted": dataclasses.asdict(report.wasted),
        "low_at_origin": dataclasses.asdict(report.low_at_origin),
    }
    with open(out_dir / "diagnostic.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if cfg.per_sample_csv:
        rows = [
            {
                "sample": r["sample"], "e1": int(r["e1"]), "e3": int(r["e3"]),
                "e4": int(r["e4"]), "e5": int(r["e5"]), "z": r["z"],
                "Y": r["Y"], "V": r["V"], "J": r["J"], "L0": r["L0"],
            }
            for r in report.per_sample
        ]
        _write_csv(out_dir / "diagnostic_samples.csv", PER_SAMPLE_COLUMNS, rows)


def run_config(cfg: RunConfig) -> int:
    """Dispatch a validated config to its experiment; returns an exit code."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_manifest(cfg, out_dir)
    if cfg.kind == "simulate":
        _run_simulate(cfg, out_dir)
    elif cfg.kind == "analytic":
        _run_analytic(cfg, out_dir)
    elif cfg.kind == "excursion":
        _run_excursion(cfg, out_dir)
    elif cfg.kind == "phase":
        rows = phase_sweep(cfg)
        _write_csv(out_dir / "phase.csv", PHASE_COLUMNS, rows)
        _write_plot_stub(out_dir, "phase.csv", "mean_queue_event", "window_rule")
    elif cfg.kind == "conserve":
        rows = conservation_sweep(cfg)
        _write_csv(out_dir / "conserve.csv", CONSERVE_COLUMNS, rows)
        _write_plot_stub(out_dir, "conserve.csv", "ratio", "c")
    elif cfg.kind == "diagnostic":
        _run_diagnostic(cfg, out_dir)
    else:  # pragma: no cover - validate_config guards this
        raise ConfigurationError(f"unknown experiment kind `{cfg.kind}`")
    return EXIT_OK


def run_from_config(path) -> int:
    """Load a config file, dispatch it, and map failures to exit codes."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        _emit_error(f"config parse error: {exc}", EXIT_PARSE)
        return EXIT_PARSE
    except OSError as exc:
        _emit_error(f"cannot read config: {exc}", EXIT_PARSE)
        return EXIT_PARSE
    try:
        cfg = config_from_mapping(data)
    except (ConfigurationError, TypeError) as exc:
        _emit_error(str(exc), EXIT_VALIDATION)
        return EXIT_VALIDATION
    try:
        return run_config(cfg)
    except ConfigurationError as exc:
        _emit_error(str(exc), EXIT_VALIDATION)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - harness boundary
        _emit_error(f"runtime error: {exc}", EXIT_RUNTIME)
        return EXIT_RUNTIME


def _emit_error(message: str, code: int) -> None:
    print(json.dumps({"error": message, "exit": code}), file=sys.stderr)


def _add_override_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file")
    sub.add_argument("--p", type=float)
    sub.add_argument("--lambdas", help="comma-separated arrival rates")
    sub.add_argument("--window-rule", dest="window_rule")
    sub.add_argument("--policy")
    sub.add_argument("--horizon", type=float)
    sub.add_argument("--seeds", type=int)
    sub.add_argument("--master-seed", dest="master_seed", type=int)
    sub.add_argument("--out", dest="out_dir")
    sub.add_argument("--q0", type=int)
    sub.add_argument("--burn-in", dest="burn_in", type=float)
    sub.add_argument("--workers", type=int)
    sub.add_argument("--n-samples", dest="n_samples", type=int)
    sub.add_argument("--k", type=float)
    sub.add_argument("--epsilon", type=float)
    sub.add_argument("--zeta", type=float)
    sub.add_argument("--phi", type=float)
    sub.add_argument("--q-ref", dest="q_ref", type=float)
    sub.add_argument("--c-values", dest="c_values", help="comma-separated c grid")
    sub.add_argument("--per-sample-csv", dest="per_sample_csv", action="store_true", default=None)
    sub.add_argument("--trajectory-csv", dest="trajectory_csv", action="store_true", default=None)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = argparse.ArgumentParser(
        prog="qadmit",
        description="Admission-control queueing experiments (simulation, oracles, excursions).",
    )
    subparsers = parser.add_subparsers(dest="kind", required=True)
    for kind in EXPERIMENT_KINDS:
        _add_override_args(subparsers.add_parser(kind))
    args = parser.parse_args(argv)

    data: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            _emit_error(f"config parse error: {exc}", EXIT_PARSE)
            return EXIT_PARSE
        except OSError as exc:
            _emit_error(f"cannot read config: {exc}", EXIT_PARSE)
            return EXIT_PARSE
    data["kind"] = args.kind
    for key in (
        "p", "window_rule", "policy", "horizon", "seeds", "master_seed", "out_dir",
        "q0", "burn_in", "workers", "n_samples", "k", "epsilon", "zeta", "phi",
        "q_ref", "per_sample_csv", "trajectory_csv",
    ):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if args.lambdas is not None:
        data["lambdas"] = [float(v) for v in args.lambdas.split(",")]
    if args.c_values is not None:
        data["c_values"] = [float(v) for v in args.c_values.split(",")]

    try:
        cfg = config_from_mapping(data)
    except (ConfigurationError, TypeError) as exc:
        _emit_error(str(exc), EXIT_VALIDATION)
        return EXIT_VALIDATION
    try:
        return run_config(cfg)
    except ConfigurationError as exc:
        _emit_error(str(exc), EXIT_VALIDATION)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - harness boundary
        _emit_error(f"runtime error: {exc}", EXIT_RUNTIME)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
