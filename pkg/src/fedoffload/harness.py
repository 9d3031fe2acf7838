"""Experiment execution, parameter sweeps and plot-data emission."""
from __future__ import annotations

import csv
import io
import logging
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

import numpy as np

from .config import SWEEP_VARS, ExperimentConfig, write_config
from .errors import ConfigValidationError, FormatError
from .federation import run_training
from .neural import BASE_HIDDEN, STACK_BLOCK

log = logging.getLogger(__name__)

COLUMNS = ("round", "mode", "seed", "sweep_var", "sweep_value", "mean_cost", "smoothed_cost")
METRICS_FILE = "metrics.csv"
CONFIG_ECHO = "effective_config.txt"
OUTPUT_FOR_VAR = {
    "architecture": "architecture_sweep",
    "batch_size": "batch_size_sweep",
    "f_update": "f_update_sweep",
    "none": "mode_comparison",
}


@dataclass(frozen=True)
class MetricsRow:
    round: int
    mode: str
    seed: int
    sweep_var: str
    sweep_value: str
    mean_cost: float
    smoothed_cost: float

    def as_fields(self):
        return (str(self.round), self.mode, str(self.seed), self.sweep_var, self.sweep_value,
                repr(self.mean_cost), repr(self.smoothed_cost))


def smooth(values: Sequence[float], window: int = 10) -> np.ndarray:
    """Trailing moving average; the window is clipped at the start."""
    v = np.asarray(values, dtype=float)
    c = np.concatenate(([0.0], np.cumsum(v)))
    idx = np.arange(len(v))
    lo = np.maximum(0, idx - window + 1)
    return (c[idx + 1] - c[lo]) / (idx + 1 - lo)


def convergence_round(smoothed: Sequence[float], rel_tol: float = 0.1) -> int:
    """First round whose smoothed cost is within ``rel_tol`` of the final smoothed cost."""
    s = np.asarray(smoothed, dtype=float)
    final = s[-1]
    hit = np.flatnonzero(np.abs(s - final) <= rel_tol * abs(final))
    return int(hit[0])


def _arch_label(hidden: Sequence[int]) -> str:
    return "-".join(str(h) for h in hidden)


def architecture_from_value(value) -> tuple:
    """Sweep value for ``architecture``: an int (extra [16,32,32] blocks) or hidden widths."""
    if isinstance(value, bool):
        raise ConfigValidationError(f"invalid architecture value {value!r}")
    if isinstance(value, int):
        if value < 0:
            raise ConfigValidationError(f"number of stacked blocks must be >= 0, got {value}")
        return BASE_HIDDEN + STACK_BLOCK * value
    if isinstance(value, str):
        value = [t for t in value.replace(",", "-").split("-") if t.strip()]
    try:
        hidden = tuple(int(h) for h in value)
    except (TypeError, ValueError):
        raise ConfigValidationError(f"invalid architecture value {value!r}") from None
    if not hidden or min(hidden) < 1:
        raise ConfigValidationError(f"invalid architecture value {value!r}")
    return hidden


def apply_sweep_value(cfg: ExperimentConfig, variable: str, value):
    """Return ``(config, label)`` with ``variable`` set to ``value``."""
    if variable == "architecture":
        hidden = architecture_from_value(value)
        return cfg.replace(hidden=hidden), _arch_label(hidden)
    if variable in ("batch_size", "f_update"):
        if isinstance(value, bool) or int(value) != value or int(value) < 1:
            raise ConfigValidationError(f"{variable} sweep value must be a positive integer, "
                                        f"got {value!r}")
        return cfg.replace(**{variable: int(value)}), str(int(value))
    raise ConfigValidationError(f"unknown sweep variable {variable!r} (choose from {SWEEP_VARS})")


def collect_rows(cfg: ExperimentConfig, sweep_var: str = "none",
                 sweep_value: str = "") -> List[MetricsRow]:
    rows = []
    env_cfg = cfg.env_config()
    for mode in cfg.modes:
        for seed in cfg.seeds:
            reports = run_training(env_cfg, cfg.agent_config(mode), cfg.fed_config(mode), seed)
            raw = [r.mean_cost for r in reports]
            sm = smooth(raw, cfg.smoothing_window)
            for r, (c, s) in enumerate(zip(raw, sm)):
                rows.append(MetricsRow(r, mode, seed, sweep_var, sweep_value, float(c), float(s)))
            log.info("%s seed=%d %s=%s final smoothed cost %.4f", mode, seed, sweep_var,
                     sweep_value, sm[-1])
    return rows


def format_rows(rows: Iterable[MetricsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow(row.as_fields())
    return buf.getvalue()


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> Path:
    """Train every (mode, seed) pair and write ``metrics.csv`` plus the config echo."""
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    rows = collect_rows(cfg)
    write_config(cfg, out / CONFIG_ECHO)
    return _write(out / METRICS_FILE, format_rows(rows))


def sweep(cfg: ExperimentConfig, variable: str, values: Sequence, out_dir=None) -> Path:
    """Run the experiment once per value (same seeds) into one combined CSV."""
    if not values:
        raise ConfigValidationError("sweep needs at least one value")
    if variable not in SWEEP_VARS:
        raise ConfigValidationError(
            f"unknown sweep variable {variable!r} (choose from {SWEEP_VARS})")
    points = [apply_sweep_value(cfg, variable, v) for v in values]  # validate all first
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    rows = []
    for point_cfg, label in points:
        rows.extend(collect_rows(point_cfg, variable, label))
    write_config(cfg, out / CONFIG_ECHO)
    _write(out / "sweep_values.txt",
           f"sweep_var = {variable!r}\nvalues = {[label for _, label in points]!r}\n")
    return _write(out / METRICS_FILE, format_rows(rows))


def read_metrics(path) -> List[MetricsRow]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"cannot read metrics file {path}: {exc}") from None
    lines = text.splitlines()
    if not lines:
        raise FormatError(f"{path}: empty metrics file")
    rows = []
    for lineno, rec in enumerate(csv.reader(lines), 1):
        if lineno == 1:
            if tuple(rec) != COLUMNS:
                raise FormatError(f"{path}:1: unexpected header {rec!r}")
            continue
        if len(rec) != len(COLUMNS):
            raise FormatError(f"{path}:{lineno}: expected {len(COLUMNS)} fields, got {len(rec)}")
        try:
            rows.append(MetricsRow(int(rec[0]), rec[1], int(rec[2]), rec[3], rec[4],
                                   float(rec[5]), float(rec[6])))
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise FormatError(f"{path}: metrics file has no data rows")
    return rows


def emit_plot_data(metrics_path, out_dir=None) -> Dict[str, Path]:
    """Write one tidy CSV per comparison: ``series,seed,round,value``.

    A series is one variant: the mode for the baseline comparison, or
    ``<mode>:<sweep value>`` for sweeps.  ``value`` is the smoothed cost.
    """
    metrics_path = Path(metrics_path)
    rows = read_metrics(metrics_path)
    out = Path(out_dir) if out_dir is not None else metrics_path.parent / "plot_data"
    groups: Dict[str, list] = defaultdict(list)
    for row in rows:
        fig = OUTPUT_FOR_VAR.get(row.sweep_var, f"sweep_{row.sweep_var}")
        series = row.mode if row.sweep_var == "none" else f"{row.mode}:{row.sweep_value}"
        groups[fig].append((series, row.seed, row.round, row.smoothed_cost))
    texts = {}
    for fig, items in groups.items():
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("series", "seed", "round", "value"))
        for series, seed, rnd, val in items:
            w.writerow((series, seed, rnd, repr(val)))
        texts[fig] = buf.getvalue()
    # everything is formatted before anything is written
    return {fig: _write(out / f"{fig}.csv", text) for fig, text in texts.items()}


def series_summary(rows: Iterable[MetricsRow]) -> Dict[tuple, Dict[int, np.ndarray]]:
    """``{(mode, sweep_value): {seed: smoothed curve}}`` from metrics rows."""
    acc: Dict[tuple, Dict[int, list]] = defaultdict(lambda: defaultdict(list))
    for row in sorted(rows, key=lambda r: (r.mode, r.sweep_value, r.seed, r.round)):
        acc[(row.mode, row.sweep_value)][row.seed].append(row.smoothed_cost)
    return {k: {s: np.array(v) for s, v in d.items()} for k, d in acc.items()}
