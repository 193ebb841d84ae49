"""Protocol x PAI grids with seed replicates, aggregated per cell."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .config import PAI_GRID_MS, PROTOCOLS, ScenarioConfig
from .metrics import MetricsReport
from .scenario import run_scenario

CELL_METRICS = {
    "prr": lambda m: m.prr,
    "delay_mean_ms": lambda m: None if m.delay_mean_us is None else m.delay_mean_us / 1000,
    "delay_median_ms": lambda m: None if m.delay_median_us is None else m.delay_median_us / 1000,
    "delay_p95_ms": lambda m: None if m.delay_p95_us is None else m.delay_p95_us / 1000,
    "leaf_duty_cycle": lambda m: m.leaf_duty_cycle,
    "router_duty_cycle": lambda m: m.router_duty_cycle,
    "collisions": lambda m: m.collisions,
    "csma_failures": lambda m: m.csma_failures,
}


def pai_grid(base: ScenarioConfig, replicates: int = 5,
               protocols: Sequence[str] = ("lpl", "scosens"),
               pais_ms: Sequence[int] = PAI_GRID_MS) -> list[ScenarioConfig]:
    """Both protocols x the standard PAI values x ``replicates`` seeds."""
    return [base.replace(protocol=proto, pai=pai * 1000, seed=base.seed + r)
            for pai in pais_ms for proto in protocols for r in range(replicates)]


@dataclass
class RunOutcome:
    config: ScenarioConfig
    metrics: Optional[MetricsReport] = None
    error: Optional[str] = None


@dataclass
class Cell:
    protocol: str
    pai_ms: int
    runs: list[MetricsReport] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    def stat(self, name: str) -> tuple[Optional[float], Optional[float]]:
        values = [v for m in self.runs if (v := CELL_METRICS[name](m)) is not None]
        if not values:
            return None, None
        arr = np.asarray(values, dtype=float)
        std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        return float(arr.mean()), std

    @property
    def accounting_ok(self) -> bool:
        return all(m.accounting_ok for m in self.runs)


@dataclass
class SweepResult:
    cells: dict[tuple[str, int], Cell]

    @property
    def failed_runs(self) -> int:
        return sum(len(c.errors) for c in self.cells.values())

    def cell(self, protocol: str, pai_ms: int) -> Cell:
        return self.cells[(protocol, pai_ms)]

    def pais(self) -> list[int]:
        return sorted({k[1] for k in self.cells}, reverse=True)

    def protocols(self) -> list[str]:
        present = {k[0] for k in self.cells}
        return [p for p in ("lpl", "scosens") if p in present]


def _run_one(cfg: ScenarioConfig) -> RunOutcome:
    try:
        return RunOutcome(cfg, run_scenario(cfg).metrics)
    except Exception as exc:  # one bad cell must not sink the sweep
        return RunOutcome(cfg, error=f"{type(exc).__name__}: {exc}")


def sweep(configs: Iterable[ScenarioConfig], jobs: int = 1) -> SweepResult:
    configs = list(configs)
    if not configs:
        raise ValueError("sweep needs at least one config")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_one, configs))
    else:
        outcomes = [_run_one(c) for c in configs]
    cells: dict[tuple[str, int], Cell] = {}
    for out in outcomes:
        key = (out.config.protocol, out.config.pai // 1000)
        cell = cells.setdefault(key, Cell(*key))
        if out.error is not None:
            cell.errors.append(out.error)
        else:
            cell.runs.append(out.metrics)
    return SweepResult(dict(sorted(cells.items(), key=lambda kv: (-kv[0][1], kv[0][0]))))


def _num(v: Optional[float]) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "NA"
    return f"{v:.6g}"


def write_long_table(result: SweepResult, path: Path) -> Path:
    """One row per (protocol, PAI) cell, mean and stddev per metric."""
    header = ["protocol", "pai_ms", "runs", "failed"]
    for name in CELL_METRICS:
        header += [f"{name}_mean", f"{name}_std"]
    header.append("accounting_ok")
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for (proto, pai), cell in result.cells.items():
            row = [proto, pai, len(cell.runs), len(cell.errors)]
            for name in CELL_METRICS:
                row += [_num(x) for x in cell.stat(name)]
            row.append(cell.accounting_ok)
            w.writerow(row)
    return path


def write_wide_table(result: SweepResult, metric: str, path: Path, scale: float = 1.0) -> Path:
    """PAI rows (largest first), then one column per protocol, LPL first."""
    protos = result.protocols()
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["pai_ms", *protos])
        for pai in result.pais():
            row = [pai]
            for proto in protos:
                cell = result.cells.get((proto, pai))
                mean = cell.stat(metric)[0] if cell else None
                row.append(_num(None if mean is None else mean * scale))
            w.writerow(row)
    return path


def write_reports(result: SweepResult, out_dir: Path, figures: bool = True) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [
        write_long_table(result, out_dir / "sweep.csv"),
        write_wide_table(result, "prr", out_dir / "prr_table.csv", scale=100.0),
        write_wide_table(result, "delay_mean_ms", out_dir / "delay_table.csv"),
    ]
    if figures:
        from .plots import plot_delay, plot_prr
        paths.append(plot_prr(result, out_dir / "prr.png"))
        paths.append(plot_delay(result, out_dir / "delay.png"))
    return paths
