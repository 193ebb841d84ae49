"""Command line entry point: single runs and protocol x PAI sweeps.

Exit codes: 0 success, 1 config error, 2 runtime fault, 3 partial sweep failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from ..trace import emit_trace
from .config import PAI_GRID_MS, PROTOCOLS, ConfigError, ScenarioConfig, dump_config, load_config
from .scenario import run_scenario
from .sweep import pai_grid, sweep, write_reports

log = logging.getLogger("scosens_sim")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_PARTIAL = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scosens-sim",
                                description="S-CoSenS / LPL star-PAN simulator")
    p.add_argument("--config", type=Path, help="INI file with [scenario], [csma], [scosens], [lpl]")
    p.add_argument("--seed", type=int)
    p.add_argument("--protocol", choices=PROTOCOLS)
    p.add_argument("--pai-ms", type=int, help="packet arrival interval in milliseconds")
    p.add_argument("--duration-s", type=float, help="simulated run length in seconds")
    p.add_argument("--out-dir", type=Path, default=Path("out"))
    p.add_argument("--trace", action="store_true", help="write trace.jsonl (single runs)")
    p.add_argument("--sweep", action="store_true", help="run protocols x PAI grid")
    p.add_argument("--replicates", type=int, default=5, help="seeds per sweep cell")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve_config(args: argparse.Namespace) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.protocol is not None:
        changes["protocol"] = args.protocol
    if args.pai_ms is not None:
        changes["pai"] = args.pai_ms * 1000
    if args.duration_s is not None:
        changes["duration"] = round(args.duration_s * 1_000_000)
    if args.trace:
        changes["trace"] = True
    return cfg.replace(**changes).validate()


def _single(cfg: ScenarioConfig, out_dir: Path) -> int:
    result = run_scenario(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.txt").write_text(result.metrics.to_kv(), encoding="utf-8")
    (out_dir / "config.ini").write_text(dump_config(cfg), encoding="utf-8")
    if cfg.trace:
        emit_trace(result.trace, out_dir / "trace.jsonl")
    m = result.metrics
    prr = "NA" if m.prr is None else f"{100 * m.prr:.2f}%"
    delay = "NA" if m.delay_mean_us is None else f"{m.delay_mean_us / 1000:.1f} ms"
    print(f"{cfg.protocol} pai={cfg.pai // 1000} ms seed={cfg.seed}: PRR {prr}, "
          f"mean delay {delay}, leaf duty {100 * m.leaf_duty_cycle:.2f}%, "
          f"router duty {100 * m.router_duty_cycle:.2f}%")
    return EXIT_OK


def _sweep(args: argparse.Namespace, cfg: ScenarioConfig, out_dir: Path) -> int:
    if args.replicates < 1:
        raise ConfigError("--replicates must be >= 1")
    protocols = (args.protocol,) if args.protocol else ("lpl", "scosens")
    pais = (args.pai_ms,) if args.pai_ms else PAI_GRID_MS
    grid = pai_grid(cfg.replace(trace=False), args.replicates, protocols, pais)
    log.info("running %d scenarios", len(grid))
    result = sweep(grid, jobs=max(1, args.jobs))
    for path in write_reports(result, out_dir, figures=not args.no_figures):
        print(f"wrote {path}")
    for (proto, pai), cell in result.cells.items():
        for err in cell.errors:
            print(f"run failed in cell ({proto}, {pai} ms): {err}", file=sys.stderr)
    return EXIT_PARTIAL if result.failed_runs else EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        if args.sweep:
            return _sweep(args, cfg, args.out_dir)
        return _single(cfg, args.out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:
        print(f"runtime fault: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
