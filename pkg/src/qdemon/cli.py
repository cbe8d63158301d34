"""Command-line entry point: ``qdemon <subcommand> [--config FILE] [flags]``.

Exit status: 0 on success; 1 on a fatal error (bad config, unwritable
output), after removing any files this run created; 2 on usage errors; 3 when
outputs were written but some rows carry an ``error`` entry or a check
failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
import tempfile
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import scipy

from . import __version__, sweeps, verify
from .config import SweepConfig, load_config

MANIFEST_SCHEMA = "qdemon.manifest/1"


def format_value(v: Any) -> str:
    """CSV cell text: floats with 17 significant digits, booleans lowercase."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return "" if v is None else str(v)


def table_csv(table: sweeps.Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([format_value(row.get(c, "")) for c in table.columns])
    return buf.getvalue()


def _json_safe(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def dumps(obj: Any) -> str:
    return json.dumps(_json_safe(obj), indent=2, sort_keys=True) + "\n"


class Outputs:
    """Atomic file writer that can roll back everything it created."""

    def __init__(self, root: Path):
        self.root = root
        self.created: list[Path] = []
        self._made_root = False

    def write(self, name: str, text: str) -> Path:
        if not self.root.exists():
            self.root.mkdir(parents=True)
            self._made_root = True
        target = self.root / name
        existed = target.exists()
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=f".{name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, target)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        if not existed:
            self.created.append(target)
        return target

    def rollback(self) -> None:
        for path in reversed(self.created):
            path.unlink(missing_ok=True)
        self.created.clear()
        if self._made_root:
            try:
                self.root.rmdir()
            except OSError:
                pass


def manifest(command: str, cfg: SweepConfig, files: dict[str, Any], stats: dict[str, Any]) -> dict[str, Any]:
    return {
        "schema": MANIFEST_SCHEMA,
        "command": command,
        "config": cfg.to_dict(),
        "versions": {
            "qdemon": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "files": files,
        "stats": stats,
    }


def _stem(command: str) -> str:
    return command.replace("-", "_")


def run_sweep(command: str, cfg: SweepConfig, out: Outputs) -> int:
    table = sweeps.SWEEPS[command](cfg)
    name = f"{_stem(command)}.csv"
    out.write(name, table_csv(table))
    stats = table.stats()
    out.write(f"{_stem(command)}.json", dumps(manifest(command, cfg, {"csv": name, "columns": list(table.columns)}, stats)))
    print(f"{command}: {stats['points']} points, {stats['errors']} with errors -> {out.root / name}")
    return 3 if stats["errors"] else 0


def run_simulate(cfg: SweepConfig, out: Outputs) -> int:
    rep, n = sweeps.simulate(cfg)
    body = {"report": rep.as_dict(), "converged_n": n}
    text = dumps(body)
    sys.stdout.write(text)
    problems = [m for m in (sweeps._violation(rep),) if m]
    if not rep.window_converged:
        problems.append(f"M~ window did not settle by {rep.window}; window terms are NaN")
    for m in problems:
        print(f"warning: {m}", file=sys.stderr)
    stats = {"points": 1, "errors": len(problems), "max_interactions": n, "max_window": rep.window}
    out.write("simulate.json", dumps(manifest("simulate", cfg, {"report": body}, stats)))
    return 3 if stats["errors"] else 0


def run_verify(cfg: SweepConfig, out: Outputs) -> int:
    results = verify.run_all(cfg)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    failed = sum(not r.passed for r in results)
    checks = [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results]
    stats = {"points": len(results), "errors": failed, "max_interactions": 0, "max_window": 0}
    out.write("verify.json", dumps(manifest("verify", cfg, {"checks": checks}, stats)))
    return 3 if failed else 0


COMMANDS = ("simulate", *sweeps.SWEEPS, "verify")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qdemon", description="Steady-state thermodynamics of a demon sweeping a correlated quantum tape.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "one parameter point; prints the Clausius report",
        "phase-diagram": "Clausius terms over the (zeta, epsilon) grid",
        "tau-sweep": "correlated vs uncorrelated tape over the tau grid",
        "advantage-region": "coherent vs dephased tape over (theta, phi, zeta_n)",
        "advantage-tau": "coherent vs dephased tape over the tau grid",
        "verify": "run the invariant and oracle checks",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", type=Path, help="YAML config file")
        p.add_argument("--workers", type=int, help="worker processes")
        p.add_argument("--out", help="output directory")
        p.add_argument("--tol", type=float, help="steady-state tolerance")
        p.add_argument("--window", type=int, help="initial M~ window")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else SweepConfig()
        cfg = cfg.with_overrides(workers=args.workers, out=args.out, tol=args.tol, window=args.window)
    except ValueError as exc:  # includes ConfigError
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    out = Outputs(Path(cfg.out))
    try:
        if args.command == "simulate":
            return run_simulate(cfg, out)
        if args.command == "verify":
            return run_verify(cfg, out)
        return run_sweep(args.command, cfg, out)
    except (OSError, ValueError, RuntimeError, KeyboardInterrupt) as exc:
        out.rollback()
        print(f"fatal: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
