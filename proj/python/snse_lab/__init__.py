"""Spectral stochastic Navier-Stokes solvers and deviation experiments.

Configs are plain dicts (or paths to JSON files) following ``config_schema()``; every
function validates them and fills in defaults the same way the ``snse`` command does.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from . import _snse
from ._snse import AdmissibilityError, IntegrationError, SchemaError

__version__ = _snse.__version__

ConfigLike = Union[Mapping[str, Any], str, os.PathLike, None]

__all__ = [
    "AdmissibilityError",
    "IntegrationError",
    "RunResult",
    "SchemaError",
    "config_hash",
    "config_schema",
    "emit_tables",
    "epsilon_thresholds",
    "evaluate",
    "rate_function",
    "resolve_config",
    "run",
    "solve",
    "verify",
]


def _text(config: ConfigLike, kind: Optional[str] = None) -> str:
    if config is None:
        doc: dict = {}
    elif isinstance(config, (str, os.PathLike)):
        doc = json.loads(Path(config).read_text())
    else:
        doc = json.loads(json.dumps(config))
    if kind is not None:
        doc.setdefault("experiment", {})["kind"] = kind
    return json.dumps(doc)


def config_schema() -> dict:
    return json.loads(_snse.config_schema())


def resolve_config(config: ConfigLike = None) -> dict:
    """Validated config with every default filled in."""
    return json.loads(_snse.resolve_config(_text(config)))


def config_hash(config: ConfigLike = None) -> str:
    return _snse.config_hash(_text(config))


@dataclass
class RunResult:
    exit_code: int
    manifest_path: Path
    manifest: dict

    @property
    def ok(self) -> bool:
        return self.exit_code == 0


def run(config: ConfigLike, *, seed: Optional[int] = None, workers: Optional[int] = None,
        output: Union[str, os.PathLike, None] = None) -> RunResult:
    """Run the configured experiment into its output directory (always writes manifest.json)."""
    code, path, manifest = _snse.run(_text(config), seed, workers, None if output is None else str(output))
    return RunResult(code, Path(path), json.loads(manifest))


def evaluate(config: ConfigLike, kind: Optional[str] = None) -> dict:
    """Results block of an experiment computed in memory, without writing files."""
    return json.loads(_snse.evaluate(_text(config, kind)))


def rate_function(config: ConfigLike = None) -> dict:
    """I(v) for the config's rate target, with the minimizer's diagnostics."""
    return evaluate(config, "rate")


def verify(config: ConfigLike = None, *, corrupt_divergence: bool = False) -> dict:
    return json.loads(_snse.verify(_text(config), corrupt_divergence))


def emit_tables(manifest: Union[str, os.PathLike]) -> tuple[list[Path], list[str]]:
    written, warnings = _snse.emit_tables(str(manifest))
    return [Path(p) for p in written], list(warnings)


def epsilon_thresholds(K, p: float = 1.0) -> tuple[float, float, float]:
    """(eps0, eps1, eps2) for the constants K1..K9."""
    return _snse.epsilon_thresholds([float(k) for k in K], float(p))


def solve(config: ConfigLike = None, epsilon: float = 0.0, seed: int = 0) -> dict:
    """Trajectory on the config's grid: ``frames[r, c, k1 + K, k2 + K]`` holds component c of mode k."""
    return _snse.solve(_text(config), float(epsilon), int(seed))
