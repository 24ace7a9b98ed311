"""Experiment configuration and run-state persistence.

Configs and states are JSON: human-diffable and schema-versioned.  A run
state records the sha256 of the canonicalized config that produced it,
so stale or tampered state files are rejected at load time.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SchemaError
from .geometry import ChartManifold
from .kernels import RadialKernel, kernel_from_dict
from .measure import DiscreteMeasure, random_measure
from .optimizer import OptimizerConfig

SCHEMA_VERSION = 1

_DEFAULT_TOLERANCES = {"tau_psd": 1e-8, "tol_weak_el": 1e-6, "fd_rel": 1e-5}
_DEFAULT_PROBE = {"fragments": 3, "trials": 100,
                  "tau_grid": [-0.02, -0.01, 0.01, 0.02], "seed": 0}


def canonical_json(data) -> str:
    """Deterministic serialization used for hashing and persistence."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_hash(data: dict) -> str:
    return hashlib.sha256(canonical_json(data).encode()).hexdigest()


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed, validated experiment description."""

    manifold: ChartManifold
    kernel: RadialKernel
    initial: dict                  # explicit {points, weights} or {generator}
    optimizer: OptimizerConfig
    tolerances: dict
    probe: dict
    raw: dict = field(repr=False)  # exactly what was parsed, for hashing

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    def initial_measure(self, seed_override: int | None = None) -> DiscreteMeasure:
        if "generator" in self.initial:
            gen = self.initial["generator"]
            seed = gen["seed"] if seed_override is None else seed_override
            return random_measure(self.manifold, count=int(gen["count"]),
                                  total_volume=float(gen["total_volume"]),
                                  seed=int(seed),
                                  box=gen.get("box"))
        return DiscreteMeasure(
            manifold=self.manifold,
            points=np.asarray(self.initial["points"], dtype=float),
            weights=np.asarray(self.initial["weights"], dtype=float))


def parse_config(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise SchemaError("config root must be a JSON object")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaError(
            f"config schema_version {version} unsupported (expected {SCHEMA_VERSION})")
    for key in ("manifold", "lagrangian", "initial_measure"):
        if key not in data:
            raise SchemaError(f"config is missing the {key!r} section")
    manifold = ChartManifold.from_dict(data["manifold"])
    kernel = kernel_from_dict(data["lagrangian"])
    initial = data["initial_measure"]
    if not isinstance(initial, dict) or not (
            "generator" in initial or {"points", "weights"} <= set(initial)):
        raise SchemaError(
            "initial_measure needs either a generator or explicit points/weights")
    if "generator" in initial:
        gen = initial["generator"]
        missing = {"count", "seed", "total_volume"} - set(gen)
        if missing:
            raise SchemaError(f"generator is missing fields: {sorted(missing)}")
    optimizer = OptimizerConfig.from_dict(data.get("optimizer", {}))
    tolerances = {**_DEFAULT_TOLERANCES, **data.get("tolerances", {})}
    bad = set(tolerances) - set(_DEFAULT_TOLERANCES)
    if bad:
        raise SchemaError(f"unknown tolerance fields: {sorted(bad)}")
    if any(v <= 0 for v in tolerances.values()):
        raise SchemaError("all tolerances must be positive")
    probe = {**_DEFAULT_PROBE, **data.get("probe", {})}
    bad = set(probe) - set(_DEFAULT_PROBE) - {"jet_scale"}
    if bad:
        raise SchemaError(f"unknown probe fields: {sorted(bad)}")
    return ExperimentConfig(manifold=manifold, kernel=kernel, initial=initial,
                            optimizer=optimizer, tolerances=tolerances,
                            probe=probe, raw=data)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        with Path(path).open() as handle:
            data = json.load(handle)
    except OSError as exc:
        raise SchemaError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(
            f"config {path} is not valid JSON (line {exc.lineno}, "
            f"column {exc.colno}): {exc.msg}") from exc
    return parse_config(data)


@dataclass
class RunState:
    """Everything a pipeline stage produced, plus provenance."""

    config_hash: str
    seed: int | None = None
    measure: dict | None = None
    nu: float | None = None
    el_report: dict | None = None
    gram_reports: list = field(default_factory=list)
    probe_summary: dict | None = None
    osi_summary: dict | None = None
    linfield_summary: dict | None = None
    verdicts: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def all_verdicts_pass(self) -> bool:
        return all(bool(v) for v in self.verdicts.values())

    def to_dict(self) -> dict:
        out = {"schema_version": self.schema_version,
               "config_hash": self.config_hash,
               "verdicts": self.verdicts}
        for key in ("seed", "measure", "nu", "el_report", "probe_summary",
                    "osi_summary", "linfield_summary"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        if self.gram_reports:
            out["gram_reports"] = self.gram_reports
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunState":
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SchemaError(
                f"state schema_version {version} unsupported "
                f"(expected {SCHEMA_VERSION})")
        if "config_hash" not in data:
            raise SchemaError("state file has no config_hash")
        return cls(config_hash=data["config_hash"],
                   seed=data.get("seed"),
                   measure=data.get("measure"),
                   nu=data.get("nu"),
                   el_report=data.get("el_report"),
                   gram_reports=data.get("gram_reports", []),
                   probe_summary=data.get("probe_summary"),
                   osi_summary=data.get("osi_summary"),
                   linfield_summary=data.get("linfield_summary"),
                   verdicts=data.get("verdicts", {}),
                   schema_version=version)


def save_state(state: RunState, path: str | Path) -> None:
    Path(path).write_text(canonical_json(state.to_dict()) + "\n")


def load_state(path: str | Path,
               expected_config: ExperimentConfig | None = None) -> RunState:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise SchemaError(f"cannot read state {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"state {path} is not valid JSON: {exc.msg}") from exc
    state = RunState.from_dict(data)
    if expected_config is not None and state.config_hash != expected_config.hash:
        raise SchemaError(
            "state config_hash does not match the supplied config "
            f"({state.config_hash[:12]}... vs {expected_config.hash[:12]}...)")
    return state
