"""Run configuration: defaults, JSON files and validation."""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, fields

OUTPUT_ENV = "WAVEMAP_OUTPUT_DIR"


class ConfigError(ValueError):
    """Invalid configuration (exit status 2)."""


@dataclass
class RunConfig:
    # eigen / shoot
    lam_min: float = -12.5
    lam_max: float = 1.5
    scan_step: float = 0.02
    tol: float = 1e-10
    complex: bool = False
    region: tuple = (-13.0, 2.0, 0.1, 5.0)
    complex_grid: tuple = (60, 30)
    midpoint: float = 0.5
    shoot_tol: float = 1e-9
    # verify
    checks: tuple = ("gauge", "sl", "resonance", "apparent", "minimal", "oracle")
    n_range: tuple = (1, 8)
    window: tuple = (-7.5, 1.5)
    # evolve / fit
    kind: str = "gaussian-lump"
    R: float = 1.5
    n_cells: int = 12000
    cfl: float = 0.5
    T: float = 1.0
    amplitude: float = 6.0
    width: float = 1.0
    t_end: float = 5.0
    snapshot_every: int = 2
    expect_blowup: bool = False
    lam1: float = -0.5424663534
    tau_min: float = 3.0
    min_scale: float = 20.0
    dtau: float = 0.05
    frames: str = ""
    # run
    output_dir: str = "out"
    precision: str = "double"
    jobs: int = 1
    extra: dict = field(default_factory=dict)

    def validate(self) -> RunConfig:
        pos = ("scan_step", "tol", "shoot_tol", "R", "T", "width", "t_end", "min_scale", "dtau")
        for name in pos:
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive number, got {v!r}")
        if not self.lam_min < self.lam_max:
            raise ConfigError(f"empty range [{self.lam_min}, {self.lam_max}]")
        re0, re1, im0, im1 = self.region
        if not (re0 < re1 and im0 < im1):
            raise ConfigError(f"empty complex region {self.region!r}")
        if not 0 < self.midpoint < 1:
            raise ConfigError("midpoint must lie in (0, 1)")
        if not 0 < self.cfl <= 0.9:
            raise ConfigError("cfl must lie in (0, 0.9]")
        if self.n_cells < 10 or self.snapshot_every < 1 or self.jobs < 1:
            raise ConfigError("n_cells >= 10, snapshot_every >= 1 and jobs >= 1 are required")
        if self.precision not in ("double", "extended"):
            raise ConfigError(f"precision must be 'double' or 'extended', got {self.precision!r}")
        lo, hi = self.n_range
        if not 1 <= lo <= hi <= 8:
            raise ConfigError("n_range must satisfy 1 <= lo <= hi <= 8")
        if not self.window[0] < self.window[1]:
            raise ConfigError(f"empty window {self.window!r}")
        return self

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        out = {}
        for k, v in data.items():
            default = known[k].default
            out[k] = tuple(v) if isinstance(default, tuple) and isinstance(v, list) else v
        return cls(**out)

    @classmethod
    def from_json(cls, text: str) -> RunConfig:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)


def load_config(path: str | None, overrides: dict) -> RunConfig:
    """Defaults, then the config file, then command-line overrides.

    The output directory falls back to ``$WAVEMAP_OUTPUT_DIR`` when neither
    the file nor the flags set it.
    """
    data = {}
    if path:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        RunConfig.from_json(text)
        data = json.loads(text)
    if "output_dir" not in data and "output_dir" not in overrides and os.environ.get(OUTPUT_ENV):
        data["output_dir"] = os.environ[OUTPUT_ENV]
    data.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.from_dict(data).validate()
