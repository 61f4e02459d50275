"""Run configuration shared by the CLI and the experiment scripts."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    case: str | None = None
    g: float | None = None
    f0: float | None = None
    seed: int = 0
    trials: int = 50
    tol: float = 1e-9
    output_dir: str = "out"
    params: dict = field(default_factory=dict)  # command-specific settings

    def __post_init__(self):
        if self.trials <= 0:
            raise ConfigError("trials must be positive")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")
        if not isinstance(self.params, dict):
            raise ConfigError("params must be a mapping")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigError(f"cannot read config {path}: {err}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(data)

    def merged(self, **overrides) -> "RunConfig":
        """Copy with non-None overrides applied; ``params`` entries merge key by key."""
        data = self.to_dict()
        extra = overrides.pop("params", None) or {}
        data.update({k: v for k, v in overrides.items() if v is not None})
        data["params"] = {**data["params"], **{k: v for k, v in extra.items() if v is not None}}
        return RunConfig.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def header_lines(self, command: str) -> list[str]:
        # output_dir is left out so identical runs produce identical files wherever they land
        run = {k: v for k, v in self.to_dict().items() if k != "output_dir"}
        return [f"command: {command}", f"config: {json.dumps(run, sort_keys=True)}"]
