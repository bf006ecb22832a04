"""Run Config Module - Validated settings for one CLI invocation"""

import json
import os
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, PositiveInt, ValidationError, field_validator
from rich.console import Console

from src.errors import ConfigError

console = Console(stderr=True)

JOBS_ENV = "CAPNET_JOBS"


def default_jobs() -> int:
    """Worker count from CAPNET_JOBS, 1 when unset or invalid"""
    raw = os.getenv(JOBS_ENV, "")
    try:
        jobs = int(raw)
    except ValueError:
        return 1
    return jobs if jobs > 0 else 1


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: Literal["validate", "reduce", "check", "bound", "achieve", "capacity", "gaussian", "selftest"]
    network: Optional[str] = None
    theorem: Optional[str] = None
    scheme: Optional[str] = None
    params: Dict[str, Any] = Field(default_factory=dict)
    grid: PositiveInt = 16
    q_card: PositiveInt = 1
    u_cap: Optional[PositiveInt] = None
    budget: int = Field(default=2000, ge=0)
    max_evaluations: PositiveInt = 250_000
    seed: int = 0
    jobs: PositiveInt = 1
    out: Optional[str] = None
    format: Literal["json", "csv"] = "json"
    tolerance: Optional[float] = Field(default=None, gt=0)
    receiver_order: Optional[List[int]] = None
    model: Literal["main4", "cic3", "generic"] = "generic"
    sweep: Optional[str] = None
    samples: PositiveInt = 1000
    quiet: bool = False

    @field_validator("params", mode="before")
    @classmethod
    def parse_params(cls, value):
        if value is None or value == "":
            return {}
        if isinstance(value, str):
            try:
                value = json.loads(value)
            except json.JSONDecodeError as e:
                raise ValueError(f"--params is not valid JSON: {e}")
        if not isinstance(value, dict):
            raise ValueError("--params must be a JSON object")
        return value

    @field_validator("receiver_order", mode="before")
    @classmethod
    def parse_order(cls, value):
        if isinstance(value, str):
            try:
                return [int(v) for v in value.split(",") if v.strip()]
            except ValueError:
                raise ValueError(f"receiver order '{value}' must be comma-separated integers")
        return value

    @field_validator("sweep")
    @classmethod
    def check_sweep(cls, value):
        if value is None:
            return value
        parts = value.split(":")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except (IndexError, ValueError):
            raise ValueError(f"sweep '{value}' must read START:STOP:COUNT")
        if len(parts) != 3 or count < 1 or start < 0 or stop < 0:
            raise ValueError(f"sweep '{value}' needs nonnegative bounds and COUNT >= 1")
        return value

    def sweep_spec(self):
        start, stop, count = self.sweep.split(":")
        return float(start), float(stop), int(count)

    @classmethod
    def from_cli(cls, command: str, **options) -> "RunConfig":
        """Build from typer options; None values fall back to the defaults"""
        values = {k: v for k, v in options.items() if v is not None}
        if values.get("jobs") is None:
            values["jobs"] = default_jobs()
        try:
            return cls(command=command, **values)
        except ValidationError as e:
            details = [f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()]
            raise ConfigError("invalid command-line options", details)
