"""Reporting Module - Serializes reports to stable JSON or CSV and writes them out"""

import json
import math
import sys
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from rich.console import Console
from rich.table import Table

from src.sweep_writer import SweepWriter

console = Console(stderr=True)

SIGNIFICANT_DIGITS = 12


def _round(value: float) -> Optional[float]:
    if not math.isfinite(value):
        return None
    return float(f"{value:.{SIGNIFICANT_DIGITS}g}")


def normalize(value: Any) -> Any:
    """Plain JSON types, floats cut to 12 significant digits, sets as sorted lists"""
    if isinstance(value, dict):
        return {str(k): normalize(v) for k, v in value.items()}
    if isinstance(value, (frozenset, set)):
        return [normalize(v) for v in sorted(value, key=str)]
    if isinstance(value, (list, tuple)):
        return [normalize(v) for v in value]
    if isinstance(value, np.ndarray):
        return normalize(value.tolist())
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return _round(float(value))
    return value


class Reporter:
    """Emits command reports"""

    def __init__(self, out: Optional[str] = None):
        """
        Initialize reporter

        Args:
            out: Output path; stdout when None
        """
        self.out = Path(out) if out else None

    def emit_report(self, report: Dict, fmt: str = "json") -> str:
        """
        Serialize a report

        Args:
            report: Report document; CSV needs 'rows' and optionally 'columns'
            fmt: json or csv

        Returns:
            Serialized text, byte-identical for identical reports
        """
        if fmt == "csv":
            rows: List[Dict] = [normalize(r) for r in report.get("rows", [])]
            return SweepWriter(report.get("columns")).to_csv(rows)
        return json.dumps(normalize(report), sort_keys=True, indent=2) + "\n"

    def write(self, text: str) -> None:
        if self.out is None:
            sys.stdout.write(text)
            sys.stdout.flush()
            return
        self.out.parent.mkdir(parents=True, exist_ok=True)
        self.out.write_text(text, encoding="utf-8")
        console.print(f"[green]✓[/green] Report written to {self.out}")

    def display_verdicts(self, verdicts: List[Dict]) -> None:
        """Condition verdicts as a rich table"""
        if not verdicts:
            console.print("[yellow]⚠[/yellow] No conditions emitted")
            return
        table = Table(title="Condition Verdicts", show_header=True, header_style="bold magenta")
        table.add_column("Label", style="cyan")
        table.add_column("Condition", style="white")
        table.add_column("Status", justify="center")
        colors = {"HOLDS": "green", "VIOLATED": "red", "UNKNOWN": "yellow"}
        for verdict in verdicts:
            query = verdict.get("query") or {}
            status = verdict["status"]
            color = colors.get(status, "white")
            table.add_row(query.get("label", ""), query.get("condition", ""), f"[{color}]{status}[/{color}]")
        console.print(table)
