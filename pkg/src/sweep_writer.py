"""Sweep Writer Module - Tabulates grid and power sweeps as CSV"""

from typing import Dict, List, Optional, Sequence

import pandas as pd


class SweepWriter:
    """One CSV row per sweep point, header always present"""

    def __init__(self, columns: Optional[Sequence[str]] = None):
        self.columns = list(columns) if columns else None

    def frame(self, rows: List[Dict]) -> pd.DataFrame:
        if self.columns is None:
            columns = list(rows[0].keys()) if rows else []
        else:
            columns = self.columns
        return pd.DataFrame(rows, columns=columns)

    def to_csv(self, rows: List[Dict]) -> str:
        return self.frame(rows).to_csv(index=False, float_format="%.12g", lineterminator="\n")
