#!/usr/bin/env python3
"""
Tabular output helpers for BasketOptimizer
All CSV tables go through pandas with 17 significant digits and a fixed column order
"""

from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import pandas as pd

FLOAT_FORMAT = "%.17g"


def to_frame(rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> pd.DataFrame:
    """DataFrame with exactly the given columns, in order"""
    return pd.DataFrame(list(rows), columns=list(columns))


def write_table(rows: Sequence[Dict[str, Any]], columns: Sequence[str], path: Union[str, Path]) -> str:
    """Write rows as CSV; returns the path written"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    to_frame(rows, columns).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return str(path)


def read_table(path: Union[str, Path]) -> List[Dict[str, Any]]:
    """Rows of a CSV written by write_table"""
    return pd.read_csv(path, float_precision="round_trip").to_dict(orient="records")
