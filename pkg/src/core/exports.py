"""
Export helpers for reports: JSON documents and CSV tables.
"""

import json
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd


def convert_to_json_serializable(obj):
    """Convert numpy types to Python native types for JSON serialization."""
    if isinstance(obj, np.integer):
        return int(obj)
    elif isinstance(obj, np.floating):
        return float(obj)
    elif isinstance(obj, np.ndarray):
        return obj.tolist()
    elif isinstance(obj, np.bool_):
        return bool(obj)
    elif isinstance(obj, dict):
        return {str(k): convert_to_json_serializable(v) for k, v in obj.items()}
    elif isinstance(obj, (list, tuple)):
        return [convert_to_json_serializable(item) for item in obj]
    return obj


def dumps(document: Any) -> str:
    """Deterministic JSON text (sorted keys, fixed indentation)."""
    return json.dumps(convert_to_json_serializable(document), sort_keys=True, indent=2) + "\n"


def export_to_json(document: Any, filename: Union[str, Path],
                   timestamp: bool = False) -> Path:
    """
    Write a JSON document.

    Args:
        document: Mapping or list to write
        filename: Destination path
        timestamp: Add a ``generated_at`` field (mappings only)

    Returns:
        The written path
    """
    path = Path(filename)
    path.parent.mkdir(parents=True, exist_ok=True)
    if timestamp and isinstance(document, dict):
        document = dict(document, generated_at=datetime.now().isoformat())
    path.write_text(dumps(document), encoding="utf-8")
    return path


def export_to_csv(rows: Union[List[Dict[str, Any]], Dict[str, Any]],
                  filename: Union[str, Path],
                  columns: Optional[List[str]] = None) -> Path:
    """Write a table (list of records or mapping of columns) as CSV."""
    path = Path(filename)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(rows)
    if columns is not None:
        frame = frame[columns]
    frame.to_csv(path, index=False, float_format="%.17g")
    return path


def compute_statistics(trace: List[Any]) -> Dict[str, Any]:
    """
    Summary statistics of an action trace given as (iteration, S) pairs.

    Returns:
        Dictionary with counts, first/last values and the total decrease
    """
    if not trace:
        return {'num_steps': 0}
    frame = pd.DataFrame(trace, columns=['iteration', 'S'])
    decrements = -frame['S'].diff().dropna()
    return {
        'num_steps': int(len(frame)),
        'initial_S': float(frame['S'].iloc[0]),
        'final_S': float(frame['S'].iloc[-1]),
        'total_decrease': float(frame['S'].iloc[0] - frame['S'].iloc[-1]),
        'monotone': bool((decrements > 0).all()),
        'median_decrease': float(decrements.median()) if len(decrements) else 0.0,
    }
