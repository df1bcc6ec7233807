"""
Utility functions for writing and reading job artifacts.
"""
import json
from pathlib import Path
from typing import Any, Iterable, Optional, Union

import numpy as np
from pandas import DataFrame

from .errors import SchemaError

_this_file: Path = Path(__file__)

PATH_TO_OUT: Path = _this_file.parents[1] / "out"

CSV_FLOAT_FORMAT: str = '%.17g'


def col(name: str, unit: str = '1') -> str:
    """
    Column label carrying its unit, e.g. col('a', 'param') -> 'a[param]'.
    """
    return f"{name}[{unit}]"


def strip_unit(label: str) -> str:
    return label.split('[', 1)[0]


def resolve_out_dir(out: Optional[Union[str, Path]] = None) -> Path:
    """
    Returns the output directory, creating it when necessary.
    """
    path: Path = Path(out) if out is not None else PATH_TO_OUT
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_csv(
    path: Union[str, Path],
    rows: Iterable[dict],
    columns: list[str],
) -> Path:
    """
    Writes rows through a DataFrame. An empty row set still produces the
    header line.
    """
    path = Path(path)
    df: DataFrame = DataFrame(list(rows), columns=columns)
    df.to_csv(
        path,
        index = False,
        float_format = CSV_FLOAT_FORMAT,
        lineterminator = '\n',
        encoding = 'utf-8',
    )
    return path


def read_csv(
    path: Union[str, Path],
    required: Iterable[str],
) -> DataFrame:
    """
    Reads a CSV artifact and checks that all required columns (unit tags
    ignored) are present.
    """
    from pandas import read_csv as _read_csv

    path = Path(path)
    if not path.exists():
        raise SchemaError(f"Input '{path}' does not exist!")

    try:
        df: DataFrame = _read_csv(path)
    except Exception as e:
        raise SchemaError(f"Input '{path}' is not a readable CSV: {e}")

    df.columns = [strip_unit(str(c)) for c in df.columns]
    missing: list[str] = [c for c in required if c not in df.columns]
    if missing:
        raise SchemaError(f"Input '{path}' lacks columns {missing}!")

    return df


def _json_default(obj: Any) -> Any:
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, Path):
        return str(obj)
    # mpmath scalars and anything else numeric
    try:
        return float(obj)
    except (TypeError, ValueError):
        return str(obj)


def to_json(payload: Any) -> str:
    return json.dumps(
        payload,
        sort_keys = True,
        indent = 2,
        default = _json_default,
        ensure_ascii = False,
    ) + '\n'


def write_json(
    path: Union[str, Path],
    payload: dict,
    config: Optional[dict] = None,
) -> Path:
    """
    Writes a JSON artifact with stable key order; the producing config is
    embedded under 'config'.
    """
    path = Path(path)
    document: dict = dict(payload)
    if config is not None:
        document['config'] = config

    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(to_json(document))

    return path
