import json
import os
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np
import pandas as pd

FLOAT_FORMAT = "%.12g"


class CustomJsonEncoder(json.JSONEncoder):
    """
    numpy scalars and arrays as plain json
    """

    def default(self, o):
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        return super().default(o)


def write_table(path: str, rows: Iterable[Dict[str, Any]], columns: Sequence[str],
                header: Optional[Sequence[str]] = None) -> str:
    """
    write rows as csv with a fixed float format and unix line endings
    rows are written in the order given, header lines go first prefixed with "# "
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    frame = pd.DataFrame(list(rows), columns=list(columns))
    with open(path, "w", encoding="utf-8", newline="") as f:
        for line in header or ():
            f.write(f"# {line}\n")
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_json(path: str, payload: Any) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, cls=CustomJsonEncoder, indent=2, sort_keys=True)
        f.write("\n")
    return path


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, cls=CustomJsonEncoder, sort_keys=True, separators=(",", ":"))
