"""Certification reports and their JSON / CSV serialisation."""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np


class VerdictStatus(str, enum.Enum):
    FINITE = "Finite"
    INFINITE = "Infinite"
    INCONCLUSIVE = "Inconclusive"


def jsonable(obj: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats to JSON-safe values.

    Non-finite floats become the strings "inf", "-inf" and "nan".
    """
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def curves_to_csv(columns: dict[str, np.ndarray]) -> str:
    names = list(columns)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    rows = zip(*(np.asarray(columns[n], dtype=float) for n in names))
    for row in rows:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


@dataclass
class CertReport:
    """Outcome of one certification run.

    ``conditions`` maps condition labels (``c21`` local integrability,
    ``c22`` doubling, ``c23`` per-k Hardy constants of the reduced operator,
    ``c24`` top-order coefficient, ``c25`` images of monomials) to JSON-able
    records.
    """

    kind: str
    status: VerdictStatus
    conditions: dict = field(default_factory=dict)
    sk: list = field(default_factory=list)
    upper_bound: float | None = None
    cross_ref: dict | None = None
    banner: list = field(default_factory=list)
    failed: list = field(default_factory=list)
    curves: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    manifest: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "status": self.status.value,
            "conditions": self.conditions,
            "sk": self.sk,
            "upperBound": self.upper_bound,
            "crossRef": self.cross_ref,
            "banner": self.banner,
            "failed": self.failed,
        }
        if self.manifest is not None:
            out["manifest"] = self.manifest
        return jsonable(out)

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def curves_csv(self) -> str:
        return curves_to_csv(self.curves)
