"""JSON encoding of result objects with a ``type`` tag, so every emitted object re-parses
into the class that produced it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Point
from .hyperplanes import MetricFoot, TangentBall
from .potentials import SigmaP
from .verify import ComparisonReport, DecayProfile


@dataclass
class Table:
    columns: list
    rows: list

    def __post_init__(self):
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValueError("row length does not match the header")


@dataclass
class Scalar:
    name: str
    value: float


def _num(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)) and not isinstance(v, bool):
        return int(v)
    return v


def to_jsonable(obj):
    if isinstance(obj, Point):
        return {"type": "Point", "z": obj.z.tolist(), "t": obj.t}
    if isinstance(obj, MetricFoot):
        return {"type": "MetricFoot", "foot": to_jsonable(obj.foot), "distance": obj.distance, "lambda": obj.lam}
    if isinstance(obj, TangentBall):
        return {"type": "TangentBall", "center": to_jsonable(obj.center), "radius": obj.radius,
                "touch": to_jsonable(obj.touch)}
    if isinstance(obj, SigmaP):
        return {"type": "SigmaP", "omega_p": obj.omega_p, "sigma_p": obj.sigma_p, "std_error": obj.std_error}
    if isinstance(obj, DecayProfile):
        return {"type": "DecayProfile", **obj.to_dict()}
    if isinstance(obj, ComparisonReport):
        return {"type": "ComparisonReport", **obj.to_dict()}
    if isinstance(obj, Table):
        return {"type": "Table", "columns": list(obj.columns), "rows": [[_num(v) for v in r] for r in obj.rows]}
    if isinstance(obj, Scalar):
        return {"type": "Scalar", "name": obj.name, "value": _num(obj.value)}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(o) for o in obj]
    if isinstance(obj, dict):
        return {k: to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return _num(obj)


def from_jsonable(d):
    if isinstance(d, list):
        return [from_jsonable(x) for x in d]
    if not isinstance(d, dict) or "type" not in d:
        return d
    kind = d["type"]
    if kind == "Point":
        return Point(d["z"], d["t"])
    if kind == "MetricFoot":
        return MetricFoot(from_jsonable(d["foot"]), float(d["distance"]), float(d["lambda"]))
    if kind == "TangentBall":
        return TangentBall(from_jsonable(d["center"]), float(d["radius"]), from_jsonable(d["touch"]))
    if kind == "SigmaP":
        return SigmaP(float(d["omega_p"]), float(d["sigma_p"]), float(d["std_error"]))
    if kind == "DecayProfile":
        return DecayProfile.from_dict(d)
    if kind == "ComparisonReport":
        return ComparisonReport.from_dict(d)
    if kind == "Table":
        return Table(list(d["columns"]), [list(r) for r in d["rows"]])
    if kind == "Scalar":
        return Scalar(d["name"], d["value"])
    raise ValueError(f"unknown result type {kind!r}")
