"""CSV and JSON serialization of orbits, branches and run records."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .continuation import (
    BifurcationEvent,
    BranchPoint,
    BranchRecord,
    EventKind,
    Flag,
    multipliers_from_log,
)
from .core import StructuralParams, SymbolSequence


def fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# orbit CSV


def orbit_csv(word: SymbolSequence, xi) -> str:
    buf = io.StringIO()
    buf.write("t,s,xi\n")
    for t, (s, x) in enumerate(zip(word, np.asarray(xi, dtype=float))):
        buf.write(f"{t},{s},{fmt(x)}\n")
    return buf.getvalue()


def read_orbit_csv(text: str) -> tuple[SymbolSequence, np.ndarray]:
    rows = list(csv.DictReader(io.StringIO(text)))
    rows.sort(key=lambda r: int(r["t"]))
    return SymbolSequence([int(r["s"]) for r in rows]), np.array([float(r["xi"]) for r in rows])


# ---------------------------------------------------------------------------
# branch JSON


def _num(x: float):
    x = float(x)
    return x if math.isfinite(x) else None


def _pairs(zs) -> list:
    return [[_num(z.real), _num(z.imag)] for z in np.asarray(zs, dtype=complex)]


def _unnum(x):
    return math.nan if x is None else float(x)


def _log_from_pairs(pairs) -> np.ndarray:
    out = []
    for re_, im_ in pairs:
        # a null log-modulus with a phase is an exactly zero multiplier
        if re_ is None and im_ is not None:
            out.append(complex(-math.inf, float(im_)))
        else:
            out.append(complex(_unnum(re_), _unnum(im_)))
    return np.array(out, dtype=complex)


def params_dict(p: StructuralParams, sigma: float, delta: float) -> dict:
    return {"a": p.a, "b": p.b, "c": p.c, "sigma": sigma, "delta": delta}


def point_to_dict(pt: BranchPoint) -> dict:
    return {
        "epsilon": pt.epsilon,
        "xi": [float(x) for x in pt.xi],
        "multipliers": _pairs(pt.multipliers),
        "log_multipliers": _pairs(pt.log_multipliers),
        "tangent": [float(x) for x in pt.tangent],
        "flags": sorted(f.value for f in pt.flags),
    }


def point_from_dict(d: dict) -> BranchPoint:
    return BranchPoint(
        float(d["epsilon"]),
        np.array(d["xi"], dtype=float),
        np.array(d["tangent"], dtype=float),
        _log_from_pairs(d["log_multipliers"]),
        frozenset(Flag(f) for f in d["flags"]),
    )


def event_to_dict(ev: BifurcationEvent) -> dict:
    return {
        "kind": ev.kind.value,
        "epsilon": ev.epsilon,
        "partner": None if ev.partner_word is None else ev.partner_word.to_list(),
        "orbit": [float(x) for x in ev.orbit],
        "index": ev.index,
        "certificate": _num(ev.certificate),
    }


def event_from_dict(d: dict) -> BifurcationEvent:
    return BifurcationEvent(
        EventKind(d["kind"]),
        float(d["epsilon"]),
        np.array(d["orbit"], dtype=float),
        None if d["partner"] is None else SymbolSequence(d["partner"]),
        int(d["index"]),
        _unnum(d["certificate"]),
    )


def branch_to_dict(rec: BranchRecord) -> dict:
    return {
        "params": params_dict(rec.p, rec.sigma, rec.delta),
        "word": rec.word.to_list(),
        "points": [point_to_dict(pt) for pt in rec.points],
        "events": [event_to_dict(ev) for ev in rec.events],
        "termination": rec.termination,
        "options": rec.options,
    }


def branch_from_dict(d: dict) -> BranchRecord:
    pr = d["params"]
    return BranchRecord(
        StructuralParams(pr["a"], pr["b"], pr["c"]), float(pr["sigma"]), float(pr["delta"]),
        SymbolSequence(d["word"]),
        [point_from_dict(x) for x in d["points"]],
        [event_from_dict(x) for x in d["events"]],
        d.get("termination", ""),
        dict(d.get("options", {})),
    )


def dumps(obj: dict) -> str:
    return json.dumps(obj, allow_nan=False, separators=(",", ":")) + "\n"


def branch_json(rec: BranchRecord) -> str:
    return dumps(branch_to_dict(rec))


def load_branch(text: str) -> BranchRecord:
    return branch_from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# run records


@dataclass
class RunRecord:
    command: str
    params: dict
    word: list | None = None
    options: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    termination: str = ""
    started: str = ""
    finished: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(**d)

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        return cls.from_dict(json.loads(text))


def multipliers_of(pt_dict: dict) -> np.ndarray:
    """Multipliers of a serialized point, recomputed from the stored logarithms."""
    return multipliers_from_log(_log_from_pairs(pt_dict["log_multipliers"]))
