"""Bifurcation sweeps over all periodic words up to a given period.

Every primitive necklace is continued from its AI state. Only events on the
first segment of each branch (up to and including its first fold) are
attributed to the starting word; later segments belong to other words, which
are continued in their own right.

Folds whose orbit is invariant under a half-period shift are the far end of a
period-doubled branch and are matched to the parent's multiplier crossing.
The remaining folds are saddle-nodes and are paired with the fold of another
word at the same eps and the same orbit up to a cyclic shift.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .continuation import (
    BranchRecord,
    ContinuationOptions,
    EventKind,
    Flag,
    ResidualSystem,
    continue_branch,
)
from .core import StructuralParams, SymbolSequence
from .errors import AIToolkitError
from .words import (
    canonical,
    half_period_symmetric,
    hamming_up_to_rotation,
    lyndon_words,
    orbit_shift_distance,
    same_necklace,
)

MATCH_TOL = 1e-4


@dataclass(frozen=True)
class TableEntry:
    kind: str  # "pd" or "sn"
    epsilon: float
    first: SymbolSequence  # pd: parent; sn: one of the colliding words
    second: SymbolSequence | None  # pd: child; sn: the other word
    hamming: int | None
    how: str  # how the second word was identified

    def label(self) -> str:
        if self.second is None:
            return f"{{{','.join(str(self.first))}}}"
        return merged_label(self.first, self.second) if self.kind == "sn" else \
            f"{{{','.join(str(self.first))}}} -> {{{','.join(str(self.second))}}}"


@dataclass
class BifurcationTable:
    entries: list = field(default_factory=list)
    unpaired: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)

    def find(self, kind: str, u, v=None):
        u = u if isinstance(u, SymbolSequence) else SymbolSequence(u)
        v = v if v is None or isinstance(v, SymbolSequence) else SymbolSequence(v)
        for e in self.entries:
            if e.kind != kind:
                continue
            if kind == "pd":
                if same_necklace(e.first, u) and (v is None or (e.second is not None and same_necklace(e.second, v))):
                    return e
            else:
                if e.second is None:
                    continue
                pair = {canonical(e.first), canonical(e.second)}
                if pair == {canonical(u), canonical(v)}:
                    return e
        return None


def merged_label(u: SymbolSequence, v: SymbolSequence) -> str:
    """Join two words differing in one symbol as ``{-,±,+}`` (rotation chosen canonically)."""
    best = None
    for k in range(u.period):
        for j in range(v.period):
            a, b = u.rotated(k).word, v.rotated(j).word
            if int(np.sum(a != b)) != 1:
                continue
            sym = ["±" if x != y else ("+" if x > 0 else "-") for x, y in zip(a, b)]
            key = tuple({"-": 0, "±": 1, "+": 2}[c] for c in sym)
            if best is None or key < best[0]:
                best = (key, sym)
    if best is None:
        return f"{{{','.join(str(u))}}} / {{{','.join(str(v))}}}"
    return "{" + ",".join(best[1]) + "}"


def worker_count() -> int:
    env = os.environ.get("AI_TOOLKIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _run_word(args):
    p, sigma, delta, word, opts = args
    try:
        return continue_branch(ResidualSystem(p, sigma, delta, word.period), word, opts)
    except AIToolkitError as exc:
        return f"{type(exc).__name__}: {exc}"


def run_words(p: StructuralParams, sigma: float, delta: float, words, opts: ContinuationOptions,
              workers: int | None = None) -> tuple[dict, dict]:
    """Continue each word; returns (records by word string, failures by word string)."""
    words = list(words)
    workers = worker_count() if workers is None else workers
    jobs = [(p, sigma, delta, w, opts) for w in words]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_run_word, jobs))
    else:
        results = [_run_word(j) for j in jobs]
    records, failures = {}, {}
    for w, res in zip(words, results):
        if isinstance(res, BranchRecord):
            records[str(w)] = res
        else:
            failures[str(w)] = res
    return records, failures


def first_segment_events(record: BranchRecord) -> list:
    first_fold = next((k for k, pt in enumerate(record.points) if Flag.FOLD in pt.flags), None)
    if first_fold is None:
        return list(record.events)
    return [e for e in record.events if e.index <= first_fold]


def build_table(records: dict) -> BifurcationTable:
    table = BifurcationTable()
    pds, folds = [], []
    for rec in records.values():
        for ev in first_segment_events(rec):
            (pds if ev.kind is EventKind.PERIOD_DOUBLING else folds).append((rec.word, ev))

    children = {}
    plain = []
    for word, ev in folds:
        if half_period_symmetric(ev.orbit, MATCH_TOL):
            children.setdefault(word.period // 2, []).append((word, ev))
        else:
            plain.append((word, ev))

    for parent, ev in pds:
        child, how = None, "none within period bound"
        for cword, cev in children.get(parent.period, []):
            half = cev.orbit[: parent.period]
            dist, _ = orbit_shift_distance(half, ev.orbit)
            if abs(cev.epsilon - ev.epsilon) < MATCH_TOL and dist < MATCH_TOL:
                child, how = cword, "child fold"
                break
        ham = hamming_up_to_rotation(parent.doubled(), child) if child is not None else None
        table.entries.append(TableEntry("pd", ev.epsilon, parent, child, ham, how))

    used = set()
    for i, (word, ev) in enumerate(plain):
        if i in used:
            continue
        partner = None
        for j in range(i + 1, len(plain)):
            if j in used:
                continue
            w2, ev2 = plain[j]
            if w2.period != word.period or same_necklace(w2, word):
                continue
            dist, _ = orbit_shift_distance(ev.orbit, ev2.orbit)
            if abs(ev.epsilon - ev2.epsilon) < MATCH_TOL and dist < MATCH_TOL:
                partner = j
                break
        if partner is not None:
            used.update({i, partner})
            w2, ev2 = plain[partner]
            table.entries.append(TableEntry(
                "sn", 0.5 * (ev.epsilon + ev2.epsilon), word, w2,
                hamming_up_to_rotation(word, w2), "fold match",
            ))
        elif ev.partner_word is not None and not same_necklace(ev.partner_word, word):
            used.add(i)
            table.entries.append(TableEntry(
                "sn", ev.epsilon, word, canonical(ev.partner_word),
                hamming_up_to_rotation(word, ev.partner_word), "branch landing",
            ))
        else:
            table.unpaired.append((word, ev))
    table.entries.sort(key=lambda e: (e.kind != "pd", e.first.period, str(canonical(e.first)), e.epsilon))
    return table


def bifurcation_table(p: StructuralParams, sigma: float, delta: float, max_period: int = 6,
                      opts: ContinuationOptions | None = None, workers: int | None = None,
                      ) -> tuple[BifurcationTable, dict]:
    opts = ContinuationOptions() if opts is None else opts
    records, failures = run_words(p, sigma, delta, lyndon_words(max_period), opts, workers)
    table = build_table(records)
    table.failures = failures
    return table, records


# Reference bifurcation values for the presets, two decimals. Each row holds
# the kind, the two words (parent/child for pd, the colliding pair for sn) and
# one value per preset; None marks a pairing that does not occur.
REFERENCE_TABLE = [
    ("pd", "-", "-+", {"parallel": 1.75, "ellipse": 0.63, "henon": 1.64, "vp": 1.34}),
    ("pd", "-+", "---+", {"parallel": 1.39, "ellipse": 0.51, "henon": 1.09, "vp": 0.71}),
    ("pd", "-++", "--++-+", {"parallel": 1.68, "ellipse": 1.10, "henon": 0.61, "vp": None}),
    ("pd", "-++", "--+-++", {"parallel": None, "ellipse": None, "henon": None, "vp": 1.40}),
    ("sn", "--+", "-++", {"parallel": 1.72, "ellipse": 1.33, "henon": 0.61, "vp": 10.89}),
    ("sn", "--++", "-+++", {"parallel": 1.63, "ellipse": 0.81, "henon": 0.62, "vp": 0.71}),
    ("sn", "----+", "--+-+", {"parallel": 1.27, "ellipse": 0.64, "henon": None, "vp": 0.73}),
    ("sn", "----+", "---++", {"parallel": None, "ellipse": None, "henon": 0.81, "vp": None}),
    ("sn", "---++", "-+-++", {"parallel": 1.13, "ellipse": 0.43, "henon": None, "vp": 0.47}),
    ("sn", "-+-+-", "-+-++", {"parallel": None, "ellipse": None, "henon": 0.66, "vp": None}),
    ("sn", "--+++", "-++++", {"parallel": 1.60, "ellipse": 0.71, "henon": 0.61, "vp": 0.52}),
    ("sn", "-----+", "---+-+", {"parallel": 1.32, "ellipse": 0.52, "henon": 0.97, "vp": 0.70}),
    ("sn", "---+++", "-+-+++", {"parallel": 1.10, "ellipse": 0.44, "henon": None, "vp": 0.54}),
    ("sn", "-+-++-", "-+-+++", {"parallel": None, "ellipse": None, "henon": 0.70, "vp": None}),
    ("sn", "--++++", "-+++++", {"parallel": 1.59, "ellipse": 0.72, "henon": 0.61, "vp": 0.56}),
    ("sn", "----++", "--+-++", {"parallel": 1.14, "ellipse": 0.62, "henon": None, "vp": None}),
    ("sn", "----++", "-+--++", {"parallel": None, "ellipse": None, "henon": None, "vp": 0.55}),
    ("sn", "----++", "---+++", {"parallel": None, "ellipse": None, "henon": 0.83, "vp": None}),
]


@dataclass(frozen=True)
class ReferenceComparison:
    kind: str
    first: str
    second: str
    reference: float
    computed: float | None

    @property
    def ok(self) -> bool:
        return self.computed is not None and abs(round(self.computed, 2) - self.reference) <= 0.01 + 1e-9


def compare_with_reference(table: BifurcationTable, preset: str) -> list[ReferenceComparison]:
    out = []
    for kind, u, v, vals in REFERENCE_TABLE:
        ref = vals.get(preset)
        if ref is None:
            continue
        e = table.find(kind, u, v)
        out.append(ReferenceComparison(kind, u, v, ref, None if e is None else e.epsilon))
    return out
