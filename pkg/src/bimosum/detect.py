"""Change point estimation by successive argmax and bottom-up window merging."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .htest import RejectionRule, euclid_distance, slice_distance
from .mosum import FieldSlice, MosumField


@dataclass(frozen=True)
class Candidate:
    t: int
    window: int
    E: float
    V: float
    d: float

    def to_dict(self) -> dict:
        return {"estimate": self.t, "window": self.window, "E": self.E, "V": self.V, "d_I": self.d}


@dataclass(frozen=True)
class CandidateSet:
    """Estimates of one window, in the order they were found."""

    h: int
    candidates: tuple

    @property
    def estimates(self) -> list:
        return [c.t for c in self.candidates]

    def __len__(self):
        return len(self.candidates)


@dataclass
class DetectionResult:
    estimates: list
    accepted: list
    candidate_sets: dict
    rule: RejectionRule
    audit: list = field(default_factory=list)

    def to_dict(self, audit: bool = False) -> dict:
        doc = {
            "estimates": list(self.estimates),
            "accepted": [dict(c.to_dict(), accepted_from_window=c.window) for c in self.accepted],
            "candidates": {str(h): cs.estimates for h, cs in self.candidate_sets.items()},
        }
        if audit:
            doc["audit"] = list(self.audit)
        return doc


def detect_single(sl: FieldSlice, rule: RejectionRule) -> CandidateSet:
    """Successive argmax on one window.

    While some remaining ``t`` lies in the rejection region, take the remaining
    exceeding ``t`` with the largest Euclidean norm of ``J`` (smallest ``t`` on
    ties) and delete ``{c - h + 1, ..., c + h}`` from the remaining set.
    """
    h = sl.h
    inside = slice_distance(sl, rule.variant) > rule.Q
    dI = euclid_distance(sl)
    alive = np.ones(sl.t.size, dtype=bool)
    found = []
    while True:
        live = inside & alive
        if not live.any():
            break
        i = int(np.argmax(np.where(live, dI, -np.inf)))
        t = i + h
        found.append(Candidate(t, h, float(sl.E[i]), float(sl.V[i]), float(dI[i])))
        lo = max(0, i - h + 1)
        alive[lo : i + h + 1] = False
    return CandidateSet(h, tuple(found))


def merge_candidates(candidate_sets, audit=None) -> list:
    """Bottom-up merge over windows in increasing order.

    The smallest window's candidates are all accepted. A candidate ``c`` of a
    larger window ``h`` is accepted if no accepted estimate lies in
    ``{c - h + 1, ..., c + h}``; candidates of one window are visited in their
    detection order, so an acceptance can block a later candidate of the same
    window.
    """
    ordered = sorted(candidate_sets, key=lambda cs: cs.h)
    accepted = []
    for k, cs in enumerate(ordered):
        for cand in cs.candidates:
            if k == 0:
                blocker = None
            else:
                blocker = next((a.t for a in accepted if cand.t - cs.h + 1 <= a.t <= cand.t + cs.h), None)
            ok = blocker is None
            if ok:
                accepted.append(cand)
            if audit is not None:
                audit.append(
                    {"window": cs.h, "candidate": cand.t, "accepted": ok, "blocked_by": blocker}
                )
    return accepted


def detect_multi(field: MosumField, rule: RejectionRule) -> DetectionResult:
    sets = {h: detect_single(field[h], rule) for h in sorted(field.windows)}
    audit = []
    accepted = merge_candidates(sets.values(), audit)
    estimates = sorted(c.t for c in accepted)
    return DetectionResult(estimates, sorted(accepted, key=lambda c: c.t), sets, rule, audit)
