"""Segment crossing predicate and the set of mutually crossing candidate cables."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Sequence

from .farm import CandidateSet

Point = Sequence[float]

COLLINEAR_EPS = 1e-12


def side_sign(a: Point, b: Point, p: Point) -> int:
    """Orientation of ``p`` relative to the directed segment ``a -> b``.

    Returns +1 when ``p`` is strictly left of ``ab`` (y axis up), -1 when
    strictly right and 0 when collinear. Integer or ``Fraction`` inputs are
    evaluated exactly; floats use a normalized cross product with a 1e-12
    collinearity band.
    """
    coords = (*a, *b, *p)
    if all(isinstance(v, Rational) for v in coords):
        ax, ay, bx, by, px, py = (Fraction(v) for v in coords)
        cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        return (cross > 0) - (cross < 0)
    ax, ay, bx, by, px, py = (float(v) for v in coords)
    ux, uy = bx - ax, by - ay
    vx, vy = px - ax, py - ay
    cross = ux * vy - uy * vx
    scale = math.hypot(ux, uy) * math.hypot(vx, vy)
    if scale == 0.0 or abs(cross) <= COLLINEAR_EPS * scale:
        return 0
    return 1 if cross > 0 else -1


def segments_cross(A: Point, B: Point, C: Point, D: Point) -> bool:
    """True iff segments AB and CD cross at a point interior to both.

    Shared endpoints, touching and collinear overlap are not crossings.
    """
    return side_sign(A, B, C) * side_sign(A, B, D) < 0 and side_sign(C, D, A) * side_sign(C, D, B) < 0


@dataclass(frozen=True)
class CrossingSet:
    """Unordered pairs of candidate cables that cannot both be built."""

    pairs: tuple[tuple[tuple[str, str], tuple[str, str]], ...]
    index_pairs: tuple[tuple[int, int], ...] = ()

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __contains__(self, pair) -> bool:
        a, b = (tuple(p) for p in pair)
        return (a, b) in self._set or (b, a) in self._set

    @property
    def _set(self):
        s = self.__dict__.get("_pairset")
        if s is None:
            s = frozenset(self.pairs)
            object.__setattr__(self, "_pairset", s)
        return s

    def violations(self, cable_ids) -> list[tuple[tuple[str, str], tuple[str, str]]]:
        """Crossing pairs whose two cables both appear in ``cable_ids``."""
        chosen = {tuple(c) for c in cable_ids}
        return [p for p in self.pairs if p[0] in chosen and p[1] in chosen]

    def to_json(self) -> str:
        return json.dumps([[list(a), list(b)] for a, b in self.pairs])

    @classmethod
    def from_json(cls, text: str, candidates: CandidateSet | None = None) -> "CrossingSet":
        raw = [(tuple(a), tuple(b)) for a, b in json.loads(text)]
        idx = ()
        if candidates is not None:
            idx = tuple((candidates.index(a), candidates.index(b)) for a, b in raw)
        return cls(tuple(raw), idx)


def build_crossing_set(candidates: CandidateSet, substation_only: bool = False) -> CrossingSet:
    """All pairs of candidate cables that cross each other.

    ``substation_only`` keeps just the pairs where at least one cable touches
    the substation.
    """
    cables = candidates.cables
    xy = candidates.coords
    boxes = []
    for c in cables:
        (x1, y1), (x2, y2) = xy[c.i], xy[c.j]
        boxes.append((min(x1, x2), max(x1, x2), min(y1, y2), max(y1, y2)))
    sub = candidates.substation
    pairs = []
    index_pairs = []
    for k1 in range(len(cables)):
        c1 = cables[k1]
        bx1 = boxes[k1]
        for k2 in range(k1 + 1, len(cables)):
            c2 = cables[k2]
            if c1.i in (c2.i, c2.j) or c1.j in (c2.i, c2.j):
                continue
            bx2 = boxes[k2]
            if bx1[1] < bx2[0] or bx2[1] < bx1[0] or bx1[3] < bx2[2] or bx2[3] < bx1[2]:
                continue
            if substation_only and sub not in (c1.i, c1.j, c2.i, c2.j):
                continue
            if segments_cross(xy[c1.i], xy[c1.j], xy[c2.i], xy[c2.j]):
                pairs.append((c1.id, c2.id))
                index_pairs.append((k1, k2))
    return CrossingSet(tuple(pairs), tuple(index_pairs))
