"""Raw positioning records, the sampling grid, sample sets and the trajectory store.

Trajectory file format: CSV with header ``object_id,x,y,floor,t,et``, one
positioning record per line.
"""

import bisect
import csv
import logging
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .space import Location, UnlocatableError

log = logging.getLogger(__name__)

EPS = 1e-9


class TrajectoryError(ValueError):
    pass


class LifespanError(LookupError):
    """A sampling time outside the lifespan of every piece of the object."""


@dataclass(frozen=True)
class PositioningRecord:
    location: Location
    t: float
    et: float

    def covers(self, ts):
        return self.t - EPS <= ts <= self.et + EPS


@dataclass(frozen=True)
class SamplingGrid:
    t_origin: float = 0.0
    dt: float = 10.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("sampling interval must be positive")

    def time(self, w):
        return self.t_origin + w * self.dt

    def first_at_or_after(self, t):
        return int(math.ceil((t - self.t_origin) / self.dt - EPS))

    def last_at_or_before(self, t):
        return int(math.floor((t - self.t_origin) / self.dt + EPS))

    def index(self, ts):
        """Grid index of ``ts``; raises if ``ts`` is off the grid."""
        w = round((ts - self.t_origin) / self.dt)
        if abs(self.time(w) - ts) > 1e-6:
            raise ValueError(f"{ts} is not a sampling time")
        return w


@dataclass(frozen=True)
class Sample:
    location: Location
    rho: float


class SampleSet:
    """Probabilistic location samples of one object at one sampling time."""

    __slots__ = ("x", "y", "floor", "part", "rho", "kind", "_merged")

    def __init__(self, x, y, floor, part, rho, kind):
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.floor = np.asarray(floor, dtype=int)
        self.part = np.asarray(part, dtype=np.int64)
        self.rho = np.asarray(rho, dtype=float)
        self.kind = kind
        self._merged = None

    @classmethod
    def original(cls, loc, part):
        return cls([loc.x], [loc.y], [loc.floor], [part], [1.0], "original")

    @classmethod
    def uniform(cls, x, y, floor, part, kind="derived"):
        n = len(x)
        rho = np.full(n, 1.0 / n) if n else np.zeros(0)
        return cls(x, y, floor, part, rho, kind)

    @classmethod
    def empty(cls, kind="derived"):
        return cls([], [], [], [], [], kind)

    def __len__(self):
        return len(self.rho)

    def merged(self):
        """Per-partition probability mass: ``(partition indices, masses)``, partitions ascending."""
        if self._merged is None:
            parts, inv = np.unique(self.part, return_inverse=True)
            self._merged = (parts, np.bincount(inv, weights=self.rho, minlength=len(parts)))
        return self._merged

    @property
    def samples(self):
        return [Sample(Location(float(x), float(y), int(f)), float(r))
                for x, y, f, r in zip(self.x, self.y, self.floor, self.rho)]

    def total(self):
        return float(self.rho.sum())

    def __repr__(self):
        return f"SampleSet({self.kind}, n={len(self)})"


class Piece:
    """One (possibly split) raw trajectory of an object.

    ``hits[w - w_lo]`` is the index of the record covering grid time ``w``, or -1.
    """

    def __init__(self, object_id, index, t, et, x, y, floor, part, grid):
        self.object_id = object_id
        self.index = index
        self.t, self.et = t, et
        self.x, self.y, self.floor, self.part = x, y, floor, part
        self.w_lo = grid.first_at_or_after(t[0])
        self.w_hi = grid.last_at_or_before(et[-1])
        n = max(self.w_hi - self.w_lo + 1, 0)
        self.hits = np.full(n, -1, dtype=np.int64)
        for i in range(len(t)):
            a = max(grid.first_at_or_after(t[i]), self.w_lo)
            b = min(grid.last_at_or_before(et[i]), self.w_hi)
            if a <= b:
                self.hits[a - self.w_lo:b - self.w_lo + 1] = i

    @property
    def key(self):
        return (self.object_id, self.index)

    @property
    def lifespan(self):
        return float(self.t[0]), float(self.et[-1])

    def __len__(self):
        return len(self.t)

    def record(self, i):
        return PositioningRecord(Location(float(self.x[i]), float(self.y[i]), int(self.floor[i])),
                                 float(self.t[i]), float(self.et[i]))

    def records(self):
        return [self.record(i) for i in range(len(self))]

    def has_grid(self, w):
        return self.w_lo <= w <= self.w_hi

    def hit(self, w):
        if not self.has_grid(w):
            return -1
        return int(self.hits[w - self.w_lo])


@dataclass(frozen=True)
class Context:
    """Contextual records of a sampling time: a covering record, or the two around it."""

    piece: Piece
    hit: PositioningRecord = None
    prev: PositioningRecord = None
    next: PositioningRecord = None

    @property
    def is_original(self):
        return self.hit is not None


class TrajectoryStore:
    """Raw trajectories keyed by object id, time-ordered for logarithmic lookups."""

    def __init__(self, space, grid=None):
        self.space = space
        self.grid = grid or SamplingGrid()
        self._pieces = {}
        self._starts = {}
        self._original_index = None
        self.kprime = None

    # -- ingest -------------------------------------------------------------------

    @classmethod
    def from_records(cls, space, records, grid=None, kprime=None):
        store = cls(space, grid)
        store.ingest(records)
        if kprime is not None:
            store = store.split(kprime)
        return store

    def ingest(self, records):
        """Add trajectories from ``{object_id: [PositioningRecord, ...]}``."""
        for obj in sorted(records):
            recs = sorted(records[obj], key=lambda r: r.t)
            if not recs:
                continue
            arrs = _arrays(recs)
            self._check_order(obj, arrs)
            part = self.space.host_many(arrs["x"], arrs["y"], arrs["floor"])
            bad = np.flatnonzero(part < 0)
            if len(bad):
                i = int(bad[0])
                raise UnlocatableError(f"object {obj} record {i}: unlocatable point "
                                       f"({arrs['x'][i]}, {arrs['y'][i]}) floor {arrs['floor'][i]}")
            self._add_piece(obj, arrs, part)
        self._original_index = None
        return self

    @staticmethod
    def _check_order(obj, arrs):
        t, et = arrs["t"], arrs["et"]
        bad = np.flatnonzero(et < t)
        if len(bad):
            raise TrajectoryError(f"object {obj} record {int(bad[0])}: expiry before report time")
        bad = np.flatnonzero(et[:-1] >= t[1:])
        if len(bad):
            raise TrajectoryError(f"object {obj} record {int(bad[0]) + 1}: overlaps the previous record "
                                  f"(et={et[bad[0]]} >= t={t[bad[0] + 1]})")

    def _add_piece(self, obj, arrs, part, index=None):
        pieces = self._pieces.setdefault(obj, [])
        if index is None:
            index = len(pieces)
        p = Piece(obj, index, arrs["t"], arrs["et"], arrs["x"], arrs["y"], arrs["floor"], part, self.grid)
        pieces.append(p)
        pieces.sort(key=lambda q: q.t[0])
        for a, b in zip(pieces, pieces[1:]):
            if a.et[-1] >= b.t[0]:
                raise TrajectoryError(f"object {obj}: pieces overlap in time")
        self._starts[obj] = [q.t[0] for q in pieces]
        return p

    # -- access -------------------------------------------------------------------

    @property
    def objects(self):
        return sorted(self._pieces)

    def __contains__(self, obj):
        return obj in self._pieces

    def __len__(self):
        return len(self._pieces)

    def pieces(self, obj=None):
        if obj is None:
            return [p for o in self.objects for p in self._pieces[o]]
        if obj not in self._pieces:
            raise KeyError(f"unknown object {obj}")
        return list(self._pieces[obj])

    def records(self, obj):
        return [r for p in self.pieces(obj) for r in p.records()]

    def lifespan(self, obj):
        ps = self.pieces(obj)
        return float(ps[0].t[0]), float(ps[-1].et[-1])

    def piece_at(self, obj, w):
        """The piece whose lifespan contains grid time ``w``, else None."""
        ts = self.grid.time(w)
        starts = self._starts.get(obj)
        if not starts:
            return None
        i = bisect.bisect_right(starts, ts + EPS) - 1
        if i < 0:
            return None
        p = self._pieces[obj][i]
        if ts > p.et[-1] + EPS:
            return None
        return p

    def context(self, obj, w):
        p = self.piece_at(obj, w)
        if p is None:
            raise LifespanError(f"grid time {w} is out of the lifespan of {obj}")
        i = p.hit(w)
        if i >= 0:
            return Context(p, hit=p.record(i))
        ts = self.grid.time(w)
        j = int(np.searchsorted(p.t, ts))
        # records j-1 and j bracket ts; et[j-1] < ts < t[j] since ts is not covered
        return Context(p, prev=p.record(j - 1), next=p.record(j))

    def contextual_records(self, obj, ts):
        return self.context(obj, self.grid.index(ts))

    def original_sample(self, obj, w):
        p = self.piece_at(obj, w)
        i = -1 if p is None else p.hit(w)
        if i < 0:
            raise LookupError(f"{obj} has no original sample at grid time {w}")
        return SampleSet.original(p.record(i).location, int(p.part[i]))

    def is_original(self, obj, w):
        p = self.piece_at(obj, w)
        return p is not None and p.hit(w) >= 0

    def original_index(self):
        """Shared read-only buckets ``(partition index, w) -> frozenset(object ids)``."""
        if self._original_index is None:
            idx = defaultdict(set)
            for p in self.pieces():
                ws = np.flatnonzero(p.hits >= 0)
                parts = p.part[p.hits[ws]]
                for w, v in zip((ws + p.w_lo).tolist(), parts.tolist()):
                    idx[(v, w)].add(p.object_id)
            self._original_index = {k: frozenset(v) for k, v in idx.items()}
        return self._original_index

    # -- preprocessing ------------------------------------------------------------

    def split(self, kprime):
        """Split trajectories so none has ``kprime`` consecutive grid times without an original sample.

        A piece ends right after the record giving the last original sample before
        such a run, and the next piece starts at the record giving the next
        original sample. Records in between cover no grid time; each becomes its
        own piece so that no record is lost.
        """
        if kprime < 2:
            raise ValueError("kprime must be at least 2")
        out = TrajectoryStore(self.space, self.grid)
        out.kprime = kprime
        for obj in self.objects:
            recs = [r for p in self._pieces[obj] for r in _piece_rows(p)]
            for group in _split_rows(recs, self.grid, kprime):
                arrs = _rows_to_arrays(group)
                part = np.array([r[6] for r in group], dtype=np.int64)
                out._add_piece(obj, arrs, part)
        return out


def _piece_rows(p):
    return [(float(p.t[i]), float(p.et[i]), float(p.x[i]), float(p.y[i]), int(p.floor[i]), p.object_id,
             int(p.part[i])) for i in range(len(p))]


def _rows_to_arrays(rows):
    return {
        "t": np.array([r[0] for r in rows]),
        "et": np.array([r[1] for r in rows]),
        "x": np.array([r[2] for r in rows]),
        "y": np.array([r[3] for r in rows]),
        "floor": np.array([r[4] for r in rows], dtype=int),
    }


def _split_rows(rows, grid, kprime):
    # first/last grid time covered by each record, or None
    cover = []
    for r in rows:
        a, b = grid.first_at_or_after(r[0]), grid.last_at_or_before(r[1])
        cover.append((a, b) if a <= b else None)
    anchors = [i for i, c in enumerate(cover) if c is not None]
    if not anchors:
        return [[r] for r in rows]

    groups = []
    first = anchors[0]
    lead = grid.first_at_or_after(rows[0][0])
    if cover[first][0] - lead >= kprime:
        groups.extend([r] for r in rows[:first])
        current = [rows[first]]
    else:
        current = list(rows[:first + 1])
    for a, b in zip(anchors, anchors[1:]):
        gap = cover[b][0] - cover[a][1] - 1
        if gap >= kprime:
            groups.append(current)
            groups.extend([r] for r in rows[a + 1:b])
            current = [rows[b]]
        else:
            current.extend(rows[a + 1:b + 1])
    last = anchors[-1]
    tail = grid.last_at_or_before(rows[-1][1])
    if tail - cover[last][1] >= kprime:
        groups.append(current)
        groups.extend([r] for r in rows[last + 1:])
    else:
        current.extend(rows[last + 1:])
        groups.append(current)
    return groups


def _arrays(recs):
    return {
        "t": np.array([r.t for r in recs], dtype=float),
        "et": np.array([r.et for r in recs], dtype=float),
        "x": np.array([r.location.x for r in recs], dtype=float),
        "y": np.array([r.location.y for r in recs], dtype=float),
        "floor": np.array([r.location.floor for r in recs], dtype=int),
    }


FIELDS = ("object_id", "x", "y", "floor", "t", "et")


def read_trajectories(path, strict=False, expiry=5.0):
    """Read a trajectory CSV into ``{object_id: [PositioningRecord, ...]}``.

    In strict mode every record must satisfy ``et - t == expiry``.
    """
    out = defaultdict(list)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return {}
        header = [h.strip() for h in header]
        if tuple(header) != FIELDS:
            raise TrajectoryError(f"{path}:1: expected header {','.join(FIELDS)}")
        for lineno, row in enumerate(reader, 2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(FIELDS):
                raise TrajectoryError(f"{path}:{lineno}: expected {len(FIELDS)} fields, got {len(row)}")
            obj = row[0].strip()
            try:
                x, y = float(row[1]), float(row[2])
                floor = int(row[3])
                t, et = float(row[4]), float(row[5])
            except ValueError as exc:
                raise TrajectoryError(f"{path}:{lineno}: {exc}") from None
            if et < t:
                raise TrajectoryError(f"{path}:{lineno}: expiry {et} before report time {t}")
            if strict and abs((et - t) - expiry) > 1e-6:
                raise TrajectoryError(f"{path}:{lineno}: et - t = {et - t}, expected {expiry}")
            out[obj].append(PositioningRecord(Location(x, y, floor), t, et))
    return dict(out)


def write_trajectories(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FIELDS)
        for obj in sorted(records):
            for r in sorted(records[obj], key=lambda r: r.t):
                w.writerow([obj, _fmt(r.location.x), _fmt(r.location.y), r.location.floor, _fmt(r.t), _fmt(r.et)])


def _fmt(v):
    return repr(float(v))
