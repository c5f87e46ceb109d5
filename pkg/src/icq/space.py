"""Indoor space model: partitions, doors, topology, distances and object tables.

Floorplan file format (JSON)::

    {
      "floors": [0, 1],
      "partitions": [{"id": "F0R00", "floor": 0, "polygon": [[0, 0], [4, 0], [4, 4], [0, 4]]}],
      "doors": [{"id": "D000", "x": 2.0, "y": 4.0, "floor": 0,
                 "links": [["F0R00", "F0C0"], ["F0C0", "F0R00"]]}],
      "staircases": [{"partition": "S0", "doors": ["D100", "D101"], "length": 20.0}]
    }

Each link ``[a, b]`` says that partition ``b`` can be entered from ``a`` through
the door. A staircase is an ordinary partition whose footprint lives on its
lower floor; its upper door sits on the footprint boundary one floor up, and
the traversal between its two doors costs ``length`` meters.
"""

import heapq
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .geometry import TOL


class FloorplanError(ValueError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where = f"{where}{line}: "
        elif where:
            where += " "
        super().__init__(f"{where}{message}")


class UnlocatableError(ValueError):
    """Raised when a point lies outside every partition."""


@dataclass(frozen=True)
class Location:
    x: float
    y: float
    floor: int = 0

    def distance(self, other):
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(eq=False)
class Partition:
    id: str
    floor: int
    polygon: np.ndarray
    door_ids: tuple = ()
    index: int = -1
    staircase: bool = False
    bbox: tuple = field(init=False)

    def __post_init__(self):
        self.bbox = geometry.bbox(self.polygon)
        self.vertices = [tuple(map(float, v)) for v in self.polygon]

    @property
    def centroid(self):
        return Location(*geometry.centroid(self.polygon), self.floor)


@dataclass(frozen=True)
class Door:
    id: str
    location: Location
    links: tuple

    @property
    def partitions(self):
        return tuple(sorted({p for link in self.links for p in link}))


class IndoorSpace:
    """Directed, labeled indoor graph with per-partition door-to-door matrices.

    Topology is immutable after construction and safe to share between queries.
    Partition indices follow lexicographic id order, so the smallest index is
    the smallest id (used as the boundary tie-break in :meth:`host`).
    """

    def __init__(self, partitions, doors, staircases=(), floors=None):
        ids = sorted(p.id for p in partitions)
        by_id = {p.id: p for p in partitions}
        self.part_ids = ids
        self.partitions = {pid: by_id[pid] for pid in ids}
        for i, pid in enumerate(ids):
            self.partitions[pid].index = i
        self.doors = {d.id: d for d in sorted(doors, key=lambda d: d.id)}
        self.floors = sorted(floors) if floors is not None else sorted({p.floor for p in partitions})
        self.stair_lengths = {}
        for st in staircases:
            pid, (da, db), length = st["partition"], st["doors"], float(st["length"])
            self.partitions[pid].staircase = True
            self.stair_lengths[(pid, da, db)] = length
            self.stair_lengths[(pid, db, da)] = length

        self.edges = set()
        door_parts = defaultdict(set)
        for d in self.doors.values():
            for a, b in d.links:
                self.edges.add((a, b, d.id))
                door_parts[a].add(d.id)
                door_parts[b].add(d.id)
        self._leavable = defaultdict(set)
        self._enterable = defaultdict(set)
        for a, b, d in self.edges:
            self._leavable[a].add(d)
            self._enterable[d].add(b)
        for pid, p in self.partitions.items():
            p.door_ids = tuple(sorted(door_parts.get(pid, ())))

        self.d2d = {}
        for pid, p in self.partitions.items():
            n = len(p.door_ids)
            m = np.zeros((n, n))
            for i, di in enumerate(p.door_ids):
                for j, dj in enumerate(p.door_ids):
                    if i != j:
                        m[i, j] = self._raw_d2d(pid, di, dj)
            self.d2d[pid] = (p.door_ids, {d: i for i, d in enumerate(p.door_ids)}, m)

        self._by_floor = defaultdict(list)
        for p in self.partitions.values():
            self._by_floor[p.floor].append(p)
        self._lattice_cache = {}

    # -- construction -------------------------------------------------------------

    def _raw_d2d(self, pid, di, dj):
        if (pid, di, dj) in self.stair_lengths:
            return self.stair_lengths[(pid, di, dj)]
        a, b = self.doors[di].location, self.doors[dj].location
        return math.hypot(a.x - b.x, a.y - b.y)

    @classmethod
    def from_dict(cls, data, text=None, path=None):
        return _parse_floorplan(data, text=text, path=path)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            text = fh.read()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FloorplanError(f"invalid JSON: {exc.msg}", line=exc.lineno, path=path) from None
        return cls.from_dict(data, text=text, path=path)

    def to_dict(self):
        stairs = []
        seen = set()
        for (pid, da, db), length in sorted(self.stair_lengths.items()):
            if pid in seen:
                continue
            seen.add(pid)
            stairs.append({"partition": pid, "doors": [da, db], "length": length})
        return {
            "floors": list(self.floors),
            "partitions": [
                {"id": p.id, "floor": p.floor, "polygon": [[float(x), float(y)] for x, y in p.polygon]}
                for p in self.partitions.values()
            ],
            "doors": [
                {"id": d.id, "x": d.location.x, "y": d.location.y, "floor": d.location.floor,
                 "links": [list(link) for link in d.links]}
                for d in self.doors.values()
            ],
            "staircases": stairs,
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    # -- queries ------------------------------------------------------------------

    def host(self, loc):
        """Id of the partition containing ``loc``; shared boundaries go to the smallest id."""
        idx = self.host_index(loc.x, loc.y, loc.floor)
        if idx < 0:
            raise UnlocatableError(f"unlocatable point ({loc.x}, {loc.y}) on floor {loc.floor}")
        return self.part_ids[idx]

    def host_index(self, x, y, floor):
        for p in self._by_floor.get(floor, ()):
            x0, y0, x1, y1 = p.bbox
            if x0 - TOL <= x <= x1 + TOL and y0 - TOL <= y <= y1 + TOL:
                if geometry.contains_point(x, y, p.vertices):
                    # partitions are visited in index order, first hit is the smallest id
                    return p.index
        return -1

    def host_many(self, xs, ys, floors):
        """Vectorized :meth:`host`; returns partition indices, -1 where unlocatable."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        floors = np.asarray(floors, dtype=int)
        out = np.full(len(xs), -1, dtype=np.int64)
        for f in np.unique(floors):
            sel = np.flatnonzero(floors == f)
            for p in self._by_floor.get(int(f), ()):
                todo = sel[out[sel] < 0]
                if len(todo) == 0:
                    break
                x0, y0, x1, y1 = p.bbox
                px, py = xs[todo], ys[todo]
                near = (px >= x0 - TOL) & (px <= x1 + TOL) & (py >= y0 - TOL) & (py <= y1 + TOL)
                if not near.any():
                    continue
                cand = todo[near]
                hit = geometry.points_in_polygon(xs[cand], ys[cand], p.polygon)
                out[cand[hit]] = p.index
        return out

    def contact_distance(self, li, lj):
        if self.host(li) != self.host(lj):
            return math.inf
        return math.hypot(li.x - lj.x, li.y - lj.y)

    def door_to_door(self, v, di, dj):
        ids, pos, m = self.d2d[self._check_partition(v)]
        if di not in pos or dj not in pos:
            raise KeyError(f"door {di if di not in pos else dj} is not on partition {v}")
        return float(m[pos[di], pos[dj]])

    def leavable_doors(self, v):
        return frozenset(self._leavable.get(self._check_partition(v), ()))

    def enterable_partitions(self, d):
        if d not in self.doors:
            raise KeyError(f"unknown door {d}")
        return frozenset(self._enterable.get(d, ()))

    def lattice_points(self, v, ll):
        """Lattice with pitch ``ll`` anchored at the bbox min corner, row-major.

        Boundary points are kept only when they host to ``v``.
        """
        if ll <= 0:
            raise ValueError("lattice side length must be positive")
        key = (v, float(ll))
        hit = self._lattice_cache.get(key)
        if hit is not None:
            return hit
        p = self.partitions[self._check_partition(v)]
        gx, gy = geometry.grid_points(p.bbox, ll)
        inside = geometry.points_in_polygon(gx, gy, p.polygon)
        gx, gy = gx[inside], gy[inside]
        edge = geometry.on_boundary(gx, gy, p.polygon)
        if edge.any():
            owner = self.host_many(gx[edge], gy[edge], np.full(edge.sum(), p.floor))
            keep = np.ones(len(gx), dtype=bool)
            keep[np.flatnonzero(edge)[owner != p.index]] = False
            gx, gy = gx[keep], gy[keep]
        gx.setflags(write=False)
        gy.setflags(write=False)
        self._lattice_cache[key] = (gx, gy)
        return gx, gy

    def max_door_distance(self, v, d):
        p = self.partitions[self._check_partition(v)]
        if d not in p.door_ids:
            raise KeyError(f"door {d} is not on partition {v}")
        loc = self.doors[d].location
        return self.max_point_distance(v, loc.x, loc.y)

    def max_point_distance(self, v, x, y):
        poly = self.partitions[v].polygon
        return float(np.hypot(poly[:, 0] - x, poly[:, 1] - y).max())

    def door_xy(self, d):
        loc = self.doors[d].location
        return loc.x, loc.y

    def _check_partition(self, v):
        if v not in self.partitions:
            raise KeyError(f"unknown partition {v}")
        return v

    def shortest_door_path(self, src, dst):
        """Door sequence of a shortest indoor path between two locations.

        Returns ``(length, [door ids])``; ``(inf, None)`` when unreachable.
        """
        vs, vt = self.host(src), self.host(dst)
        if vs == vt:
            return src.distance(dst), []
        dist = {}
        prev = {}
        heap = []
        for d in self.leavable_doors(vs):
            dl = self.doors[d].location
            dist[d] = math.hypot(src.x - dl.x, src.y - dl.y)
            prev[d] = (None, vs)
            heapq.heappush(heap, (dist[d], d))
        best = (math.inf, None)
        done = set()
        while heap:
            dd, d = heapq.heappop(heap)
            if d in done or dd > dist[d]:
                continue
            done.add(d)
            if dd >= best[0]:
                break
            for v in sorted(self._enterable.get(d, ())):
                if v == prev[d][1]:
                    continue
                if v == vt:
                    dl = self.doors[d].location
                    total = dd + math.hypot(dl.x - dst.x, dl.y - dst.y)
                    if total < best[0]:
                        best = (total, d)
                for dj in self._leavable.get(v, ()):
                    if dj in done:
                        continue
                    nd = dd + self.door_to_door(v, d, dj)
                    if nd < dist.get(dj, math.inf):
                        dist[dj] = nd
                        prev[dj] = (d, v)
                        heapq.heappush(heap, (nd, dj))
        if best[1] is None:
            return math.inf, None
        path = []
        d = best[1]
        while d is not None:
            path.append(d)
            d = prev[d][0]
        return best[0], path[::-1]


def _line_of(text, needle):
    if text is None:
        return None
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def _parse_floorplan(data, text=None, path=None):
    def fail(msg, key=None):
        line = None
        if key is not None:
            line = _line_of(text, json.dumps(key))
        raise FloorplanError(msg, line=line, path=path)

    if not isinstance(data, dict):
        fail("floorplan must be a JSON object")
    for key in ("partitions", "doors"):
        if key not in data or not isinstance(data[key], list):
            fail(f"missing list '{key}'")
    floors = data.get("floors")
    if floors is None:
        floors = sorted({int(p.get("floor", 0)) for p in data["partitions"]})
    if not all(isinstance(f, int) for f in floors) or len(set(floors)) != len(floors):
        fail("'floors' must be distinct integers")
    floors = set(floors)

    stair_ids = {}
    for st in data.get("staircases", []):
        pid = st.get("partition")
        doors = st.get("doors")
        if not isinstance(doors, list) or len(doors) != 2:
            fail(f"staircase {pid} needs exactly two doors", pid)
        try:
            length = float(st.get("length"))
        except (TypeError, ValueError):
            fail(f"staircase {pid} has no numeric length", pid)
        if not length > 0:
            fail(f"staircase {pid} length must be positive", pid)
        stair_ids[pid] = doors

    parts = []
    seen = set()
    for raw in data["partitions"]:
        pid = raw.get("id")
        if not isinstance(pid, str) or not pid:
            fail("partition without a string id")
        if pid in seen:
            fail(f"duplicate partition id {pid}", pid)
        seen.add(pid)
        floor = raw.get("floor")
        if floor not in floors:
            fail(f"partition {pid} is on unknown floor {floor}", pid)
        try:
            poly = geometry.as_polygon(raw.get("polygon"))
        except (TypeError, ValueError) as exc:
            fail(f"partition {pid}: {exc}", pid)
        if not geometry.is_simple(poly):
            fail(f"partition {pid} polygon is not simple", pid)
        parts.append(Partition(pid, floor, poly))
    by_id = {p.id: p for p in parts}
    for pid in stair_ids:
        if pid not in by_id:
            fail(f"staircase references unknown partition {pid}", pid)

    doors = []
    dseen = set()
    for raw in data["doors"]:
        did = raw.get("id")
        if not isinstance(did, str) or not did:
            fail("door without a string id")
        if did in dseen:
            fail(f"duplicate door id {did}", did)
        dseen.add(did)
        try:
            loc = Location(float(raw["x"]), float(raw["y"]), int(raw.get("floor", 0)))
        except (KeyError, TypeError, ValueError):
            fail(f"door {did} needs numeric x, y", did)
        if loc.floor not in floors:
            fail(f"door {did} is on unknown floor {loc.floor}", did)
        links = raw.get("links")
        if not isinstance(links, list) or not links:
            fail(f"door {did} has no links", did)
        pairs = []
        for link in links:
            if not isinstance(link, (list, tuple)) or len(link) != 2:
                fail(f"door {did} link must be a [from, to] pair", did)
            a, b = link
            if a not in by_id or b not in by_id:
                fail(f"door {did} links unknown partition {a if a not in by_id else b}", did)
            if a == b:
                fail(f"door {did} links partition {a} to itself", did)
            pairs.append((a, b))
        linked = {p for pair in pairs for p in pair}
        if len(linked) > 2:
            fail(f"door {did} links more than two partitions", did)
        for pid in linked:
            p = by_id[pid]
            ok_floor = loc.floor == p.floor or (pid in stair_ids and loc.floor == p.floor + 1)
            if not ok_floor:
                fail(f"door {did} is not on the floor of partition {pid}", did)
            if not geometry.on_boundary(loc.x, loc.y, p.polygon):
                fail(f"door {did} does not lie on the boundary of partition {pid}", did)
        doors.append(Door(did, loc, tuple(pairs)))

    door_ids = {d.id: d for d in doors}
    for pid, (da, db) in stair_ids.items():
        for d in (da, db):
            if d not in door_ids or pid not in door_ids[d].partitions:
                fail(f"staircase {pid} door {d} is not a door of that partition", pid)
    return IndoorSpace(parts, doors, staircases=data.get("staircases", []), floors=floors)


class ObjectTables:
    """Per-partition, per-sampling-time buckets of objects, plus their sample sets.

    ``base`` is an optional read-only mapping ``(partition index, w) -> ids`` shared
    between queries; registrations go to a query-local overlay.
    """

    def __init__(self, base=None):
        self._base = base if base is not None else {}
        self._overlay = defaultdict(set)
        self._samples = {}
        self._where = {}

    def register_sample(self, obj, w, sample_set):
        old = self._where.pop((obj, w), ())
        for v in old:
            self._overlay[(v, w)].discard(obj)
        parts = tuple(sorted(set(int(v) for v in sample_set.part)))
        for v in parts:
            self._overlay[(v, w)].add(obj)
        self._where[(obj, w)] = parts
        self._samples[(obj, w)] = sample_set

    def objects(self, v, w):
        base = self._base.get((v, w), frozenset())
        extra = self._overlay.get((v, w))
        if extra:
            return frozenset(base) | extra
        return base

    def sample_set(self, obj, w):
        return self._samples.get((obj, w))

    def registered(self):
        return list(self._samples)

    def __len__(self):
        return len(self._samples)
