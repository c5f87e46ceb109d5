"""Indoor uncertainty regions and lattice-based derived samples.

An uncertainty region maps partition ids to portions. A portion is a disc
fragment bounded by the partition walls, centered at either the seed location
(in the seed's host partition) or at the door through which the expansion
entered the partition.
"""

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .trajectories import SampleSet


@dataclass(frozen=True)
class Portion:
    center: object  # a Location (seed) or a door id
    radius: float
    x: float
    y: float

    @property
    def is_door(self):
        return isinstance(self.center, str)


def find_iur(space, loc, dist):
    """Portions of indoor space within indoor distance ``dist`` of ``loc``.

    Doors are expanded in order of indoor distance; a partition entered through
    door ``d`` with residual budget ``r`` receives the portion ``(d, r)``.
    """
    if dist < 0:
        raise ValueError("distance budget must be non-negative")
    v = space.host(loc)
    region = {v: [Portion(loc, float(dist), loc.x, loc.y)]}
    best = {}
    prev = {}
    heap = []
    for d in sorted(space.leavable_doors(v)):
        dx, dy = space.door_xy(d)
        best[d] = math.hypot(loc.x - dx, loc.y - dy)
        prev[d] = v
        heapq.heappush(heap, (best[d], d))
    visited = set()
    while heap:
        dd, d = heapq.heappop(heap)
        if d in visited or dd > best[d]:
            continue  # stale heap entry
        if dd > dist:
            break
        for vi in sorted(space.enterable_partitions(d)):
            if vi == prev[d]:
                continue
            dx, dy = space.door_xy(d)
            portion = Portion(d, float(dist - dd), dx, dy)
            portions = region.setdefault(vi, [])
            if portion not in portions:
                portions.append(portion)
            visited.add(d)
            for dj in sorted(space.leavable_doors(vi)):
                if dj in visited:
                    continue
                nd = dd + space.door_to_door(vi, d, dj)
                if nd < best.get(dj, math.inf):
                    best[dj] = nd
                    prev[dj] = vi
                    heapq.heappush(heap, (nd, dj))
    return region


def region_contains(space, region, loc):
    """Whether ``loc`` falls in some portion of ``region`` (closed discs)."""
    v = space.host(loc)
    return any(math.hypot(loc.x - p.x, loc.y - p.y) <= p.radius for p in region.get(v, ()))


def _mbr(p, box):
    return (max(p.x - p.radius, box[0]), max(p.y - p.radius, box[1]),
            min(p.x + p.radius, box[2]), min(p.y + p.radius, box[3]))


def _intersect(a, b):
    return max(a[0], b[0]), max(a[1], b[1]), min(a[2], b[2]), min(a[3], b[3])


def _in_box(gx, gy, box):
    return (gx >= box[0]) & (gx <= box[2]) & (gy >= box[1]) & (gy <= box[3])


class Deriver:
    """Derives and memoizes sample sets at unobserved sampling times.

    ``mode="indoor"`` intersects wall-aware uncertainty regions; ``mode="euclidean"``
    intersects free-space circles instead. The memo is meant to live for one query.
    """

    def __init__(self, space, store, v_max=1.4, ll=0.4, mode="indoor"):
        if not v_max > 0:
            raise ValueError("v_max must be positive")
        if not ll > 0:
            raise ValueError("lattice side length must be positive")
        if mode not in ("indoor", "euclidean"):
            raise ValueError(f"unknown derivation mode {mode!r}")
        self.space = space
        self.store = store
        self.v_max = v_max
        self.ll = ll
        self.mode = mode
        self.memo = {}
        self.derivations = 0

    def derive(self, obj, w):
        key = (obj, w)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        ctx = self.store.context(obj, w)
        if ctx.is_original:
            raise ValueError(f"{obj} has an original sample at grid time {w}")
        out = self.between(ctx.prev, ctx.next, self.store.grid.time(w))
        self.memo[key] = out
        return out

    def between(self, prev, nxt, ts):
        """Sample set at ``ts`` for an object last seen in ``prev`` and next seen in ``nxt``."""
        self.derivations += 1
        r_prev = (ts - prev.et) * self.v_max
        r_next = (nxt.t - ts) * self.v_max
        if r_prev < 0 or r_next < 0:
            raise ValueError("sampling time is not between the two records")
        if self.mode == "euclidean":
            return self._between_euclidean(prev.location, r_prev, nxt.location, r_next)
        up_prev = find_iur(self.space, prev.location, r_prev)
        up_next = find_iur(self.space, nxt.location, r_next)
        common = sorted(set(up_prev) & set(up_next), key=lambda v: self.space.partitions[v].index)
        xs, ys, fl, parts = [], [], [], []
        for v in common:
            mask = self._partition_mask(v, up_prev[v], up_next[v])
            if mask is None or not mask.any():
                continue
            gx, gy = self.space.lattice_points(v, self.ll)
            p = self.space.partitions[v]
            xs.append(gx[mask])
            ys.append(gy[mask])
            fl.append(np.full(mask.sum(), p.floor))
            parts.append(np.full(mask.sum(), p.index))
        return _collect(xs, ys, fl, parts)

    def _partition_mask(self, v, portions_prev, portions_next):
        gx, gy = self.space.lattice_points(v, self.ll)
        if len(gx) == 0:
            return None
        box = self.space.partitions[v].bbox
        mask = np.zeros(len(gx), dtype=bool)
        for pp in portions_prev:
            dm_prev = self.space.max_point_distance(v, pp.x, pp.y)
            for pn in portions_next:
                dm_next = self.space.max_point_distance(v, pn.x, pn.y)
                if pp.radius + pn.radius < math.hypot(pp.x - pn.x, pp.y - pn.y):
                    continue  # disjoint portions
                if pp.radius > dm_prev and pn.radius > dm_next:
                    mask[:] = True  # both portions cover the whole partition
                    return mask
                mbr = _intersect(_mbr(pp, box), _mbr(pn, box))
                if mbr[0] > mbr[2] or mbr[1] > mbr[3]:
                    continue
                sel = np.flatnonzero(_in_box(gx, gy, mbr) & ~mask)
                ok = ((np.hypot(gx[sel] - pp.x, gy[sel] - pp.y) < pp.radius)
                      & (np.hypot(gx[sel] - pn.x, gy[sel] - pn.y) < pn.radius))
                mask[sel[ok]] = True
        return mask

    def _between_euclidean(self, a, ra, b, rb):
        if a.floor != b.floor or ra + rb < a.distance(b):
            return SampleSet.empty()
        box = (max(a.x - ra, b.x - rb), max(a.y - ra, b.y - rb),
               min(a.x + ra, b.x + rb), min(a.y + ra, b.y + rb))
        xs, ys, fl, parts = [], [], [], []
        for v in self.space.part_ids:
            p = self.space.partitions[v]
            if p.floor != a.floor:
                continue
            clip = _intersect(box, p.bbox)
            if clip[0] > clip[2] or clip[1] > clip[3]:
                continue
            gx, gy = self.space.lattice_points(v, self.ll)
            sel = np.flatnonzero(_in_box(gx, gy, clip))
            ok = ((np.hypot(gx[sel] - a.x, gy[sel] - a.y) < ra)
                  & (np.hypot(gx[sel] - b.x, gy[sel] - b.y) < rb))
            sel = sel[ok]
            if len(sel):
                xs.append(gx[sel])
                ys.append(gy[sel])
                fl.append(np.full(len(sel), p.floor))
                parts.append(np.full(len(sel), p.index))
        return _collect(xs, ys, fl, parts)

    def tracked_samples(self):
        return sum(len(s) for s in self.memo.values())


def _collect(xs, ys, fl, parts):
    if not xs:
        return SampleSet.empty()
    return SampleSet.uniform(np.concatenate(xs), np.concatenate(ys),
                             np.concatenate(fl), np.concatenate(parts))
