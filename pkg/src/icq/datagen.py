"""Synthetic floorplans, random-destination movement, record emission and labeled contact benchmarks.

Floors are laid out as bands: a row of rooms, a corridor, another row of rooms.
Every room has one door onto its band's corridor. When a floor has several
bands, or the building several floors, a vertical connector corridor runs along
the right edge and staircases sit next to it.
"""

import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .space import IndoorSpace, Location
from .trajectories import PositioningRecord, write_trajectories


@dataclass
class SimConfig:
    floors: int = 1
    room_rows: int = 4
    room_cols: int = 5
    room_size: float = 4.0
    corridor_width: float = 3.0
    staircases: int = 2
    stair_length: float = 20.0
    stair_width: float = 3.0
    horizon: float = 7200.0
    min_lifespan: float = 3600.0
    dwell: tuple = (0.0, 480.0)
    speed: tuple = (0.5, 1.0)  # fraction of v_max drawn per leg
    report_period: float = 10.0
    expiry: float = 5.0
    v_max: float = 1.4
    dropout: float = 0.10
    offset: float = 1.0
    offset_fraction: float = 0.5
    n_objects: int = 200
    n_queries: int = 20
    n_injected: int = 10
    segment: tuple = (500.0, 1800.0)
    delta: float = 2.0
    k: int = 18
    seed: int = 0

    def __post_init__(self):
        for name in ("floors", "room_rows", "room_cols"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        for name in ("room_size", "corridor_width", "stair_length", "horizon", "report_period", "v_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must be in [0, 1)")
        if self.expiry < 0 or self.expiry >= self.report_period:
            raise ValueError("expiry must be in [0, report_period)")
        if self.min_lifespan > self.horizon:
            raise ValueError("min_lifespan exceeds the horizon")
        self.dwell = tuple(self.dwell)
        self.speed = tuple(self.speed)
        self.segment = tuple(self.segment)
        if not 0 < self.speed[0] <= self.speed[1] <= 1:
            raise ValueError("speed fractions must satisfy 0 < lo <= hi <= 1")

    @classmethod
    def full_scale(cls, **kw):
        base = dict(floors=5, room_rows=10, room_cols=12, staircases=4, horizon=86400.0, n_objects=2000)
        base.update(kw)
        return cls(**base)

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            data = json.load(fh)
        return cls(**data)

    def to_dict(self):
        return asdict(self)


# -- floorplan ----------------------------------------------------------------------


def _rect(x0, y0, x1, y1):
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


def generate_floorplan(cfg):
    """Floorplan dictionary (see :mod:`icq.space` for the schema)."""
    rs, cw = cfg.room_size, cfg.corridor_width
    bands = (cfg.room_rows + 1) // 2
    width = cfg.room_cols * rs
    band_h = 2 * rs + cw
    height = bands * band_h
    connector = bands > 1 or cfg.floors > 1
    parts, doors, stairs = [], [], []
    counter = [0]

    def door(x, y, f, a, b):
        did = f"D{counter[0]:04d}"
        counter[0] += 1
        doors.append({"id": did, "x": x, "y": y, "floor": f, "links": [[a, b], [b, a]]})
        return did

    slots = max(2 * cfg.staircases, 1)
    slot_h = height / slots
    for f in range(cfg.floors):
        for b in range(bands):
            y0 = b * band_h
            cid = f"F{f}C{b}"
            cy0, cy1 = y0 + rs, y0 + rs + cw
            parts.append({"id": cid, "floor": f, "polygon": _rect(0, cy0, width, cy1)})
            rows = [("L", y0, y0 + rs, cy0)]
            if 2 * b + 1 < cfg.room_rows:
                rows.append(("U", cy1, cy1 + rs, cy1))
            for tag, ry0, ry1, wall in rows:
                for c in range(cfg.room_cols):
                    rid = f"F{f}R{b}{tag}{c:02d}"
                    parts.append({"id": rid, "floor": f, "polygon": _rect(c * rs, ry0, (c + 1) * rs, ry1)})
                    door((c + 0.5) * rs, wall, f, rid, cid)
            if connector:
                door(width, (cy0 + cy1) / 2, f, cid, f"F{f}X")
        if connector:
            parts.append({"id": f"F{f}X", "floor": f, "polygon": _rect(width, 0, width + cw, height)})
        if f + 1 < cfg.floors:
            for s in range(cfg.staircases):
                slot = 2 * s + (f % 2)
                sy0, sy1 = slot * slot_h, (slot + 1) * slot_h
                sid = f"F{f}S{s}"
                x0 = width + cw
                parts.append({"id": sid, "floor": f, "polygon": _rect(x0, sy0, x0 + cfg.stair_width, sy1)})
                ym = (sy0 + sy1) / 2
                lower = door(x0, ym, f, f"F{f}X", sid)
                upper = door(x0, ym, f + 1, sid, f"F{f + 1}X")
                stairs.append({"partition": sid, "doors": [lower, upper], "length": cfg.stair_length})
    return {"floors": list(range(cfg.floors)), "partitions": parts, "doors": doors, "staircases": stairs}


def connected_components(space):
    adj = {v: set() for v in space.part_ids}
    for a, b, _ in space.edges:
        adj[a].add(b)
        adj[b].add(a)
    seen, comps = set(), []
    for v in space.part_ids:
        if v in seen:
            continue
        stack, comp = [v], set()
        while stack:
            u = stack.pop()
            if u in comp:
                continue
            comp.add(u)
            stack.extend(adj[u] - comp)
        seen |= comp
        comps.append(comp)
    return comps


# -- movement -----------------------------------------------------------------------


class Path:
    """Piecewise-linear ground-truth movement with a partition label per segment."""

    def __init__(self, t0, t1, x0, y0, x1, y1, floor, part):
        self.t0, self.t1 = np.asarray(t0, float), np.asarray(t1, float)
        self.x0, self.y0 = np.asarray(x0, float), np.asarray(y0, float)
        self.x1, self.y1 = np.asarray(x1, float), np.asarray(y1, float)
        self.floor = np.asarray(floor, int)
        self.part = np.asarray(part, int)

    @property
    def start(self):
        return float(self.t0[0])

    @property
    def end(self):
        return float(self.t1[-1])

    def at(self, ts):
        """Positions at times ``ts`` (inside ``[start, end]``): x, y, floor, partition index."""
        ts = np.asarray(ts, float)
        i = np.clip(np.searchsorted(self.t1, ts, side="right"), 0, len(self.t1) - 1)
        span = self.t1[i] - self.t0[i]
        u = np.where(span > 0, (ts - self.t0[i]) / np.where(span > 0, span, 1.0), 0.0)
        u = np.clip(u, 0.0, 1.0)
        x = self.x0[i] + u * (self.x1[i] - self.x0[i])
        y = self.y0[i] + u * (self.y1[i] - self.y0[i])
        return x, y, self.floor[i], self.part[i]


def random_point(space, rng, pid):
    p = space.partitions[pid]
    x0, y0, x1, y1 = p.bbox
    while True:
        x, y = rng.uniform(x0, x1), rng.uniform(y0, y1)
        if space.host_index(x, y, p.floor) == p.index:
            return Location(float(x), float(y), p.floor)


def _walk_legs(space, src, dst, doors):
    """Straight legs (from, to, partition id) following the door sequence from src to dst."""
    legs = []
    here, here_part = src, space.host(src)
    for d in doors:
        dl = space.doors[d].location
        part = space.partitions[here_part]
        if part.staircase:
            # staircase doors share a footprint point; route through its middle
            c = part.centroid
            legs.append((here, c, here_part))
            legs.append((c, dl, here_part))
        else:
            legs.append((here, dl, here_part))
        nxt = [p for p in space.doors[d].partitions if p != here_part]
        here, here_part = dl, (nxt[0] if nxt else here_part)
    legs.append((here, dst, here_part))
    return legs


def simulate_object(space, cfg, rng, start, end, rooms):
    """Random-destination walk between ``start`` and ``end`` seconds."""
    stair_len = {pid: length for (pid, _, _), length in space.stair_lengths.items()}
    here = random_point(space, rng, rooms[rng.integers(len(rooms))])
    t = start
    seg = []

    def add(t0, t1, a, b, pid):
        p = space.partitions[pid]
        seg.append((t0, t1, a.x, a.y, b.x, b.y, p.floor, p.index))

    while t < end:
        stay = rng.uniform(*cfg.dwell)
        add(t, t + stay, here, here, space.host(here))
        t += stay
        if t >= end:
            break
        dest = random_point(space, rng, rooms[rng.integers(len(rooms))])
        length, doors = space.shortest_door_path(here, dest)
        if doors is None:
            continue
        speed = cfg.v_max * rng.uniform(*cfg.speed)
        for a, b, pid in _walk_legs(space, here, dest, doors):
            d = math.hypot(b.x - a.x, b.y - a.y)
            if pid in stair_len:
                d = max(d, stair_len[pid] / 2)
            dt = d / speed
            add(t, t + dt, a, b, pid)
            t += dt
        here = dest
    cols = list(zip(*seg))
    path = Path(*cols)
    path.t1[-1] = max(path.t1[-1], end)
    return path


def emit_records(path, cfg, start, end, rng=None, dropout=0.0, offset=0.0, space=None):
    """Records at report-period grid times in ``[start, end]``, then optionally degraded."""
    first = math.ceil(start / cfg.report_period - 1e-9)
    last = math.floor((end - cfg.expiry) / cfg.report_period + 1e-9)
    ts = np.arange(first, last + 1) * cfg.report_period
    if len(ts) == 0:
        return []
    x, y, fl, part = path.at(ts)
    x, y = x.copy(), y.copy()
    keep = np.ones(len(ts), dtype=bool)
    if dropout > 0:
        n_drop = int(round(dropout * len(ts)))
        keep[rng.choice(len(ts), size=n_drop, replace=False)] = False
    if offset > 0:
        chosen = np.flatnonzero(rng.random(len(ts)) < cfg.offset_fraction)
        for i in chosen:
            x[i], y[i] = _offset_within(space, rng, x[i], y[i], int(fl[i]), int(part[i]), offset)
    return [PositioningRecord(Location(float(x[i]), float(y[i]), int(fl[i])), float(ts[i]),
                              float(ts[i] + cfg.expiry)) for i in np.flatnonzero(keep)]


def _offset_within(space, rng, x, y, floor, part, radius, tries=20):
    for _ in range(tries):
        r = radius * math.sqrt(rng.random())
        a = rng.uniform(0, 2 * math.pi)
        nx, ny = x + r * math.cos(a), y + r * math.sin(a)
        if space.host_index(nx, ny, floor) == part:
            return nx, ny
    return x, y


# -- benchmark instances ------------------------------------------------------------


@dataclass
class QueryInstance:
    qid: str
    query_object: str
    t_start: float
    t_end: float
    injected: list = field(default_factory=list)


@dataclass
class Dataset:
    config: SimConfig
    floorplan: dict
    space: IndoorSpace
    paths: dict  # object id -> Path (ground-truth movement)
    lifespans: dict  # object id -> (start, end)
    records: dict  # object id -> [PositioningRecord]
    queries: list
    truth: dict = field(default_factory=dict)  # query id -> sorted object ids


def generate(cfg):
    """Floorplan, movement, records, injected contacts and ground truth for ``cfg``."""
    rng = np.random.default_rng(cfg.seed)
    plan = generate_floorplan(cfg)
    space = IndoorSpace.from_dict(plan)
    rooms = [pid for pid in space.part_ids if not space.partitions[pid].staircase]
    paths, spans, records = {}, {}, {}
    width = max(len(str(cfg.n_objects - 1)), 3)
    for i in range(cfg.n_objects):
        oid = f"o{i:0{width}d}"
        start = rng.uniform(0, cfg.horizon - cfg.min_lifespan)
        end = rng.uniform(start + cfg.min_lifespan, cfg.horizon)
        path = simulate_object(space, cfg, rng, start, end, rooms)
        paths[oid], spans[oid] = path, (start, end)
        records[oid] = emit_records(path, cfg, start, end, rng, dropout=cfg.dropout)

    queries = []
    objs = sorted(paths)
    pool = [o for o in objs if spans[o][1] - spans[o][0] >= cfg.segment[0]]
    chosen = rng.choice(len(pool), size=min(cfg.n_queries, len(pool)), replace=False) if pool else []
    for qi, j in enumerate(sorted(int(c) for c in chosen)):
        q = pool[j]
        qs = records[q]
        inst = QueryInstance(f"q{qi:02d}", q, qs[0].t, qs[-1].et) if qs else QueryInstance(f"q{qi:02d}", q, *spans[q])
        for n in range(cfg.n_injected):
            cid = f"{inst.qid}i{n}"
            path, s, e = inject_contact(paths[q], spans[q], cfg, rng)
            paths[cid], spans[cid] = path, (s, e)
            records[cid] = emit_records(path, cfg, s, e, rng, dropout=cfg.dropout, offset=cfg.offset, space=space)
            inst.injected.append(cid)
        queries.append(inst)
    ds = Dataset(cfg, plan, space, paths, spans, records, queries)
    for inst in queries:
        ds.truth[inst.qid] = label_ground_truth(ds, inst, cfg.delta, cfg.k)
    return ds


def inject_contact(qpath, qspan, cfg, rng):
    """A copy of a random segment of the query object's true movement."""
    lo, hi = cfg.segment
    life = qspan[1] - qspan[0]
    if life < lo:
        raise ValueError("query trajectory is shorter than the shortest contact segment")
    length = rng.uniform(lo, min(hi, life))
    s = rng.uniform(qspan[0], qspan[1] - length)
    return qpath, s, s + length


def label_ground_truth(ds, inst, delta, k):
    """Objects within ``delta`` in the same partition for ``k`` consecutive grid times, by true positions."""
    grid = ds.config.report_period
    q0, q1 = ds.lifespans[inst.query_object]
    t0, t1 = max(inst.t_start, q0), min(inst.t_end, q1)
    w = np.arange(math.ceil(t0 / grid - 1e-9), math.floor(t1 / grid + 1e-9) + 1)
    ts = w * grid
    if len(ts) == 0:
        return []
    qx, qy, qf, qp = ds.paths[inst.query_object].at(ts)
    out = []
    for oid in sorted(ds.paths):
        if oid == inst.query_object:
            continue
        s, e = ds.lifespans[oid]
        alive = (ts >= s) & (ts <= e)
        if alive.sum() < k:
            continue
        x, y, f, p = ds.paths[oid].at(ts)
        hit = alive & (p == qp) & (np.hypot(x - qx, y - qy) < delta)
        if longest_run(hit) >= k:
            out.append(oid)
    return out


def longest_run(mask):
    best = run = 0
    for m in mask:
        run = run + 1 if m else 0
        best = max(best, run)
    return best


def save(ds, out_dir):
    """Write floorplan.json, trajectories.csv, queries.json, ground_truth.json and config.json."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "floorplan.json"), "w") as fh:
        json.dump(ds.floorplan, fh, indent=1)
    write_trajectories(os.path.join(out_dir, "trajectories.csv"), ds.records)
    with open(os.path.join(out_dir, "queries.json"), "w") as fh:
        json.dump([{"id": q.qid, "object": q.query_object, "t_start": q.t_start, "t_end": q.t_end,
                    "delta": ds.config.delta, "k": ds.config.k, "injected": q.injected}
                   for q in ds.queries], fh, indent=1)
    with open(os.path.join(out_dir, "ground_truth.json"), "w") as fh:
        json.dump(ds.truth, fh, indent=1, sort_keys=True)
    with open(os.path.join(out_dir, "config.json"), "w") as fh:
        json.dump(ds.config.to_dict(), fh, indent=1)
