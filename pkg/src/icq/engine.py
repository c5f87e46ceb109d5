"""Query processing: sample materialization, constrained and sequential search, baselines.

Grid times are integers ``w`` with ``t = t_origin + w * dt``. A search runs over
``[ws, we]``, the query interval clipped to the query object's lifespan.
"""

import csv
import json
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .contact import ContactCache, InstantContact, QueryStats
from .space import ObjectTables
from .trajectories import SampleSet
from .uncertainty import Deriver


METHODS = ("constrained", "sequential", "euclidean", "raw")


@dataclass
class QuerySpec:
    query_object: str
    t_start: float
    t_end: float
    delta: float = 2.0
    eta: float = 0.5
    k: int = 18
    method: str = "constrained"
    qid: str = None

    def __post_init__(self):
        if self.t_start > self.t_end:
            raise ValueError("query interval must have t_start <= t_end")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must be in (0, 1]")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")
        self.k = int(self.k)
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {', '.join(METHODS)}")


@dataclass
class QueryResult:
    contacts: frozenset
    stats: QueryStats
    wall_ms: float = 0.0
    method: str = "constrained"
    qid: str = None
    span: tuple = None  # (ws, we) grid range searched, None when empty

    def __iter__(self):
        return iter(sorted(self.contacts))


# -- sample worlds ------------------------------------------------------------------


class StoreSamples:
    """Samples drawn from a trajectory store for one query.

    Original samples of every object come from the store's shared index;
    derived samples are produced on demand and memoized for this query only.
    """

    def __init__(self, store, query_object, ws, we, ll=0.4, v_max=1.4, mode="indoor"):
        self.store = store
        self.query_object = query_object
        self.deriver = Deriver(store.space, store, v_max=v_max, ll=ll, mode=mode)
        self.tables = ObjectTables(base=store.original_index())
        self.query_samples = {}
        self._originals = {}
        for w in range(ws, we + 1):
            s = self._raw_sample(query_object, w)
            self.query_samples[w] = s
            if s.kind != "original" and len(s):
                self.tables.register_sample(query_object, w, s)

    def _raw_sample(self, obj, w):
        p = self.store.piece_at(obj, w)
        if p is None:
            return SampleSet.empty()
        i = p.hit(w)
        if i >= 0:
            key = (p.key, i)
            s = self._originals.get(key)
            if s is None:
                s = self._originals[key] = SampleSet(p.x[i:i + 1], p.y[i:i + 1], p.floor[i:i + 1],
                                                     p.part[i:i + 1], [1.0], "original")
            return s
        return self.deriver.derive(obj, w)

    def sample(self, obj, w):
        if obj == self.query_object:
            s = self.query_samples.get(w)
            if s is not None:
                return s
        return self._raw_sample(obj, w)

    def is_original(self, obj, w):
        return self.store.is_original(obj, w)

    @property
    def derivations(self):
        return self.deriver.derivations

    def tracked(self):
        return self.deriver.tracked_samples() + sum(len(s) for s in self.query_samples.values())


class ExplicitSamples:
    """Hand-specified sample sets ``{obj: {w: SampleSet}}``; every set is registered up front."""

    def __init__(self, samples):
        self.samples = samples
        self.tables = ObjectTables()
        for obj in sorted(samples):
            for w, s in sorted(samples[obj].items()):
                self.tables.register_sample(obj, w, s)

    def sample(self, obj, w):
        return self.samples.get(obj, {}).get(w) or SampleSet.empty()

    def is_original(self, obj, w):
        s = self.samples.get(obj, {}).get(w)
        return s is not None and s.kind == "original"

    def span(self, obj):
        ws = sorted(self.samples[obj])
        return ws[0], ws[-1]

    derivations = 0

    def tracked(self):
        return sum(len(s) for per in self.samples.values() for s in per.values())


# -- search -------------------------------------------------------------------------


def _sample_partitions(s):
    # distinct host partitions in sample order
    if len(s) == 1:
        return [int(s.part[0])]
    _, first = np.unique(s.part, return_index=True)
    return s.part[np.sort(first)].tolist()


def _candidates(world, o, w):
    s = world.sample(o, w)
    seen = set()
    out = []
    for v in _sample_partitions(s):
        for c in sorted(world.tables.objects(v, w)):
            if c == o or c in seen:
                continue
            seen.add(c)
            out.append(c)
    return out


def _discovered(world, o, c, w):
    return any(c in world.tables.objects(v, w) for v in _sample_partitions(world.sample(o, w)))


def c_search(world, o, ws, we, k, ic):
    """Constrained search with time skipping.

    After a non-contact at time ``t`` the candidate's windows through ``t`` are
    never rescanned. When a discovery time is in contact, the end of the scan
    range is pushed forward over the following times at which the candidate
    would not be discovered again, so windows that reach past it are not lost.
    """
    result = set()
    stats = ic.stats
    for w in range(ws, we + 1):
        for c in _candidates(world, o, w):
            stats.candidates += 1
            if c in result:
                continue
            t_ln = ic.cache.latest_non_contact(c)
            if ic(o, c, w):
                t_ec = w
                q = w + 1
                while q <= we and not _discovered(world, o, c, q) and ic(o, c, q):
                    t_ec = q
                    q += 1
            else:
                t_ec = w - 1
            t_sc = max(ws, t_ec - (k - 1), t_ln + 1)
            if t_ec - t_sc < k - 1:
                stats.skipped_checks += 1
                continue
            stats.window_scans += 1
            tq = int(t_sc)
            while tq + k - 1 <= t_ec:
                if ic.close_contact(o, c, tq, k):
                    result.add(c)
                    break
                tq += 1
    return result


def s_search(world, o, ws, we, k, ic):
    """Sequential search: every discovered candidate is checked for a window starting at ``w``.

    Windows that start before the candidate's first discovery are reached by
    walking back over consecutive undiscovered contact times.
    """
    result = set()
    stats = ic.stats
    for w in range(ws, we + 1):
        for c in _candidates(world, o, w):
            stats.candidates += 1
            if w + k - 1 <= we and ic.close_contact(o, c, w, k):
                result.add(c)
            if w <= ws + k - 1 and ws + k - 1 <= we and ic.close_contact(o, c, ws, k):
                result.add(c)
            a = w
            while a - 1 >= ws and not _discovered(world, o, c, a - 1) and ic(o, c, a - 1):
                a -= 1
            if a < w and a + k - 1 <= we:
                stats.window_scans += 1
                if ic.close_contact(o, c, a, k):
                    result.add(c)
    return result


def r_search(world, o, ws, we, k, ic):
    """Contacts observed directly: runs of ``k`` grid times where both objects are original and in contact."""
    result = set()
    runs = {}
    for w in range(ws, we + 1):
        if not world.is_original(o, w):
            runs = {}
            continue
        nxt = {}
        for c in _candidates(world, o, w):
            ic.stats.candidates += 1
            if not world.is_original(c, w) or not ic(o, c, w):
                continue
            nxt[c] = runs.get(c, 0) + 1
            if nxt[c] >= k:
                result.add(c)
        runs = nxt
    return result


SEARCH = {"constrained": c_search, "sequential": s_search, "euclidean": c_search, "raw": r_search}


# -- processing ---------------------------------------------------------------------


def clip_interval(store, spec):
    """Grid range of the query interval intersected with the query object's lifespan, or None."""
    first_t, last_et = store.lifespan(spec.query_object)
    ts = max(spec.t_start, first_t)
    te = min(spec.t_end, last_et)
    ws = store.grid.first_at_or_after(ts)
    we = store.grid.last_at_or_before(te)
    if ws > we:
        return None
    return ws, we


def icq_process(store, spec, ll=0.4, v_max=1.4):
    """Answer one contact query over a trajectory store."""
    t0 = time.perf_counter()
    if spec.query_object not in store:
        raise KeyError(f"unknown query object {spec.query_object}")
    if store.kprime is not None and spec.k < store.kprime and spec.method != "raw":
        warnings.warn(f"k={spec.k} is below the split parameter k'={store.kprime}; "
                      "contacts in windows without an original sample may be missed", stacklevel=2)
    stats = QueryStats()
    span = clip_interval(store, spec)
    if span is None:
        return QueryResult(frozenset(), stats, (time.perf_counter() - t0) * 1e3, spec.method, spec.qid)
    ws, we = span
    mode = "euclidean" if spec.method == "euclidean" else "indoor"
    world = StoreSamples(store, spec.query_object, ws, we, ll=ll, v_max=v_max, mode=mode)
    contacts = run_search(world, spec, ws, we, stats)
    stats.derivations = world.derivations
    return QueryResult(frozenset(contacts), stats, (time.perf_counter() - t0) * 1e3, spec.method, spec.qid,
                       (ws, we))


def run_search(world, spec, ws, we, stats=None):
    """Dispatch the search method of ``spec`` over an already prepared sample world."""
    stats = stats if stats is not None else QueryStats()
    ic = InstantContact(world.sample, spec.delta, spec.eta, pruned=spec.method != "sequential",
                        stats=stats, cache=ContactCache())
    found = SEARCH[spec.method](world, spec.query_object, ws, we, spec.k, ic)
    found.discard(spec.query_object)
    stats.peak_tracked = max(stats.peak_tracked, world.tracked() + len(ic.cache))
    return found


# -- files --------------------------------------------------------------------------


def read_queries(path):
    """Query file: a JSON list of objects with ``object``, ``t_start``, ``t_end`` and optional
    ``id``, ``delta``, ``eta``, ``k``, ``method``."""
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("queries", [])
    specs = []
    for i, q in enumerate(data):
        try:
            specs.append(QuerySpec(str(q["object"]), float(q["t_start"]), float(q["t_end"]),
                                   float(q.get("delta", 2.0)), float(q.get("eta", 0.5)), q.get("k", 18),
                                   q.get("method", "constrained"), str(q.get("id", i))))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}: query #{i}: {exc}") from None
    return specs


def write_queries(path, specs):
    rows = [{"id": s.qid, "object": s.query_object, "t_start": s.t_start, "t_end": s.t_end,
             "delta": s.delta, "eta": s.eta, "k": s.k, "method": s.method} for s in specs]
    with open(path, "w") as fh:
        json.dump(rows, fh, indent=1)


RESULT_FIELDS = ["query_id", "method", "contacts", "wall_ms"] + list(QueryStats().as_dict())


def write_results(fh, results):
    w = csv.writer(fh)
    w.writerow(RESULT_FIELDS)
    for r in results:
        w.writerow([r.qid, r.method, " ".join(sorted(r.contacts)), f"{r.wall_ms:.3f}"]
                   + list(r.stats.as_dict().values()))


__all__ = ["QuerySpec", "QueryResult", "StoreSamples", "ExplicitSamples", "c_search", "s_search",
           "r_search", "icq_process", "run_search", "clip_interval", "read_queries", "write_queries",
           "write_results", "METHODS"]
