import io
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icq.contact import InstantContact, QueryStats, contact_probability
from icq.engine import (ExplicitSamples, QuerySpec, StoreSamples, c_search, icq_process, r_search,
                        read_queries, run_search, s_search, write_queries, write_results)
from icq.space import Location
from icq.trajectories import PositioningRecord, SampleSet, TrajectoryStore

from oracles import exhaustive_icq, random_explicit_world, worked_example


def search(world, fn, o, ws, we, k, delta=2.0, eta=0.5, pruned=True):
    ic = InstantContact(world.sample, delta, eta, pruned=pruned)
    return fn(world, o, ws, we, k, ic), ic.stats


def test_worked_example():
    data = worked_example()
    world = ExplicitSamples(data)
    assert contact_probability(data["o2"][2], data["o3"][2], 2.0) == pytest.approx(0.44, abs=1e-12)
    probs = {c: [contact_probability(data["o2"][w], data[c][w], 2.0) for w in range(1, 5)] for c in ("o1", "o3")}
    assert probs["o1"] == pytest.approx([1, 0.8, 1, 0.7])
    assert probs["o3"] == pytest.approx([1, 0.44, 1, 0.3])
    for fn, pruned in ((c_search, True), (s_search, False)):
        found, _ = search(world, fn, "o2", 1, 4, 3, pruned=pruned)
        assert found == {"o1"}


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 5), st.sampled_from([0.2, 0.5, 0.8]), st.sampled_from([1.0, 2.0]))
def test_searches_match_exhaustive_definition(seed, k, eta, delta):
    rng = np.random.default_rng(seed)
    data = random_explicit_world(rng)
    world = ExplicitSamples(data)
    ws, we = world.span("o0")
    ref = exhaustive_icq(world.sample, list(data), "o0", ws, we, delta, eta, k)
    c, cs = search(world, c_search, "o0", ws, we, k, delta, eta)
    s, ss = search(world, s_search, "o0", ws, we, k, delta, eta, pruned=False)
    assert c == ref and s == ref


def test_k_one_returns_every_instant_contact():
    rng = np.random.default_rng(4)
    data = random_explicit_world(rng)
    world = ExplicitSamples(data)
    ref = {c for c in data if c != "o0" and any(
        contact_probability(world.sample("o0", w), world.sample(c, w), 2.0) >= 0.5 for w in range(12))}
    assert search(world, s_search, "o0", 0, 11, 1, pruned=False)[0] == ref
    assert search(world, c_search, "o0", 0, 11, 1)[0] == ref


def test_never_in_contact_is_never_scanned():
    data = worked_example()
    base = search(ExplicitSamples(data), c_search, "o2", 1, 4, 2)[1]
    # same partition as o2's certain samples, never within reach
    far = SampleSet([90.0], [90.0], [0], [0], [1.0], "original")
    data["o4"] = {w: far for w in range(1, 5)}
    found, stats = search(ExplicitSamples(data), c_search, "o2", 1, 4, 2)
    assert "o4" not in found
    assert stats.window_scans == base.window_scans and stats.close_contact_calls == base.close_contact_calls
    assert stats.skipped_checks > base.skipped_checks


def rec(x, y, t, floor=0):
    return PositioningRecord(Location(x, y, floor), float(t), float(t + 5))


def test_interval_before_lifespan(small_dataset):
    store = TrajectoryStore.from_records(small_dataset.space, small_dataset.records, kprime=6)
    q = small_dataset.queries[0]
    lo, _ = store.lifespan(q.query_object)
    r = icq_process(store, QuerySpec(q.query_object, lo - 500, lo - 100))
    assert r.contacts == frozenset() and r.stats.instant_contact_calls == 0 and r.span is None


def test_unknown_object(small_dataset):
    store = TrajectoryStore.from_records(small_dataset.space, small_dataset.records)
    with pytest.raises(KeyError):
        icq_process(store, QuerySpec("nobody", 0, 10))


def test_store_queries_agree_and_are_stable(small_dataset):
    ds = small_dataset
    store = TrajectoryStore.from_records(ds.space, ds.records, kprime=6)
    for q in ds.queries:
        lo, hi = store.lifespan(q.query_object)
        spec = dict(query_object=q.query_object, t_start=q.t_start, t_end=q.t_end, k=6)
        c = icq_process(store, QuerySpec(**spec, method="constrained"))
        s = icq_process(store, QuerySpec(**spec, method="sequential"))
        again = icq_process(store, QuerySpec(**spec, method="constrained"))
        wide = icq_process(store, QuerySpec(**{**spec, "t_start": lo - 1000, "t_end": hi + 1000}))
        assert c.contacts == s.contacts == again.contacts == wide.contacts
        assert q.query_object not in c.contacts
        assert c.stats == again.stats
        assert c.stats.instant_contact_calls <= s.stats.instant_contact_calls


def test_store_small_worlds_match_exhaustive(small_dataset):
    ds = small_dataset
    store = TrajectoryStore.from_records(ds.space, ds.records, kprime=4)
    rng = np.random.default_rng(1)
    objects = store.objects
    for q in ds.queries:
        lo, hi = store.lifespan(q.query_object)
        w0 = store.grid.first_at_or_after(lo)
        w1 = store.grid.last_at_or_before(hi)
        for _ in range(5):
            ws = int(rng.integers(w0, max(w0 + 1, w1 - 11)))
            we = min(ws + 11, w1)
            k = int(rng.integers(4, 8))
            world = StoreSamples(store, q.query_object, ws, we)
            # at most seven other objects, taken from the buckets the window touches
            seen = sorted({c for w in range(ws, we + 1) for v in range(len(store.space.part_ids))
                           for c in world.tables.objects(v, w)} - {q.query_object})[:7]
            ref = exhaustive_icq(world.sample, seen, q.query_object, ws, we, 2.0, 0.5, k)
            c, _ = search(world, c_search, q.query_object, ws, we, k)
            s, _ = search(world, s_search, q.query_object, ws, we, k, pruned=False)
            assert c & set(seen) == ref and s & set(seen) == ref


def test_fully_observed_methods_agree(small_plan_space):
    rng = np.random.default_rng(8)
    space = small_plan_space
    room = space.partitions[space.part_ids[3]]
    cx, cy = room.centroid.x, room.centroid.y
    records = {}
    for i in range(5):
        ox, oy = rng.uniform(-1, 1, 2)
        records[f"p{i}"] = [rec(cx + ox * 0.5 + 0.01 * j % 1, cy + oy * 0.5, 10 * j) for j in range(40)]
    store = TrajectoryStore.from_records(space, records, kprime=6)
    results = {m: icq_process(store, QuerySpec("p0", 0, 400, k=6, method=m)).contacts
               for m in ("constrained", "sequential", "euclidean", "raw")}
    assert len(set(results.values())) == 1 and results["raw"]


def test_raw_needs_consecutive_observations(small_plan_space):
    space = small_plan_space
    c = space.partitions[space.part_ids[3]].centroid
    q = [rec(c.x, c.y, 10 * j) for j in range(12)]
    o = [rec(c.x + 0.5, c.y, 10 * j) for j in range(12) if j != 5]
    store = TrajectoryStore.from_records(space, {"q": q, "o": o}, kprime=6)
    # the unseen time spreads o over the room and the corridor: contact probability about 0.22
    run = lambda k, m: icq_process(store, QuerySpec("q", 0, 120, eta=0.2, k=k, method=m)).contacts
    assert run(6, "raw") == frozenset({"o"})
    assert run(7, "raw") == frozenset()
    assert run(7, "constrained") == frozenset({"o"})


def test_small_k_warns(small_dataset):
    store = TrajectoryStore.from_records(small_dataset.space, small_dataset.records, kprime=6)
    q = small_dataset.queries[0]
    with pytest.warns(UserWarning, match="below the split parameter"):
        icq_process(store, QuerySpec(q.query_object, q.t_start, q.t_end, k=3))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        icq_process(store, QuerySpec(q.query_object, q.t_start, q.t_end, k=3, method="raw"))


@pytest.mark.parametrize("kw", [dict(t_start=5, t_end=1), dict(delta=0), dict(eta=0), dict(k=0),
                                dict(k=2.5), dict(method="fast")])
def test_spec_validation(kw):
    base = dict(query_object="a", t_start=0, t_end=10)
    base.update(kw)
    with pytest.raises(ValueError):
        QuerySpec(**base)


def test_query_and_result_files(tmp_path, small_dataset):
    specs = [QuerySpec("o001", 0, 100, k=6, qid="a"), QuerySpec("o002", 5, 50, eta=0.3, method="raw", qid="b")]
    path = tmp_path / "q.json"
    write_queries(path, specs)
    assert read_queries(path) == specs
    path.write_text('[{"object": "a", "t_start": 5}]')
    with pytest.raises(ValueError, match="query #0"):
        read_queries(path)
    store = TrajectoryStore.from_records(small_dataset.space, small_dataset.records, kprime=6)
    q = small_dataset.queries[0]
    r = icq_process(store, QuerySpec(q.query_object, q.t_start, q.t_end, qid="x"))
    buf = io.StringIO()
    write_results(buf, [r])
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("query_id,method,contacts,wall_ms,instant_contact_calls")
    assert lines[1].startswith("x,constrained,")


def test_run_search_tracks_memory():
    world = ExplicitSamples(worked_example())
    stats = QueryStats()
    found = run_search(world, QuerySpec("o2", 1, 4, k=3), 1, 4, stats)
    assert found == {"o1"} and stats.peak_tracked > 0
    assert r_search(world, "o2", 1, 4, 3, InstantContact(world.sample, 2.0, 0.5)) == set()
