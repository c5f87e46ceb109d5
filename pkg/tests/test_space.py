import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from shapely.geometry import Point, Polygon

from icq.space import FloorplanError, IndoorSpace, Location, ObjectTables, UnlocatableError
from icq.trajectories import SampleSet

from conftest import TRIO, rect, two_way


def test_centroid_hosts_to_own_partition(small_plan_space):
    for pid, p in small_plan_space.partitions.items():
        assert small_plan_space.host(p.centroid) == pid


def test_shared_wall_goes_to_smallest_id(trio):
    assert trio.host(Location(10.0, 5.0, 0)) == "v1"
    assert trio.host(Location(18.0, 10.0, 0)) == "v2"  # door between v2 and v3


def test_unlocatable(trio):
    with pytest.raises(UnlocatableError):
        trio.host(Location(50.0, 50.0, 0))
    with pytest.raises(UnlocatableError):
        trio.host(Location(5.0, 5.0, 3))


def test_host_agrees_with_brute_force(small_plan_space):
    space = small_plan_space
    rng = np.random.default_rng(3)
    shapes = [(pid, Polygon(p.polygon)) for pid, p in space.partitions.items()]
    for pid, p in space.partitions.items():
        x0, y0, x1, y1 = p.bbox
        xs, ys = rng.uniform(x0, x1, 1000), rng.uniform(y0, y1, 1000)
        got = space.host_many(xs, ys, np.full(1000, p.floor))
        for x, y, g in zip(xs[:200], ys[:200], got[:200]):
            owners = sorted(q for q, sp in shapes if sp.intersects(Point(x, y)))
            assert space.part_ids[g] == owners[0]
            assert space.host_index(x, y, p.floor) == g


def test_contact_distance(trio):
    a, b = Location(1.0, 1.0), Location(1.0, 2.9)
    assert trio.contact_distance(a, b) == pytest.approx(1.9)
    assert trio.contact_distance(a, a) == 0
    assert trio.contact_distance(a, Location(11.0, 1.0)) == math.inf


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 19.9), st.floats(0.1, 13.9), st.floats(0.1, 19.9), st.floats(0.1, 13.9))
def test_contact_distance_symmetric(x1, y1, x2, y2):
    from icq.space import IndoorSpace as S
    space = S.from_dict(TRIO)
    a, b = Location(x1, y1), Location(x2, y2)
    d = space.contact_distance(a, b)
    assert d == space.contact_distance(b, a)
    assert math.isfinite(d) == (space.host(a) == space.host(b))


def test_door_to_door_examples():
    plan = {"floors": [0], "partitions": [
        {"id": "a", "floor": 0, "polygon": rect(0, 0, 10, 10)},
        {"id": "b", "floor": 0, "polygon": rect(10, 0, 20, 10)},
        {"id": "c", "floor": 0, "polygon": rect(-5, 0, 0, 10)}],
        "doors": [{"id": "e", "x": 10, "y": 5, "floor": 0, "links": two_way("a", "b")},
                  {"id": "w", "x": 0, "y": 5, "floor": 0, "links": two_way("a", "c")}]}
    space = IndoorSpace.from_dict(plan)
    assert space.door_to_door("a", "e", "e") == 0
    assert space.door_to_door("a", "e", "w") == 10.0
    with pytest.raises(KeyError):
        space.door_to_door("b", "e", "w")


def test_d2d_matrices_match_euclidean(two_floor_space):
    space = two_floor_space
    for pid, (ids, _, m) in space.d2d.items():
        assert np.allclose(m, m.T) and np.all(np.diag(m) == 0) and np.all(m >= 0)
        for i, di in enumerate(ids):
            for j, dj in enumerate(ids):
                if i == j:
                    continue
                if space.partitions[pid].staircase:
                    assert m[i, j] == 20.0
                else:
                    a, b = space.doors[di].location, space.doors[dj].location
                    assert m[i, j] == pytest.approx(math.hypot(a.x - b.x, a.y - b.y))


def test_views_agree_with_edge_scan(two_floor_space):
    space = two_floor_space
    for v in space.part_ids:
        assert space.leavable_doors(v) == {d for a, _, d in space.edges if a == v}
    for d in space.doors:
        assert space.enterable_partitions(d) == {b for _, b, e in space.edges if e == d}


def test_view_examples():
    plan = json.loads(json.dumps(TRIO))
    plan["partitions"].append({"id": "v4", "floor": 0, "polygon": rect(30, 0, 35, 5)})
    space = IndoorSpace.from_dict(plan)
    assert space.enterable_partitions("d1") == {"v1", "v3"}
    assert space.leavable_doors("v4") == frozenset()
    with pytest.raises(KeyError):
        space.leavable_doors("nope")


def test_one_way_door():
    plan = json.loads(json.dumps(TRIO))
    plan["doors"][0]["links"] = [["v1", "v3"]]
    space = IndoorSpace.from_dict(plan)
    assert space.leavable_doors("v1") == {"d1"}
    assert "d1" not in space.leavable_doors("v3")
    assert space.enterable_partitions("d1") == {"v3"}


def test_lattice_examples():
    plan = {"floors": [0], "partitions": [{"id": "u", "floor": 0, "polygon": rect(0, 0, 1, 1)}], "doors": []}
    space = IndoorSpace.from_dict(plan)
    gx, gy = space.lattice_points("u", 0.4)
    assert len(gx) == 9
    assert sorted(set(np.round(gx, 9))) == [0.0, 0.4, 0.8]


def test_lattice_points_host_to_their_partition(small_plan_space):
    space = small_plan_space
    for v in space.part_ids:
        gx, gy = space.lattice_points(v, 0.4)
        p = space.partitions[v]
        assert np.all(space.host_many(gx, gy, np.full(len(gx), p.floor)) == p.index)
        assert not gx.flags.writeable


def test_max_door_distance_examples():
    plan = {"floors": [0], "partitions": [{"id": "sq", "floor": 0, "polygon": rect(0, 0, 10, 10)},
                                          {"id": "tt", "floor": 0, "polygon": rect(10, 0, 20, 10)}],
            "doors": [{"id": "corner", "x": 10, "y": 0, "floor": 0, "links": two_way("sq", "tt")},
                      {"id": "mid", "x": 10, "y": 5, "floor": 0, "links": two_way("sq", "tt")}]}
    space = IndoorSpace.from_dict(plan)
    assert space.max_door_distance("sq", "corner") == pytest.approx(10 * math.sqrt(2))
    assert space.max_door_distance("sq", "mid") == pytest.approx(math.hypot(5, 10))


def test_max_door_distance_vertex_scan(small_plan_space):
    space = small_plan_space
    for v, p in space.partitions.items():
        for d in p.door_ids:
            loc = space.doors[d].location
            ref = max(math.hypot(x - loc.x, y - loc.y) for x, y in p.polygon)
            assert space.max_door_distance(v, d) == pytest.approx(ref)


def test_round_trip(tmp_path, two_floor_space):
    path = tmp_path / "plan.json"
    two_floor_space.save(path)
    again = IndoorSpace.load(path)
    assert again.to_dict() == two_floor_space.to_dict()


@pytest.mark.parametrize("mutate, needle", [
    (lambda d: d["doors"][0].update(links=[["v1", "ghost"]]), "ghost"),
    (lambda d: d["partitions"][1].update(id="v1"), "duplicate"),
    (lambda d: d["partitions"][0].update(polygon=[[0, 0], [1, 1]]), "polygon"),
    (lambda d: d["partitions"][0].update(polygon=[[0, 0], [4, 4], [4, 0], [0, 4]]), "simple"),
])
def test_floorplan_validation(tmp_path, mutate, needle):
    data = json.loads(json.dumps(TRIO))
    mutate(data)
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data, indent=1))
    with pytest.raises(FloorplanError) as err:
        IndoorSpace.load(path)
    assert needle in str(err.value).lower()
    assert str(path) in str(err.value)


def test_invalid_json_reports_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n "floors": [0],\n "partitions": [,]\n}')
    with pytest.raises(FloorplanError) as err:
        IndoorSpace.load(path)
    assert err.value.line == 3


def test_shortest_door_path_matches_scipy(two_floor_space):
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import dijkstra

    space = two_floor_space
    rng = np.random.default_rng(5)
    doors = list(space.doors)
    pos = {d: i for i, d in enumerate(doors)}
    n = len(doors) + 2
    for _ in range(20):
        pa, pb = rng.choice([v for v in space.part_ids if not space.partitions[v].staircase], 2)
        src, dst = space.partitions[pa].centroid, space.partitions[pb].centroid
        m = np.zeros((n, n))
        for a, b, d in space.edges:
            for dj in space.leavable_doors(b):
                if dj != d:
                    m[pos[d], pos[dj]] = space.door_to_door(b, d, dj)
        for d in space.leavable_doors(pa):
            m[n - 2, pos[d]] = src.distance(space.doors[d].location) or 1e-12
        for a, b, d in space.edges:
            if b == pb:
                m[pos[d], n - 1] = space.doors[d].location.distance(dst) or 1e-12
        ref = dijkstra(csr_matrix(m), indices=n - 2)[n - 1]
        length, path = space.shortest_door_path(src, dst)
        if pa == pb:
            assert path == []
        else:
            assert length == pytest.approx(ref, abs=1e-9)


def test_register_sample_examples():
    tables = ObjectTables()
    one = SampleSet.uniform(np.array([1.0]), np.array([1.0]), np.array([0]), np.array([0]))
    two = SampleSet.uniform(np.array([1.0, 5.0]), np.array([1.0, 12.0]), np.array([0, 0]), np.array([0, 2]))
    tables.register_sample("o", 4, one)
    assert tables.objects(0, 4) == {"o"} and not tables.objects(2, 4)
    tables.register_sample("o", 4, two)
    assert tables.objects(0, 4) == {"o"} and tables.objects(2, 4) == {"o"}
    tables.register_sample("o", 4, one)
    assert not tables.objects(2, 4)
    assert tables.sample_set("o", 4) is one


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abc"), st.integers(0, 3), st.lists(st.integers(0, 4), min_size=1,
                                                                                max_size=5)), max_size=25))
def test_object_tables_round_trip(ops):
    base = {(1, 0): frozenset({"z"})}
    tables = ObjectTables(base)
    latest = {}
    for obj, w, parts in ops:
        s = SampleSet.uniform(np.zeros(len(parts)), np.zeros(len(parts)), np.zeros(len(parts), int),
                              np.array(parts))
        tables.register_sample(obj, w, s)
        latest[(obj, w)] = set(parts)
    for v in range(5):
        for w in range(4):
            expect = {o for (o, ww), ps in latest.items() if ww == w and v in ps}
            if (v, w) == (1, 0):
                expect.add("z")
            assert set(tables.objects(v, w)) == expect
    assert base == {(1, 0): frozenset({"z"})}
