import time

import pytest

from icq import datagen
from icq.space import IndoorSpace


def rect(x0, y0, x1, y1):
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


def two_way(a, b):
    return [[a, b], [b, a]]


# Three rooms on one floor: v1 and v2 side by side below a hallway v3.
# v1 and v2 open onto the hallway; there is no door between v1 and v2.
TRIO = {
    "floors": [0],
    "partitions": [
        {"id": "v1", "floor": 0, "polygon": rect(0, 0, 10, 10)},
        {"id": "v2", "floor": 0, "polygon": rect(10, 0, 20, 10)},
        {"id": "v3", "floor": 0, "polygon": rect(0, 10, 20, 14)},
    ],
    "doors": [
        {"id": "d1", "x": 8.0, "y": 10.0, "floor": 0, "links": two_way("v1", "v3")},
        {"id": "d2", "x": 18.0, "y": 10.0, "floor": 0, "links": two_way("v2", "v3")},
    ],
    "staircases": [],
}


@pytest.fixture
def trio():
    return IndoorSpace.from_dict(TRIO)


@pytest.fixture(scope="session")
def small_plan_space():
    cfg = datagen.SimConfig(room_rows=3, room_cols=3)
    return IndoorSpace.from_dict(datagen.generate_floorplan(cfg))


@pytest.fixture(scope="session")
def two_floor_space():
    cfg = datagen.SimConfig(floors=2, room_rows=2, room_cols=3, staircases=1)
    return IndoorSpace.from_dict(datagen.generate_floorplan(cfg))


@pytest.fixture(scope="session")
def small_dataset():
    cfg = datagen.SimConfig(n_objects=30, horizon=2400, min_lifespan=1200, n_queries=4, n_injected=3,
                            room_rows=2, room_cols=4, seed=7)
    return datagen.generate(cfg)


# -- acceptance report ----------------------------------------------------------------


def pytest_configure(config):
    config._acceptance_lines = []
    config._acceptance_t0 = time.perf_counter()


@pytest.fixture
def acceptance_report(request):
    lines = request.config._acceptance_lines

    def report(number, ok, detail):
        lines.append(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
