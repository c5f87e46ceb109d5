"""scikit-learn style front end: a trajectory splitter and a contact tracer.

Both take positioning records either as ``{object_id: [PositioningRecord, ...]}``
or as rows ``(object_id, x, y, floor, t, et)``.
"""

from collections import defaultdict

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .engine import METHODS, QuerySpec, icq_process
from .space import IndoorSpace, Location
from .trajectories import PositioningRecord, SamplingGrid, TrajectoryStore


def check_space(space):
    if isinstance(space, IndoorSpace):
        return space
    if isinstance(space, dict):
        return IndoorSpace.from_dict(space)
    if isinstance(space, str):
        return IndoorSpace.load(space)
    raise TypeError("space must be an IndoorSpace, a floorplan dict or a path to a floorplan file")


def check_records(X):
    """Normalize records to ``{object_id: [PositioningRecord, ...]}``, validating every row."""
    if isinstance(X, TrajectoryStore):
        return {o: X.records(o) for o in X.objects}
    if isinstance(X, dict):
        out = {}
        for obj, recs in X.items():
            recs = list(recs)
            for i, r in enumerate(recs):
                if not isinstance(r, PositioningRecord):
                    raise TypeError(f"object {obj} record {i}: expected a PositioningRecord")
                if not (np.isfinite(r.t) and np.isfinite(r.et) and r.t <= r.et):
                    raise ValueError(f"object {obj} record {i}: need finite t <= et")
            out[str(obj)] = recs
        return out
    rows = list(X)
    out = defaultdict(list)
    for i, row in enumerate(rows):
        if len(row) != 6:
            raise ValueError(f"row {i}: expected (object_id, x, y, floor, t, et), got {len(row)} fields")
        obj, x, y, floor, t, et = row
        try:
            x, y, t, et = float(x), float(y), float(t), float(et)
            floor = int(floor)
        except (TypeError, ValueError):
            raise ValueError(f"row {i}: non-numeric field") from None
        if not all(np.isfinite(v) for v in (x, y, t, et)):
            raise ValueError(f"row {i}: non-finite value")
        if t > et:
            raise ValueError(f"row {i}: expiry {et} before report time {t}")
        out[str(obj)].append(PositioningRecord(Location(x, y, floor), t, et))
    return dict(out)


def check_params(delta, eta, k, method, ll, v_max, kprime):
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not 0 < eta <= 1:
        raise ValueError("eta must be in (0, 1]")
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    if method not in METHODS:
        raise ValueError(f"method must be one of {', '.join(METHODS)}")
    if not ll > 0:
        raise ValueError("ll must be positive")
    if not v_max > 0:
        raise ValueError("v_max must be positive")
    if kprime is not None and kprime < 2:
        raise ValueError("kprime must be at least 2")


class TrajectorySplitter(TransformerMixin, BaseEstimator):
    """Turns raw records into a split trajectory store."""

    def __init__(self, space=None, kprime=6, dt=10.0, t_origin=0.0):
        self.space = space
        self.kprime = kprime
        self.dt = dt
        self.t_origin = t_origin

    def fit(self, X=None, y=None):
        if self.kprime is not None and self.kprime < 2:
            raise ValueError("kprime must be at least 2")
        self.space_ = check_space(self.space)
        self.grid_ = SamplingGrid(self.t_origin, self.dt)
        return self

    def transform(self, X):
        check_is_fitted(self, "space_")
        store = TrajectoryStore(self.space_, self.grid_).ingest(check_records(X))
        return store.split(self.kprime) if self.kprime is not None else store


class ContactTracer(BaseEstimator):
    """Finds the objects in close contact with a query object.

    ``fit`` ingests and splits the trajectories; ``query`` answers one query and
    ``predict`` maps rows ``(object_id, t_start, t_end)`` to contact sets.
    """

    def __init__(self, space=None, delta=2.0, eta=0.5, k=18, method="constrained", ll=0.4, v_max=1.4,
                 kprime=6, dt=10.0, t_origin=0.0):
        self.space = space
        self.delta = delta
        self.eta = eta
        self.k = k
        self.method = method
        self.ll = ll
        self.v_max = v_max
        self.kprime = kprime
        self.dt = dt
        self.t_origin = t_origin

    def fit(self, X, y=None):
        check_params(self.delta, self.eta, self.k, self.method, self.ll, self.v_max, self.kprime)
        splitter = TrajectorySplitter(self.space, self.kprime, self.dt, self.t_origin).fit()
        self.store_ = splitter.transform(X)
        self.n_objects_ = len(self.store_)
        return self

    def query(self, obj, t_start=-np.inf, t_end=np.inf, **overrides):
        check_is_fitted(self, "store_")
        params = dict(delta=self.delta, eta=self.eta, k=self.k, method=self.method)
        params.update(overrides)
        spec = QuerySpec(str(obj), t_start, t_end, **params)
        return icq_process(self.store_, spec, ll=self.ll, v_max=self.v_max)

    def predict(self, X):
        check_is_fitted(self, "store_")
        out = []
        for row in X:
            if isinstance(row, (str, bytes)):
                obj, t0, t1 = row, -np.inf, np.inf
            else:
                obj, t0, t1 = row
            out.append(self.query(obj, float(t0), float(t1)).contacts)
        return out
