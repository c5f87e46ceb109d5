"""Instant-contact probability, the sequential and pruned decision kernels, and the result cache.

Two samples count toward contact iff they are hosted by the same partition and
lie strictly closer than ``delta``.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

# slack for threshold comparisons
FTOL = 1e-9


def contact_probability(a, b, delta):
    """Probability mass of sample pairs in contact, over all pairs of ``a`` and ``b``."""
    if len(a) == 0 or len(b) == 0:
        return 0.0
    if len(a) == 1 and len(b) == 1:
        near = math.hypot(a.x[0] - b.x[0], a.y[0] - b.y[0]) < delta
        return float(a.rho[0] * b.rho[0]) if a.part[0] == b.part[0] and near else 0.0
    same = a.part[:, None] == b.part[None, :]
    near = np.hypot(a.x[:, None] - b.x[None, :], a.y[:, None] - b.y[None, :]) < delta
    w = a.rho[:, None] * b.rho[None, :]
    return float(w[same & near].sum())


def s_instant_contact(a, b, delta, eta):
    """Sequential decision: evaluate every pair, then compare with ``eta``.

    Returns ``(decision, pair_distance_evals)``.
    """
    n = len(a) * len(b)
    return contact_probability(a, b, delta) >= eta - FTOL, n


@dataclass
class KernelTrace:
    """What the pruned kernel did for one decision."""

    decision: bool
    reason: str  # "empty", "non-contact-mass", "early-accept" or "exhausted"
    merged_pair_evals: int = 0
    pair_distance_evals: int = 0
    np_mass: float = 0.0
    p_mass: float = 0.0


def c_instant_contact(a, b, delta, eta):
    """Pruned decision, same outcome as :func:`s_instant_contact`.

    Per-partition masses are compared first; once the mass of cross-partition
    pairs exceeds ``1 - eta`` contact is impossible. Otherwise only pairs inside
    common partitions are measured, stopping as soon as the accumulated
    probability reaches ``eta``.
    """
    if len(a) == 0 or len(b) == 0:
        return KernelTrace(False, "empty")
    if len(a) == 1 and len(b) == 1:
        return _single_pair(a, b, delta, eta)
    pa, ma = a.merged()
    pb, mb = b.merged()
    cross = ma[:, None] * mb[None, :]
    cross[pa[:, None] == pb[None, :]] = 0.0
    acc = np.cumsum(cross.ravel())
    over = np.flatnonzero(acc > 1.0 - eta + FTOL)
    if len(over):
        i = int(over[0])
        return KernelTrace(False, "non-contact-mass", merged_pair_evals=i + 1, np_mass=float(acc[i]))
    np_mass = float(acc[-1]) if len(acc) else 0.0
    merged = len(acc)

    p = 0.0
    evals = 0
    for v in np.intersect1d(pa, pb):
        ia = np.flatnonzero(a.part == v)
        ib = np.flatnonzero(b.part == v)
        d = np.hypot(a.x[ia, None] - b.x[None, ib], a.y[ia, None] - b.y[None, ib])
        contrib = np.where(d < delta, a.rho[ia, None] * b.rho[None, ib], 0.0).ravel()
        run = p + np.cumsum(contrib)
        hit = np.flatnonzero(run >= eta - FTOL)
        if len(hit):
            j = int(hit[0])
            return KernelTrace(True, "early-accept", merged, evals + j + 1, np_mass, float(run[j]))
        evals += len(contrib)
        p = float(run[-1])
    return KernelTrace(False, "exhausted", merged, evals, np_mass, p)


def _single_pair(a, b, delta, eta):
    # one sample each: the same decision as the general path, without array work
    m = float(a.rho[0] * b.rho[0])
    if a.part[0] != b.part[0]:
        if m > 1.0 - eta + FTOL:
            return KernelTrace(False, "non-contact-mass", merged_pair_evals=1, np_mass=m)
        return KernelTrace(False, "exhausted", 1, 0, m, 0.0)
    p = m if math.hypot(a.x[0] - b.x[0], a.y[0] - b.y[0]) < delta else 0.0
    if p >= eta - FTOL:
        return KernelTrace(True, "early-accept", 1, 1, 0.0, p)
    return KernelTrace(False, "exhausted", 1, 1, 0.0, p)


@dataclass
class QueryStats:
    instant_contact_calls: int = 0
    instant_evaluations: int = 0
    cache_hits: int = 0
    close_contact_calls: int = 0
    derivations: int = 0
    pair_distance_evals: int = 0
    merged_pair_evals: int = 0
    pruned_by_mass: int = 0
    early_accepts: int = 0
    candidates: int = 0
    skipped_checks: int = 0
    window_scans: int = 0
    peak_tracked: int = 0

    def as_dict(self):
        return asdict(self)


class ContactCache:
    """Instant-contact outcomes keyed by unordered object pair and grid time.

    Also keeps, per object, the latest grid time found without contact.
    """

    def __init__(self):
        self._results = {}
        self._latest_non_contact = {}

    @staticmethod
    def key(a, b, w):
        return (a, b, w) if a <= b else (b, a, w)

    def get(self, a, b, w):
        return self._results.get(self.key(a, b, w))

    def put(self, a, b, w, value):
        self._results[self.key(a, b, w)] = value

    def latest_non_contact(self, obj):
        return self._latest_non_contact.get(obj, -np.inf)

    def mark_non_contact(self, obj, w):
        if w > self._latest_non_contact.get(obj, -np.inf):
            self._latest_non_contact[obj] = w

    def clear(self):
        self._results.clear()
        self._latest_non_contact.clear()

    def __len__(self):
        return len(self._results)


class InstantContact:
    """Cached instant-contact decisions between the query object and candidates.

    ``samples(obj, w)`` supplies sample sets; ``pruned`` selects the kernel.
    """

    def __init__(self, samples, delta, eta, pruned=True, stats=None, cache=None):
        if not delta > 0:
            raise ValueError("delta must be positive")
        if not 0 < eta <= 1:
            raise ValueError("eta must be in (0, 1]")
        self.samples = samples
        self.delta = delta
        self.eta = eta
        self.pruned = pruned
        self.stats = stats if stats is not None else QueryStats()
        self.cache = cache if cache is not None else ContactCache()

    def __call__(self, o, c, w):
        self.stats.instant_contact_calls += 1
        hit = self.cache.get(o, c, w)
        if hit is not None:
            self.stats.cache_hits += 1
            return hit
        self.stats.instant_evaluations += 1
        a, b = self.samples(o, w), self.samples(c, w)
        if self.pruned:
            tr = c_instant_contact(a, b, self.delta, self.eta)
            self.stats.merged_pair_evals += tr.merged_pair_evals
            self.stats.pair_distance_evals += tr.pair_distance_evals
            self.stats.pruned_by_mass += tr.reason == "non-contact-mass"
            self.stats.early_accepts += tr.reason == "early-accept"
            ok = tr.decision
            if not ok:
                self.cache.mark_non_contact(c, w)
        else:
            ok, n = s_instant_contact(a, b, self.delta, self.eta)
            self.stats.pair_distance_evals += n
        self.cache.put(o, c, w, ok)
        return ok

    def close_contact(self, o, c, w, k):
        """True iff instant contact holds at the ``k`` grid times starting at ``w``."""
        self.stats.close_contact_calls += 1
        for q in range(w, w + k):
            if not self(o, c, q):
                return False
        return True
