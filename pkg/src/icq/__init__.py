"""Indoor contact queries over uncertain indoor positioning data."""

from .contact import ContactCache, InstantContact, QueryStats, c_instant_contact, contact_probability, s_instant_contact
from .engine import ExplicitSamples, QueryResult, QuerySpec, StoreSamples, c_search, icq_process, r_search, s_search
from .estimator import ContactTracer, TrajectorySplitter
from .space import FloorplanError, IndoorSpace, Location, ObjectTables, UnlocatableError
from .trajectories import PositioningRecord, Sample, SampleSet, SamplingGrid, TrajectoryStore
from .uncertainty import Deriver, Portion, find_iur

__all__ = [
    "ContactCache", "ContactTracer", "Deriver", "ExplicitSamples", "FloorplanError", "IndoorSpace",
    "InstantContact", "Location", "ObjectTables", "Portion", "PositioningRecord", "QueryResult", "QuerySpec",
    "QueryStats", "Sample", "SampleSet", "SamplingGrid", "StoreSamples", "TrajectorySplitter",
    "TrajectoryStore", "UnlocatableError", "c_instant_contact", "c_search", "contact_probability",
    "find_iur", "icq_process", "r_search", "s_instant_contact", "s_search",
]
