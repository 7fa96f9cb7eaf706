"""Core event model: sensor events, geometry, packets and the 4D feature map.

An event stream is clustered packet by packet.  Each packet of consecutive
events is mapped into a normalized feature space with four coordinates:
column, row, polarity and an exponentially decayed age.  All four components
live in [0, 1], so a single scalar bandwidth is meaningful across dimensions.
The decay is measured against the newest timestamp in the packet, which makes
the feature map a pure per-packet function of the raw events.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, List, Sequence

import numpy as np

from .errors import ContractViolationError, OutOfBoundsError, StreamOrderError


@dataclass(frozen=True)
class Event:
    """One asynchronous sensor sample.

    t is in seconds, x/y are integer pixel indices, p is the polarity of the
    intensity change (True = positive).
    """

    t: float
    x: int
    y: int
    p: bool

    def __post_init__(self):
        if not math.isfinite(self.t) or self.t < 0:
            raise ContractViolationError(f"event timestamp must be finite and >= 0, got {self.t}")


@dataclass(frozen=True)
class SensorGeometry:
    """Pixel dimensions of the sensor array."""

    width: int
    height: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ContractViolationError(f"sensor geometry must be positive, got {self.width}x{self.height}")

    def contains(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height


@dataclass(frozen=True)
class DecayParams:
    """Temporal decay settings for the feature map.

    tau is the decay time constant in seconds.  The reference timestamp is
    always the newest event of the packet being featurized ("packet-newest"
    policy), so older events get strictly smaller decayed-age values.
    """

    tau: float = 0.025

    def __post_init__(self):
        if not (self.tau > 0):
            raise ContractViolationError(f"tau must be > 0, got {self.tau}")


@dataclass(frozen=True)
class FeatureVector:
    """Normalized 4D feature point: (fx, fy, fp, ft), each in [0, 1]."""

    fx: float
    fy: float
    fp: float
    ft: float

    def as_array(self) -> np.ndarray:
        return np.array([self.fx, self.fy, self.fp, self.ft], dtype=float)


def decay(t: float, t_ref: float, params: DecayParams) -> float:
    """Exponentially decayed age of an event relative to a reference time.

    Returns exp(-(t_ref - t) / tau), which is 1 at t == t_ref and strictly
    decreasing in the age t_ref - t.  Events newer than the reference are a
    contract violation.
    """
    if t > t_ref:
        raise ContractViolationError(f"event time {t} is newer than reference {t_ref}")
    return math.exp(-(t_ref - t) / params.tau)


def to_feature(e: Event, t_ref: float, geom: SensorGeometry, params: DecayParams) -> FeatureVector:
    """Map a raw event to its normalized feature vector.

    Spatial coordinates are divided by (dimension - 1) so both sensor borders
    land exactly on 0 and 1.  Polarity maps to {0, 1}.
    """
    if not geom.contains(e.x, e.y):
        raise OutOfBoundsError(f"event at ({e.x}, {e.y}) outside sensor {geom.width}x{geom.height}")
    fx = e.x / (geom.width - 1) if geom.width > 1 else 0.0
    fy = e.y / (geom.height - 1) if geom.height > 1 else 0.0
    return FeatureVector(fx=fx, fy=fy, fp=1.0 if e.p else 0.0, ft=decay(e.t, t_ref, params))


@dataclass
class Packet:
    """A bounded, time-ordered batch of events plus their feature vectors.

    t_ref is the timestamp of the newest event.  Instances are treated as
    immutable after construction; the dense feature array is cached.
    """

    events: List[Event]
    features: List[FeatureVector]
    t_ref: float
    _feature_array: np.ndarray | None = field(default=None, repr=False, compare=False)
    _pixel_array: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.events:
            raise ContractViolationError("packet must contain at least one event")
        if len(self.features) != len(self.events):
            raise ContractViolationError("features and events must be parallel lists")

    def __len__(self) -> int:
        return len(self.events)

    def feature_array(self) -> np.ndarray:
        """(n, 4) float array of feature vectors, cached."""
        if self._feature_array is None:
            self._feature_array = np.array(
                [[f.fx, f.fy, f.fp, f.ft] for f in self.features], dtype=float
            )
        return self._feature_array

    def pixel_array(self) -> np.ndarray:
        """(n, 2) float array of raw (x, y) pixel coordinates, cached."""
        if self._pixel_array is None:
            self._pixel_array = np.array([[e.x, e.y] for e in self.events], dtype=float)
        return self._pixel_array


def make_packet(events: Sequence[Event], geom: SensorGeometry, params: DecayParams) -> Packet:
    """Build a packet from already-ordered events, computing all features."""
    events = list(events)
    if not events:
        raise ContractViolationError("cannot build a packet from zero events")
    t_ref = events[-1].t
    xs = np.array([e.x for e in events], dtype=float)
    ys = np.array([e.y for e in events], dtype=float)
    for e in events:
        if not geom.contains(e.x, e.y):
            raise OutOfBoundsError(f"event at ({e.x}, {e.y}) outside sensor {geom.width}x{geom.height}")
    fx = xs / (geom.width - 1) if geom.width > 1 else np.zeros_like(xs)
    fy = ys / (geom.height - 1) if geom.height > 1 else np.zeros_like(ys)
    fp = np.array([1.0 if e.p else 0.0 for e in events])
    ts = np.array([e.t for e in events])
    ft = np.exp(-(t_ref - ts) / params.tau)
    features = [FeatureVector(*row) for row in zip(fx, fy, fp, ft)]
    pkt = Packet(events=events, features=features, t_ref=t_ref)
    pkt._feature_array = np.column_stack([fx, fy, fp, ft])
    pkt._pixel_array = np.column_stack([xs, ys])
    return pkt


def packetize(
    stream: Iterable[Event],
    size: int,
    geom: SensorGeometry,
    params: DecayParams,
) -> Iterator[Packet]:
    """Split a time-ordered stream into consecutive packets of `size` events.

    The last packet may be smaller.  Raises StreamOrderError (with the global
    stream index) if timestamps ever decrease.
    """
    if size < 1:
        raise ContractViolationError(f"packet size must be >= 1, got {size}")
    buffer: List[Event] = []
    prev_t = -math.inf
    for i, e in enumerate(stream):
        if e.t < prev_t:
            raise StreamOrderError(i)
        prev_t = e.t
        buffer.append(e)
        if len(buffer) == size:
            yield make_packet(buffer, geom, params)
            buffer = []
    if buffer:
        yield make_packet(buffer, geom, params)
