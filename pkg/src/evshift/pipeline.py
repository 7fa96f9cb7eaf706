"""End-to-end wiring: noise filter, packetizer, clustering, tracking.

Packets are independent once formed, so clustering can fan out over a
thread pool (EVSHIFT_THREADS caps the width, default 1); results come back
in packet order, so the output does not depend on the thread count.
Tracking is stateful and always runs sequentially over packet order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .clustering import ClusterLabeling, MeanShiftParams, cluster_packet
from .events import DecayParams, Event, Packet, SensorGeometry, packetize
from .filtering import FilterParams, filter_stream
from .io import LabeledEvents, TrackRow
from .tracking import Measurement, Tracker, TrackerParams


@dataclass(frozen=True)
class PipelineParams:
    """Parameters of every stage in one place."""

    packet_size: int = 500
    decay: DecayParams = field(default_factory=DecayParams)
    filter_params: Optional[FilterParams] = field(default_factory=FilterParams)
    ms_params: MeanShiftParams = field(default_factory=MeanShiftParams)
    tracker_params: TrackerParams = field(default_factory=TrackerParams)


def thread_count() -> int:
    """Worker count for packet-parallel stages, from EVSHIFT_THREADS."""
    raw = os.environ.get("EVSHIFT_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def cluster_packets(
    packets: Sequence[Packet],
    params: MeanShiftParams,
    threads: Optional[int] = None,
) -> List[ClusterLabeling]:
    """Cluster packets, optionally in parallel, preserving packet order."""
    n = thread_count() if threads is None else max(1, threads)
    if n == 1 or len(packets) <= 1:
        return [cluster_packet(p, params) for p in packets]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(lambda p: cluster_packet(p, params), packets))


@dataclass
class PipelineResult:
    """Everything the batch run produced, in packet order."""

    packets: List[Packet]
    labelings: List[ClusterLabeling]
    labeled: LabeledEvents
    track_rows: List[TrackRow]
    tracker: Tracker
    n_raw: int
    n_filtered: int

    @property
    def kernel_ops(self) -> int:
        return sum(lab.ops_count for lab in self.labelings)


def make_packets(
    events: Sequence[Event],
    geom: SensorGeometry,
    params: PipelineParams,
) -> tuple[List[Packet], int, int]:
    """Filter and packetize a stream; returns (packets, n_raw, n_kept)."""
    n_raw = len(events)
    if params.filter_params is not None:
        kept = list(filter_stream(events, params.filter_params, geom))
    else:
        kept = list(events)
    packets = list(packetize(kept, params.packet_size, geom, params.decay))
    return packets, n_raw, len(kept)


def labeled_from_packets(packets: Sequence[Packet], labelings: Sequence[ClusterLabeling]) -> LabeledEvents:
    """Flatten per-packet labels into one row per event."""
    t: List[float] = []
    x: List[int] = []
    y: List[int] = []
    p: List[int] = []
    pid: List[int] = []
    cid: List[int] = []
    for i, (packet, lab) in enumerate(zip(packets, labelings)):
        for j, e in enumerate(packet.events):
            t.append(e.t)
            x.append(e.x)
            y.append(e.y)
            p.append(e.p)
            pid.append(i)
            cid.append(int(lab.labels[j]))
    return LabeledEvents(
        t=np.array(t, dtype=float),
        x=np.array(x, dtype=int),
        y=np.array(y, dtype=int),
        p=np.array(p, dtype=int),
        packet_id=np.array(pid, dtype=int),
        cluster_id=np.array(cid, dtype=int),
    )


def track_labelings(
    packets: Sequence[Packet],
    labelings: Sequence[ClusterLabeling],
    params: TrackerParams,
) -> tuple[List[TrackRow], Tracker]:
    """Feed per-packet centroids through the tracker, packet by packet.

    Emits one row per live track per packet; raw centroid columns are NaN
    for packets where the track was coasting on prediction alone.
    """
    tracker = Tracker(params)
    rows: List[TrackRow] = []
    for packet, lab in zip(packets, labelings):
        t = packet.t_ref
        measurements = [
            Measurement(t=t, position=lab.centroids[c], cluster_id=c, mass=int(lab.masses[c]))
            for c in range(lab.n_clusters)
        ]
        tracker.observe(t, measurements)
        for tr in tracker.live_tracks():
            fresh = tr.last_measurement is not None and tr.measured_t == t
            rows.append(
                TrackRow(
                    t=t,
                    track_id=tr.track_id,
                    x=float(tr.state[0]),
                    y=float(tr.state[1]),
                    vx=float(tr.state[2]),
                    vy=float(tr.state[3]),
                    status=tr.status.value,
                    raw_cx=float(tr.last_measurement[0]) if fresh else math.nan,
                    raw_cy=float(tr.last_measurement[1]) if fresh else math.nan,
                )
            )
    return rows, tracker


def run_pipeline(
    events: Sequence[Event],
    geom: SensorGeometry,
    params: Optional[PipelineParams] = None,
    threads: Optional[int] = None,
) -> PipelineResult:
    """Run the whole batch pipeline over an event stream."""
    params = params or PipelineParams()
    packets, n_raw, n_kept = make_packets(events, geom, params)
    labelings = cluster_packets(packets, params.ms_params, threads)
    labeled = labeled_from_packets(packets, labelings)
    track_rows, tracker = track_labelings(packets, labelings, params.tracker_params)
    return PipelineResult(
        packets=packets,
        labelings=labelings,
        labeled=labeled,
        track_rows=track_rows,
        tracker=tracker,
        n_raw=n_raw,
        n_filtered=n_kept,
    )
