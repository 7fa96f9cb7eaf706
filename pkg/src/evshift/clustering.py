"""Per-packet mean-shift clustering over the 4D event feature space.

Every event of a packet is a seed.  Seeds climb the kernel density surface
with a hybrid update rule: the spatial coordinates of the comparison points
stay anchored to the original sample positions, while their polarity and
decayed-age coordinates take the values updated in the previous iteration.
All seeds advance in lockstep, so one iteration reads a single frozen
snapshot of the per-event state and results do not depend on event order.

Converged seed positions (modes) are coalesced by single linkage within a
small radius; each event is labeled by the merged mode its seed reached.
Clusters below a minimum mass are relabeled as noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .errors import ContractViolationError
from .events import FeatureVector, Packet

NOISE = -1

# Total kernel weight below this is treated as numerical underflow; the seed
# stops where it is and is flagged as stalled.
WEIGHT_FLOOR = 1e-290

# Memory cap for the (active seeds x events) pairwise block, in elements.
_BLOCK_ELEMS = 4_000_000


@dataclass(frozen=True)
class MeanShiftParams:
    """Knobs of the per-packet mode seeking.

    bandwidth_h is the kernel radius in normalized feature space and is
    applied isotropically to all four dimensions.  merge_radius coalesces
    modes that converged into the same basin; min_cluster_size suppresses
    clusters formed by residual noise.
    """

    bandwidth_h: float = 0.1
    epsilon: float = 1e-3
    max_iters: int = 100
    merge_radius: float = 0.05
    min_cluster_size: int = 5

    def __post_init__(self):
        if not (self.bandwidth_h > 0):
            raise ContractViolationError(f"bandwidth must be > 0, got {self.bandwidth_h}")
        if not (self.epsilon > 0):
            raise ContractViolationError(f"epsilon must be > 0, got {self.epsilon}")
        if self.max_iters < 1:
            raise ContractViolationError(f"max_iters must be >= 1, got {self.max_iters}")
        if not (self.merge_radius > 0):
            raise ContractViolationError(f"merge_radius must be > 0, got {self.merge_radius}")
        if self.min_cluster_size < 1:
            raise ContractViolationError(f"min_cluster_size must be >= 1, got {self.min_cluster_size}")


@dataclass
class ClusterLabeling:
    """Result of clustering one packet.

    labels holds one cluster id per event (NOISE = -1).  Centroids are the
    arithmetic means of raw pixel positions per cluster; masses are event
    counts.  ops_count is the exact number of kernel evaluations performed.
    """

    labels: np.ndarray
    centroids: np.ndarray
    masses: np.ndarray
    iterations_used: np.ndarray
    ops_count: int
    stalled: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    @property
    def n_clusters(self) -> int:
        return len(self.masses)

    @property
    def noise_count(self) -> int:
        return int(np.sum(self.labels == NOISE))


def kernel_weight(u) -> np.ndarray | float:
    """Gaussian kernel weight exp(-||u||^2 / 2) for a 4D displacement.

    The 1/(sigma*sqrt(2*pi)) normalization is dropped: it cancels in the
    weighted mean, so mode locations and labels are unaffected.  Accepts a
    single displacement or an array whose last axis is the displacement.
    """
    u = np.asarray(u, dtype=float)
    w = np.exp(-0.5 * np.sum(u * u, axis=-1))
    if w.ndim == 0:
        return float(w)
    return w


def _as_point(v) -> np.ndarray:
    if isinstance(v, FeatureVector):
        return v.as_array()
    p = np.asarray(v, dtype=float)
    if p.shape != (4,):
        raise ContractViolationError(f"expected a 4D feature point, got shape {p.shape}")
    return p


def _step_point(current: np.ndarray, reference: np.ndarray, h: float) -> Tuple[np.ndarray, bool]:
    """One weighted-mean step of `current` toward the reference points."""
    w = kernel_weight((current[None, :] - reference) / h)
    total = float(np.sum(w))
    if total < WEIGHT_FLOOR:
        return current.copy(), True
    return (w @ reference) / total, False


def shift_once(
    current,
    seed_index: int,
    packet: Packet,
    params: MeanShiftParams,
    reference: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, bool]:
    """One mean-shift step for a single seed of a packet.

    `reference` is the (n, 4) array of comparison points for this iteration:
    spatial columns are always the packet's original features, polarity and
    decayed-age columns may carry the per-event state of the previous
    iteration.  When omitted, the original packet features are used.

    Returns (new_point, stalled).  A stalled seed had total kernel weight
    below the underflow floor and is returned unchanged.
    """
    y = _as_point(current)
    f0 = packet.feature_array()
    if reference is None:
        reference = f0
    else:
        reference = np.asarray(reference, dtype=float)
        if reference.shape != f0.shape:
            raise ContractViolationError(
                f"reference shape {reference.shape} does not match packet {f0.shape}"
            )
    if not (0 <= seed_index < len(packet)):
        raise ContractViolationError(f"seed index {seed_index} out of range for packet of {len(packet)}")
    return _step_point(y, reference, params.bandwidth_h)


def find_mode_path(
    seed_index: int,
    packet: Packet,
    params: MeanShiftParams,
) -> Tuple[List[np.ndarray], int]:
    """Iterate one seed to its mode against the packet's original features.

    Returns the full trajectory (starting point included) and the number of
    iterations performed.  Iteration stops when the step length drops below
    epsilon, the seed stalls, or max_iters is reached.
    """
    f0 = packet.feature_array()
    y = f0[seed_index].copy()
    path = [y.copy()]
    iters = 0
    for _ in range(params.max_iters):
        new_y, stalled = _step_point(y, f0, params.bandwidth_h)
        iters += 1
        path.append(new_y.copy())
        moved = float(np.linalg.norm(new_y - y))
        y = new_y
        if stalled or moved < params.epsilon:
            break
    return path, iters


def find_mode(seed_index: int, packet: Packet, params: MeanShiftParams) -> Tuple[np.ndarray, int]:
    """Mode reached from one seed plus the iteration count."""
    path, iters = find_mode_path(seed_index, packet, params)
    return path[-1], iters


StepHook = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], None]


@dataclass
class ModeSeekResult:
    modes: np.ndarray
    iterations: np.ndarray
    ops_count: int
    stalled: np.ndarray


def seek_modes(packet: Packet, params: MeanShiftParams, step_hook: Optional[StepHook] = None) -> ModeSeekResult:
    """Run the lockstep hybrid mode seeking for every event of a packet.

    Each iteration builds one comparison snapshot: original spatial columns,
    previous-iteration polarity/decayed-age columns.  All still-active seeds
    take one weighted-mean step against that snapshot, then the snapshot is
    republished.  Seeds freeze once their step length drops below epsilon.

    step_hook, when given, is called once per iteration with
    (y_before, y_after, snapshot, active_indices); it exists for diagnostic
    checks such as per-step density ascent.
    """
    f0 = packet.feature_array()
    n = len(f0)
    h = params.bandwidth_h
    y = f0.copy()
    iterations = np.zeros(n, dtype=int)
    stalled = np.zeros(n, dtype=bool)
    active = np.ones(n, dtype=bool)
    ops = 0
    for _ in range(params.max_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        snapshot = np.concatenate([f0[:, :2], y[:, 2:]], axis=1)
        new_y = np.empty((idx.size, 4))
        under = np.zeros(idx.size, dtype=bool)
        block = max(1, _BLOCK_ELEMS // max(n, 1))
        for s in range(0, idx.size, block):
            sub = idx[s : s + block]
            diff = (y[sub, None, :] - snapshot[None, :, :]) / h
            w = np.exp(-0.5 * np.einsum("ijk,ijk->ij", diff, diff))
            total = w.sum(axis=1)
            bad = total < WEIGHT_FLOOR
            safe_total = np.where(bad, 1.0, total)
            stepped = (w @ snapshot) / safe_total[:, None]
            stepped[bad] = y[sub][bad]
            new_y[s : s + block] = stepped
            under[s : s + block] = bad
        ops += idx.size * n
        iterations[idx] += 1
        if step_hook is not None:
            step_hook(y[idx].copy(), new_y.copy(), snapshot.copy(), idx.copy())
        shift = np.linalg.norm(new_y - y[idx], axis=1)
        y[idx] = new_y
        stalled[idx[under]] = True
        done = under | (shift < params.epsilon)
        active[idx[done]] = False
    return ModeSeekResult(modes=y, iterations=iterations, ops_count=ops, stalled=stalled)


def merge_modes(modes: np.ndarray, merge_radius: float) -> np.ndarray:
    """Single-linkage coalescing of converged modes.

    Modes whose pairwise distance is below merge_radius join the same
    component (transitively).  Returns one component id per mode, numbered
    by first occurrence so the result is deterministic.
    """
    n = len(modes)
    parent = np.arange(n)

    def root(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    d2 = np.sum((modes[:, None, :] - modes[None, :, :]) ** 2, axis=-1)
    thr2 = merge_radius * merge_radius
    ii, jj = np.nonzero(np.triu(d2 < thr2, k=1))
    for a, b in zip(ii, jj):
        ra, rb = root(int(a)), root(int(b))
        if ra != rb:
            if ra < rb:
                parent[rb] = ra
            else:
                parent[ra] = rb
    comp = np.array([root(i) for i in range(n)])
    ids: dict[int, int] = {}
    out = np.empty(n, dtype=int)
    for i, c in enumerate(comp):
        if c not in ids:
            ids[c] = len(ids)
        out[i] = ids[c]
    return out


def cluster_packet(packet: Packet, params: MeanShiftParams) -> ClusterLabeling:
    """Cluster one packet: mode seeking, mode merging, noise suppression.

    Deterministic for identical inputs and parameters.  Cluster ids are
    assigned in order of first event occurrence; clusters with mass below
    min_cluster_size become NOISE.  Centroids are computed in raw pixel
    coordinates from the labeled events.
    """
    seek = seek_modes(packet, params)
    comp = merge_modes(seek.modes, params.merge_radius)
    n = len(packet)
    counts = np.bincount(comp)
    labels = np.full(n, NOISE, dtype=int)
    ids: dict[int, int] = {}
    for i in range(n):
        c = comp[i]
        if counts[c] < params.min_cluster_size:
            continue
        if c not in ids:
            ids[c] = len(ids)
        labels[i] = ids[c]
    k = len(ids)
    pixels = packet.pixel_array()
    centroids = np.zeros((k, 2))
    masses = np.zeros(k, dtype=int)
    for c in range(k):
        members = labels == c
        masses[c] = int(np.sum(members))
        centroids[c] = pixels[members].mean(axis=0)
    return ClusterLabeling(
        labels=labels,
        centroids=centroids,
        masses=masses,
        iterations_used=seek.iterations,
        ops_count=seek.ops_count,
        stalled=seek.stalled,
    )
