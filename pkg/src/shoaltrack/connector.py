"""Offline track repair: greedy iterative merging followed by gap interpolation.

Each iteration scores every ordered pair (a, b) of current tracks where ``a``
ends strictly before ``b`` starts within ``max_frame_gap`` frames; the score
is the centre distance from a's last box to b's first box, every other pair is
infinite. The closest pair is merged (b's points appended to a, a's id kept)
and the matrix is rebuilt, until no finite entry remains. Finally every
internal frame gap of every track is filled by linear interpolation of box
centre and size.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mot_io import BBox, Sequence, Track, TrackPoint


@dataclass(frozen=True)
class ConnectorConfig:
    max_frame_gap: int = 150
    distance_cap: float | None = None

    def __post_init__(self) -> None:
        if self.max_frame_gap < 1:
            raise ValueError("max_frame_gap must be >= 1")
        if self.distance_cap is not None and not self.distance_cap > 0:
            raise ValueError("distance_cap must be positive when set")


@dataclass(frozen=True)
class MergeEvent:
    kept_id: int
    retired_id: int
    distance: float
    normalized: float


def track_distance(a: Track, b: Track, config: ConnectorConfig) -> float:
    """Distance for appending ``b`` after ``a``; ``inf`` when not allowed."""
    gap = b.first_frame - a.last_frame
    if gap <= 0 or gap > config.max_frame_gap:
        return math.inf
    end, start = a.points[-1].box, b.points[0].box
    # Same formula as distance_matrix so both agree to the last bit.
    d = float(np.hypot(start.cx - end.cx, start.cy - end.cy))
    if config.distance_cap is not None and d > config.distance_cap:
        return math.inf
    return d


def distance_matrix(tracks: list[Track], config: ConnectorConfig) -> np.ndarray:
    """All pairwise :func:`track_distance` values, rows = earlier track."""
    n = len(tracks)
    if n == 0:
        return np.zeros((0, 0))
    last = np.array([t.last_frame for t in tracks])
    first = np.array([t.first_frame for t in tracks])
    end_c = np.array([(t.points[-1].box.cx, t.points[-1].box.cy) for t in tracks])
    start_c = np.array([(t.points[0].box.cx, t.points[0].box.cy) for t in tracks])
    gap = first[None, :] - last[:, None]
    ok = (gap > 0) & (gap <= config.max_frame_gap)
    d = np.hypot(start_c[None, :, 0] - end_c[:, None, 0], start_c[None, :, 1] - end_c[:, None, 1])
    if config.distance_cap is not None:
        ok &= d <= config.distance_cap
    return np.where(ok, d, np.inf)


def normalize(dist: np.ndarray) -> np.ndarray:
    """Scale finite entries by the largest finite one (order preserving)."""
    finite = np.isfinite(dist)
    if not finite.any():
        return dist.copy()
    top = dist[finite].max()
    return dist / top if top > 0 else np.where(finite, 0.0, np.inf)


def merge_tracks(tracks: list[Track], config: ConnectorConfig) -> tuple[list[Track], list[MergeEvent]]:
    """Run the merge phase only; returns the merged tracks and the merge log."""
    current = sorted(tracks, key=lambda t: t.id)
    log: list[MergeEvent] = []
    while len(current) > 1:
        dist = distance_matrix(current, config)
        finite = np.isfinite(dist)
        if not finite.any():
            break
        norm = normalize(dist)
        # Rows/columns follow ascending id, so the first minimum in row-major
        # order is the (smallest a id, smallest b id) tie-break.
        flat = int(np.argmin(dist))
        i, j = divmod(flat, len(current))
        a, b = current[i], current[j]
        merged = Track(a.id, a.points + b.points)
        log.append(MergeEvent(a.id, b.id, float(dist[i, j]), float(norm[i, j])))
        current = [merged if k == i else t for k, t in enumerate(current) if k != j]
    return current, log


def interpolate_track(track: Track) -> Track:
    """Fill every missing frame between consecutive points linearly."""
    pts = track.points
    out: list[TrackPoint] = [pts[0]]
    for p0, p1 in zip(pts, pts[1:]):
        gap = p1.frame - p0.frame
        if gap > 1:
            b0, b1 = p0.box, p1.box
            for k in range(1, gap):
                s = k / gap
                cx = b0.cx + (b1.cx - b0.cx) * s
                cy = b0.cy + (b1.cy - b0.cy) * s
                w = b0.width + (b1.width - b0.width) * s
                h = b0.height + (b1.height - b0.height) * s
                conf = p0.confidence + (p1.confidence - p0.confidence) * s
                out.append(TrackPoint(p0.frame + k, BBox.from_center(cx, cy, w, h), True, conf))
        out.append(p1)
    return track if len(out) == len(pts) else Track(track.id, tuple(out))


def connect_with_log(seq: Sequence, config: ConnectorConfig | None = None) -> tuple[Sequence, list[MergeEvent]]:
    config = config or ConnectorConfig()
    merged, log = merge_tracks(list(seq.tracks), config)
    return seq.with_tracks(interpolate_track(t) for t in merged), log


def connect(seq: Sequence, config: ConnectorConfig | None = None) -> Sequence:
    return connect_with_log(seq, config)[0]
