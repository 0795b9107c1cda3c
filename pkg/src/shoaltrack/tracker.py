"""Online tracking-by-detection.

Two variants share one engine: ``sort`` associates detections above
``high_thresh`` in a single IoU stage; ``bytetrack`` adds a second stage that
offers the low-score band ``[low_thresh, high_thresh)`` to tracks left over
from the first. Two optional fixed-cardinality extensions sit on top:

* ``rematch_lost`` lets a track that found no detection take the closest
  (IoU > 0) detection of the frame even if another track already holds it.
* ``skip_creation`` refuses new tracks once ``cardinality_cap`` live tracks
  exist.

Emitted points carry the matched detection's box, not the filtered state.
"""
from __future__ import annotations

import copy
import enum
from dataclasses import dataclass, field, fields, replace
from typing import Any

import numpy as np

from .assign import solve_lap
from .geometry import boxes_to_array, iou_matrix
from .mot_io import Detection, Sequence, Track, TrackPoint
from .motion import KalmanNoise, KalmanState, kf_init, kf_predict, kf_update


@dataclass(frozen=True)
class TrackerConfig:
    variant: str = "bytetrack"
    high_thresh: float = 0.5
    low_thresh: float = 0.1
    new_track_thresh: float = 0.6
    match_thresh: float = 0.8
    second_match_thresh: float = 0.5
    max_lost: int = 30
    cardinality_cap: int | None = None
    rematch_lost: bool = False
    skip_creation: bool = False
    min_hits_to_confirm: int = 1
    std_weight_position: float = 0.05
    std_weight_velocity: float = 0.00625
    std_weight_measurement: float = 0.05

    def __post_init__(self) -> None:
        if self.variant not in ("sort", "bytetrack"):
            raise ValueError(f"variant must be 'sort' or 'bytetrack', got {self.variant!r}")
        if not 0.0 <= self.low_thresh < self.high_thresh <= 1.0:
            raise ValueError(
                f"need 0 <= low_thresh < high_thresh <= 1, got {self.low_thresh}, {self.high_thresh}"
            )
        if not 0.0 < self.match_thresh <= 1.0:
            raise ValueError(f"match_thresh must lie in (0, 1], got {self.match_thresh}")
        if not 0.0 < self.second_match_thresh <= 1.0:
            raise ValueError(f"second_match_thresh must lie in (0, 1], got {self.second_match_thresh}")
        if self.max_lost < 0:
            raise ValueError("max_lost must be >= 0")
        if self.cardinality_cap is not None and self.cardinality_cap < 1:
            raise ValueError("cardinality_cap must be >= 1")
        if self.min_hits_to_confirm < 1:
            raise ValueError("min_hits_to_confirm must be >= 1")

    @property
    def noise(self) -> KalmanNoise:
        return KalmanNoise(self.std_weight_position, self.std_weight_velocity, self.std_weight_measurement)

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def updated(self, **overrides: Any) -> "TrackerConfig":
        unknown = set(overrides) - set(self.field_names())
        if unknown:
            raise KeyError(f"unknown tracker field(s): {sorted(unknown)}")
        return replace(self, **overrides)


class Status(enum.Enum):
    TENTATIVE = "tentative"
    ACTIVE = "active"
    LOST = "lost"


@dataclass
class LiveTrack:
    id: int
    kalman: KalmanState
    status: Status
    frames_since_update: int = 0
    hit_count: int = 1
    history: list[TrackPoint] = field(default_factory=list)
    rematched_frames: list[int] = field(default_factory=list)


@dataclass
class TrackerState:
    tracks: list[LiveTrack] = field(default_factory=list)
    finished: list[LiveTrack] = field(default_factory=list)
    next_id: int = 1
    last_frame: int = 0

    def live_count(self) -> int:
        return len(self.tracks)


@dataclass(frozen=True)
class Emitted:
    track_id: int
    point: TrackPoint
    rematched: bool = False


def admit_new_track(candidate: Detection, live_count: int, config: TrackerConfig) -> bool:
    """Whether a detection that passed ``new_track_thresh`` may start a track."""
    if config.skip_creation and config.cardinality_cap is not None:
        return live_count < config.cardinality_cap
    return True


def _associate(tracks: list[LiveTrack], track_idx: list[int], dets: list[Detection],
               det_idx: list[int], gate: float) -> tuple[list[tuple[int, int]], list[int], list[int]]:
    if not track_idx or not det_idx:
        return [], list(track_idx), list(det_idx)
    pred = boxes_to_array(tracks[i].kalman.to_box() for i in track_idx)
    obs = boxes_to_array(dets[j].box for j in det_idx)
    cost = 1.0 - iou_matrix(pred, obs)
    res = solve_lap(cost, gate)
    pairs = [(track_idx[r], det_idx[c]) for r, c in res.matches]
    return (
        pairs,
        [track_idx[r] for r in res.unmatched_rows],
        [det_idx[c] for c in res.unmatched_columns],
    )


def rematch_lost_tracks(tracks: list[LiveTrack], unmatched: list[int],
                        dets: list[Detection]) -> list[tuple[int, int]]:
    """Pair leftover tracks with their closest detection of the frame.

    Detections already held by other tracks stay eligible, so two tracks may
    share one box. Among the leftover tracks the pairing is still one-to-one
    and needs IoU > 0.
    """
    if not unmatched or not dets:
        return []
    pred = boxes_to_array(tracks[i].kalman.to_box() for i in unmatched)
    obs = boxes_to_array(d.box for d in dets)
    ious = iou_matrix(pred, obs)
    cost = np.where(ious > 0.0, 1.0 - ious, np.inf)
    res = solve_lap(cost, 1.0)
    return [(unmatched[r], c) for r, c in res.matches]


class Tracker:
    """Stateful wrapper that owns one :class:`TrackerState`."""

    def __init__(self, config: TrackerConfig | None = None):
        self.config = config or TrackerConfig()
        self.state = TrackerState()

    def update(self, frame: int, detections: list[Detection]) -> list[Emitted]:
        return _advance(self.state, frame, detections, self.config)


def step(state: TrackerState, frame: int, detections: list[Detection],
         config: TrackerConfig) -> tuple[TrackerState, list[Emitted]]:
    """Functional form: returns a new state and the points emitted at ``frame``."""
    new_state = copy.deepcopy(state)
    emitted = _advance(new_state, frame, detections, config)
    return new_state, emitted


def _advance(state: TrackerState, frame: int, detections: list[Detection],
             config: TrackerConfig) -> list[Emitted]:
    if frame <= state.last_frame:
        raise ValueError(f"frame {frame} not after previous frame {state.last_frame}")
    for d in detections:
        if not isinstance(d, Detection):
            raise TypeError(f"expected Detection, got {type(d).__name__}")
        if d.frame != frame:
            raise ValueError(f"detection for frame {d.frame} passed at frame {frame}")
    state.last_frame = frame
    noise = config.noise

    dets = sorted(
        (d for d in detections if d.confidence >= config.low_thresh),
        key=lambda d: (-d.confidence, d.box.left, d.box.top, d.box.width, d.box.height),
    )
    tracks = state.tracks
    for t in tracks:
        t.kalman = kf_predict(t.kalman, noise)

    high = [j for j, d in enumerate(dets) if d.confidence >= config.high_thresh]
    low = [j for j, d in enumerate(dets) if d.confidence < config.high_thresh]
    all_tracks = list(range(len(tracks)))

    matches, left_tracks, left_high = _associate(tracks, all_tracks, dets, high, config.match_thresh)
    if config.variant == "bytetrack":
        more, left_tracks, _ = _associate(tracks, left_tracks, dets, low, config.second_match_thresh)
        matches += more

    rematches: list[tuple[int, int]] = []
    if config.rematch_lost and left_tracks:
        rematches = rematch_lost_tracks(tracks, left_tracks, dets)
        taken = {ti for ti, _ in rematches}
        left_tracks = [ti for ti in left_tracks if ti not in taken]
        # A rematched box is spoken for; it must not also seed a new track.
        held = {dj for _, dj in rematches}
        left_high = [dj for dj in left_high if dj not in held]

    emitted: list[Emitted] = []
    for ti, dj, shared in [(a, b, False) for a, b in matches] + [(a, b, True) for a, b in rematches]:
        t, d = tracks[ti], dets[dj]
        t.kalman = kf_update(t.kalman, d.box, noise)
        t.frames_since_update = 0
        t.hit_count += 1
        if t.status is Status.LOST or (
            t.status is Status.TENTATIVE and t.hit_count >= config.min_hits_to_confirm
        ):
            t.status = Status.ACTIVE
        if shared:
            t.rematched_frames.append(frame)
        if t.status is Status.ACTIVE:
            pt = TrackPoint(frame, d.box, confidence=d.confidence)
            t.history.append(pt)
            emitted.append(Emitted(t.id, pt, shared))

    removed: set[int] = set()
    for ti in left_tracks:
        t = tracks[ti]
        t.frames_since_update += 1
        if t.status is Status.TENTATIVE:
            removed.add(ti)
            continue
        t.status = Status.LOST
        if t.frames_since_update > config.max_lost:
            removed.add(ti)
    if removed:
        state.finished.extend(tracks[i] for i in sorted(removed) if tracks[i].history)
        state.tracks = tracks = [t for i, t in enumerate(tracks) if i not in removed]

    for dj in left_high:
        d = dets[dj]
        if d.confidence < config.new_track_thresh:
            continue
        if not admit_new_track(d, len(tracks), config):
            continue
        confirmed = config.min_hits_to_confirm <= 1
        t = LiveTrack(state.next_id, kf_init(d.box, noise),
                      Status.ACTIVE if confirmed else Status.TENTATIVE)
        state.next_id += 1
        if confirmed:
            pt = TrackPoint(frame, d.box, confidence=d.confidence)
            t.history.append(pt)
            emitted.append(Emitted(t.id, pt))
        tracks.append(t)

    emitted.sort(key=lambda e: e.track_id)
    return emitted


def run_sequence(detections: Sequence, config: TrackerConfig | None = None,
                 frame_hook=None) -> Sequence:
    """Track every frame of ``detections`` and return the emitted tracks.

    ``frame_hook(frame, state, emitted)`` is called after each frame when given.
    Output ids are renumbered 1, 2, 3, ... in creation order so that
    tracks discarded before emitting anything leave no holes.
    """
    config = config or TrackerConfig()
    tracker = Tracker(config)
    by_frame = detections.detections_by_frame()
    for frame in range(1, detections.frame_count + 1):
        emitted = tracker.update(frame, by_frame.get(frame, []))
        if frame_hook is not None:
            frame_hook(frame, tracker.state, emitted)
    st = tracker.state
    done = sorted(st.finished + [t for t in st.tracks if t.history], key=lambda t: t.id)
    out = [Track(new_id, tuple(t.history)) for new_id, t in enumerate(done, start=1)]
    return detections.with_tracks(out)
