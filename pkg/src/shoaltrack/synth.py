"""Synthetic fish school in a bounded tank and a detector-noise model.

``generate_school`` runs a boids model (separation, alignment, cohesion and
wall avoidance, plus a small random wander) at one step per frame.
``corrupt`` turns the ground truth into detections: occlusion merges,
random and burst dropout, centre jitter, uniform clutter and confidences.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import iou_matrix
from .mot_io import BBox, Detection, Sequence, Track, TrackPoint


@dataclass(frozen=True)
class SchoolConfig:
    n_fish: int = 10
    arena_width: float = 2456.0
    arena_height: float = 2048.0
    fps: float = 15.0
    duration: float = 60.0
    box_width: float = 64.0
    box_height: float = 64.0
    # Speeds in pixels per second.
    max_speed: float = 240.0
    min_speed: float = 60.0
    cohesion: float = 0.004
    alignment: float = 0.05
    separation: float = 0.6
    wall: float = 0.8
    wander: float = 0.6
    neighbor_radius: float = 400.0
    separation_radius: float = 160.0
    wall_margin: float = 200.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_fish < 1:
            raise ValueError("n_fish must be >= 1")
        if min(self.arena_width, self.arena_height, self.box_width, self.box_height) <= 0:
            raise ValueError("arena and box sizes must be positive")
        if self.duration <= 0 or self.fps <= 0:
            raise ValueError("duration and fps must be positive")
        if not 0 <= self.min_speed <= self.max_speed:
            raise ValueError("need 0 <= min_speed <= max_speed")

    @property
    def n_frames(self) -> int:
        return max(1, int(round(self.duration * self.fps)))


@dataclass(frozen=True)
class CorruptionConfig:
    position_jitter_std: float = 0.0
    dropout_prob: float = 0.0
    clutter_rate: float = 0.0
    # Pairs of true boxes with IoU strictly above this yield one merged box.
    merge_iou_thresh: float = 1.0
    true_conf_mean: float = 1.0
    true_conf_std: float = 0.0
    clutter_conf_mean: float = 0.4
    clutter_conf_std: float = 0.15
    # Burst dropout: per fish and frame, chance to vanish for burst_length frames.
    burst_rate: float = 0.0
    burst_length: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("dropout_prob", "merge_iou_thresh", "true_conf_mean", "clutter_conf_mean", "burst_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        for name in ("position_jitter_std", "clutter_rate", "true_conf_std", "clutter_conf_std"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.burst_length < 0:
            raise ValueError("burst_length must be non-negative")

    @classmethod
    def identity(cls, seed: int = 0) -> "CorruptionConfig":
        return cls(seed=seed)


def _limit_speed(vel: np.ndarray, lo: float, hi: float) -> np.ndarray:
    speed = np.linalg.norm(vel, axis=1, keepdims=True)
    safe = np.where(speed > 0, speed, 1.0)
    target = np.clip(speed, lo, hi)
    heading = np.where(speed > 0, vel / safe, np.array([[1.0, 0.0]]))
    return heading * target


def simulate_centers(cfg: SchoolConfig) -> np.ndarray:
    """Centre positions, shape ``(n_frames, n_fish, 2)``."""
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_fish
    size = np.array([cfg.arena_width, cfg.arena_height])
    vmax, vmin = cfg.max_speed / cfg.fps, cfg.min_speed / cfg.fps
    pos = size * (0.2 + 0.6 * rng.random((n, 2)))
    ang = rng.uniform(0, 2 * np.pi, n)
    vel = np.c_[np.cos(ang), np.sin(ang)] * (0.5 * (vmin + vmax))
    out = np.empty((cfg.n_frames, n, 2))
    for f in range(cfg.n_frames):
        out[f] = pos
        force = np.zeros((n, 2))
        if n > 1:
            diff = pos[None, :, :] - pos[:, None, :]  # [i, j] = pos_j - pos_i
            dist = np.linalg.norm(diff, axis=2)
            np.fill_diagonal(dist, np.inf)
            near = dist < cfg.neighbor_radius
            cnt = near.sum(axis=1, keepdims=True)
            has = cnt[:, 0] > 0
            if has.any():
                centroid = (near[:, :, None] * pos[None]).sum(1) / np.maximum(cnt, 1)
                mean_vel = (near[:, :, None] * vel[None]).sum(1) / np.maximum(cnt, 1)
                force[has] += cfg.cohesion * (centroid[has] - pos[has])
                force[has] += cfg.alignment * (mean_vel[has] - vel[has])
            close = dist < cfg.separation_radius
            if close.any():
                push = np.where(close, (cfg.separation_radius - dist) / cfg.separation_radius, 0.0)
                unit = np.divide(diff, dist[:, :, None], out=np.zeros_like(diff),
                                 where=np.isfinite(dist)[:, :, None] & (dist[:, :, None] > 0))
                force -= cfg.separation * vmax * (push[:, :, None] * unit).sum(1)
        lo_gap = pos
        hi_gap = size - pos
        m = cfg.wall_margin
        force += cfg.wall * vmax * np.clip((m - lo_gap) / m, 0, None)
        force -= cfg.wall * vmax * np.clip((m - hi_gap) / m, 0, None)
        force += cfg.wander * rng.normal(size=(n, 2))
        vel = _limit_speed(vel + force, vmin, vmax)
        new = pos + vel
        # Reflect off the tank walls; clipping never lengthens the step.
        over = (new < 0) | (new > size)
        vel = np.where(over, -vel, vel)
        pos = np.clip(new, 0.0, size)
    return out


def generate_school(cfg: SchoolConfig) -> Sequence:
    """Ground-truth tracks, one per fish, ids 1..n_fish, every frame present."""
    centers = simulate_centers(cfg)
    w, h = cfg.box_width, cfg.box_height
    tracks = []
    for i in range(cfg.n_fish):
        pts = tuple(
            TrackPoint(f + 1, BBox.from_center(float(cx), float(cy), w, h))
            for f, (cx, cy) in enumerate(centers[:, i])
        )
        tracks.append(Track(i + 1, pts))
    return Sequence(
        name=f"school-{cfg.seed}", fps=cfg.fps, frame_count=cfg.n_frames,
        image_width=int(round(cfg.arena_width)), image_height=int(round(cfg.arena_height)),
        tracks=tuple(tracks),
    )


def _hull(a: BBox, b: BBox) -> BBox:
    left, top = min(a.left, b.left), min(a.top, b.top)
    return BBox(left, top, max(a.right, b.right) - left, max(a.bottom, b.bottom) - top)


def _merge_frame(ids: list[int], boxes: list[BBox], thresh: float) -> tuple[list[int], list[BBox]]:
    if thresh >= 1.0 or len(boxes) < 2:
        return ids, boxes
    ious = iou_matrix(boxes, boxes)
    np.fill_diagonal(ious, 0.0)
    pairs = sorted(
        ((ious[i, j], i, j) for i in range(len(boxes)) for j in range(i + 1, len(boxes)) if ious[i, j] > thresh),
        key=lambda t: (-t[0], t[1], t[2]),
    )
    gone: set[int] = set()
    merged: dict[int, BBox] = {}
    for _, i, j in pairs:
        if i in gone or j in gone or i in merged or j in merged:
            continue
        merged[i] = _hull(boxes[i], boxes[j])
        gone.add(j)
    keep = [k for k in range(len(boxes)) if k not in gone]
    return [ids[k] for k in keep], [merged.get(k, boxes[k]) for k in keep]


def corrupt(gt: Sequence, cfg: CorruptionConfig) -> Sequence:
    """Detector-like observations of ``gt``; see the module docstring."""
    rng = np.random.default_rng(cfg.seed)
    per_frame: dict[int, list[tuple[int, BBox]]] = {}
    sizes = []
    for t in gt.tracks:
        for p in t.points:
            per_frame.setdefault(p.frame, []).append((t.id, p.box))
            sizes.append((p.box.width, p.box.height))
    cw, ch = np.mean(sizes, axis=0) if sizes else (64.0, 64.0)
    burst_left = {t.id: 0 for t in gt.tracks}

    dets: list[Detection] = []
    for frame in range(1, gt.frame_count + 1):
        items = sorted(per_frame.get(frame, []))
        ids, boxes = _merge_frame([i for i, _ in items], [b for _, b in items], cfg.merge_iou_thresh)
        for tid, box in zip(ids, boxes):
            if cfg.burst_rate > 0 and cfg.burst_length > 0:
                if burst_left[tid] == 0 and rng.random() < cfg.burst_rate:
                    burst_left[tid] = cfg.burst_length
            if burst_left.get(tid, 0) > 0:
                burst_left[tid] -= 1
                continue
            if cfg.dropout_prob > 0 and rng.random() < cfg.dropout_prob:
                continue
            if cfg.position_jitter_std > 0:
                dx, dy = rng.normal(0.0, cfg.position_jitter_std, 2)
                box = BBox(box.left + dx, box.top + dy, box.width, box.height)
            conf = cfg.true_conf_mean
            if cfg.true_conf_std > 0:
                conf = rng.normal(cfg.true_conf_mean, cfg.true_conf_std)
            dets.append(Detection(frame, box, float(np.clip(conf, 0.0, 1.0)), truth_id=tid))
        if cfg.clutter_rate > 0:
            for _ in range(rng.poisson(cfg.clutter_rate)):
                cx = rng.uniform(0, gt.image_width)
                cy = rng.uniform(0, gt.image_height)
                conf = rng.normal(cfg.clutter_conf_mean, cfg.clutter_conf_std)
                dets.append(Detection(frame, BBox.from_center(cx, cy, float(cw), float(ch)),
                                      float(np.clip(conf, 0.0, 1.0))))
    return gt.with_detections(dets)
