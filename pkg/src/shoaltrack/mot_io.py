"""MOTChallenge text I/O and the in-memory sequence model.

Rows are ``frame,id,left,top,width,height,conf,x,y,z``. Detection files use
``id = -1``; the last three columns are ``-1`` placeholders. A sidecar
``seqinfo.ini`` holds ``key=value`` lines (``name``, ``fps``, ``width``,
``height``, ``frames``).
"""
from __future__ import annotations

import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal, TextIO

FLOAT_FMT = "{:.6f}"


class MotFormatError(ValueError):
    """Raised for unreadable or invalid MOT rows; carries the line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box, top-left corner plus size, in pixels."""

    left: float
    top: float
    width: float
    height: float

    def __post_init__(self) -> None:
        vals = (self.left, self.top, self.width, self.height)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite box {vals}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"box size must be positive, got {self.width}x{self.height}")

    @classmethod
    def from_center(cls, cx: float, cy: float, width: float, height: float) -> "BBox":
        return cls(cx - width / 2.0, cy - height / 2.0, width, height)

    @property
    def cx(self) -> float:
        return self.left + self.width / 2.0

    @property
    def cy(self) -> float:
        return self.top + self.height / 2.0

    @property
    def right(self) -> float:
        return self.left + self.width

    @property
    def bottom(self) -> float:
        return self.top + self.height

    def as_ltwh(self) -> tuple[float, float, float, float]:
        return (self.left, self.top, self.width, self.height)


@dataclass(frozen=True)
class Detection:
    frame: int
    box: BBox
    confidence: float
    # Identity of the source fish when synthesized; -1 for clutter or parsed rows.
    truth_id: int = field(default=-1, compare=False)

    def __post_init__(self) -> None:
        if self.frame < 1:
            raise ValueError(f"frame must be >= 1, got {self.frame}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must lie in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class TrackPoint:
    frame: int
    box: BBox
    interpolated: bool = False
    confidence: float = 1.0

    def __post_init__(self) -> None:
        if self.frame < 1:
            raise ValueError(f"frame must be >= 1, got {self.frame}")


@dataclass(frozen=True)
class Track:
    id: int
    points: tuple[TrackPoint, ...]

    def __post_init__(self) -> None:
        if self.id < 1:
            raise ValueError(f"track id must be >= 1, got {self.id}")
        if not self.points:
            raise ValueError(f"track {self.id} has no points")
        object.__setattr__(self, "points", tuple(self.points))
        frames = [p.frame for p in self.points]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError(f"track {self.id}: frames must be strictly increasing")

    @property
    def first_frame(self) -> int:
        return self.points[0].frame

    @property
    def last_frame(self) -> int:
        return self.points[-1].frame

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class Sequence:
    """One video's worth of tracks or detections plus its metadata.

    Exactly one payload is meaningful per instance: ``tracks`` (sorted by id)
    or ``detections`` (sorted by frame, then geometry).
    """

    name: str = "sequence"
    fps: float = 15.0
    frame_count: int = 1
    image_width: int = 2456
    image_height: int = 2048
    tracks: tuple[Track, ...] = ()
    detections: tuple[Detection, ...] = ()

    def __post_init__(self) -> None:
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")
        tracks = tuple(sorted(self.tracks, key=lambda t: t.id))
        ids = [t.id for t in tracks]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate track ids")
        dets = tuple(sorted(self.detections, key=_det_key))
        object.__setattr__(self, "tracks", tracks)
        object.__setattr__(self, "detections", dets)
        last = max(
            [t.last_frame for t in tracks] + [d.frame for d in dets], default=0
        )
        if last > self.frame_count:
            raise ValueError(f"frame {last} exceeds frame_count {self.frame_count}")

    def detections_by_frame(self) -> dict[int, list[Detection]]:
        out: dict[int, list[Detection]] = defaultdict(list)
        for d in self.detections:
            out[d.frame].append(d)
        return dict(out)

    def track(self, track_id: int) -> Track:
        for t in self.tracks:
            if t.id == track_id:
                return t
        raise KeyError(track_id)

    def with_tracks(self, tracks: Iterable[Track]) -> "Sequence":
        return Sequence(
            self.name, self.fps, self.frame_count, self.image_width,
            self.image_height, tracks=tuple(tracks),
        )

    def with_detections(self, detections: Iterable[Detection]) -> "Sequence":
        return Sequence(
            self.name, self.fps, self.frame_count, self.image_width,
            self.image_height, detections=tuple(detections),
        )

    def info(self) -> dict[str, str]:
        return {
            "name": self.name,
            "fps": _fmt_num(self.fps),
            "width": str(self.image_width),
            "height": str(self.image_height),
            "frames": str(self.frame_count),
        }


def _det_key(d: Detection) -> tuple:
    b = d.box
    return (d.frame, b.left, b.top, b.width, b.height, d.confidence)


def _fmt_num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def _parse_float(text: str, lineno: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise MotFormatError(f"malformed {column} field {text!r}", lineno) from None
    if not math.isfinite(value):
        raise MotFormatError(f"non-finite {column} field {text!r}", lineno)
    return value


def _parse_int(text: str, lineno: int, column: str) -> int:
    value = _parse_float(text, lineno, column)
    if not value.is_integer():
        raise MotFormatError(f"{column} must be an integer, got {text!r}", lineno)
    return int(value)


def parse_mot(
    stream: TextIO | str,
    kind: Literal["detections", "tracks"] = "tracks",
    *,
    name: str = "sequence",
    fps: float = 15.0,
    frame_count: int | None = None,
    image_width: int = 2456,
    image_height: int = 2048,
) -> Sequence:
    """Read MOT rows into a :class:`Sequence`.

    Line order does not matter. ``frame_count`` defaults to the largest frame
    present (1 for an empty stream).

    Raises:
        MotFormatError: on a malformed numeric field, a non-positive box size,
            a confidence outside [0, 1], or a repeated (id, frame) track row.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    if kind not in ("detections", "tracks"):
        raise ValueError(f"unknown kind {kind!r}")

    detections: list[Detection] = []
    points: dict[int, dict[int, TrackPoint]] = defaultdict(dict)
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cols = [c.strip() for c in line.split(",")]
        if len(cols) < 6:
            raise MotFormatError(f"expected at least 6 columns, got {len(cols)}", lineno)
        frame = _parse_int(cols[0], lineno, "frame")
        ident = _parse_int(cols[1], lineno, "id")
        left, top, width, height = (
            _parse_float(c, lineno, n)
            for c, n in zip(cols[2:6], ("left", "top", "width", "height"))
        )
        conf = _parse_float(cols[6], lineno, "conf") if len(cols) > 6 else 1.0
        if frame < 1:
            raise MotFormatError(f"frame must be >= 1, got {frame}", lineno)
        if width <= 0 or height <= 0:
            raise MotFormatError(f"non-positive box size {width}x{height}", lineno)
        box = BBox(left, top, width, height)
        if kind == "detections":
            if not 0.0 <= conf <= 1.0:
                raise MotFormatError(f"confidence {conf} outside [0, 1]", lineno)
            detections.append(Detection(frame, box, conf))
        else:
            if ident < 1:
                raise MotFormatError(f"track id must be >= 1, got {ident}", lineno)
            if frame in points[ident]:
                raise MotFormatError(f"track {ident} repeats frame {frame}", lineno)
            points[ident][frame] = TrackPoint(frame, box, confidence=conf)

    tracks = tuple(
        Track(tid, tuple(pts[f] for f in sorted(pts))) for tid, pts in points.items()
    )
    last = max(
        [max(p) for p in points.values()] + [d.frame for d in detections], default=1
    )
    return Sequence(
        name=name,
        fps=fps,
        frame_count=frame_count if frame_count is not None else last,
        image_width=image_width,
        image_height=image_height,
        tracks=tracks,
        detections=tuple(detections),
    )


def _row(frame: int, ident: int, box: BBox, conf: float) -> str:
    f = FLOAT_FMT.format
    return (
        f"{frame},{ident},{f(box.left)},{f(box.top)},{f(box.width)},{f(box.height)},"
        f"{f(conf)},-1,-1,-1"
    )


def write_mot(seq: Sequence, stream: TextIO | None = None) -> str:
    """Render ``seq`` as MOT text, rows sorted by (frame, id).

    Returns the text; also writes it to ``stream`` when one is given.
    """
    if seq.tracks:
        rows = sorted(
            ((p.frame, t.id, p) for t in seq.tracks for p in t.points),
            key=lambda r: (r[0], r[1]),
        )
        lines = [_row(fr, tid, p.box, p.confidence) for fr, tid, p in rows]
    else:
        lines = [_row(d.frame, -1, d.box, d.confidence) for d in seq.detections]
    text = "".join(line + "\n" for line in lines)
    if stream is not None:
        stream.write(text)
    return text


def read_seqinfo(path: str | Path) -> dict[str, str]:
    """Parse a ``key=value`` sidecar; ``[section]`` headers and ``#`` comments are skipped."""
    aliases = {"framerate": "fps", "imwidth": "width", "imheight": "height", "seqlength": "frames"}
    info: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith(("#", ";", "[")):
            continue
        if "=" not in line:
            raise MotFormatError(f"expected key=value in {path}: {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        info[aliases.get(key.lower(), key.lower())] = value
    return info


def write_seqinfo(path: str | Path, seq: Sequence) -> None:
    text = "".join(f"{k}={v}\n" for k, v in seq.info().items())
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def load_sequence(
    path: str | Path,
    kind: Literal["detections", "tracks"] = "tracks",
    info_path: str | Path | None = None,
) -> Sequence:
    """Load a MOT file, picking up metadata from a sibling ``seqinfo.ini`` if present."""
    path = Path(path)
    info_file = Path(info_path) if info_path is not None else path.parent / "seqinfo.ini"
    meta: dict[str, str] = read_seqinfo(info_file) if info_file.exists() else {}
    kwargs: dict = {}
    if "name" in meta:
        kwargs["name"] = meta["name"]
    if "fps" in meta:
        kwargs["fps"] = float(meta["fps"])
    if "width" in meta:
        kwargs["image_width"] = int(meta["width"])
    if "height" in meta:
        kwargs["image_height"] = int(meta["height"])
    if "frames" in meta:
        kwargs["frame_count"] = int(meta["frames"])
    with path.open(encoding="utf-8") as fh:
        return parse_mot(fh, kind, **kwargs)


def save_sequence(path: str | Path, seq: Sequence) -> None:
    Path(path).write_text(write_mot(seq), encoding="utf-8", newline="\n")
