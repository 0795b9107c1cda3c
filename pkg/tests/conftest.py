import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from shoaltrack.mot_io import BBox, Sequence, Track, TrackPoint  # noqa: E402

_acceptance: list[tuple[str, str]] = []


def make_track(tid, frames, boxes):
    return Track(tid, tuple(TrackPoint(f, BBox(*b)) for f, b in zip(frames, boxes)))


def linear_track(tid, start, n, x0, y0, vx, vy, w=30.0, h=20.0):
    frames = range(start, start + n)
    return make_track(tid, frames, [(x0 + vx * k, y0 + vy * k, w, h) for k in range(n)])


@pytest.fixture
def tracks_seq():
    def build(tracks, frame_count=None):
        last = max((t.last_frame for t in tracks), default=1)
        return Sequence(frame_count=frame_count or last, tracks=tuple(tracks))
    return build


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome.upper()))
    elif "test_acceptance.py" in report.nodeid and report.when == "setup" and report.outcome != "passed":
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome.upper()))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        terminalreporter.write_line(f"{outcome:7s} {name}")
