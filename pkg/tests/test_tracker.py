import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shoaltrack.geometry import iou
from shoaltrack.metrics import evaluate
from shoaltrack.motion import kf_init
from shoaltrack.mot_io import BBox, Detection, Sequence
from shoaltrack.synth import CorruptionConfig, SchoolConfig, corrupt, generate_school
from shoaltrack.tracker import (
    LiveTrack,
    Status,
    Tracker,
    TrackerConfig,
    TrackerState,
    admit_new_track,
    rematch_lost_tracks,
    run_sequence,
    step,
)

SEPARATED = SchoolConfig(seed=5, separation_radius=250.0, duration=20.0)


def det(frame, x, y, conf=0.9, w=40.0, h=40.0):
    return Detection(frame, BBox(x, y, w, h), conf)


def det_seq(dets, frames):
    return Sequence(name="t", frame_count=frames, detections=tuple(dets))


def test_config_invariants():
    with pytest.raises(ValueError):
        TrackerConfig(low_thresh=0.5, high_thresh=0.5)
    with pytest.raises(ValueError):
        TrackerConfig(match_thresh=0.0)
    with pytest.raises(ValueError):
        TrackerConfig(max_lost=-1)
    with pytest.raises(ValueError):
        TrackerConfig(cardinality_cap=0)
    with pytest.raises(ValueError):
        TrackerConfig(variant="deepsort")
    assert TrackerConfig().updated(max_lost=5).max_lost == 5
    assert "match_thresh" in TrackerConfig.field_names()


def test_single_detection_starts_track():
    state, out = step(TrackerState(), 1, [det(1, 10, 10, 0.9)], TrackerConfig())
    assert [e.track_id for e in out] == [1]
    assert out[0].point.box == BBox(10, 10, 40, 40)
    assert state.live_count() == 1


def test_low_confidence_filtered():
    state, out = step(TrackerState(), 1, [det(1, 10, 10, 0.05)], TrackerConfig())
    assert out == [] and state.live_count() == 0
    # An existing track does not pick it up either.
    state, _ = step(TrackerState(), 1, [det(1, 10, 10, 0.9)], TrackerConfig())
    state, out = step(state, 2, [det(2, 10, 10, 0.05)], TrackerConfig())
    assert out == []
    assert state.tracks[0].status is Status.LOST


def test_second_stage_trace():
    # Frame 1 spawns track 1 at rest. Frame 2: the predicted box equals the
    # frame-1 box (zero initial velocity); the conf 0.3 box shifted by 4 px
    # has IoU 36*40/(2*1600 - 1440) = 0.818, distance 0.18 <= 0.5.
    cfg = TrackerConfig()
    state, _ = step(TrackerState(), 1, [det(1, 100, 100, 0.9)], cfg)
    low = det(2, 104, 100, 0.3)
    assert iou(state.tracks[0].kalman.to_box(), low.box) == pytest.approx(1440 / 1760)
    state, out = step(state, 2, [low], cfg)
    assert [(e.track_id, e.point.frame, e.point.box) for e in out] == [(1, 2, low.box)]
    assert state.tracks[0].frames_since_update == 0
    assert state.tracks[0].status is Status.ACTIVE
    assert state.live_count() == 1

    # The single-stage variant ignores the low band: the track coasts.
    sort = cfg.updated(variant="sort")
    state, _ = step(TrackerState(), 1, [det(1, 100, 100, 0.9)], sort)
    state, out = step(state, 2, [low], sort)
    assert out == []
    assert state.tracks[0].status is Status.LOST


def test_low_detection_never_spawns():
    state, out = step(TrackerState(), 1, [det(1, 10, 10, 0.4)], TrackerConfig())
    assert out == [] and state.live_count() == 0
    # Between high_thresh and new_track_thresh: matched only, not spawned.
    state, out = step(TrackerState(), 1, [det(1, 10, 10, 0.55)], TrackerConfig())
    assert out == []


def test_max_lost_removal():
    cfg = TrackerConfig(max_lost=2)
    state, _ = step(TrackerState(), 1, [det(1, 10, 10)], cfg)
    for f in (2, 3):
        state, _ = step(state, f, [], cfg)
        assert state.live_count() == 1
        assert state.tracks[0].frames_since_update == f - 1
    state, _ = step(state, 4, [], cfg)
    assert state.live_count() == 0


def test_lost_track_reacquired():
    cfg = TrackerConfig()
    state, _ = step(TrackerState(), 1, [det(1, 10, 10)], cfg)
    state, _ = step(state, 2, [], cfg)
    state, out = step(state, 3, [det(3, 11, 10)], cfg)
    assert [e.track_id for e in out] == [1]
    assert state.tracks[0].status is Status.ACTIVE


def test_out_of_order_frames_rejected():
    state, _ = step(TrackerState(), 3, [], TrackerConfig())
    with pytest.raises(ValueError):
        step(state, 3, [], TrackerConfig())
    with pytest.raises(ValueError):
        step(TrackerState(), 2, [det(1, 0, 0)], TrackerConfig())
    with pytest.raises(TypeError):
        step(TrackerState(), 1, [BBox(0, 0, 1, 1)], TrackerConfig())


def test_step_does_not_mutate_input_state():
    state, _ = step(TrackerState(), 1, [det(1, 10, 10)], TrackerConfig())
    before = state.tracks[0].kalman
    step(state, 2, [det(2, 12, 10)], TrackerConfig())
    assert state.tracks[0].kalman == before
    assert state.last_frame == 1


def test_admit_new_track():
    capped = TrackerConfig(skip_creation=True, cardinality_cap=10)
    d = det(1, 0, 0)
    assert not admit_new_track(d, 10, capped)
    assert admit_new_track(d, 5, capped)
    assert admit_new_track(d, 10, TrackerConfig(cardinality_cap=10))
    assert admit_new_track(d, 100, TrackerConfig())


def test_cap_blocks_eleventh_detection():
    cfg = TrackerConfig(skip_creation=True, cardinality_cap=10)
    dets = [det(1, 100 * i, 0) for i in range(11)]
    state, out = step(TrackerState(), 1, dets, cfg)
    assert state.live_count() == 10 and len(out) == 10
    state, out = step(state, 2, [det(2, 100 * i, 0) for i in range(11)], cfg)
    assert state.live_count() == 10 and len(out) == 10


def _pair_scene():
    # Ten 64 px boxes; tracks 9 and 10 sit 40 px apart.
    xs = [300.0 * i for i in range(8)] + [3000.0, 3040.0]
    return [BBox(x, 500.0, 64.0, 64.0) for x in xs]


def test_rematch_shares_detection_then_recovers():
    cfg = TrackerConfig(rematch_lost=True)
    boxes = _pair_scene()
    state, out = step(TrackerState(), 1, [Detection(1, b, 0.9) for b in boxes], cfg)
    assert len(out) == 10
    hull = BBox(3000.0, 500.0, 104.0, 64.0)
    frame2 = [Detection(2, b, 0.9) for b in boxes[:8]] + [Detection(2, hull, 0.9)]
    state, out = step(state, 2, frame2, cfg)
    assert len(out) == 10
    on_hull = [e for e in out if e.point.box == hull]
    assert sorted(e.track_id for e in on_hull) == [9, 10]
    assert sum(e.rematched for e in on_hull) == 1
    assert state.live_count() == 10

    state, out = step(state, 3, [Detection(3, b, 0.9) for b in boxes], cfg)
    assert sorted(e.track_id for e in out) == list(range(1, 11))
    assert len({e.point.box for e in out}) == 10
    assert not any(e.rematched for e in out)
    assert state.live_count() == 10


def test_without_rematch_pair_track_goes_lost():
    cfg = TrackerConfig()
    boxes = _pair_scene()
    state, _ = step(TrackerState(), 1, [Detection(1, b, 0.9) for b in boxes], cfg)
    hull = BBox(3000.0, 500.0, 104.0, 64.0)
    frame2 = [Detection(2, b, 0.9) for b in boxes[:8]] + [Detection(2, hull, 0.9)]
    state, out = step(state, 2, frame2, cfg)
    assert len(out) == 9
    assert sum(t.status is Status.LOST for t in state.tracks) == 1


def test_rematch_far_track_untouched():
    t = LiveTrack(1, kf_init(BBox(0, 0, 10, 10)), Status.LOST)
    assert rematch_lost_tracks([t], [0], [det(1, 500, 500)]) == []
    assert rematch_lost_tracks([t], [0], []) == []
    near = rematch_lost_tracks([t], [0], [det(1, 500, 500), det(1, 5, 5)])
    assert near == [(0, 1)]


def test_rematched_box_does_not_spawn():
    cfg = TrackerConfig(rematch_lost=True)
    a, b = BBox(0, 0, 64, 64), BBox(40, 0, 64, 64)
    state, _ = step(TrackerState(), 1, [Detection(1, a, 0.9), Detection(1, b, 0.9)], cfg)
    state, out = step(state, 2, [Detection(2, BBox(0, 0, 104, 64), 0.9)], cfg)
    assert state.live_count() == 2 and len(out) == 2


def test_empty_detections_empty_tracks():
    out = run_sequence(det_seq([], 5))
    assert out.tracks == () and out.frame_count == 5


def test_separated_school_one_track_per_fish():
    gt = generate_school(SEPARATED)
    dets = corrupt(gt, CorruptionConfig.identity())
    out = run_sequence(dets, TrackerConfig())
    assert [t.id for t in out.tracks] == list(range(1, 11))
    assert all(len(t) == gt.frame_count for t in out.tracks)
    rep = evaluate(gt, out)
    assert rep.hota == pytest.approx(1.0, abs=1e-9) and rep.id_switches == 0


def _noisy(seed):
    gt = generate_school(SchoolConfig(n_fish=6, duration=4.0, seed=seed))
    return corrupt(gt, CorruptionConfig(position_jitter_std=3.0, dropout_prob=0.1, clutter_rate=0.5,
                                        true_conf_mean=0.7, true_conf_std=0.2, seed=seed))


def test_run_sequence_deterministic():
    dets = _noisy(1)
    assert run_sequence(dets) == run_sequence(dets)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 1000), cut=st.integers(1, 59))
def test_causality(seed, cut):
    dets = _noisy(seed)
    head = Sequence(name=dets.name, frame_count=cut,
                    detections=tuple(d for d in dets.detections if d.frame <= cut))
    full, part = run_sequence(dets), run_sequence(head)

    def upto(seq):
        return {(t.id, p.frame, p.box) for t in seq.tracks for p in t.points if p.frame <= cut}

    assert upto(full) == upto(part)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 1000), variant=st.sampled_from(["sort", "bytetrack"]),
       rematch=st.booleans())
def test_emission_frames(seed, variant, rematch):
    dets = _noisy(seed)
    frames = {d.frame for d in dets.detections}
    seen = []

    def hook(frame, state, emitted):
        ids = [e.track_id for e in emitted]
        assert len(ids) == len(set(ids))
        assert all(e.point.frame == frame for e in emitted)
        seen.append(frame)

    run_sequence(dets, TrackerConfig(variant=variant, rematch_lost=rematch), frame_hook=hook)
    assert seen == list(range(1, dets.frame_count + 1))
    assert frames <= set(seen)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 1000))
def test_cap_never_exceeded(seed):
    gt = generate_school(SchoolConfig(n_fish=4, duration=4.0, seed=seed))
    dets = corrupt(gt, CorruptionConfig(clutter_rate=2.0, clutter_conf_mean=0.9, seed=seed))
    counts = []
    run_sequence(dets, TrackerConfig(skip_creation=True, cardinality_cap=4),
                 frame_hook=lambda f, s, e: counts.append(s.live_count()))
    assert max(counts) <= 4


def test_stateful_wrapper_matches_step():
    dets = _noisy(3).detections_by_frame()
    tr = Tracker()
    state = TrackerState()
    for f in range(1, 61):
        a = tr.update(f, dets.get(f, []))
        state, b = step(state, f, dets.get(f, []), TrackerConfig())
        assert a == b


def test_min_hits_delays_emission():
    cfg = TrackerConfig(min_hits_to_confirm=2)
    state, out = step(TrackerState(), 1, [det(1, 10, 10)], cfg)
    assert out == [] and state.tracks[0].status is Status.TENTATIVE
    state, out = step(state, 2, [det(2, 10, 10)], cfg)
    assert [e.track_id for e in out] == [1]
    # A tentative track that misses is dropped at once.
    state, _ = step(TrackerState(), 1, [det(1, 10, 10)], cfg)
    state, _ = step(state, 2, [], cfg)
    assert state.live_count() == 0


def test_kalman_state_is_finite_on_long_runs():
    dets = _noisy(9)
    states = []
    run_sequence(dets, frame_hook=lambda f, s, e: states.extend(t.kalman for t in s.tracks))
    assert all(np.isfinite(k.mean).all() and np.isfinite(k.covariance).all() for k in states)
