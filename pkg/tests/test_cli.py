import json
import re
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from shoaltrack.cli import main
from shoaltrack.mot_io import load_sequence
from shoaltrack.viz import track_color

SHORT = ["--duration", "6"]


def run(*argv):
    return main([str(a) for a in argv])


def read(path):
    return path.read_bytes()


@pytest.fixture
def synth_dir(tmp_path):
    d = tmp_path / "s"
    assert run("synth", "--out", d, "--seed", 7, *SHORT, "--jitter", 2, "--dropout", 0.1) == 0
    return d


def test_synth_default_recording(tmp_path):
    d = tmp_path / "full"
    assert run("--quiet", "synth", "--fish", 10, "--duration", 60, "--seed", 7, "--out", d) == 0
    gt = load_sequence(d / "gt.txt", "tracks")
    assert len(gt.tracks) == 10 and gt.frame_count == 900
    assert all(len(t) == 900 for t in gt.tracks)
    man = json.loads((d / "synth.manifest.json").read_text())
    assert man["seed"] == 7 and man["subcommand"] == "synth"
    assert set(man) >= {"argv", "config", "inputs", "outputs", "tool_version", "wall_time"}


def test_synth_without_dropout_matches_gt(tmp_path):
    d = tmp_path / "d"
    assert run("synth", "--out", d, "--seed", 1, *SHORT, "--dropout", 0) == 0
    gt = load_sequence(d / "gt.txt", "tracks")
    det = load_sequence(d / "det.txt", "detections")
    want = sorted((p.frame, p.box.as_ltwh()) for t in gt.tracks for p in t.points)
    assert sorted((x.frame, x.box.as_ltwh()) for x in det.detections) == want


def test_synth_rerun_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run("synth", "--out", d, "--seed", 3, *SHORT, "--clutter", 0.5) == 0
    for name in ("gt.txt", "det.txt", "seqinfo.ini"):
        assert read(a / name) == read(b / name)
    c = tmp_path / "c"
    run("synth", "--out", c, "--seed", 4, *SHORT)
    assert read(a / "gt.txt") != read(c / "gt.txt")


def test_track_baseline_flags_equal_defaults(synth_dir):
    a, b = synth_dir / "a.txt", synth_dir / "b.txt"
    assert run("track", "--det", synth_dir / "det.txt", "--out", a, "--variant", "bytetrack",
               "--high", 0.5, "--low", 0.1, "--new", 0.6, "--match", 0.8, "--max-lost", 30) == 0
    assert run("track", "--det", synth_dir / "det.txt", "--out", b) == 0
    assert read(a) == read(b)
    man = json.loads((synth_dir / "a.manifest.json").read_text())
    assert man["config"]["tracker"]["match_thresh"] == 0.8


def test_track_cardinality_flags(synth_dir):
    out = synth_dir / "cap.txt"
    assert run("track", "--det", synth_dir / "det.txt", "--out", out,
               "--cap", 10, "--skip-creation", "--rematch-lost") == 0
    cfg = json.loads((synth_dir / "cap.manifest.json").read_text())["config"]["tracker"]
    assert (cfg["cardinality_cap"], cfg["skip_creation"], cfg["rematch_lost"]) == (10, True, True)


def test_invalid_threshold_order(synth_dir, capsys):
    out = synth_dir / "bad.txt"
    assert run("track", "--det", synth_dir / "det.txt", "--out", out, "--high", 0.1, "--low", 0.3) != 0
    assert not out.exists()
    assert "error" in capsys.readouterr().err


def test_missing_input(tmp_path):
    assert run("eval", "--gt", tmp_path / "nope.txt", "--pred", tmp_path / "nope.txt") != 0
    assert run("track", "--det", tmp_path / "nope.txt", "--out", tmp_path / "x.txt") != 0
    assert not (tmp_path / "x.txt").exists()


def test_connect_fixed_point_is_byte_identical(tmp_path):
    src = tmp_path / "t.txt"
    src.write_text("1,1,10.000000,10.000000,5.000000,5.000000,1.000000,-1,-1,-1\n"
                   "2,1,11.000000,10.000000,5.000000,5.000000,1.000000,-1,-1,-1\n"
                   "2,2,50.000000,50.000000,5.000000,5.000000,1.000000,-1,-1,-1\n")
    out = tmp_path / "c.txt"
    assert run("connect", "--in", src, "--out", out) == 0
    assert read(out) == read(src)


def test_connect_reduces_fragments(tmp_path):
    src = tmp_path / "t.txt"
    rows = [f"{f},1,{f}.0,0,10,10,1,-1,-1,-1" for f in range(1, 6)]
    rows += [f"{f},2,{f}.0,0,10,10,1,-1,-1,-1" for f in range(8, 12)]
    src.write_text("\n".join(rows) + "\n")
    out = tmp_path / "c.txt"
    assert run("connect", "--in", src, "--out", out) == 0
    seq = load_sequence(out, "tracks")
    assert [t.id for t in seq.tracks] == [1] and len(seq.tracks[0]) == 11
    man = json.loads((tmp_path / "c.manifest.json").read_text())
    assert man["config"]["connector"]["max_frame_gap"] == 150
    assert len(man["config"]["merges"]) == 1
    assert run("connect", "--in", src, "--out", tmp_path / "d.txt", "--max-frame-gap", 2) == 0
    assert len(load_sequence(tmp_path / "d.txt", "tracks").tracks) == 2


def test_eval_perfect(synth_dir, capsys):
    gt = synth_dir / "gt.txt"
    assert run("eval", "--gt", gt, "--pred", gt, "--csv", synth_dir / "m.csv") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split() == ["HOTA↑", "IDs↓", "LocA↑", "DetA↑", "AssA↑", "FN↓", "FP↓"]
    assert lines[2].split()[1:] == ["1.00", "0", "1.00", "1.00", "1.00", "0", "0"]
    assert (synth_dir / "m.csv").read_text().splitlines()[0] == "name,HOTA,IDs,LocA,DetA,AssA,FN,FP"


def test_tune_single_point(synth_dir, tmp_path):
    cfg = tmp_path / "tune.ini"
    cfg.write_text("[search]\nhigh_thresh = 0.5\n")
    out = tmp_path / "tune"
    argv = ["tune", "--config", cfg, "--det", synth_dir / "det.txt", "--gt", synth_dir / "gt.txt",
            "--out-dir", out]
    assert run(*argv) == 0
    rows = (out / "trials.csv").read_text().splitlines()
    assert len(rows) == 2 and rows[1].startswith("0,0.5,")
    assert "high_thresh = 0.5" in (out / "best_config.ini").read_text()
    first = read(out / "trials.csv")
    assert run(*argv) == 0
    assert read(out / "trials.csv") == first


def test_tune_random_seeded(synth_dir, tmp_path):
    cfg = tmp_path / "tune.ini"
    cfg.write_text("[search]\nhigh_thresh = 0.3, 0.5, 0.7\nmax_lost = 5, 30\n")
    outs = []
    for name in ("a", "b"):
        d = tmp_path / name
        assert run("tune", "--config", cfg, "--det", synth_dir / "det.txt", "--gt", synth_dir / "gt.txt",
                   "--out-dir", d, "--method", "random", "--trials", 4, "--seed", 5) == 0
        outs.append(read(d / "trials.csv"))
    assert outs[0] == outs[1]
    inc = [float(r.split(",")[-2]) for r in outs[0].decode().splitlines()[1:]]
    assert inc == sorted(inc)


def test_plot_empty_and_line(tmp_path):
    empty = tmp_path / "e.txt"
    empty.write_text("")
    assert run("plot", "--tracks", empty, "--out", tmp_path / "e.svg") == 0
    root = ET.parse(tmp_path / "e.svg").getroot()
    assert root.tag.endswith("svg") and not root.findall(".//{http://www.w3.org/2000/svg}polyline")

    line = tmp_path / "l.txt"
    line.write_text("".join(f"{f},3,{10 * f},{5 * f},20,10,1,-1,-1,-1\n" for f in range(1, 11)))
    assert run("plot", "--tracks", line, "--out", tmp_path / "l.svg") == 0
    root = ET.parse(tmp_path / "l.svg").getroot()
    (poly,) = root.findall(".//{http://www.w3.org/2000/svg}polyline")
    pts = [tuple(map(float, p.split(","))) for p in poly.get("points").split()]
    assert pts[0] == (20.0, 10.0) and pts[-1] == (110.0, 55.0)
    assert poly.get("stroke") == track_color(3)
    csv_rows = (tmp_path / "l.csv").read_text().splitlines()
    assert len(csv_rows) == 11 and csv_rows[1].startswith("1,3,20.000000,10.000000")


def test_pipeline_equals_manual_steps(tmp_path):
    flags = ["--seed", 11, *SHORT, "--jitter", 2, "--clutter", 0.2, "--max-frame-gap", 20]
    p = tmp_path / "p"
    assert run("--quiet", "pipeline", "--out", p, *flags) == 0
    m = tmp_path / "m"
    assert run("synth", "--out", m, "--seed", 11, *SHORT, "--jitter", 2, "--clutter", 0.2) == 0
    assert run("track", "--det", m / "det.txt", "--out", m / "tracks.txt") == 0
    assert run("connect", "--in", m / "tracks.txt", "--out", m / "connected.txt", "--max-frame-gap", 20) == 0
    assert run("eval", "--gt", m / "gt.txt", "--pred", m / "connected.txt", "--name", "connected",
               "--csv", m / "metrics.csv") == 0
    for name in ("gt.txt", "det.txt", "seqinfo.ini", "tracks.txt", "connected.txt"):
        assert read(p / name) == read(m / name), name
    piped = (p / "metrics.csv").read_text().splitlines()
    manual = (m / "metrics.csv").read_text().splitlines()
    assert piped[2] == manual[1]


def test_env_config_fallback(tmp_path, monkeypatch, synth_dir):
    cfg = tmp_path / "env.ini"
    cfg.write_text("[tracker]\nmax_lost = 7\n")
    monkeypatch.setenv("SHOALTRACK_CONFIG", str(cfg))
    assert run("track", "--det", synth_dir / "det.txt", "--out", tmp_path / "t.txt") == 0
    man = json.loads((tmp_path / "t.manifest.json").read_text())
    assert man["config"]["tracker"]["max_lost"] == 7
    # Flags win over the file.
    assert run("track", "--det", synth_dir / "det.txt", "--out", tmp_path / "u.txt", "--max-lost", 9) == 0
    assert json.loads((tmp_path / "u.manifest.json").read_text())["config"]["tracker"]["max_lost"] == 9


def test_json_config(tmp_path, synth_dir):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"tracker": {"high_thresh": 0.6}}))
    assert run("track", "--config", cfg, "--det", synth_dir / "det.txt", "--out", tmp_path / "t.txt") == 0
    man = json.loads((tmp_path / "t.manifest.json").read_text())
    assert man["config"]["tracker"]["high_thresh"] == 0.6


def test_bad_config_key(tmp_path, synth_dir):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[tracker]\nbogus = 1\n")
    assert run("track", "--config", cfg, "--det", synth_dir / "det.txt", "--out", tmp_path / "t.txt") != 0
    assert not (tmp_path / "t.txt").exists()


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "shoaltrack", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and re.match(r"shoaltrack \d+\.\d+\.\d+", res.stdout)
