"""Command-line entry point: ``shoaltrack <subcommand>``.

Settings are resolved as built-in defaults, then the config file
(``--config`` or ``$SHOALTRACK_CONFIG``), then command-line flags.
Every subcommand writes a ``<name>.manifest.json`` next to its outputs;
on failure any partially written output is removed.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from . import config as cfgmod
from .connector import ConnectorConfig, connect_with_log
from .metrics import EvaluationError, evaluate, evaluate_report_table, per_alpha_csv, report_csv
from .mot_io import MotFormatError, Sequence, load_sequence, write_mot
from .synth import CorruptionConfig, SchoolConfig, corrupt, generate_school
from .tracker import TrackerConfig, run_sequence
from .tuner import DEFAULT_SPACE, coordinate_ascent, random_search, tracking_objective, trials_csv
from .viz import centers_csv, tracks_svg


class CliError(Exception):
    pass


class Outputs:
    """Tracks written files so a failed command can remove them."""

    def __init__(self) -> None:
        self.paths: list[Path] = []

    def write(self, path: str | Path, text: str) -> Path:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        tmp = p.with_name(p.name + ".part")
        tmp.write_text(text, encoding="utf-8", newline="\n")
        self.paths.append(p)
        tmp.replace(p)
        return p

    def rollback(self) -> None:
        for p in self.paths:
            p.unlink(missing_ok=True)
            p.with_name(p.name + ".part").unlink(missing_ok=True)


def _log(args, msg: str) -> None:
    if not getattr(args, "quiet", False):
        print(msg)


def _sections(args) -> dict[str, dict[str, Any]]:
    return cfgmod.load_config(getattr(args, "config", None))


def _seed_pair(seed: int) -> tuple[int, int]:
    a, b = np.random.SeedSequence(seed).generate_state(2)
    return int(a), int(b)


def _manifest(out: Outputs, path: Path, args, config: dict, inputs: list, t0: float) -> None:
    data = {
        "subcommand": args.command,
        "argv": getattr(args, "argv", []),
        "config": config,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in out.paths],
        "seed": getattr(args, "seed", None),
        "tool_version": __version__,
        "wall_time": round(time.perf_counter() - t0, 6),
    }
    out.write(path, json.dumps(data, indent=2, sort_keys=True, default=str) + "\n")


def _load(path: str | Path, kind: str, frame_count: int | None = None, info: str | None = None) -> Sequence:
    p = Path(path)
    if not p.exists():
        raise CliError(f"file not found: {p}")
    seq = load_sequence(p, kind, info_path=info)
    if frame_count is not None and seq.frame_count != frame_count:
        last = max([t.last_frame for t in seq.tracks] + [d.frame for d in seq.detections], default=0)
        if last > frame_count:
            raise CliError(f"{p} has frames beyond {frame_count}")
        seq = dataclasses.replace(seq, frame_count=frame_count)
    return seq


# --- config resolution -------------------------------------------------------

def school_config(args, sections) -> SchoolConfig:
    flags = {
        "n_fish": args.fish, "duration": args.duration, "fps": args.fps,
        "arena_width": args.width, "arena_height": args.height,
        "box_width": args.box_width, "box_height": args.box_height,
    }
    seed = getattr(args, "seed", None)
    if seed is not None:
        flags["seed"] = _seed_pair(seed)[0]
    return cfgmod.build(SchoolConfig, sections.get("school"), flags)


CLI_CORRUPTION_DEFAULTS = {"dropout_prob": 0.05, "true_conf_mean": 0.9, "true_conf_std": 0.05}


def corruption_config(args, sections) -> CorruptionConfig:
    flags = {
        "dropout_prob": args.dropout, "position_jitter_std": args.jitter,
        "clutter_rate": args.clutter, "merge_iou_thresh": args.merge_iou,
        "true_conf_mean": args.conf_mean, "true_conf_std": args.conf_std,
        "burst_rate": args.burst_rate, "burst_length": args.burst_length,
    }
    seed = getattr(args, "seed", None)
    if seed is not None:
        flags["seed"] = _seed_pair(seed)[1]
    return cfgmod.build(CorruptionConfig, CLI_CORRUPTION_DEFAULTS, sections.get("corruption"), flags)


def tracker_config(args, sections) -> TrackerConfig:
    flags = {
        "variant": args.variant, "high_thresh": args.high, "low_thresh": args.low,
        "new_track_thresh": args.new, "match_thresh": args.match,
        "second_match_thresh": args.second_match, "max_lost": args.max_lost,
        "cardinality_cap": args.cap, "min_hits_to_confirm": args.min_hits,
        "skip_creation": True if args.skip_creation else None,
        "rematch_lost": True if args.rematch_lost else None,
    }
    return cfgmod.build(TrackerConfig, sections.get("tracker"), flags)


def connector_config(args, sections) -> ConnectorConfig:
    flags = {"max_frame_gap": args.max_frame_gap, "distance_cap": args.distance_cap}
    return cfgmod.build(ConnectorConfig, sections.get("connector"), flags)


def _asdict(obj) -> dict:
    return dataclasses.asdict(obj)


# --- subcommands -------------------------------------------------------------

def cmd_synth(args, out: Outputs) -> int:
    t0 = time.perf_counter()
    sections = _sections(args)
    school = school_config(args, sections)
    noise = corruption_config(args, sections)
    gt = generate_school(school)
    det = corrupt(gt, noise)
    d = Path(args.out)
    out.write(d / "gt.txt", _mot_text(gt))
    out.write(d / "det.txt", _mot_text(det))
    out.write(d / "seqinfo.ini", _info_text(gt))
    _manifest(out, d / "synth.manifest.json", args,
              {"school": _asdict(school), "corruption": _asdict(noise)}, [], t0)
    _log(args, f"wrote {len(gt.tracks)} tracks x {gt.frame_count} frames and "
               f"{len(det.detections)} detections to {d}")
    return 0


def cmd_track(args, out: Outputs) -> int:
    t0 = time.perf_counter()
    sections = _sections(args)
    cfg = tracker_config(args, sections)
    det = _load(args.det, "detections", info=args.info)
    tracks = run_sequence(det, cfg)
    path = out.write(args.out, _mot_text(tracks))
    _manifest(out, path.with_suffix(".manifest.json"), args, {"tracker": _asdict(cfg)}, [args.det], t0)
    _log(args, f"{len(tracks.tracks)} tracks -> {path}")
    return 0


def cmd_connect(args, out: Outputs) -> int:
    t0 = time.perf_counter()
    sections = _sections(args)
    cfg = connector_config(args, sections)
    seq = _load(args.input, "tracks", info=args.info)
    fixed, log = connect_with_log(seq, cfg)
    path = out.write(args.out, _mot_text(fixed))
    conf = {"connector": _asdict(cfg), "merges": [_asdict(m) for m in log]}
    _manifest(out, path.with_suffix(".manifest.json"), args, conf, [args.input], t0)
    _log(args, f"{len(seq.tracks)} -> {len(fixed.tracks)} tracks ({len(log)} merges) -> {path}")
    return 0


def cmd_eval(args, out: Outputs) -> int:
    t0 = time.perf_counter()
    gt = _load(args.gt, "tracks", info=args.info)
    pred = _load(args.pred, "tracks", frame_count=gt.frame_count, info=args.info)
    report = evaluate(gt, pred)
    rows = [(args.name or Path(args.pred).stem, report)]
    table = evaluate_report_table(rows)
    if not args.quiet:
        sys.stdout.write(table)
    if args.csv:
        out.write(args.csv, report_csv(rows))
    if args.per_alpha:
        out.write(args.per_alpha, per_alpha_csv(report))
    if out.paths:
        _manifest(out, Path(out.paths[0]).with_suffix(".manifest.json"), args,
                  {"metrics": report.as_row()}, [args.gt, args.pred], t0)
    return 0


def cmd_tune(args, out: Outputs) -> int:
    t0 = time.perf_counter()
    sections = _sections(args)
    base = tracker_config(args, sections)
    det = _load(args.det, "detections", info=args.info)
    gt = _load(args.gt, "tracks", frame_count=det.frame_count, info=args.info)
    space = cfgmod.search_space_from(sections["search"]) if "search" in sections else DEFAULT_SPACE
    tune_opts = sections.get("tune", {})
    conn = connector_config(args, sections) if (args.connect or "max_frame_gap" in space.names) else None
    objective = tracking_objective(det, gt, base, conn)
    start = {n: getattr(base, n) if n in TrackerConfig.field_names() else getattr(conn, n) for n in space.names}
    method = args.method or tune_opts.get("method", "coordinate")
    seed = args.seed if args.seed is not None else int(tune_opts.get("seed", 0))
    if method == "coordinate":
        rounds = args.rounds or int(tune_opts.get("max_rounds", 3))
        best, trials = coordinate_ascent(objective, space, start, rounds)
    elif method == "random":
        n = args.trials or int(tune_opts.get("n_trials", 20))
        best, trials = random_search(objective, space, n, seed)
    else:
        raise CliError(f"unknown method {method!r}")
    d = Path(args.out_dir)
    out.write(d / "trials.csv", trials_csv(trials, space.names))
    t_best = {k: v for k, v in best.items() if k in TrackerConfig.field_names()}
    sec = {"tracker": _asdict(base.updated(**t_best))}
    if conn is not None:
        sec["connector"] = _asdict(ConnectorConfig(**{**_asdict(conn), **{k: v for k, v in best.items() if k not in t_best}}))
    out.write(d / "best_config.ini", cfgmod.dump_kv(sec))
    best_h = max(t.hota for t in trials)
    _manifest(out, d / "tune.manifest.json", args,
              {"method": method, "space": list(space.names), "best": best, "best_hota": best_h},
              [args.det, args.gt], t0)
    _log(args, f"{len(trials)} trials, best HOTA {best_h:.4f}: {best}")
    return 0


def cmd_plot(args, out: Outputs) -> int:
    t0 = time.perf_counter()
    seq = _load(args.tracks, "tracks", info=args.info)
    path = out.write(args.out, tracks_svg(seq))
    csv_path = Path(args.csv) if args.csv else path.with_suffix(".csv")
    out.write(csv_path, centers_csv(seq))
    _manifest(out, path.with_suffix(".manifest.json"), args, {}, [args.tracks], t0)
    _log(args, f"plotted {len(seq.tracks)} tracks -> {path}")
    return 0


def cmd_pipeline(args, out: Outputs) -> int:
    """synth -> track -> connect -> eval in one output directory."""
    t0 = time.perf_counter()
    sections = _sections(args)
    school = school_config(args, sections)
    noise = corruption_config(args, sections)
    tcfg = tracker_config(args, sections)
    ccfg = connector_config(args, sections)
    d = Path(args.out)
    gt = generate_school(school)
    det = corrupt(gt, noise)
    out.write(d / "gt.txt", _mot_text(gt))
    out.write(d / "det.txt", _mot_text(det))
    out.write(d / "seqinfo.ini", _info_text(gt))
    # Each stage starts from the file the previous one wrote, exactly as
    # running the subcommands by hand would.
    det_f = _load(d / "det.txt", "detections")
    tracks = run_sequence(det_f, tcfg)
    out.write(d / "tracks.txt", _mot_text(tracks))
    tracks_f = _load(d / "tracks.txt", "tracks")
    fixed, log = connect_with_log(tracks_f, ccfg)
    out.write(d / "connected.txt", _mot_text(fixed))
    gt_f = _load(d / "gt.txt", "tracks")
    rows = [
        ("tracker", evaluate(gt_f, _load(d / "tracks.txt", "tracks", frame_count=gt_f.frame_count))),
        ("connected", evaluate(gt_f, _load(d / "connected.txt", "tracks", frame_count=gt_f.frame_count))),
    ]
    out.write(d / "metrics.csv", report_csv(rows))
    out.write(d / "per_alpha.csv", per_alpha_csv(rows[-1][1]))
    table = evaluate_report_table(rows)
    out.write(d / "metrics.txt", table)
    _manifest(out, d / "pipeline.manifest.json", args, {
        "school": _asdict(school), "corruption": _asdict(noise),
        "tracker": _asdict(tcfg), "connector": _asdict(ccfg), "merges": len(log),
    }, [], t0)
    if not args.quiet:
        sys.stdout.write(table)
    return 0


_mot_text = write_mot


def _info_text(seq: Sequence) -> str:
    return "".join(f"{k}={v}\n" for k, v in seq.info().items())


# --- parser ------------------------------------------------------------------

def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, metavar="PATH",
                   help="config file (key=value or .json); falls back to $SHOALTRACK_CONFIG")
    p.add_argument("--seed", type=int, default=d, metavar="N", help="master seed")
    p.add_argument("--quiet", action="store_true", default=d if suppress else False,
                   help="suppress informational output")


def _add_synth_flags(p) -> None:
    g = p.add_argument_group("school")
    g.add_argument("--fish", type=int, help="number of fish (default 10)")
    g.add_argument("--duration", type=float, help="seconds (default 60)")
    g.add_argument("--fps", type=float, help="frames per second (default 15)")
    g.add_argument("--width", type=float, help="arena width px (default 2456)")
    g.add_argument("--height", type=float, help="arena height px (default 2048)")
    g.add_argument("--box-width", type=float)
    g.add_argument("--box-height", type=float)
    g = p.add_argument_group("corruption")
    g.add_argument("--dropout", type=float, help="per-box drop probability (default 0.05)")
    g.add_argument("--jitter", type=float, help="centre jitter std px (default 0)")
    g.add_argument("--clutter", type=float, help="false boxes per frame (default 0)")
    g.add_argument("--merge-iou", type=float, help="occlusion merge IoU threshold (default 1 = off)")
    g.add_argument("--conf-mean", type=float, help="true-box confidence mean (default 0.9)")
    g.add_argument("--conf-std", type=float, help="true-box confidence std (default 0.05)")
    g.add_argument("--burst-rate", type=float)
    g.add_argument("--burst-length", type=int)


def _add_tracker_flags(p) -> None:
    g = p.add_argument_group("tracker")
    g.add_argument("--variant", choices=("sort", "bytetrack"))
    g.add_argument("--high", type=float, help="high-score threshold (default 0.5)")
    g.add_argument("--low", type=float, help="low-score threshold (default 0.1)")
    g.add_argument("--new", type=float, help="new-track threshold (default 0.6)")
    g.add_argument("--match", type=float, help="first-stage IoU-distance gate (default 0.8)")
    g.add_argument("--second-match", type=float, help="second-stage IoU-distance gate (default 0.5)")
    g.add_argument("--max-lost", type=int, help="frames a lost track is kept (default 30)")
    g.add_argument("--cap", type=int, help="cardinality cap for --skip-creation")
    g.add_argument("--skip-creation", action="store_true")
    g.add_argument("--rematch-lost", action="store_true")
    g.add_argument("--min-hits", type=int)


def _add_connector_flags(p) -> None:
    g = p.add_argument_group("connector")
    g.add_argument("--max-frame-gap", type=int, help="largest joinable gap in frames (default 150)")
    g.add_argument("--distance-cap", type=float, help="largest joinable jump in px (default none)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shoaltrack",
        description=__doc__.split("\n\n")[0],
        epilog="Precedence: command-line flags > config file > built-in defaults.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func: Callable, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_, description=help_,
                           epilog="Precedence: command-line flags > config file > built-in defaults.")
        _add_globals(p, suppress=True)
        p.add_argument("--info", help="seqinfo file (default: seqinfo.ini beside the input)")
        p.set_defaults(func=func)
        return p

    p = add("synth", cmd_synth, "generate a synthetic school and its detections")
    p.add_argument("--out", required=True, help="output directory")
    _add_synth_flags(p)

    p = add("track", cmd_track, "track a detection file")
    p.add_argument("--det", required=True)
    p.add_argument("--out", required=True)
    _add_tracker_flags(p)

    p = add("connect", cmd_connect, "merge fragmented tracks and interpolate gaps")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    _add_connector_flags(p)

    p = add("eval", cmd_eval, "score predictions against ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--name")
    p.add_argument("--csv", help="write the table as CSV")
    p.add_argument("--per-alpha", help="write the per-alpha breakdown as CSV")

    p = add("tune", cmd_tune, "search tracker hyperparameters for the best HOTA")
    p.add_argument("--det", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--method", choices=("coordinate", "random"))
    p.add_argument("--rounds", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--connect", action="store_true", help="apply the connector inside the objective")
    _add_tracker_flags(p)
    _add_connector_flags(p)

    p = add("plot", cmd_plot, "draw trajectories as SVG plus a centre CSV")
    p.add_argument("--tracks", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--csv")

    p = add("pipeline", cmd_pipeline, "synth, track, connect and eval in one go")
    p.add_argument("--out", required=True)
    _add_synth_flags(p)
    _add_tracker_flags(p)
    _add_connector_flags(p)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    out = Outputs()
    try:
        return args.func(args, out)
    except (CliError, cfgmod.ConfigError, MotFormatError, EvaluationError, ValueError, KeyError, OSError) as exc:
        out.rollback()
        print(f"shoaltrack {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except BaseException:
        out.rollback()
        raise


if __name__ == "__main__":
    sys.exit(main())
