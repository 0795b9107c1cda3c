"""Hyperparameter search maximizing HOTA.

``coordinate_ascent`` sweeps one parameter at a time over its grid with the
others held at their incumbent values, adopts the best value (the incumbent
wins ties), and repeats rounds until nothing changes. ``random_search`` draws
independent uniform samples. Both return the best parameter dict and the
trial log.
"""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from .connector import ConnectorConfig, connect
from .metrics import MetricsReport, evaluate
from .mot_io import Sequence
from .tracker import TrackerConfig, run_sequence

KINDS = ("real", "integer", "boolean", "categorical")
Objective = Callable[[dict[str, Any]], MetricsReport]


def _default_grid(kind: str, low: float, high: float, points: int = 5) -> tuple:
    """Sweep grid for a bounded parameter declared without one."""
    if kind == "integer":
        lo, hi = int(low), int(high)
        if hi - lo < points:
            return tuple(range(lo, hi + 1))
        return tuple(sorted({int(round(v)) for v in np.linspace(lo, hi, points)}))
    return tuple(float(v) for v in np.linspace(low, high, points))


@dataclass(frozen=True)
class Param:
    name: str
    kind: str
    low: float | None = None
    high: float | None = None
    choices: tuple = ()
    grid: tuple = ()

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"{self.name}: unknown kind {self.kind!r}")
        if self.kind == "boolean" and not self.choices:
            object.__setattr__(self, "choices", (False, True))
        if self.kind in ("boolean", "categorical"):
            if not self.choices:
                raise ValueError(f"{self.name}: categorical parameter needs choices")
            if not self.grid:
                object.__setattr__(self, "grid", tuple(self.choices))
            bad = [g for g in self.grid if g not in self.choices]
        else:
            if self.low is None or self.high is None:
                if not self.grid:
                    raise ValueError(f"{self.name}: need bounds or a grid")
                object.__setattr__(self, "low", min(self.grid))
                object.__setattr__(self, "high", max(self.grid))
            if self.low > self.high:
                raise ValueError(f"{self.name}: bounds out of order")
            if not self.grid:
                object.__setattr__(self, "grid", _default_grid(self.kind, self.low, self.high))
            bad = [g for g in self.grid if not self.low <= g <= self.high]
        if bad:
            raise ValueError(f"{self.name}: grid values {bad} outside the space")
        object.__setattr__(self, "grid", tuple(self.grid))

    def sample(self, rng: np.random.Generator) -> Any:
        if self.kind == "real":
            return float(rng.uniform(self.low, self.high))
        if self.kind == "integer":
            return int(rng.integers(int(self.low), int(self.high), endpoint=True))
        return self.choices[int(rng.integers(len(self.choices)))]


@dataclass(frozen=True)
class SearchSpace:
    params: tuple[Param, ...]

    def __post_init__(self) -> None:
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValueError("duplicate parameter names")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)

    def grid_size(self) -> int:
        return math.prod(len(p.grid) for p in self.params)

    def iter_grid(self):
        """Every grid combination, first parameter varying slowest."""
        import itertools

        for combo in itertools.product(*(p.grid for p in self.params)):
            yield dict(zip(self.names, combo))


DEFAULT_SPACE = SearchSpace((
    Param("high_thresh", "real", 0.0, 1.0, grid=(0.3, 0.4, 0.5, 0.6, 0.7)),
    Param("low_thresh", "real", 0.0, 0.5, grid=(0.05, 0.1, 0.2)),
    Param("new_track_thresh", "real", 0.0, 1.0, grid=(0.5, 0.6, 0.7, 0.8)),
    Param("match_thresh", "real", 0.05, 1.0, grid=(0.6, 0.7, 0.8, 0.9)),
    Param("max_lost", "integer", 0, 300, grid=(10, 30, 60, 90)),
    Param("max_frame_gap", "integer", 1, 600, grid=(30, 75, 150)),
))


@dataclass
class TrialRecord:
    index: int
    params: dict[str, Any]
    report: MetricsReport | None
    wall_time: float
    incumbent_hota: float = -math.inf
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.report is not None

    @property
    def hota(self) -> float:
        return self.report.hota if self.report is not None else -math.inf


def _key(params: Mapping[str, Any]) -> tuple:
    return tuple(sorted(params.items()))


@dataclass
class _Runner:
    objective: Objective
    memoize: bool = True
    trials: list[TrialRecord] = field(default_factory=list)
    cache: dict[tuple, TrialRecord] = field(default_factory=dict)

    def __call__(self, params: dict[str, Any], incumbent: float) -> TrialRecord:
        k = _key(params)
        if self.memoize and k in self.cache:
            return self.cache[k]
        t0 = time.perf_counter()
        try:
            report, err = self.objective(dict(params)), ""
        except Exception as exc:  # noqa: BLE001 - a failed trial is data
            report, err = None, f"{type(exc).__name__}: {exc}"
        rec = TrialRecord(len(self.trials), dict(params), report, time.perf_counter() - t0, incumbent, err)
        self.trials.append(rec)
        self.cache[k] = rec
        return rec


def coordinate_ascent(objective: Objective, space: SearchSpace, start: Mapping[str, Any],
                      max_rounds: int = 3) -> tuple[dict[str, Any], list[TrialRecord]]:
    """One-parameter-at-a-time search; see the module docstring."""
    missing = set(space.names) - set(start)
    if missing:
        raise KeyError(f"start config lacks {sorted(missing)}")
    run = _Runner(objective)
    incumbent = dict(start)
    first = run(incumbent, -math.inf)
    best = first.incumbent_hota = first.hota
    for _ in range(max_rounds):
        changed = False
        for p in space.params:
            chosen, chosen_h = incumbent[p.name], best
            for value in p.grid:
                if value == incumbent[p.name]:
                    continue
                rec = run({**incumbent, p.name: value}, best)
                if rec.hota > chosen_h:
                    chosen, chosen_h = value, rec.hota
            if chosen != incumbent[p.name]:
                incumbent[p.name] = chosen
                best = chosen_h
                changed = True
        if not changed:
            break
    return incumbent, run.trials


def random_search(objective: Objective, space: SearchSpace, n_trials: int, seed: int,
                  base: Mapping[str, Any] | None = None) -> tuple[dict[str, Any], list[TrialRecord]]:
    """Uniform random sampling; trial ``i`` draws from its own spawned seed."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    run = _Runner(objective, memoize=False)
    children = np.random.SeedSequence(seed).spawn(n_trials)
    best_params: dict[str, Any] | None = None
    best = -math.inf
    for child in children:
        rng = np.random.default_rng(child)
        params = {**(base or {}), **{p.name: p.sample(rng) for p in space.params}}
        rec = run(params, best)
        if best_params is None or rec.hota > best:
            best_params, best = dict(params), rec.hota
        rec.incumbent_hota = best
    return best_params, run.trials


CONNECTOR_KEYS = ("max_frame_gap", "distance_cap")


def tracking_objective(detections: Sequence, gt: Sequence,
                       tracker: TrackerConfig | None = None,
                       connector: ConnectorConfig | None = None) -> Objective:
    """Objective that tracks ``detections`` with overrides and scores against ``gt``.

    Connector keys in the params enable the post-processing step; so does
    passing ``connector``.
    """
    tracker = tracker or TrackerConfig()

    def objective(params: dict[str, Any]) -> MetricsReport:
        t_over = {k: v for k, v in params.items() if k not in CONNECTOR_KEYS}
        c_over = {k: v for k, v in params.items() if k in CONNECTOR_KEYS}
        tracks = run_sequence(detections, tracker.updated(**t_over))
        if connector is not None or c_over:
            base = connector or ConnectorConfig()
            tracks = connect(tracks, ConnectorConfig(**{**base.__dict__, **c_over}))
        return evaluate(gt, tracks)

    return objective


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def trials_csv(trials: list[TrialRecord], names: tuple[str, ...]) -> str:
    """Trial log as CSV. Wall time is left out so seeded reruns are byte-identical."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", *names, "hota", "deta", "assa", "loca", "ids", "fn", "fp",
                "incumbent_hota", "status"])
    for t in trials:
        r = t.report
        metrics = (["", "", "", "", "", "", ""] if r is None else
                   [repr(r.hota), repr(r.deta), repr(r.assa), repr(r.loca),
                    r.id_switches, r.false_negatives, r.false_positives])
        inc = "" if t.incumbent_hota == -math.inf else repr(t.incumbent_hota)
        w.writerow([t.index, *(_fmt(t.params.get(n, "")) for n in names), *metrics, inc,
                    "ok" if t.ok else "failed"])
    return buf.getvalue()
