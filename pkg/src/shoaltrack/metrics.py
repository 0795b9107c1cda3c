"""HOTA evaluation with DetA/AssA/LocA sub-scores and CLEAR-style counts.

For every localisation threshold alpha in {0.05, 0.10, ..., 0.95}:

1. A (gt, pred) pair is admissible in a frame when their IoU >= alpha.
2. The pair potential is the number of frames in which that pair is
   admissible anywhere in the sequence.
3. Each frame takes a maximum-cardinality one-to-one matching over the
   admissible pairs, preferring higher total potential and then higher total
   IoU (score ``potential + eps * iou`` with ``eps`` too small to trade one
   unit of potential).
4. DetA = TP / (TP + FN + FP). For a matched pair c, A(c) = TPA / (TPA + FNA
   + FPA), which simplifies to ``n_c / (|gt id| + |pred id| - n_c)`` with
   ``n_c`` the number of frames c is matched. AssA averages A over all TPs.
   HOTA = sqrt(DetA * AssA); LocA is the mean IoU over TPs.

Final HOTA/DetA/AssA/LocA are plain means over the 19 thresholds; ID
switches, FN and FP come from the alpha = 0.5 matching.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .assign import solve_lap
from .geometry import boxes_to_array, iou_matrix
from .mot_io import Sequence

ALPHAS: tuple[float, ...] = tuple(k / 20 for k in range(1, 20))
COUNT_ALPHA = 0.5


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class AlphaScore:
    alpha: float
    hota: float
    deta: float
    assa: float
    loca: float
    true_positives: int
    false_negatives: int
    false_positives: int


@dataclass(frozen=True)
class MetricsReport:
    hota: float
    deta: float
    assa: float
    loca: float
    id_switches: int
    false_negatives: int
    false_positives: int
    per_alpha: tuple[AlphaScore, ...]

    def as_row(self) -> dict[str, float | int]:
        return {
            "hota": self.hota, "deta": self.deta, "assa": self.assa, "loca": self.loca,
            "ids": self.id_switches, "fn": self.false_negatives, "fp": self.false_positives,
        }


@dataclass
class _FrameData:
    gt: np.ndarray  # dense gt id indices
    pred: np.ndarray  # dense pred id indices
    sim: np.ndarray  # IoU, shape (len(gt), len(pred))


def _content_key(track) -> tuple:
    return tuple((p.frame, p.box.as_ltwh()) for p in track.points)


def _frame_table(tracks, n_frames: int):
    ids: list[list[int]] = [[] for _ in range(n_frames + 1)]
    boxes: list[list] = [[] for _ in range(n_frames + 1)]
    for k, t in enumerate(tracks):
        for p in t.points:
            ids[p.frame].append(k)
            boxes[p.frame].append(p.box)
    return ids, boxes


def match_tie_epsilon(n_frames: int, max_boxes: int) -> float:
    """Weight of IoU against one unit of pair potential in the frame matching."""
    return 1.0 / (1.0 + max(n_frames, max_boxes))


def _frame_matching(fd: _FrameData, mask: np.ndarray, pot: np.ndarray, eps: float):
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        return rows, cols
    # A graph that is already a matching is its own unique optimum.
    if np.bincount(rows).max() == 1 and np.bincount(cols).max() == 1:
        return rows, cols
    score = pot[np.ix_(fd.gt, fd.pred)] + eps * fd.sim
    cost = np.where(mask, -score, np.inf)
    res = solve_lap(cost, 0.0)
    if not res.matches:
        return np.zeros(0, dtype=np.intp), np.zeros(0, dtype=np.intp)
    r, c = zip(*sorted(res.matches))
    return np.array(r, dtype=np.intp), np.array(c, dtype=np.intp)


def evaluate(gt: Sequence, pred: Sequence) -> MetricsReport:
    """Score ``pred`` tracks against ``gt`` tracks.

    Raises:
        EvaluationError: if ``gt`` has no boxes or the frame ranges differ.
    """
    if not gt.tracks:
        raise EvaluationError("ground truth is empty; metrics are undefined")
    if pred.frame_count != gt.frame_count:
        raise EvaluationError(
            f"frame ranges differ: gt has {gt.frame_count} frames, pred has {pred.frame_count}"
        )
    n_frames = gt.frame_count
    # Index tracks by content, not label, so relabelling cannot change any
    # summation order or assignment tie-break.
    gt_tracks = sorted(gt.tracks, key=_content_key)
    pr_tracks = sorted(pred.tracks, key=_content_key)
    for t in pr_tracks:
        if t.last_frame > n_frames:
            raise EvaluationError(f"pred track {t.id} reaches frame {t.last_frame} > {n_frames}")
    gt_len = np.array([len(t) for t in gt_tracks], dtype=np.int64)
    pr_len = np.array([len(t) for t in pr_tracks], dtype=np.int64)
    g_ids, g_boxes = _frame_table(gt_tracks, n_frames)
    p_ids, p_boxes = _frame_table(pr_tracks, n_frames)

    frames: list[_FrameData] = []
    max_boxes = 0
    for f in range(1, n_frames + 1):
        g = np.array(g_ids[f], dtype=np.intp)
        p = np.array(p_ids[f], dtype=np.intp)
        max_boxes = max(max_boxes, g.size, p.size)
        sim = iou_matrix(boxes_to_array(g_boxes[f]), boxes_to_array(p_boxes[f]))
        frames.append(_FrameData(g, p, sim))
    eps = match_tie_epsilon(n_frames, max_boxes)
    n_gt_boxes = int(gt_len.sum())
    n_pr_boxes = int(pr_len.sum())

    per_alpha: list[AlphaScore] = []
    counts = (0, 0, 0)
    for alpha in ALPHAS:
        masks = [fd.sim >= alpha for fd in frames]
        pot = np.zeros((len(gt_len), len(pr_len)))
        for fd, m in zip(frames, masks):
            if m.any():
                pot[np.ix_(fd.gt, fd.pred)] += m
        matched = np.zeros((len(gt_len), len(pr_len)), dtype=np.int64)
        tp = 0
        loc_sum = 0.0
        idsw = 0
        last_match: dict[int, int] = {}
        for fd, m in zip(frames, masks):
            rows, cols = _frame_matching(fd, m, pot, eps)
            if rows.size == 0:
                continue
            gi, pi = fd.gt[rows], fd.pred[cols]
            np.add.at(matched, (gi, pi), 1)
            tp += rows.size
            loc_sum += float(fd.sim[rows, cols].sum())
            if alpha == COUNT_ALPHA:
                for g, p in zip(gi.tolist(), pi.tolist()):
                    prev = last_match.get(g)
                    if prev is not None and prev != p:
                        idsw += 1
                    last_match[g] = p
        fn = n_gt_boxes - tp
        fp = n_pr_boxes - tp
        deta = tp / max(1, tp + fn + fp)
        nz = matched > 0
        union = gt_len[:, None] + pr_len[None, :] - matched
        a_c = np.where(nz, matched / np.where(nz, union, 1), 0.0)
        assa = float((matched * a_c).sum()) / max(1, tp)
        loca = loc_sum / tp if tp else 0.0
        per_alpha.append(AlphaScore(alpha, math.sqrt(deta * assa), deta, assa, loca, tp, fn, fp))
        if alpha == COUNT_ALPHA:
            counts = (idsw, fn, fp)

    k = len(per_alpha)
    return MetricsReport(
        hota=sum(a.hota for a in per_alpha) / k,
        deta=sum(a.deta for a in per_alpha) / k,
        assa=sum(a.assa for a in per_alpha) / k,
        loca=sum(a.loca for a in per_alpha) / k,
        id_switches=counts[0],
        false_negatives=counts[1],
        false_positives=counts[2],
        per_alpha=tuple(per_alpha),
    )


TABLE_COLUMNS = ("HOTA↑", "IDs↓", "LocA↑", "DetA↑", "AssA↑", "FN↓", "FP↓")


def _cells(report: MetricsReport) -> list[str]:
    return [
        f"{report.hota:.2f}", str(report.id_switches), f"{report.loca:.2f}",
        f"{report.deta:.2f}", f"{report.assa:.2f}",
        str(report.false_negatives), str(report.false_positives),
    ]


def evaluate_report_table(rows: list[tuple[str, MetricsReport]]) -> str:
    """Aligned text table with one row per named run."""
    if not rows:
        raise ValueError("need at least one report")
    header = ["", *TABLE_COLUMNS]
    body = [[name, *_cells(r)] for name, r in rows]
    widths = [max(len(line[i]) for line in [header, *body]) for i in range(len(header))]
    fmt = lambda line: "  ".join(  # noqa: E731
        cell.ljust(w) if i == 0 else cell.rjust(w) for i, (cell, w) in enumerate(zip(line, widths))
    ).rstrip()
    sep = "  ".join("-" * w for w in widths)
    return "\n".join([fmt(header), sep, *(fmt(b) for b in body)]) + "\n"


def report_csv(rows: list[tuple[str, MetricsReport]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "HOTA", "IDs", "LocA", "DetA", "AssA", "FN", "FP"])
    for name, r in rows:
        w.writerow([name, *_cells(r)])
    return buf.getvalue()


def per_alpha_csv(report: MetricsReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "hota", "deta", "assa", "loca", "tp", "fn", "fp"])
    for a in report.per_alpha:
        w.writerow([f"{a.alpha:.2f}", repr(a.hota), repr(a.deta), repr(a.assa), repr(a.loca),
                    a.true_positives, a.false_negatives, a.false_positives])
    return buf.getvalue()
