"""Gated linear assignment.

``solve_lap`` returns a maximum-cardinality matching over the admissible
pairs (finite cost not above the gate) and, among those, one of minimum
total cost. Inadmissible cells are replaced by a penalty larger than any
achievable sum of admissible costs, solved as a square problem, then
filtered out.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend


@dataclass(frozen=True)
class AssignmentResult:
    matches: tuple[tuple[int, int], ...]
    unmatched_rows: tuple[int, ...]
    unmatched_columns: tuple[int, ...]

    def as_dict(self) -> dict[int, int]:
        return dict(self.matches)


def solve_lap(cost, gate: float = np.inf) -> AssignmentResult:
    """Match rows to columns using only entries with ``cost <= gate``.

    ``+inf`` and NaN entries are never admissible. An empty matrix yields an
    all-unmatched result.
    """
    c = np.asarray(cost, dtype=np.float64)
    if c.ndim != 2:
        c = c.reshape(0, 0) if c.size == 0 else np.atleast_2d(c)
    n_rows, n_cols = c.shape
    admissible = np.isfinite(c) & (c <= gate)
    if n_rows == 0 or n_cols == 0 or not admissible.any():
        return AssignmentResult((), tuple(range(n_rows)), tuple(range(n_cols)))

    vals = c[admissible]
    lo = float(vals.min())
    shifted = np.where(admissible, c - lo, 0.0)
    n = max(n_rows, n_cols)
    # Any matching with one more admissible pair beats every smaller one.
    penalty = n * float(shifted.max()) + 1.0
    square = np.full((n, n), penalty, dtype=np.float64)
    square[:n_rows, :n_cols] = np.where(admissible, shifted, penalty)

    col_of_row = _backend.lap_square(np.ascontiguousarray(square))
    matches = tuple(
        (r, int(col_of_row[r]))
        for r in range(n_rows)
        if col_of_row[r] < n_cols and admissible[r, col_of_row[r]]
    )
    used_r = {r for r, _ in matches}
    used_c = {k for _, k in matches}
    return AssignmentResult(
        matches,
        tuple(r for r in range(n_rows) if r not in used_r),
        tuple(k for k in range(n_cols) if k not in used_c),
    )


def matched_cost(cost, result: AssignmentResult) -> float:
    c = np.asarray(cost, dtype=np.float64)
    return float(sum(c[r, k] for r, k in sorted(result.matches)))
