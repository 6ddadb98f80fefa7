"""Bipartite matching of padded ground truth to predictions.

The solver is the O(N^3) shortest-augmenting-path form of the Hungarian
method with row/column potentials; the scan over columns is vectorised.
Among all optimal assignments the lexicographically smallest mapping is
returned: after solving, every optimal assignment is a perfect matching on
the tight edges (zero reduced cost), and the mapping is lowered row by row
through alternating cycles on that subgraph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .gtfit import GtInstance
from .losses import Detection, LossConfig, fit_loss_matrix, focal_cost_vector, pad_ground_truth

__all__ = ["MatchAssignment", "hungarian_assign", "cost_matrix", "cost_matrix_arrays", "match"]


@dataclass(frozen=True, eq=False)
class MatchAssignment:
    mapping: np.ndarray  # mapping[j] = prediction assigned to ground-truth row j
    total_cost: float

    def to_dict(self) -> dict:
        return {"mapping": [int(k) for k in self.mapping], "total_cost": float(self.total_cost)}

    @classmethod
    def from_dict(cls, d: dict) -> "MatchAssignment":
        return cls(np.asarray(d["mapping"], dtype=int), float(d["total_cost"]))


def _solve(cost: np.ndarray):
    """Rectangular solve (rows <= columns).

    Returns (row -> column assignment, row potentials, column potentials);
    unassigned columns keep a zero potential and all column potentials are <= 0.
    """
    n, m = cost.shape
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    owner = np.zeros(m + 1, dtype=int)  # owner[j] = 1-based row holding column j; 0 = free
    way = np.zeros(m + 1, dtype=int)
    padded = np.zeros((n + 1, m + 1))
    padded[1:, 1:] = cost

    for i in range(1, n + 1):
        owner[0] = i
        j0 = 0
        minv = np.full(m + 1, np.inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = owner[j0]
            free = ~used
            free[0] = False
            cur = padded[i0] - u[i0] - v
            better = free & (cur < minv)
            minv[better] = cur[better]
            way[better] = j0
            masked = np.where(free, minv, np.inf)
            j1 = int(np.argmin(masked))
            delta = masked[j1]
            u[owner[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1

    rows = np.full(n, -1, dtype=int)
    taken = np.flatnonzero(owner[1:])
    rows[owner[1:][taken] - 1] = taken
    return rows, u[1:], v[1:]


def _lexicographic_min(mapping: np.ndarray, tight: np.ndarray) -> np.ndarray:
    """Smallest mapping (row order) among perfect matchings of ``tight``."""
    n = len(mapping)
    mapping = mapping.copy()
    col_owner = np.empty(n, dtype=int)
    col_owner[mapping] = np.arange(n)
    cols = np.arange(n)
    for j in range(n):
        target = mapping[j]
        candidates = np.flatnonzero(tight[j] & (cols < target) & (col_owner > j))
        for k in candidates:
            # row r gives up k; look for an alternating path from r to the column j frees,
            # through rows > j only
            r = col_owner[k]
            parent = {r: None}
            queue = deque([r])
            found = None
            while queue:
                row = queue.popleft()
                if tight[row, target]:
                    found = row
                    break
                for col in np.flatnonzero(tight[row] & (col_owner > j)):
                    nxt = col_owner[col]
                    if nxt not in parent:
                        parent[nxt] = (row, col)
                        queue.append(nxt)
            if found is None:
                continue
            row, col = found, target
            while row is not None:
                prev_col = mapping[row]
                mapping[row] = col
                col_owner[col] = row
                step = parent[row]
                row, col = (None, None) if step is None else (step[0], prev_col)
            mapping[j] = k
            col_owner[k] = j
            break
    return mapping


def hungarian_assign(cost) -> MatchAssignment:
    """Minimum-cost perfect assignment of rows to columns of a square matrix."""
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ArgumentError(f"cost matrix must be square, got shape {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise ArgumentError("cost matrix has non-finite entries")
    n = cost.shape[0]
    if n == 0:
        return MatchAssignment(np.zeros(0, dtype=int), 0.0)

    # constant rows (e.g. padding) are indifferent: solve the others, hand out the rest
    flat = np.ptp(cost, axis=1) == 0
    active = np.flatnonzero(~flat)
    u = cost[:, 0].copy()
    v = np.zeros(n)
    mapping = np.empty(n, dtype=int)
    if len(active):
        sub_rows, sub_u, v = _solve(cost[active])
        mapping[active] = sub_rows
        u[active] = sub_u
    leftover = np.setdiff1d(np.arange(n), mapping[active], assume_unique=True)
    mapping[np.flatnonzero(flat)] = leftover

    reduced = cost - u[:, None] - v[None, :]
    scale = max(1.0, float(np.abs(cost).max()))
    tight = reduced <= 1e-9 * scale * n
    tight[np.arange(n), mapping] = True
    mapping = _lexicographic_min(mapping, tight)
    return MatchAssignment(mapping, float(cost[np.arange(n), mapping].sum()))


def cost_matrix_arrays(theta, logits, gt_sides, text_rows, cfg: LossConfig, constrained: bool = True) -> np.ndarray:
    """N x N matching cost; non-text rows stay zero."""
    n = len(logits)
    cost = np.zeros((n, n))
    if len(text_rows):
        cost[np.asarray(text_rows, dtype=int)] = fit_loss_matrix(theta, gt_sides, constrained) + focal_cost_vector(
            logits, cfg
        )
    return cost


def cost_matrix(
    preds: list[Detection], gts: list[GtInstance], cfg: LossConfig = LossConfig(), constrained: bool = True
) -> np.ndarray:
    n = len(preds)
    if len(gts) != n:
        raise ArgumentError(f"expected {n} ground-truth rows (padded), got {len(gts)}")
    text_rows = [j for j, g in enumerate(gts) if g.is_text]
    for j in text_rows:
        if len(gts[j].top_pts) != cfg.k + 1:
            raise ArgumentError(f"ground-truth instance {j} is not sampled at K={cfg.k}")
    gt_sides = np.stack([gts[j].arrays() for j in text_rows]) if text_rows else np.zeros((0, 4, 2, cfg.k + 1))
    theta = np.stack([p.band.flatten() for p in preds])
    logits = np.array([p.logit for p in preds])
    return cost_matrix_arrays(theta, logits, gt_sides, text_rows, cfg, constrained)


def match(preds, gts, cfg: LossConfig = LossConfig(), constrained: bool = True) -> MatchAssignment:
    """Pad ``gts`` to the number of predictions and solve the assignment."""
    return hungarian_assign(cost_matrix(preds, pad_ground_truth(gts, len(preds)), cfg, constrained))
