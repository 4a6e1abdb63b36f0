"""Minimum-cost assignment: an O(n m^2) shortest-augmenting-path solver,
an exhaustive oracle, the rectangular reduction, and a randomized check of
optimality over the doubly stochastic polytope.

A cost matrix has one row per item to assign (for us: second-set features)
and one column per candidate (first-set features), n <= m.  A solution
assigns every row to a distinct column, minimizing the selected-entry sum.

Tie-breaking: the exhaustive solver returns the lexicographically smallest
optimal assignment vector.  The augmenting-path solver is only guaranteed
to agree with it on generic (tie-free) inputs; on ties, compare costs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import Permutation, random_permutation

__all__ = [
    "CostMatrix",
    "AssignmentSolution",
    "solve_hungarian",
    "solve_bruteforce",
    "solve_rectangular",
    "verify_birkhoff_optimality",
    "write_cost_csv",
    "read_cost_csv",
]

_BRUTEFORCE_MAX_N = 9
_BRUTEFORCE_MAX_COUNT = 2_000_000


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """n x m matrix of finite real assignment costs, n <= m.

    Builders must floor or clamp their entries first; non-finite values are
    rejected here rather than silently propagated into the solvers.
    """

    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=float, copy=True)
        if e.ndim != 2 or e.shape[0] < 1 or e.shape[1] < 1:
            raise ValueError(f"cost matrix must be non-empty and 2-D, got shape {e.shape}")
        if e.shape[0] > e.shape[1]:
            raise ValueError(f"more rows than columns ({e.shape[0]} x {e.shape[1]}); transpose the problem")
        if not np.all(np.isfinite(e)):
            raise ValueError("cost matrix contains non-finite entries")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]

    @property
    def is_square(self) -> bool:
        return self.n == self.m


@dataclass(frozen=True)
class AssignmentSolution:
    """An assignment (row i -> column assignment.map[i]) and its total cost."""

    assignment: Permutation
    total_cost: float


def _selected_sum(entries: np.ndarray, mapping: np.ndarray) -> float:
    return float(entries[np.arange(mapping.size), mapping].sum())


def solve_hungarian(cost: CostMatrix) -> AssignmentSolution:
    """Exact minimum-cost assignment by shortest augmenting paths.

    Dual potentials are kept in the same floating precision as the input;
    costs are never rescaled to integers, so log- and ratio-valued costs
    are handled as-is.  Runs in O(n m^2) time for an n x m input (O(n^3) when square).
    """
    entries = cost.entries
    n, m = entries.shape
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=np.int64)  # p[j]: 1-based row matched to column j; 0 = free
    way = np.zeros(m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, np.inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            cur = entries[i0 - 1] - u[i0] - v[1:]
            free = ~used[1:]
            better = free & (cur < minv[1:])
            if better.any():
                minv[1:][better] = cur[better]
                way[1:][better] = j0
            cand = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            u[p[used]] += delta  # rows on the alternating tree are distinct
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = int(way[j0])
            p[j0] = p[j1]
            j0 = j1
    mapping = np.empty(n, dtype=np.int64)
    for j in range(1, m + 1):
        if p[j] > 0:
            mapping[p[j] - 1] = j - 1
    return AssignmentSolution(
        assignment=Permutation(mapping, codomain=m),
        total_cost=_selected_sum(entries, mapping),
    )


@lru_cache(maxsize=8)
def _all_injections(n: int, m: int) -> np.ndarray:
    """All injections {0..n-1} -> {0..m-1} as an array, in lexicographic order."""
    return np.array(list(itertools.permutations(range(m), n)), dtype=np.int64)


def solve_bruteforce(cost: CostMatrix) -> AssignmentSolution:
    """Exhaustive oracle: scan every injection, keep the lexicographically
    first one attaining the minimum total cost."""
    n, m = cost.n, cost.m
    count = 1
    for k in range(m, m - n, -1):
        count *= k
    if n > _BRUTEFORCE_MAX_N or count > _BRUTEFORCE_MAX_COUNT:
        raise ValueError(f"{n} x {m} is too large for exhaustive search ({count} injections)")
    injections = _all_injections(n, m)
    totals = cost.entries[np.arange(n)[None, :], injections].sum(axis=1)
    best = int(np.argmin(totals))  # argmin returns the first (lex-smallest) minimizer
    mapping = injections[best]
    return AssignmentSolution(
        assignment=Permutation(mapping, codomain=m),
        total_cost=_selected_sum(cost.entries, mapping),
    )


def solve_rectangular(cost: CostMatrix) -> AssignmentSolution:
    """Strictly rectangular assignment (n < m) via the square reduction.

    Pads the matrix with m - n all-zero rows, solves the square problem,
    and discards the padded rows' assignments; the zero rows absorb the
    unused columns at no cost, so the restriction is optimal.
    """
    n, m = cost.n, cost.m
    if n >= m:
        raise ValueError(f"expected strictly rectangular input, got {n} x {m}")
    padded = np.vstack([cost.entries, np.zeros((m - n, m))])
    square = solve_hungarian(CostMatrix(padded))
    mapping = square.assignment.map[:n]
    return AssignmentSolution(
        assignment=Permutation(mapping, codomain=m),
        total_cost=_selected_sum(cost.entries, mapping),
    )


def verify_birkhoff_optimality(
    cost: CostMatrix, solution: AssignmentSolution, trials: int, seed: int
) -> bool:
    """Randomized check that no doubly stochastic matrix beats the solution.

    Permutation matrices are the vertices of the doubly stochastic polytope,
    so the linear cost <C, W> is minimized at a permutation matrix; if the
    given solution is optimal, every sampled W (a normalized random convex
    combination of random permutation matrices) must score at least as high,
    up to a 1e-9 slack.  Returns False as soon as a sample scores lower.
    """
    if not cost.is_square:
        raise ValueError("the doubly stochastic check needs a square cost matrix")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    n = cost.n
    entries = cost.entries
    baseline = _selected_sum(entries, solution.assignment.map)
    rng = np.random.default_rng(seed)
    n_components = max(2, n)
    rows = np.arange(n)
    for _ in range(trials):
        weights = rng.random(n_components)
        weights /= weights.sum()
        w = np.zeros((n, n))
        for weight in weights:
            w[rows, random_permutation(rng, n).map] += weight
        if float((entries * w).sum()) < baseline - 1e-9:
            return False
    return True


def write_cost_csv(cost: CostMatrix, path) -> None:
    """Plain rectangular numeric CSV, no header; for debugging dumps."""
    np.savetxt(path, cost.entries, delimiter=",", fmt="%.17g")


def read_cost_csv(path) -> CostMatrix:
    return CostMatrix(np.atleast_2d(np.loadtxt(path, delimiter=",")))
