"""Permutation estimators for matching two noisy feature sets.

Cost-matrix orientation — read this before touching anything
------------------------------------------------------------
Rows index the SECOND set, columns index the FIRST set: entry (i, j) is the
cost of matching second-set feature i to first-set feature j.  Solving the
assignment over such a matrix yields pi with pi(i) = the first-set index
matched to the i-th second-set feature, which is exactly how a ground-truth
permutation is stored on a MatchInstance.

The estimators:

- greedy: sequential nearest neighbor without replacement, second-set
  features processed in index order (the result is order-dependent by
  design; the order is fixed, not configurable).
- LSS (least sum of squares): assignment under squared distances; the
  likelihood maximizer when all noise levels are equal.
- LSNS (least sum of normalized squares): squared distances divided by the
  summed variances of the two features; needs known levels.
- LSL (least sum of logarithms): assignment under log squared distances;
  the likelihood maximizer when levels are unknown but travel with the
  features.  A floor on the squared distance keeps the log finite on
  degenerate (coincident) inputs.
- variance-greedy: matches on noise levels alone by comparing per-pair
  mean squared distances to the first set's variances; works even when all
  templates coincide, provided levels differ.
- general LSL: LSL after mapping both sides into the comparison space of a
  linear matching criterion A(x - b) = A#(x# - b#); see reduce_criterion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assignment import CostMatrix, solve_hungarian
from .model import MatchInstance, Permutation

__all__ = [
    "DEFAULT_SQDIST_FLOOR",
    "EstimatorKind",
    "CriterionReduction",
    "GREEDY",
    "LSS",
    "LSNS",
    "LSL",
    "VARIANCE_GREEDY",
    "cost_lss",
    "cost_lsns",
    "cost_lsl",
    "cost_general_lsl",
    "reduce_criterion",
    "estimate",
    "estimate_greedy",
    "estimate_variance_greedy",
]

# Floor on squared distances before taking logs.  Gaussian data never
# collides, so this only guards duplicated/degenerate inputs while keeping
# exact matches strongly rewarded.
DEFAULT_SQDIST_FLOOR = 1e-30

_SVD_RANK_RTOL = 1e-10  # relative to the largest singular value
_ORTHONORMAL_ATOL = 1e-9


@dataclass(frozen=True, eq=False)
class CriterionReduction:
    """Pre-transforms reducing a linear matching criterion to x̄ = B x̄#.

    ``V`` and ``V_sharp`` have orthonormal rows and map raw features (minus
    the offsets ``b``/``b_sharp``) into the criterion's comparison spaces;
    ``B`` relates the two sides there.  Orthonormal rows keep the
    transformed noise white, so the plain estimators stay valid after the
    reduction.
    """

    B: np.ndarray
    V: np.ndarray
    V_sharp: np.ndarray
    b: np.ndarray
    b_sharp: np.ndarray

    def __post_init__(self):
        B = np.array(self.B, dtype=float, copy=True)
        V = np.array(self.V, dtype=float, copy=True)
        Vs = np.array(self.V_sharp, dtype=float, copy=True)
        if B.ndim != 2 or V.ndim != 2 or Vs.ndim != 2:
            raise ValueError("B, V and V_sharp must be matrices")
        if B.shape != (V.shape[0], Vs.shape[0]):
            raise ValueError(
                f"B must be {V.shape[0]} x {Vs.shape[0]} to match the row spaces, got {B.shape}"
            )
        for name, mat in (("V", V), ("V_sharp", Vs)):
            gram = mat @ mat.T
            if not np.allclose(gram, np.eye(mat.shape[0]), atol=_ORTHONORMAL_ATOL):
                raise ValueError(f"{name} must have orthonormal rows")
        b = np.array(self.b, dtype=float, copy=True).reshape(-1)
        bs = np.array(self.b_sharp, dtype=float, copy=True).reshape(-1)
        if b.size != V.shape[1] or bs.size != Vs.shape[1]:
            raise ValueError("offset lengths must match the ambient dimension")
        for name, arr in (("B", B), ("V", V), ("V_sharp", Vs), ("b", b), ("b_sharp", bs)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def identity(cls, d: int) -> "CriterionReduction":
        eye = np.eye(d)
        zero = np.zeros(d)
        return cls(B=eye, V=eye, V_sharp=eye, b=zero, b_sharp=zero)


@dataclass(frozen=True)
class EstimatorKind:
    """A named estimator; ``general_lsl`` additionally carries its reduction."""

    tag: str
    reduction: CriterionReduction | None = None

    _TAGS = ("greedy", "lss", "lsns", "lsl", "variance-greedy", "general-lsl")

    def __post_init__(self):
        if self.tag not in self._TAGS:
            raise ValueError(f"unknown estimator {self.tag!r}; expected one of {self._TAGS}")
        if (self.tag == "general-lsl") != (self.reduction is not None):
            raise ValueError("a criterion reduction is required exactly for general-lsl")

    @classmethod
    def general_lsl(cls, reduction: CriterionReduction) -> "EstimatorKind":
        return cls(tag="general-lsl", reduction=reduction)

    @classmethod
    def from_name(cls, name: str) -> "EstimatorKind":
        name = name.strip().lower()
        if name == "general-lsl":
            raise ValueError("general-lsl needs an explicit reduction; build it via EstimatorKind.general_lsl")
        return cls(tag=name)

    @property
    def requires_noise(self) -> bool:
        return self.tag in ("lsns", "variance-greedy")


GREEDY = EstimatorKind("greedy")
LSS = EstimatorKind("lss")
LSNS = EstimatorKind("lsns")
LSL = EstimatorKind("lsl")
VARIANCE_GREEDY = EstimatorKind("variance-greedy")


def _pairwise_sqdist(second: np.ndarray, first: np.ndarray) -> np.ndarray:
    """Squared distances, entry (i, j) = ||first[j] - second[i]||^2.

    Streams one second-set row at a time: no cancellation-prone expansion
    and no (n x m x d) intermediate.
    """
    out = np.empty((second.shape[0], first.shape[0]))
    for i in range(second.shape[0]):
        out[i] = np.square(first - second[i]).sum(axis=1)
    return out


def cost_lss(instance: MatchInstance) -> CostMatrix:
    """Squared-distance costs: entry (i, j) = ||X_j - X#_i||^2."""
    return CostMatrix(_pairwise_sqdist(instance.second.vectors, instance.first.vectors))


def _instance_levels(instance: MatchInstance) -> tuple[np.ndarray, np.ndarray]:
    if instance.first_noise is None or instance.second_noise is None:
        raise ValueError("this estimator needs known noise levels on both sides")
    return (
        instance.first_noise.levels_for(instance.first.n),
        instance.second_noise.levels_for(instance.second.n),
    )


def cost_lsns(instance: MatchInstance) -> CostMatrix:
    """Noise-normalized costs: entry (i, j) = ||X_j - X#_i||^2 / (s_j^2 + s#_i^2)."""
    first_levels, second_levels = _instance_levels(instance)
    sq = _pairwise_sqdist(instance.second.vectors, instance.first.vectors)
    denom = first_levels[None, :] ** 2 + second_levels[:, None] ** 2
    return CostMatrix(sq / denom)


def cost_lsl(instance: MatchInstance, floor: float = DEFAULT_SQDIST_FLOOR) -> CostMatrix:
    """Log squared-distance costs: entry (i, j) = log(max(||X_j - X#_i||^2, floor))."""
    if not (floor > 0 and math.isfinite(floor)):
        raise ValueError(f"floor must be positive and finite, got {floor}")
    sq = _pairwise_sqdist(instance.second.vectors, instance.first.vectors)
    return CostMatrix(np.log(np.maximum(sq, floor)))


def reduce_criterion(A, A_sharp, b=None, b_sharp=None) -> CriterionReduction:
    """Reduce the criterion A(x - b) = A#(x# - b#) to comparison form.

    Thin SVDs A = U^T Lambda V and A# = U#^T Lambda# V# (singular values
    below 1e-10 of the largest are treated as zero) give row-orthonormal V,
    V# and B = Lambda^{-1} U U#^T Lambda#, so that features transformed by
    x̄ = V(x - b), x̄# = V#(x# - b#) match exactly when x̄ = B x̄#.
    """
    A = np.asarray(A, dtype=float)
    A_sharp = np.asarray(A_sharp, dtype=float)
    if A.ndim != 2 or A_sharp.ndim != 2:
        raise ValueError("A and A_sharp must be matrices")
    if A.shape[0] != A_sharp.shape[0]:
        raise ValueError(f"A and A_sharp must share their row count, got {A.shape[0]} vs {A_sharp.shape[0]}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(A_sharp))):
        raise ValueError("criterion matrices must be finite")
    b = np.zeros(A.shape[1]) if b is None else np.asarray(b, dtype=float).reshape(-1)
    b_sharp = np.zeros(A_sharp.shape[1]) if b_sharp is None else np.asarray(b_sharp, dtype=float).reshape(-1)

    def thin(mat):
        u, s, vt = np.linalg.svd(mat, full_matrices=False)
        if s.size == 0 or s[0] <= 0:
            raise ValueError("criterion matrix has rank 0")
        rank = int(np.sum(s > _SVD_RANK_RTOL * s[0]))
        if rank == 0:
            raise ValueError("criterion matrix has rank 0")
        return u[:, :rank], s[:rank], vt[:rank]

    u1, s1, v1 = thin(A)
    u2, s2, v2 = thin(A_sharp)
    B = (u1.T @ u2) * s2[None, :] / s1[:, None]
    return CriterionReduction(B=B, V=v1, V_sharp=v2, b=b, b_sharp=b_sharp)


def cost_general_lsl(
    instance: MatchInstance,
    reduction: CriterionReduction,
    floor: float = DEFAULT_SQDIST_FLOOR,
) -> CostMatrix:
    """LSL costs in the comparison space of a linear matching criterion.

    Transforms both sides (x̄ = V(x - b), x̄# = V#(x# - b#)), forms
    M = B(B^T B)^+ B^T + B B^T, and scores pairs by
    log(max(||M^+ (x̄_j - B x̄#_i)||^2, floor)).  For orthonormal-column B
    both terms of M coincide and M^+ halves the residual, a pure monotone
    rescaling of plain LSL in the transformed space.
    """
    if not (floor > 0 and math.isfinite(floor)):
        raise ValueError(f"floor must be positive and finite, got {floor}")
    if reduction.V.shape[1] != instance.first.d or reduction.V_sharp.shape[1] != instance.second.d:
        raise ValueError(
            f"reduction expects ambient dimensions ({reduction.V.shape[1]}, "
            f"{reduction.V_sharp.shape[1]}), instance has ({instance.first.d}, {instance.second.d})"
        )
    B = reduction.B
    first_t = (instance.first.vectors - reduction.b) @ reduction.V.T
    second_t = (instance.second.vectors - reduction.b_sharp) @ reduction.V_sharp.T
    M = B @ np.linalg.pinv(B.T @ B) @ B.T + B @ B.T
    M_pinv = np.linalg.pinv(M)
    lhs = first_t @ M_pinv.T
    rhs = (second_t @ B.T) @ M_pinv.T
    sq = _pairwise_sqdist(rhs, lhs)
    return CostMatrix(np.log(np.maximum(sq, floor)))


def estimate_greedy(instance: MatchInstance) -> Permutation:
    """Nearest neighbor without replacement, second-set rows in index order.

    Ties go to the smallest first-set index.
    """
    sq = _pairwise_sqdist(instance.second.vectors, instance.first.vectors)
    n2, n1 = sq.shape
    taken = np.zeros(n1, dtype=bool)
    mapping = np.empty(n2, dtype=np.int64)
    for i in range(n2):
        j = int(np.argmin(np.where(taken, np.inf, sq[i])))
        mapping[i] = j
        taken[j] = True
    return Permutation(mapping, codomain=n1)


def estimate_variance_greedy(instance: MatchInstance) -> Permutation:
    """Sequential matching on noise levels alone.

    For each second-set feature j in index order, picks the unused
    first-set feature i minimizing |mean squared coordinate gap / 2 - s_i^2|:
    under a correct match that gap estimates s_i^2.  Ties go to the
    smallest i.  Needs the first set's levels.
    """
    if instance.first_noise is None:
        raise ValueError("variance-greedy needs known first-set noise levels")
    levels = instance.first_noise.levels_for(instance.first.n)
    sq = _pairwise_sqdist(instance.second.vectors, instance.first.vectors)
    n2, n1 = sq.shape
    d = instance.first.d
    taken = np.zeros(n1, dtype=bool)
    mapping = np.empty(n2, dtype=np.int64)
    for j in range(n2):
        crit = np.abs(sq[j] / (2.0 * d) - levels**2)
        i = int(np.argmin(np.where(taken, np.inf, crit)))
        mapping[j] = i
        taken[i] = True
    return Permutation(mapping, codomain=n1)


def estimate(instance: MatchInstance, kind: EstimatorKind) -> Permutation:
    """Run one estimator on an instance and return the matched permutation."""
    if kind.tag == "greedy":
        return estimate_greedy(instance)
    if kind.tag == "variance-greedy":
        return estimate_variance_greedy(instance)
    if kind.tag == "lss":
        cost = cost_lss(instance)
    elif kind.tag == "lsns":
        cost = cost_lsns(instance)
    elif kind.tag == "lsl":
        cost = cost_lsl(instance)
    else:
        cost = cost_general_lsl(instance, kind.reduction)
    return solve_hungarian(cost).assignment
