"""Domain types and synthetic generators for noisy feature matching.

Two sets of d-dimensional features are observed under additive Gaussian
noise: the first set holds ``theta_i + sigma_i * xi_i`` and the second set
holds ``theta_{pi(i)} + sigma_{pi(i)} * xi_i^#`` for an unknown permutation
(or injection) ``pi``.  Everything needed to pose and simulate that problem
lives here: feature sets, noise specifications, permutations, match
instances, and the seeded generators used by the experiment harness.

Conventions
-----------
- Feature sets are stored row-major: one feature per row, shape (n, d).
- Permutations are 0-based index arrays; ``pi.map[i]`` is the first-set
  index matched to the i-th second-set feature.
- In the heteroscedastic case the second set's noise level at index i is
  the first set's level at index ``pi(i)`` (levels travel with features).
- All generators are pure functions of their arguments including ``seed``.
  Gaussian draws go through a Box-Muller transform of the PCG64 uniform
  stream so instances are reproducible byte-for-byte across runs.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FeatureSet",
    "NoiseSpec",
    "Permutation",
    "MatchInstance",
    "HypothesisRangeWarning",
    "standard_gaussian",
    "random_permutation",
    "generate_instance",
    "uniform_box_features",
    "scaled_identity_features",
    "least_favorable_features",
    "adversarial_pair_features",
    "greedy_adversarial_instance",
    "read_features_csv",
    "write_features_csv",
    "load_instance_csv",
]


class HypothesisRangeWarning(UserWarning):
    """Parameters fall outside the range where a guarantee is proved.

    Emitted instead of raising so parameter sweeps may cross the boundary.
    """


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def standard_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard normal draws via Box-Muller on the generator's uniforms.

    Using an explicit transform of ``rng.random()`` pins the exact output
    stream to the PCG64 uniform stream, independent of how the installed
    numpy implements its own normal sampler.
    """
    size = int(np.prod(shape))
    half = (size + 1) // 2
    u1 = 1.0 - rng.random(half)  # (0, 1]: keeps the log finite
    u2 = rng.random(half)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
    return z[:size].reshape(shape)


@dataclass(frozen=True, eq=False)
class FeatureSet:
    """An ordered collection of n feature vectors in R^d, one per row."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float, copy=True)
        if v.ndim != 2:
            raise ValueError(f"feature matrix must be 2-D, got shape {v.shape}")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"need at least one feature and one dimension, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("feature matrix contains non-finite entries")
        object.__setattr__(self, "vectors", _readonly(v))

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """Noise levels: a single shared sigma, or one positive level per feature.

    Exactly one of ``sigma`` (homoscedastic) and ``levels`` (heteroscedastic)
    is set.  Use the classmethod constructors.
    """

    sigma: float | None = None
    levels: np.ndarray | None = None

    def __post_init__(self):
        if (self.sigma is None) == (self.levels is None):
            raise ValueError("exactly one of sigma and levels must be given")
        if self.sigma is not None:
            s = float(self.sigma)
            if not (math.isfinite(s) and s > 0):
                raise ValueError(f"noise level must be positive and finite, got {s}")
            object.__setattr__(self, "sigma", s)
        else:
            lv = np.array(self.levels, dtype=float, copy=True)
            if lv.ndim != 1 or lv.size < 1:
                raise ValueError("levels must be a non-empty 1-D vector")
            if not np.all(np.isfinite(lv)) or np.any(lv <= 0):
                raise ValueError("every noise level must be positive and finite")
            object.__setattr__(self, "levels", _readonly(lv))

    @classmethod
    def homoscedastic(cls, sigma: float) -> "NoiseSpec":
        return cls(sigma=sigma)

    @classmethod
    def heteroscedastic(cls, levels) -> "NoiseSpec":
        return cls(levels=levels)

    @property
    def is_homoscedastic(self) -> bool:
        return self.sigma is not None

    def levels_for(self, n: int) -> np.ndarray:
        """Per-feature levels as a length-n vector."""
        if self.sigma is not None:
            return np.full(n, self.sigma)
        if self.levels.size != n:
            raise ValueError(f"noise spec has {self.levels.size} levels, expected {n}")
        return self.levels.copy()

    def permuted(self, perm: "Permutation") -> "NoiseSpec":
        """Levels for the second set: level i becomes the level at perm(i)."""
        if self.sigma is not None:
            return self
        return NoiseSpec.heteroscedastic(self.levels[perm.map])


@dataclass(frozen=True, eq=False)
class Permutation:
    """A bijection of {0..m-1}, or an injection {0..n-1} -> {0..m-1}.

    ``map[i]`` is the image of i.  Square (bijective) when n == codomain.
    """

    map: np.ndarray
    codomain: int = -1  # -1: defaults to len(map), i.e. a square permutation

    def __post_init__(self):
        a = np.array(self.map, dtype=np.int64, copy=True)
        if a.ndim != 1 or a.size < 1:
            raise ValueError("permutation map must be a non-empty 1-D index vector")
        m = a.size if self.codomain == -1 else int(self.codomain)
        if m < a.size:
            raise ValueError(f"codomain {m} smaller than domain {a.size}")
        if a.min(initial=0) < 0 or a.max(initial=-1) >= m:
            raise ValueError(f"images must lie in [0, {m})")
        if np.unique(a).size != a.size:
            raise ValueError("images must be distinct")
        object.__setattr__(self, "map", _readonly(a))
        object.__setattr__(self, "codomain", m)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(n))

    @property
    def n(self) -> int:
        return self.map.size

    @property
    def is_square(self) -> bool:
        return self.n == self.codomain

    def inverse(self) -> "Permutation":
        if not self.is_square:
            raise ValueError("only square permutations are invertible")
        inv = np.empty(self.n, dtype=np.int64)
        inv[self.map] = np.arange(self.n)
        return Permutation(inv)

    def compose(self, other: "Permutation") -> "Permutation":
        """self after other: (self . other)(i) = self(other(i))."""
        if other.codomain != self.n or not self.is_square:
            raise ValueError("composition requires a square outer permutation of matching size")
        return Permutation(self.map[other.map], codomain=self.codomain)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return self.codomain == other.codomain and np.array_equal(self.map, other.map)

    def __hash__(self) -> int:
        return hash((self.codomain, self.map.tobytes()))

    def __repr__(self) -> str:
        return f"Permutation({self.map.tolist()}, codomain={self.codomain})"


def random_permutation(rng: np.random.Generator, n: int) -> Permutation:
    """Uniform draw from the symmetric group by Fisher-Yates."""
    a = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        a[i], a[j] = a[j], a[i]
    return Permutation(a)


@dataclass(frozen=True, eq=False)
class MatchInstance:
    """Two observed feature sets plus what is known about their noise/pairing.

    ``second.vectors[i]`` is the noisy copy of ``first``'s feature at index
    ``truth.map[i]`` when the ground truth is known (synthetic data).  Noise
    specs may be None when levels are unknown (e.g. data read from CSV).
    """

    first: FeatureSet
    second: FeatureSet
    first_noise: NoiseSpec | None = None
    second_noise: NoiseSpec | None = None
    truth: Permutation | None = None

    def __post_init__(self):
        if self.first.d != self.second.d:
            raise ValueError(
                f"feature dimensions differ: {self.first.d} vs {self.second.d}"
            )
        if self.second.n > self.first.n:
            raise ValueError(
                "second set may not be larger than the first "
                f"({self.second.n} > {self.first.n}); swap the sides"
            )
        if self.first_noise is not None:
            self.first_noise.levels_for(self.first.n)  # length check
        if self.second_noise is not None:
            self.second_noise.levels_for(self.second.n)
        if self.truth is not None:
            if self.truth.n != self.second.n or self.truth.codomain != self.first.n:
                raise ValueError("truth permutation shape does not match the instance")

    @property
    def is_square(self) -> bool:
        return self.first.n == self.second.n


def generate_instance(
    theta: FeatureSet, noise: NoiseSpec, truth: Permutation, seed: int
) -> MatchInstance:
    """Draw one noisy matching problem from the observation model.

    The first set observes every template feature once; the second set
    observes the templates reordered by ``truth``, with levels travelling
    along (second level i = first level at truth(i)).  The two Gaussian
    perturbations are independent and fully determined by ``seed``.
    """
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    n, d = theta.n, theta.d
    levels = noise.levels_for(n)
    if truth.codomain != n:
        raise ValueError(f"truth permutation codomain {truth.codomain} != n = {n}")
    rng = np.random.default_rng(seed)
    xi = standard_gaussian(rng, (n, d))
    xi_sharp = standard_gaussian(rng, (truth.n, d))
    first = theta.vectors + levels[:, None] * xi
    second = theta.vectors[truth.map] + levels[truth.map][:, None] * xi_sharp
    return MatchInstance(
        first=FeatureSet(first),
        second=FeatureSet(second),
        first_noise=noise,
        second_noise=noise.permuted(truth),
        truth=truth,
    )


def uniform_box_features(n: int, d: int, tau: float, seed: int) -> FeatureSet:
    """n x d template matrix with i.i.d. entries uniform on [0, tau].

    tau = 0 is allowed and yields the all-zero (fully degenerate) template.
    """
    if tau < 0 or not math.isfinite(tau):
        raise ValueError(f"tau must be finite and nonnegative, got {tau}")
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    rng = np.random.default_rng(seed)
    return FeatureSet(rng.random((n, d)) * tau)


def scaled_identity_features(n: int, tau: float) -> FeatureSet:
    """Templates tau * e_i: the i-th feature is the i-th scaled basis vector."""
    if tau < 0 or not math.isfinite(tau):
        raise ValueError(f"tau must be finite and nonnegative, got {tau}")
    return FeatureSet(tau * np.eye(n))


def least_favorable_features(noise_levels, kappa: float, d: int = 1) -> FeatureSet:
    """Templates on a line that make the matching problem as hard as allowed.

    Consecutive features are grouped into pairs (1,2), (3,4), ...; within
    each pair the noise-normalized distance is exactly ``kappa`` while every
    other pair of features is separated by strictly more than
    ``kappa * (1 + r)`` in normalized distance, where r = max level / min
    level.  The inter-pair gap is sized so the strict separation holds for
    every noise scale (gap = kappa*(1+r)*sqrt(2)*max level, plus a hair).

    Levels must be sorted in ascending order.  With an odd count the last
    feature sits alone at one full gap past the final pair.
    """
    levels = np.asarray(noise_levels, dtype=float)
    if levels.ndim != 1 or levels.size < 2:
        raise ValueError("need at least two noise levels")
    if np.any(~np.isfinite(levels)) or np.any(levels <= 0):
        raise ValueError("every noise level must be positive and finite")
    if np.any(np.diff(levels) < 0):
        raise ValueError("noise levels must be sorted in ascending order")
    if not (math.isfinite(kappa) and kappa > 0):
        raise ValueError(f"kappa must be positive and finite, got {kappa}")
    if d < 1:
        raise ValueError("d must be at least 1")
    n = levels.size
    m = n // 2
    r = float(levels[-1] / levels[0])
    gap = kappa * (1.0 + r) * math.sqrt(2.0) * float(levels[-1]) * (1.0 + 1e-9)
    pos = np.zeros(n)
    cur = 0.0
    for k in range(m):
        a, b = 2 * k, 2 * k + 1
        if k > 0:
            cur += gap
        pos[a] = cur
        pos[b] = cur + kappa * math.hypot(levels[a], levels[b])
        cur = pos[b]
    if n % 2:
        pos[n - 1] = cur + gap
    vectors = np.zeros((n, d))
    vectors[:, 0] = pos
    return FeatureSet(vectors)


# Hypothesis range for the adversarial two-feature configuration below.
_ADVERSARIAL_MIN_D = math.ceil(225 * math.log(6))  # = 404


def adversarial_pair_features(d: int, kappa: float) -> FeatureSet:
    """The two templates of the greedy-adversarial configuration.

    theta_1 = 0 and theta_2 = 2*kappa*e_1, so with levels (sqrt(3), 1) the
    noise-normalized separation equals kappa exactly.
    """
    if not (math.isfinite(kappa) and kappa > 0):
        raise ValueError(f"kappa must be positive and finite, got {kappa}")
    vectors = np.zeros((2, d))
    vectors[1, 0] = 2.0 * kappa
    return FeatureSet(vectors)


def greedy_adversarial_instance(d: int, kappa: float, seed: int) -> MatchInstance:
    """A two-feature instance on which greedy matching provably fails often.

    High-dimensional, with one noisy feature (variance 3) and one clean
    feature (variance 1) at distance 2*kappa; the truth is the identity.
    In the regime d >= 404 and kappa < 0.1*sqrt(2d), nearest-neighbor
    matching errs with probability at least 1/2.  Outside that regime a
    HypothesisRangeWarning is emitted and the instance is produced anyway,
    so sweeps may cross the boundary.
    """
    if d < _ADVERSARIAL_MIN_D:
        warnings.warn(
            f"d = {d} is below {_ADVERSARIAL_MIN_D}; the greedy failure rate "
            "is no longer guaranteed",
            HypothesisRangeWarning,
            stacklevel=2,
        )
    limit = 0.1 * math.sqrt(2.0 * d)
    if kappa >= limit:
        warnings.warn(
            f"kappa = {kappa} is not below 0.1*sqrt(2d) = {limit:.6g}; the "
            "greedy failure rate is no longer guaranteed",
            HypothesisRangeWarning,
            stacklevel=2,
        )
    theta = adversarial_pair_features(d, kappa)
    noise = NoiseSpec.heteroscedastic([math.sqrt(3.0), 1.0])
    return generate_instance(theta, noise, Permutation.identity(2), seed)


# ---------------------------------------------------------------------------
# CSV ingestion: one feature per row, schema  id,x1,...,xd[,sigma]
# ---------------------------------------------------------------------------

def read_features_csv(path) -> tuple[FeatureSet, NoiseSpec | None]:
    """Read a feature file; returns the features and, if present, the levels.

    The header row is required.  A trailing ``sigma`` column, when present,
    carries per-feature noise levels.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        if not header or header[0] != "id":
            raise ValueError(f"{path}: first header column must be 'id', got {header[:1]}")
        has_sigma = header[-1] == "sigma"
        ncols = len(header)
        d = ncols - 2 if has_sigma else ncols - 1
        expected = ["id"] + [f"x{k}" for k in range(1, d + 1)] + (["sigma"] if has_sigma else [])
        if header != expected:
            raise ValueError(f"{path}: header must be {','.join(expected)}, got {','.join(header)}")
        rows, sigmas = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != ncols:
                raise ValueError(f"{path}:{lineno}: expected {ncols} columns, got {len(row)}")
            try:
                values = [float(x) for x in row[1 : d + 1]]
                if has_sigma:
                    sigmas.append(float(row[-1]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            rows.append(values)
    if not rows:
        raise ValueError(f"{path}: no feature rows")
    features = FeatureSet(np.asarray(rows))
    noise = NoiseSpec.heteroscedastic(sigmas) if has_sigma else None
    return features, noise


def write_features_csv(path, features: FeatureSet, noise: NoiseSpec | None = None) -> None:
    """Write a feature file in the same schema the reader accepts."""
    levels = noise.levels_for(features.n) if noise is not None else None
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["id"] + [f"x{k}" for k in range(1, features.d + 1)]
        if levels is not None:
            header.append("sigma")
        writer.writerow(header)
        for i in range(features.n):
            row = [str(i + 1)] + [repr(float(x)) for x in features.vectors[i]]
            if levels is not None:
                row.append(repr(float(levels[i])))
            writer.writerow(row)


def load_instance_csv(first_path, second_path) -> MatchInstance:
    """Build a truth-free match instance from two feature files."""
    first, first_noise = read_features_csv(first_path)
    second, second_noise = read_features_csv(second_path)
    return MatchInstance(
        first=first,
        second=second,
        first_noise=first_noise,
        second_noise=second_noise,
        truth=None,
    )
