"""Lloyd's algorithm with k-means++ seeding.

Minimizes the empirical reconstruction error (mean squared distance of each
training point to its nearest center) over sets of k points. Assignment
ties break to the lowest center index; empty cells are reseeded at the
training point farthest from its current center; the best of `restarts`
independent k-means++ starts is returned.
"""

import json
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import ParameterError
from .geometry import Dataset
from .util import fsum_mean, min_sqdist, mix_seed


@dataclass(frozen=True)
class FitConfig:
    max_iters: int = 200
    rel_tol: float = 1e-10          # relative objective decrease
    restarts: int = 20
    empty_cell_policy: str = "reseed-farthest"

    def __post_init__(self):
        if self.max_iters < 1:
            raise ParameterError("max_iters must be >= 1")
        if self.rel_tol < 0:
            raise ParameterError("rel_tol must be >= 0")
        if self.restarts < 1:
            raise ParameterError("restarts must be >= 1")
        if self.empty_cell_policy != "reseed-farthest":
            raise ParameterError(
                f"unknown empty_cell_policy {self.empty_cell_policy!r}")


@dataclass(frozen=True)
class MeansModel:
    """k centers plus the fit certificate data.

    `objective` is the empirical reconstruction error of `centers` on the
    training set; each center is the mean of its (non-empty) Voronoi cell
    at convergence. `descent_violations` counts iterations where the
    objective rose by more than 1e-12 (always 0 for a correct run; kept
    out of the serialized form).
    """

    centers: np.ndarray
    k: int
    objective: float
    iterations: int
    seed: int
    descent_violations: int = field(default=0, compare=False)

    def __post_init__(self):
        c = np.ascontiguousarray(self.centers, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] != self.k or self.k < 1:
            raise ParameterError("centers must be a (k, D) array with k >= 1")
        if not np.isfinite(c).all():
            raise ParameterError("centers contain non-finite values")
        if self.objective < 0:
            raise ParameterError("objective must be >= 0")
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)

    @property
    def ambient_dim(self) -> int:
        return self.centers.shape[1]

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "ambient_dim": self.ambient_dim,
            "centers": [float(v) for v in self.centers.ravel(order="C")],
            "objective": self.objective,
            "iterations": self.iterations,
            "seed": self.seed,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_json_dict(), **kwargs)

    @classmethod
    def from_json_dict(cls, obj: dict) -> "MeansModel":
        k, D = int(obj["k"]), int(obj["ambient_dim"])
        centers = np.asarray(obj["centers"], dtype=np.float64).reshape(k, D)
        return cls(centers=centers, k=k, objective=float(obj["objective"]),
                   iterations=int(obj["iterations"]), seed=int(obj["seed"]))


def empirical_error(data: Dataset, model) -> float:
    """Mean squared distance from each point to its nearest center.

    `model` may be a MeansModel or a raw (k, D) center array.
    """
    centers = model.centers if isinstance(model, MeansModel) else np.asarray(model)
    if centers.shape[1] != data.ambient_dim:
        raise ParameterError(
            f"ambient dim mismatch: data {data.ambient_dim}, centers {centers.shape[1]}")
    d2, _ = min_sqdist(data.points, centers)
    return fsum_mean(d2)


def seed_kmeanspp(data: Dataset, k: int, seed: int) -> np.ndarray:
    """k-means++ seeding: k data rows chosen by squared-distance sampling.

    First center uniform over rows; each subsequent one drawn with
    probability proportional to its current squared distance to the chosen
    set, which puts zero mass on already-chosen (and duplicate) rows.
    """
    X = data.points
    n = data.size
    if not (1 <= k <= n):
        raise ParameterError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    centers = np.empty((k, data.ambient_dim))
    centers[0] = X[rng.integers(n)]
    if k == 1:
        return centers
    diff = X - centers[0]
    d2 = np.einsum("ij,ij->i", diff, diff)
    for j in range(1, k):
        total = d2.sum()
        if total > 0.0:
            i = rng.choice(n, p=d2 / total)
        else:
            # every row duplicates a chosen center; any row is as good
            i = rng.integers(n)
        centers[j] = X[i]
        diff = X - centers[j]
        d2 = np.minimum(d2, np.einsum("ij,ij->i", diff, diff))
    return centers


def _cell_means(X: np.ndarray, assign: np.ndarray, k: int,
                counts: np.ndarray) -> np.ndarray:
    D = X.shape[1]
    sums = np.empty((k, D))
    for j in range(D):
        sums[:, j] = np.bincount(assign, weights=X[:, j], minlength=k)
    return sums / counts[:, None]


def _lloyd(X: np.ndarray, centers: np.ndarray, cfg: FitConfig):
    """One Lloyd run from the given centers.

    Returns (centers, objective, iterations, trace, violations). The trace
    records the objective after every assignment pass plus the final value
    for the returned centers; it is non-increasing up to 1e-12 slack.
    """
    n = X.shape[0]
    k = centers.shape[0]
    centers = centers.copy()
    prev_assign = None
    prev_obj = np.inf
    trace: List[float] = []
    violations = 0
    it = 0
    for it in range(1, cfg.max_iters + 1):
        d2, assign = min_sqdist(X, centers)
        counts = np.bincount(assign, minlength=k)
        empties = np.flatnonzero(counts == 0)
        if empties.size:
            # farthest-first donors; a donor must leave a non-empty cell
            # behind (k <= n guarantees one exists by pigeonhole)
            pick = d2.copy()
            for j in empties:
                while True:
                    far = int(np.argmax(pick))
                    pick[far] = -np.inf
                    if counts[assign[far]] > 1:
                        break
                counts[assign[far]] -= 1
                counts[j] += 1
                centers[j] = X[far]
                assign[far] = j
                d2[far] = 0.0
        obj = fsum_mean(d2)
        trace.append(obj)
        if obj > prev_obj + 1e-12:
            violations += 1
        stable = prev_assign is not None and np.array_equal(assign, prev_assign)
        centers = _cell_means(X, assign, k, counts)
        if stable:
            break
        if prev_obj < np.inf and prev_obj - obj <= cfg.rel_tol * max(prev_obj, 1e-300):
            break
        prev_obj = obj
        prev_assign = assign
    d2, _ = min_sqdist(X, centers)
    final_obj = fsum_mean(d2)
    trace.append(final_obj)
    if final_obj > trace[-2] + 1e-12:
        violations += 1
    return centers, final_obj, it, trace, violations


def _augment_to_k(X: np.ndarray, centers: np.ndarray, k: int) -> np.ndarray:
    """Pad a warm start with farthest-point additions until it has k centers."""
    centers = np.asarray(centers, dtype=np.float64)
    if centers.shape[0] > k:
        raise ParameterError("warm start has more than k centers")
    while centers.shape[0] < k:
        d2, _ = min_sqdist(X, centers)
        centers = np.vstack([centers, X[int(np.argmax(d2))]])
    return centers


def fit(data: Dataset, k: int, cfg: Optional[FitConfig] = None, seed: int = 0,
        warm_start: Optional[np.ndarray] = None,
        trace_sink: Optional[list] = None) -> MeansModel:
    """Best-of-restarts k-means.

    Runs `cfg.restarts` independent k-means++ initializations (restart r
    uses the derived seed mix_seed(seed, r)), each followed by Lloyd
    iteration, and returns the run with the smallest empirical error.
    `warm_start` adds one extra run initialized from the given centers
    (padded to k by farthest-point insertion), which makes the objective
    non-increasing in k when chaining solutions. `trace_sink`, when given,
    receives each run's objective trace.
    """
    cfg = cfg or FitConfig()
    if not (1 <= k <= data.size):
        raise ParameterError(f"need 1 <= k <= n, got k={k}, n={data.size}")
    X = data.points
    inits = [seed_kmeanspp(data, k, mix_seed(seed, r))
             for r in range(cfg.restarts)]
    if warm_start is not None:
        inits.append(_augment_to_k(X, warm_start, k))
    best = None
    total_violations = 0
    for centers0 in inits:
        centers, obj, iters, trace, viol = _lloyd(X, centers0, cfg)
        total_violations += viol
        if trace_sink is not None:
            trace_sink.append(trace)
        if best is None or obj < best[1]:
            best = (centers, obj, iters)
    centers, obj, iters = best
    return MeansModel(centers=centers, k=k, objective=obj, iterations=iters,
                      seed=seed, descent_violations=total_violations)


def center_of_mass_residual(data: Dataset, model: MeansModel) -> float:
    """Max per-coordinate deviation of each center from its Voronoi cell mean.

    Local-optimality certificate: at a Lloyd fixed point this is ~0. Cells
    that are empty under the final assignment are skipped.
    """
    X = data.points
    _, assign = min_sqdist(X, model.centers)
    worst = 0.0
    for j in range(model.k):
        cell = X[assign == j]
        if cell.shape[0] == 0:
            continue
        worst = max(worst, float(np.max(np.abs(cell.mean(axis=0) - model.centers[j]))))
    return worst
