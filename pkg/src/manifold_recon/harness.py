"""Experiment runner: hold-out risk, tradeoff curves, model selection of k,
the two-sample high-dimension example, and convergence-rate fits.

Every grid cell derives its own seed as mix_seed(base_seed, n, k, repeat),
and the shared hold-out sample uses mix_seed(base_seed, HOLDOUT_TAG), so
reports are deterministic given (spec, base_seed) and cells may run
concurrently in any order.
"""

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from . import kflats, kmeans
from .bounds import BoundInputs, BoundReport, decompose, kn_kflats, kn_kmeans
from .errors import ParameterError
from .geometry import Dataset, ManifoldSpec, sample_sphere
from .kmeans import FitConfig
from .util import fsum_mean, min_sqdist, mix_seed

HOLDOUT_TAG = 0xB01D0071
TRAIN_TAG = 0x7E57A11
ALGORITHMS = ("kmeans", "kmeanspp-seed", "kflats")


@dataclass(frozen=True)
class ExperimentSpec:
    manifold: ManifoldSpec
    train_sizes: Sequence[int]
    k_grid: Union[Sequence[int], str]   # explicit grid or "auto" (balanced schedule)
    holdout_size: int = 100_000
    algorithm: str = "kmeans"
    flat_dim: Optional[int] = None      # defaults to manifold.intrinsic_dim
    repeats: int = 5
    base_seed: int = 0
    fit_config: FitConfig = field(default_factory=FitConfig)
    delta: float = 0.05
    threads: int = 1

    def __post_init__(self):
        if len(self.train_sizes) == 0:
            raise ParameterError("train_sizes must be non-empty")
        if isinstance(self.k_grid, str):
            if self.k_grid != "auto":
                raise ParameterError("k_grid must be a list of k or 'auto'")
        elif len(self.k_grid) == 0:
            raise ParameterError("k_grid must be non-empty")
        if self.holdout_size < 10 ** 3:
            raise ParameterError("holdout_size must be >= 1000")
        if self.algorithm not in ALGORITHMS:
            raise ParameterError(f"algorithm must be one of {ALGORITHMS}")
        if self.repeats < 1:
            raise ParameterError("repeats must be >= 1")


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    residual: float
    degenerate: bool


@dataclass
class ExperimentReport:
    rows: List[dict]
    rate_fit: Optional[RateFit] = None
    bound_rows: List[BoundReport] = field(default_factory=list)
    descent_violations: int = 0

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "k", "repeat", "empirical", "holdout", "seconds"])
            for r in self.rows:
                w.writerow([r["n"], r["k"], r["repeat"],
                            repr(r["empirical"]), repr(r["holdout"]),
                            repr(r["seconds"])])

    def to_json_dict(self) -> dict:
        out = {
            "rows": self.rows,
            "descent_violations": self.descent_violations,
            "rate_fit": None,
            "bound_rows": [b.to_json_dict() for b in self.bound_rows],
        }
        if self.rate_fit is not None:
            out["rate_fit"] = {
                "slope": self.rate_fit.slope,
                "intercept": self.rate_fit.intercept,
                "residual": self.rate_fit.residual,
                "degenerate": self.rate_fit.degenerate,
            }
        return out

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)

    def curve(self, n: int) -> List[Tuple[int, float]]:
        """(k, mean hold-out error) pairs for one training size."""
        by_k = {}
        for r in self.rows:
            if r["n"] == n:
                by_k.setdefault(r["k"], []).append(r["holdout"])
        return [(k, float(np.mean(v))) for k, v in sorted(by_k.items())]

    def write_plot_files(self, out_dir) -> List[Path]:
        """Plot-ready two-column text files: k vs mean hold-out error per n,
        plus ln n vs ln mean error when a rate fit exists."""
        out_dir = Path(out_dir)
        written = []
        for n in sorted({r["n"] for r in self.rows}):
            p = out_dir / f"curve_n{n}.tsv"
            with open(p, "w") as fh:
                for k, err in self.curve(n):
                    fh.write(f"{k}\t{err!r}\n")
            written.append(p)
        if self.rate_fit is not None:
            p = out_dir / "loglog.tsv"
            with open(p, "w") as fh:
                for n in sorted({r["n"] for r in self.rows}):
                    errs = [r["holdout"] for r in self.rows if r["n"] == n]
                    fh.write(f"{math.log(n)!r}\t{math.log(float(np.mean(errs)))!r}\n")
            written.append(p)
        return written


def holdout_error(model, holdout: Dataset) -> float:
    """Monte-Carlo estimate of the expected reconstruction error."""
    if isinstance(model, kmeans.MeansModel):
        if model.ambient_dim != holdout.ambient_dim:
            raise ParameterError("ambient dim mismatch")
        d2, _ = min_sqdist(holdout.points, model.centers)
        return fsum_mean(d2)
    if isinstance(model, kflats.FlatsModel):
        return kflats.empirical_error(holdout, model)
    raise ParameterError(f"unsupported model type {type(model).__name__}")


def example1(seed: int, holdout_size: int = 100_000) -> Tuple[float, float]:
    """Two samples on the 100-sphere in R^101: hold-out error of the exact
    k=1 solution (their midpoint) and k=2 solution (the samples).

    Near-orthogonality of high-dimensional samples makes the single
    midpoint strictly better, the canonical small-n tradeoff.
    """
    pair = sample_sphere(100, 101, 2, mix_seed(seed, 1))
    x1, x2 = pair.points
    holdout = sample_sphere(100, 101, holdout_size, mix_seed(seed, 2))
    m1 = kmeans.MeansModel(centers=(x1 + x2)[None, :] / 2.0, k=1,
                           objective=kmeans.empirical_error(pair, (x1 + x2)[None, :] / 2.0),
                           iterations=0, seed=seed)
    m2 = kmeans.MeansModel(centers=pair.points, k=2, objective=0.0,
                           iterations=0, seed=seed)
    return holdout_error(m1, holdout), holdout_error(m2, holdout)


def _resolve_k_grid(spec: ExperimentSpec, n: int) -> List[int]:
    if not isinstance(spec.k_grid, str):
        return list(spec.k_grid)
    d = spec.manifold.intrinsic_dim
    if spec.algorithm == "kflats":
        kn = kn_kflats(n, d, spec.manifold.effective_curvature())
    else:
        kn = kn_kmeans(n, d, spec.manifold.effective_density_norm())
    return [max(1, round(kn))]


def _fit_cell(spec: ExperimentSpec, train: Dataset, k: int, seed: int):
    if spec.algorithm == "kmeans":
        return kmeans.fit(train, k, spec.fit_config, seed=seed)
    if spec.algorithm == "kflats":
        d = spec.flat_dim if spec.flat_dim is not None else spec.manifold.intrinsic_dim
        return kflats.fit(train, k, d, spec.fit_config, seed=seed)
    # seeding-only: best of restarts by empirical error, no Lloyd descent
    best = None
    for r in range(spec.fit_config.restarts):
        centers = kmeans.seed_kmeanspp(train, k, mix_seed(seed, r))
        obj = kmeans.empirical_error(train, centers)
        if best is None or obj < best[1]:
            best = (centers, obj)
    centers, obj = best
    return kmeans.MeansModel(centers=centers, k=k, objective=obj,
                             iterations=0, seed=seed)


def _run_cell(spec: ExperimentSpec, holdout: Dataset, n: int, k: int,
              rep: int) -> dict:
    cell_seed = mix_seed(spec.base_seed, n, k, rep)
    train = spec.manifold.sample(n, mix_seed(cell_seed, TRAIN_TAG))
    t0 = time.perf_counter()
    model = _fit_cell(spec, train, k, cell_seed)
    seconds = time.perf_counter() - t0
    return {
        "n": n, "k": k, "repeat": rep,
        "empirical": model.objective,
        "holdout": holdout_error(model, holdout),
        "seconds": seconds,
        "descent_violations": getattr(model, "descent_violations", 0),
    }


def tradeoff_experiment(spec: ExperimentSpec) -> ExperimentReport:
    """Full (n, k, repeat) grid: sample train set, fit best-of-restarts,
    evaluate on the shared hold-out sample."""
    holdout = spec.manifold.sample(spec.holdout_size,
                                   mix_seed(spec.base_seed, HOLDOUT_TAG))
    cells = [(n, k, rep)
             for n in spec.train_sizes
             for k in _resolve_k_grid(spec, n)
             for rep in range(spec.repeats)]

    def run(cell):
        n, k, rep = cell
        try:
            return _run_cell(spec, holdout, n, k, rep)
        except Exception as exc:
            raise type(exc)(f"cell (n={n}, k={k}, repeat={rep}): {exc}") from exc

    if spec.threads > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            rows = list(pool.map(run, cells))
    else:
        rows = [run(c) for c in cells]
    violations = sum(r.pop("descent_violations") for r in rows)
    report = ExperimentReport(rows=rows, descent_violations=violations)
    family = "kflats" if spec.algorithm == "kflats" else "kmeans"
    d = spec.manifold.intrinsic_dim
    for n in spec.train_sizes:
        for k in _resolve_k_grid(spec, n):
            inputs = BoundInputs(
                n=n, k=k, d=d, delta=spec.delta,
                density_norm=spec.manifold.effective_density_norm(),
                curvature=spec.manifold.effective_curvature())
            cell_rows = [r for r in rows if r["n"] == n and r["k"] == k]
            emp = float(np.mean([r["empirical"] for r in cell_rows]))
            hold = float(np.mean([r["holdout"] for r in cell_rows]))
            report.bound_rows.append(decompose(emp, hold, inputs, family))
    return report


def select_k(spec: ExperimentSpec, n: Optional[int] = None) -> int:
    """Hold-out model selection: argmin of validation error over k_grid,
    ties resolved to the smallest k."""
    if n is None:
        n = spec.train_sizes[0]
    grid = _resolve_k_grid(spec, n)
    cell_rows = {}
    holdout = spec.manifold.sample(spec.holdout_size,
                                   mix_seed(spec.base_seed, HOLDOUT_TAG))
    for k in grid:
        errs = [_run_cell(spec, holdout, n, k, rep)["holdout"]
                for rep in range(spec.repeats)]
        cell_rows[k] = float(np.mean(errs))
    return argmin_k(cell_rows)


def argmin_k(errors: dict) -> int:
    """Smallest k attaining the minimum validation error."""
    if not errors:
        raise ParameterError("empty k grid")
    best = min(errors.values())
    return min(k for k, v in errors.items() if v == best)


def fit_loglog(ns: Sequence[float], errors: Sequence[float]) -> RateFit:
    """Least-squares line through (ln n, ln error).

    residual is the sum of squared log-residuals; the fit is flagged
    degenerate when all errors coincide (slope carries no information).
    """
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if ns.shape != errors.shape or ns.size < 2:
        raise ParameterError("need >= 2 (n, error) pairs of equal length")
    if (errors <= 0).any():
        raise ParameterError("errors must be positive for a log-log fit")
    x = np.log(ns)
    y = np.log(errors)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sum((y - (slope * x + intercept)) ** 2))
    return RateFit(slope=float(slope), intercept=float(intercept),
                   residual=resid, degenerate=bool(np.ptp(y) < 1e-15))


def rate_experiment(spec: ExperimentSpec, schedule: str | None = None) -> ExperimentReport:
    """Hold-out error along the balanced-k schedule, with a log-log slope fit.

    Requires at least 4 training sizes spanning at least two decades; the
    schedule picks k = max(1, round(k_n)) per training size.  By default the
    schedule matches ``spec.algorithm``.
    """
    if schedule is None:
        schedule = "kflats" if spec.algorithm == "kflats" else "kmeans"
    if schedule not in ("kmeans", "kflats"):
        raise ParameterError("schedule must be 'kmeans' or 'kflats'")
    sizes = sorted(spec.train_sizes)
    if len(sizes) < 4 or sizes[-1] < 100 * sizes[0]:
        raise ParameterError(
            "rate fits need >= 4 training sizes spanning >= 2 decades")
    d = spec.manifold.intrinsic_dim
    if schedule == "kflats":
        kap = spec.manifold.effective_curvature()
        ks = {n: max(1, round(kn_kflats(n, d, kap))) for n in sizes}
        algo = "kflats"
    else:
        dn = spec.manifold.effective_density_norm()
        ks = {n: max(1, round(kn_kmeans(n, d, dn))) for n in sizes}
        algo = spec.algorithm if spec.algorithm != "kflats" else "kmeans"
    run_spec = replace(spec, algorithm=algo, k_grid=[1])  # grid replaced per n below
    holdout = spec.manifold.sample(spec.holdout_size,
                                   mix_seed(spec.base_seed, HOLDOUT_TAG))
    rows = []
    for n in sizes:
        for rep in range(spec.repeats):
            rows.append(_run_cell(run_spec, holdout, n, ks[n], rep))
    violations = sum(r.pop("descent_violations") for r in rows)
    mean_err = [float(np.mean([r["holdout"] for r in rows if r["n"] == n]))
                for n in sizes]
    return ExperimentReport(rows=rows, rate_fit=fit_loglog(sizes, mean_err),
                            descent_violations=violations)
