"""Benchmark harness: NN vs ACHCI over a corpus, plus the cubic timing study."""
from __future__ import annotations

import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .formats import read_tsplib, write_csv, write_tour
from .generator import Direction, GeneratorConfig, generate, random_cloud
from .heuristics import achci, nearest_neighbor
from .model import DEFAULT_METRIC, Instance, Tour

WORKERS_ENV = "TSPPC_WORKERS"
DEFAULT_REPEATS = 3
DEFAULT_TIMING_SIZES = (51, 100, 200, 400, 800)

RECORD_HEADER = (
    "instance", "direction", "nodes", "metric",
    "nn_cost", "achci_cost", "delta_percent", "nn_time_s", "achci_time_s",
)
TIMING_HEADER = ("instance", "nodes", "heuristic", "wall_time_s")


def worker_count(env: Optional[dict] = None) -> int:
    """Worker processes requested through ``TSPPC_WORKERS`` (default 1)."""
    raw = (os.environ if env is None else env).get(WORKERS_ENV, "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return value


@dataclass(frozen=True)
class BenchRecord:
    instance: str
    direction: str
    nodes: int
    nn_cost: float
    achci_cost: float
    nn_time: float
    achci_time: float
    metric: str

    @property
    def delta_percent(self) -> float:
        return 100.0 * (self.achci_cost - self.nn_cost) / self.nn_cost

    def row(self, scientific: bool = False) -> tuple:
        if scientific:
            costs = (f"{self.nn_cost:.2e}", f"{self.achci_cost:.2e}", f"{self.delta_percent:.1f}")
        else:
            costs = (repr(self.nn_cost), repr(self.achci_cost), repr(self.delta_percent))
        return (self.instance, self.direction, self.nodes, self.metric, *costs,
                f"{self.nn_time:.6f}", f"{self.achci_time:.6f}")


def timed(fn: Callable[[], Tour], repeats: int = DEFAULT_REPEATS) -> tuple[Tour, float]:
    """Run ``fn`` ``repeats`` times; return its result and the median wall time."""
    times = []
    result = None
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return result, statistics.median(times)


def bench_instance(instance: Instance, *, arc_rule: str = "added-cost",
                   repeats: int = DEFAULT_REPEATS) -> tuple[BenchRecord, Tour, Tour]:
    nn, nn_time = timed(lambda: nearest_neighbor(instance), repeats)
    ac, ac_time = timed(lambda: achci(instance, arc_rule=arc_rule), repeats)
    record = BenchRecord(
        instance=instance.source or instance.name,
        direction=instance.direction,
        nodes=len(instance.points),
        nn_cost=nn.cost,
        achci_cost=ac.cost,
        nn_time=nn_time,
        achci_time=ac_time,
        metric=instance.metric,
    )
    return record, nn, ac


@dataclass(frozen=True)
class _Job:
    path: str
    direction: Direction
    metric: str
    pairing: str
    arc_rule: str
    repeats: int
    tour_dir: Optional[str]


def _run_job(job: _Job) -> BenchRecord:
    cloud = read_tsplib(job.path)
    config = GeneratorConfig(job.direction, metric=job.metric, pairing=job.pairing)
    instance = generate(cloud, config)
    record, nn, ac = bench_instance(instance, arc_rule=job.arc_rule, repeats=job.repeats)
    if job.tour_dir:
        out = Path(job.tour_dir)
        for tour in (nn, ac):
            (out / f"{instance.name}.{tour.heuristic}.tour").write_text(
                write_tour(tour, instance), encoding="utf-8")
    return record


def corpus_files(directory) -> list[Path]:
    files = sorted(Path(directory).glob("*.tsp"))
    if not files:
        raise FileNotFoundError(f"no .tsp files in {directory}")
    return files


def bench_corpus(paths: Iterable, directions: Sequence[Direction], *,
                 metric: str = DEFAULT_METRIC, pairing: str = "halves", arc_rule: str = "added-cost",
                 repeats: int = DEFAULT_REPEATS, workers: int = 1,
                 tour_dir=None) -> list[BenchRecord]:
    """One record per (file, direction), in file order then direction order.

    With ``workers > 1`` files run in separate processes. Each process is
    single-threaded, so per-call timings stay comparable.
    """
    if tour_dir is not None:
        Path(tour_dir).mkdir(parents=True, exist_ok=True)
    jobs = [
        _Job(str(p), Direction.parse(d) if isinstance(d, str) else d, metric, pairing,
             arc_rule, repeats, str(tour_dir) if tour_dir is not None else None)
        for p in paths for d in directions
    ]
    if workers <= 1 or len(jobs) <= 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_job, jobs))


def write_bench_csv(path, records: Sequence[BenchRecord], scientific: bool = False) -> int:
    return write_csv(path, RECORD_HEADER, (r.row(scientific) for r in records))


def write_timing_csv(path, records: Sequence[BenchRecord]) -> int:
    rows = []
    for r in records:
        label = f"{r.instance}-{r.direction}"
        rows.append((label, r.nodes, "nn", f"{r.nn_time:.6f}"))
        rows.append((label, r.nodes, "achci", f"{r.achci_time:.6f}"))
    return write_csv(path, TIMING_HEADER, rows)


@dataclass(frozen=True)
class CubicFit:
    coefficient: float
    intercept: float
    r_squared: float

    def describe(self) -> str:
        return (f"time ~ {self.coefficient:.4g} * n^3 + {self.intercept:.4g} s "
                f"(R^2 = {self.r_squared:.4f})")


def fit_cubic(nodes: Sequence[float], seconds: Sequence[float]) -> CubicFit:
    """Least-squares line of wall time against n^3."""
    n3 = np.asarray(nodes, dtype=float) ** 3
    t = np.asarray(seconds, dtype=float)
    if len(n3) < 2:
        raise ValueError("need at least two sizes for a fit")
    A = np.column_stack([n3, np.ones_like(n3)])
    (coef, intercept), *_ = np.linalg.lstsq(A, t, rcond=None)
    resid = t - (coef * n3 + intercept)
    total = float(((t - t.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / total if total > 0 else 1.0
    return CubicFit(float(coef), float(intercept), r2)


@dataclass(frozen=True)
class TimingPoint:
    instance: str
    nodes: int
    nn_time: float
    achci_time: float


def timing_study(sizes: Sequence[int] = DEFAULT_TIMING_SIZES, *, seed: int = 0,
                 repeats: int = DEFAULT_REPEATS, arc_rule: str = "added-cost",
                 metric: str = DEFAULT_METRIC) -> tuple[list[TimingPoint], CubicFit]:
    """ACHCI and NN wall time on uniform random children-central clouds.

    Runs in the calling process only.
    """
    rng = np.random.default_rng(seed)
    points = []
    for n in sorted(sizes):
        cloud = random_cloud(n, rng, name=f"uniform{n}")
        inst = generate(cloud, GeneratorConfig(Direction.CHILDREN_CENTRAL, metric=metric))
        _, nn_t = timed(lambda: nearest_neighbor(inst), repeats)
        _, ac_t = timed(lambda: achci(inst, arc_rule=arc_rule), repeats)
        points.append(TimingPoint(cloud.name, n, nn_t, ac_t))
    fit = fit_cubic([p.nodes for p in points], [p.achci_time for p in points])
    return points, fit


def write_timing_study_csv(path, points: Sequence[TimingPoint]) -> int:
    rows = []
    for p in points:
        rows.append((p.instance, p.nodes, "nn", f"{p.nn_time:.6f}"))
        rows.append((p.instance, p.nodes, "achci", f"{p.achci_time:.6f}"))
    return write_csv(path, TIMING_HEADER, rows)
