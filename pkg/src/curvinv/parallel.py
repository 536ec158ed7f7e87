"""Parcel-parallel summation of enumerated component products.

The enumerated assignment list is split into m*n near-equal contiguous
parcels for n workers; idle workers pull the next parcel from a shared
queue, accumulate a private partial sum, and hand exactly one partial sum
back when the queue drains.  The merged, multiplier-scaled sum is
canonical, so the result is independent of worker count, parcel count,
and scheduling order.
"""

from __future__ import annotations

import multiprocessing as mp
import time
from dataclasses import dataclass, field

from .contraction import ContractionPlan, InvariantSpec, ProductEvaluator
from .expr import Expr, balanced_sum


class WorkerFailure(Exception):
    """A worker process died; the run produced no result."""


CADENCES = ("per-parcel", "per-entry")


@dataclass(frozen=True)
class Parcel:
    id: int
    start: int
    stop: int

    def __len__(self) -> int:
        return self.stop - self.start


@dataclass(frozen=True)
class RunConfig:
    workers: int = 1
    parcels_per_worker: int = 1
    simplify_cadence: str = "per-parcel"

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.parcels_per_worker < 1:
            raise ValueError("parcels_per_worker must be >= 1")
        if self.simplify_cadence not in CADENCES:
            raise ValueError("simplify_cadence must be one of %s" % (CADENCES,))


@dataclass
class WorkerStats:
    entries: int
    wall_ms: float


@dataclass
class RunReport:
    invariant: Expr
    expression: str
    P: int
    T: int
    multiplier: int
    product_count: int
    raise_mults: int
    dim: int
    spec_text: str
    metric_name: str
    workers: int
    parcels: int
    wall_ms: float
    per_worker: list

    def to_json_dict(self) -> dict:
        return {
            "metric": self.metric_name,
            "dim": self.dim,
            "spec": self.spec_text,
            "multiplier": self.multiplier,
            "P": self.P,
            "T": self.T,
            "expression": self.expression,
            "workers": self.workers,
            "parcels": self.parcels,
            "wall_ms": self.wall_ms,
            "per_worker": [
                {"entries": w.entries, "wall_ms": w.wall_ms} for w in self.per_worker
            ],
        }


def partition(plan: ContractionPlan, cfg: RunConfig) -> list:
    """Split the assignment list into at most workers*parcels_per_worker
    contiguous parcels whose sizes differ by at most one."""
    n = len(plan.sum_index_array)
    if n == 0:
        return []
    count = min(cfg.workers * cfg.parcels_per_worker, n)
    bounds = [i * n // count for i in range(count + 1)]
    return [Parcel(i, bounds[i], bounds[i + 1]) for i in range(count)]


def _worker_loop(worker_id, spec, tensors, entries, parcels, cadence, task_q, result_q):
    try:
        evaluate = ProductEvaluator(spec, tensors)
        zero = tensors[0].env.zero()
        partial = zero
        done = 0
        busy = 0.0
        while True:
            pid = task_q.get()
            if pid is None:
                break
            parcel = parcels[pid]
            start = time.perf_counter()
            if cadence == "per-entry":
                for entry in entries[parcel.start : parcel.stop]:
                    partial = partial + evaluate(entry)
            else:
                products = [evaluate(e) for e in entries[parcel.start : parcel.stop]]
                partial = partial + balanced_sum(products, zero)
            busy += time.perf_counter() - start
            done += len(parcel)
        result_q.put((worker_id, partial, done, busy * 1000.0))
    except Exception as exc:  # surfaced by the coordinator as WorkerFailure
        result_q.put(("error", worker_id, repr(exc)))
        raise


def execute(
    plan: ContractionPlan,
    spec: InvariantSpec,
    tensors,
    cfg: RunConfig,
    *,
    raise_mults: int = 0,
    metric_name: str = "",
    spec_text: str = "",
) -> RunReport:
    """Run the parcel pool and merge the partial sums into the invariant.

    The result expression is byte-identical for every (workers, parcels)
    choice; only the per-worker statistics vary.
    """
    started = time.perf_counter()
    env = tensors[0].env
    zero = env.zero()
    parcels = partition(plan, cfg)
    n = cfg.workers
    if not parcels:
        partials = []
        stats = [WorkerStats(0, 0.0) for _ in range(n)]
    else:
        task_q = mp.Queue()
        result_q = mp.Queue()
        for parcel in parcels:
            task_q.put(parcel.id)
        for _ in range(n):
            task_q.put(None)
        procs = [
            mp.Process(
                target=_worker_loop,
                args=(
                    i,
                    spec,
                    tensors,
                    plan.sum_index_array,
                    parcels,
                    cfg.simplify_cadence,
                    task_q,
                    result_q,
                ),
            )
            for i in range(n)
        ]
        for p in procs:
            p.start()
        results = []
        failure = None
        for _ in range(n):
            item = result_q.get()
            if item[0] == "error":
                failure = item
                break
            results.append(item)
        if failure is not None:
            for p in procs:
                p.terminate()
            for p in procs:
                p.join()
            raise WorkerFailure("worker %s failed: %s" % (failure[1], failure[2]))
        for p in procs:
            p.join()
            if p.exitcode != 0:
                raise WorkerFailure("worker exited with code %s" % p.exitcode)
        results.sort(key=lambda item: item[0])
        partials = [partial for _, partial, _, _ in results]
        stats = [WorkerStats(done, ms) for _, _, done, ms in results]
    invariant = balanced_sum(partials, zero) * plan.multiplier
    wall_ms = (time.perf_counter() - started) * 1000.0
    return RunReport(
        invariant=invariant,
        expression=str(invariant),
        P=plan.product_count + raise_mults,
        T=invariant.term_count(),
        multiplier=plan.multiplier,
        product_count=plan.product_count,
        raise_mults=raise_mults,
        dim=plan.dim,
        spec_text=spec_text,
        metric_name=metric_name,
        workers=cfg.workers,
        parcels=len(parcels),
        wall_ms=wall_ms,
        per_worker=stats,
    )


def sequential_oracle(plan: ContractionPlan, spec: InvariantSpec, tensors) -> Expr:
    """Single-pass reference summation used to cross-check pool runs."""
    evaluate = ProductEvaluator(spec, tensors)
    total = tensors[0].env.zero()
    for entry in plan.sum_index_array:
        total = total + evaluate(entry)
    return total * plan.multiplier
