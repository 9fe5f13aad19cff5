"""Parallel Monte Carlo engine with a bit-reproducibility contract.

Replicates are pure functions of (master_seed, replicate_index).  They are
processed in fixed chunks of :data:`CHUNK` indices; per-chunk power sums
are computed with numpy's pairwise summation and then folded in index
order.  Because the chunk boundaries never depend on the worker count, the
aggregate is bit-identical for any ``jobs`` value.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, ReplicateFailure
from .sampling import SeedSpec

COMMANDS = ("simulate", "localtime", "moments", "spectral", "gram", "verify")
OUTPUT_FORMATS = ("csv", "json")
PROCESSES = ("heat", "bridge", "motion")

# negative-control hooks; each one corrupts exactly one quantity so a
# specific report must flip to fail
FAULT_INFLATE_Q = "inflate-quadratic-form"
FAULT_MODES = (FAULT_INFLATE_Q,)

DEFAULT_EPSILON_SCHEDULE = (0.08, 0.04, 0.02, 0.01, 0.005)

# fixed reduction granularity: a worker always handles whole chunks, and
# the fold over chunks is ordered by index, never by completion
CHUNK = 1024

_UINT64_MAX = 2**64 - 1


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters shared by the CLI and the verify suite."""

    command: str = "verify"
    interval: tuple[float, float] = (0.0, 2.0)
    grid_points: int = 8192
    epsilon_schedule: tuple[float, ...] = DEFAULT_EPSILON_SCHEDULE
    replicates: int = 50_000
    master_seed: int = 0
    jobs: int = 1
    output_path: str | None = None
    output_format: str = "csv"
    z: float = 0.0
    process: str = "heat"
    fault_injection: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "interval", tuple(float(v) for v in self.interval))
        object.__setattr__(
            self, "epsilon_schedule", tuple(float(e) for e in self.epsilon_schedule)
        )
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"unknown output format {self.output_format!r}")
        if self.process not in PROCESSES:
            raise ConfigError(f"unknown process {self.process!r}")
        if self.fault_injection is not None and self.fault_injection not in FAULT_MODES:
            raise ConfigError(f"unknown fault injection {self.fault_injection!r}")
        if len(self.interval) != 2 or not self.interval[0] < self.interval[1]:
            raise ConfigError(f"empty interval {self.interval}")
        if self.grid_points < 2:
            raise ConfigError("grid_points must be at least 2")
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        if not 0 <= int(self.master_seed) <= _UINT64_MAX:
            raise ConfigError("master_seed must fit in 64 unsigned bits")
        sched = self.epsilon_schedule
        if len(sched) == 0:
            raise ConfigError("epsilon schedule must be nonempty")
        if any(e <= 0.0 for e in sched):
            raise ConfigError("epsilon schedule entries must be positive")
        if any(a <= b for a, b in zip(sched, sched[1:])):
            raise ConfigError("epsilon schedule must be strictly decreasing")
        if min(sched) < self.bandwidth_floor:
            raise ConfigError(
                f"epsilon schedule minimum {min(sched)} below the bandwidth "
                f"floor {self.bandwidth_floor:.3e} for {self.grid_points} grid points"
            )

    @property
    def span(self) -> float:
        """Length of the path parameter domain for the selected process."""
        if self.process == "heat":
            return self.interval[1] - self.interval[0]
        return 1.0

    @property
    def bandwidth_floor(self) -> float:
        return 4.0 * self.span / (self.grid_points - 1)


def config_dict(config: RunConfig) -> dict:
    """Result-determining fields of the config, in stable key order.

    Excludes jobs, output path, and output format: none of them affect the
    computed numbers, and leaving them out keeps emissions from runs that
    differ only in worker count byte-identical.
    """
    return {
        "command": config.command,
        "interval": [config.interval[0], config.interval[1]],
        "grid_points": config.grid_points,
        "epsilon_schedule": list(config.epsilon_schedule),
        "replicates": config.replicates,
        "master_seed": int(config.master_seed),
        "z": config.z,
        "process": config.process,
        "fault_injection": config.fault_injection,
    }


def default_config(**overrides) -> RunConfig:
    return replace(RunConfig(), **overrides) if overrides else RunConfig()


@dataclass(frozen=True)
class MCResult:
    """Aggregate of one replicate family.

    ``m1`` through ``m4`` are raw moments (means of powers) per output
    coordinate; ``stderr`` is the sample standard deviation over root n.
    ``raw`` holds the full replicate-by-coordinate array only when
    requested.
    """

    n: int
    mean: np.ndarray
    stderr: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    m4: np.ndarray
    raw: np.ndarray | None = field(default=None, repr=False)


def _chunk_power_sums(task, master_seed: int, start: int, stop: int, keep_raw: bool):
    """Power sums S1..S4 of task outputs for replicate indices [start, stop)."""
    rows = []
    for i in range(start, stop):
        try:
            rows.append(np.asarray(task(SeedSpec(master_seed, i)), dtype=float))
        except ReplicateFailure:
            raise
        except Exception as exc:  # attach the replicate index, then re-raise
            raise ReplicateFailure(i, f"{type(exc).__name__}: {exc}") from exc
    block = np.stack(rows)
    if block.ndim != 2:
        raise ReplicateFailure(start, "task must return a 1-d array per replicate")
    p2 = block * block
    sums = np.stack(
        [
            np.sum(block, axis=0),
            np.sum(p2, axis=0),
            np.sum(p2 * block, axis=0),
            np.sum(p2 * p2, axis=0),
        ]
    )
    return start, sums, (block if keep_raw else None)


def _pin_worker_threads():
    # keep worker-side linear algebra single-threaded: reproducible
    # reductions and no oversubscription of the pool
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ[var] = "1"


def run_replicates(
    task,
    config: RunConfig | None = None,
    *,
    replicates: int | None = None,
    master_seed: int | None = None,
    jobs: int | None = None,
    return_raw: bool = False,
) -> MCResult:
    """Aggregate ``task`` over independent replicates, reproducibly.

    ``task(seed: SeedSpec) -> 1-d array`` must be pure and, when jobs > 1,
    picklable (a module-level function or a partial of one).  The result is
    bit-identical for a fixed master seed whatever ``jobs`` is, because the
    chunked fold never depends on the schedule.  Task exceptions surface as
    :class:`ReplicateFailure` carrying the replicate index.
    """
    n = replicates if replicates is not None else (config.replicates if config else None)
    seed = master_seed if master_seed is not None else (
        config.master_seed if config else None
    )
    workers = jobs if jobs is not None else (config.jobs if config else 1)
    if n is None or seed is None:
        raise ConfigError("run_replicates needs replicates and master_seed")
    if n < 1:
        raise ConfigError("replicates must be at least 1")

    spans = [(s, min(s + CHUNK, n)) for s in range(0, n, CHUNK)]
    results = []
    if workers > 1 and len(spans) > 1:
        with ProcessPoolExecutor(
            max_workers=min(workers, len(spans)), initializer=_pin_worker_threads
        ) as pool:
            futures = [
                pool.submit(_chunk_power_sums, task, seed, s, e, return_raw)
                for s, e in spans
            ]
            for fut in futures:
                results.append(fut.result())
    else:
        for s, e in spans:
            results.append(_chunk_power_sums(task, seed, s, e, return_raw))

    results.sort(key=lambda r: r[0])
    total = results[0][1].copy()
    for _, sums, _ in results[1:]:
        total += sums
    s1, s2, s3, s4 = total
    mean = s1 / n
    if n > 1:
        var = np.maximum(s2 - n * mean * mean, 0.0) / (n - 1)
        stderr = np.sqrt(var / n)
    else:
        stderr = np.zeros_like(mean)
    raw = np.concatenate([r[2] for r in results]) if return_raw else None
    return MCResult(
        n=n,
        mean=mean,
        stderr=stderr,
        m1=mean,
        m2=s2 / n,
        m3=s3 / n,
        m4=s4 / n,
        raw=raw,
    )


# ---------------------------------------------------------------------------
# aggregate tables: the emission format of the simulate/localtime commands


@dataclass(frozen=True)
class AggregateTable:
    """Named float columns; None cells allowed.  Round-trips via CSV/JSON."""

    columns: tuple[str, ...]
    rows: tuple[tuple[float | None, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(str(c) for c in self.columns))
        rows = tuple(
            tuple(None if v is None else float(v) for v in row) for row in self.rows
        )
        object.__setattr__(self, "rows", rows)
        for row in rows:
            if len(row) != len(self.columns):
                raise ValueError("row width does not match the column count")


_FLOAT_FMT = "%.17g"


def table_to_csv(table: AggregateTable) -> str:
    import csv
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow(["" if v is None else _FLOAT_FMT % v for v in row])
    return buf.getvalue()


def table_from_csv(text: str) -> AggregateTable:
    import csv
    import io

    reader = csv.reader(io.StringIO(text))
    columns = tuple(next(reader))
    rows = tuple(
        tuple(None if cell == "" else float(cell) for cell in row)
        for row in reader
        if row
    )
    return AggregateTable(columns=columns, rows=rows)


def table_to_json(table: AggregateTable, config: dict | None = None, version: str = "") -> str:
    import json

    payload = {
        "config": config or {},
        "aggregate": {
            "columns": list(table.columns),
            "rows": [
                [None if v is None else _FLOAT_FMT % v for v in row]
                for row in table.rows
            ],
        },
        "version": version,
    }
    return json.dumps(payload, indent=2) + "\n"


def table_from_json(text: str) -> tuple[AggregateTable, dict, str]:
    import json

    payload = json.loads(text)
    agg = payload["aggregate"]
    table = AggregateTable(
        columns=tuple(agg["columns"]),
        rows=tuple(
            tuple(None if v is None else float(v) for v in row) for row in agg["rows"]
        ),
    )
    return table, payload.get("config", {}), payload.get("version", "")
