"""Batch execution engine: seeded runs, worker pools, CSV persistence.

Every run draws its randomness from a stream derived from
``(master seed, run index)``, so runs are independent and the set of
records is identical whatever the worker count; aggregation sorts by run
index before writing, which makes the summary CSV byte-stable. Wall-clock
columns live only in the per-run CSV, since timings are inherently not
reproducible.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

from ..rng import RngStream

__all__ = ["csv_write", "run_seed_stream", "DATA_STREAM_KEY", "execute_runs",
           "summarize"]

# namespace for streams shared by all runs (fixed datasets), disjoint from
# run indices
DATA_STREAM_KEY = 2 ** 32


def run_seed_stream(master_seed: int, run_index: int) -> RngStream:
    """The stream owned by one run: derived by hashing (seed, run index)."""
    return RngStream(master_seed, (run_index,))


def data_stream(master_seed: int) -> RngStream:
    """Stream for datasets shared across every run of an experiment."""
    return RngStream(master_seed, (DATA_STREAM_KEY,))


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def csv_write(records: Sequence[Mapping[str, object]], path: Union[str, Path],
              columns: Sequence[str]) -> None:
    """Write records with a fixed column order, header row and
    newline-terminated rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for rec in records:
            writer.writerow([_format_cell(rec[c]) for c in columns])


class _Job:
    """Picklable wrapper binding a worker to its parameters."""

    def __init__(self, worker: Callable, params: dict, master_seed: int):
        self.worker = worker
        self.params = params
        self.master_seed = master_seed

    def __call__(self, run_index: int) -> dict:
        record = self.worker(self.params, run_seed_stream(self.master_seed, run_index),
                             run_index)
        record["run"] = run_index
        return record


def execute_runs(worker: Callable, params: dict, master_seed: int, runs: int,
                 threads: int) -> list[dict]:
    """Run ``worker(params, stream, run_index)`` for every run index.

    Results come back sorted by run index regardless of scheduling.
    """
    job = _Job(worker, params, master_seed)
    indices = range(runs)
    if threads <= 1 or runs <= 1:
        records = [job(i) for i in indices]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunk = max(1, runs // (threads * 8))
            records = list(pool.map(job, indices, chunksize=chunk))
    records.sort(key=lambda r: r["run"])
    return records


def summarize(records: Sequence[Mapping[str, object]], fields: Iterable[str]
              ) -> list[dict]:
    """Mean/std rows for the selected numeric fields."""
    rows = []
    for field in fields:
        values = np.array([float(r[field]) for r in records])
        rows.append({
            "field": field,
            "mean": float(np.mean(values)),
            "std": float(np.std(values, ddof=1)) if values.size > 1 else 0.0,
            "runs": values.size,
        })
    return rows
