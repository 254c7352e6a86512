"""Deterministic data-parallel execution over row blocks.

Workers compute disjoint output slices from immutable inputs, so results are
bit-identical regardless of thread count or scheduling order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def default_threads() -> int:
    env = os.environ.get("RELIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def run_row_blocks(worker, n_rows: int, threads: int | None = None, block: int = 32):
    """Call ``worker(row_start, row_stop)`` over [0, n_rows) in blocks.

    The worker must write only to rows [row_start, row_stop) of its outputs.
    """
    threads = threads or default_threads()
    spans = [(s, min(s + block, n_rows)) for s in range(0, n_rows, block)]
    if threads <= 1 or len(spans) <= 1:
        for s, e in spans:
            worker(s, e)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(worker, s, e) for s, e in spans]
        for f in futures:
            f.result()
