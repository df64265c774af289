"""Worker-pool helper with order-independent results."""

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count(requested=None):
    """Resolve the worker count: explicit value, then QUNDO_THREADS, then cores."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("QUNDO_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def ordered_map(fn, items, workers=None):
    """``[fn(x) for x in items]``, possibly on a thread pool.

    Results come back in input order whatever the completion order, so a
    caller that seeds each task from its own key gets the same output for
    any worker count.
    """
    items = list(items)
    n = min(worker_count(workers), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
