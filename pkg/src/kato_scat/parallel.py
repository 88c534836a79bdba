# src/kato_scat/parallel.py

import logging
from multiprocessing.pool import ThreadPool


def parallel_map(func, items, threads: int = 1) -> list:
    """
    Applies `func` to every item and returns the results in input order.

    numpy releases the GIL inside the dense kernels, so a thread pool is enough.
    Reductions over the returned list are left to the caller and done serially,
    which keeps results identical for every thread count.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    threads = min(threads, len(items))
    logging.debug(f"parallel_map: {len(items)} tasks on {threads} threads")
    with ThreadPool(processes=threads) as pool:
        return pool.map(func, items)
