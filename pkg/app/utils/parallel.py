"""
Thread-pool map with results kept in submission order.

numpy/scipy release the GIL inside the dense kernels, so threads are enough
to spread Matsubara modes and multipole blocks over cores. Reductions are
always taken over the ordered result list, which keeps totals bit-identical
between runs regardless of scheduling.
"""

import math
import logging
import concurrent.futures as futures

from app.utils.settings import thread_count

# Setup logging
logger = logging.getLogger(__name__)


def ordered_map(func, items, threads=None):
    """Apply func to every item, returning results in the order of items.

    Args:
        func: Callable taking one item
        items: Iterable of work items
        threads: Worker count; defaults to SPHEREPLATE_THREADS

    Returns:
        list: func(item) for each item, in input order
    """
    items = list(items)
    workers = threads or thread_count()
    if workers == 1 or len(items) < 2:
        return [func(item) for item in items]

    with futures.ThreadPoolExecutor(max_workers=min(workers, len(items))) as executor:
        return list(executor.map(func, items))


def fixed_order_sum(values):
    """Correctly rounded sum of an ordered sequence of floats"""
    return math.fsum(values)
