"""Order-preserving map, optionally over a process pool."""

from concurrent.futures import ProcessPoolExecutor


def pmap(fn, items, threads=1):
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        # map preserves input order, so results do not depend on scheduling
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * threads))))
