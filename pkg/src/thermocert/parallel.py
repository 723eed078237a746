"""Order-preserving parallel map; results never depend on the thread count."""

from concurrent.futures import ThreadPoolExecutor

_threads = 1


def set_threads(k):
    global _threads
    _threads = max(1, int(k))


def pmap(fn, items, threads=None):
    k = _threads if threads is None else max(1, int(threads))
    items = list(items)
    if k == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=k) as ex:
        return list(ex.map(fn, items))
