from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def grouped(num: int, itr: Iterable[T]) -> Iterable[List[T]]:
    if num < 1:
        raise ValueError("group size must be positive")
    if hasattr(itr, "__iter__") and not hasattr(itr, "__next__"):
        itr = iter(itr)
    while True:
        elem_list = []
        for _ in range(num):
            try:
                elem_list.append(next(itr))
            except StopIteration:
                if len(elem_list) > 0:
                    yield elem_list
                return
        yield elem_list


def ordered_map(func: Callable[[T], R], items: Sequence[T], num_workers: int = 1) -> List[R]:
    """
    map func over items, results in input order whatever the worker count

    Args:
        func: pure function of one item
        items: inputs
        num_workers: 1 runs inline, more uses a thread pool

    Returns:
        list of results aligned with items
    """
    items = list(items)
    if num_workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(num_workers, len(items))) as pool:
        return list(pool.map(func, items))
