"""
Class for mapping independent jobs (window searches, box siblings) over a
parameter grid, optionally through a worker pool.
"""
from multiprocessing.pool import Pool
from typing import Callable, Iterable, Iterator, Optional, TypeVar

T = TypeVar('T')
R = TypeVar('R')


class Scanner:
    def __init__(
        self,
        show_progress: bool = False,
        pool: Optional[Pool] = None,
        desc: Optional[str] = None,
    ):
        self.show_progress: bool = show_progress
        self.pool: Optional[Pool] = pool
        self.desc: Optional[str] = desc

    def scan(self, func: Callable[[T], R], items: Iterable[T]) -> Iterator[R]:
        from tqdm import tqdm

        items = list(items)

        if self.pool is not None:
            return (
                tqdm(self.pool.imap(func, items), total=len(items), desc=self.desc) \
                if self.show_progress \
                else iter(self.pool.map(func, items))
            )
        else:
            return (
                tqdm(map(func, items), total=len(items), desc=self.desc) \
                if self.show_progress \
                else map(func, items)
            )

    def __call__(self, func: Callable[[T], R], items: Iterable[T]) -> list[R]:
        return list(self.scan(func, items))
