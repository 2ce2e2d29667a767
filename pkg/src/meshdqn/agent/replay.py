from __future__ import annotations

from typing import Generic, Iterable, TypeVar

import numpy as np

from meshdqn.errors import ReplayBufferError

T = TypeVar("T")


class ReplayBuffer(Generic[T]):
    """
    Fixed-capacity ring buffer with uniform sampling (without replacement).

    Items live in a list that is overwritten in place once full, so sampling
    indexes in constant time.
    """

    def __init__(self, capacity: int, rng: np.random.Generator | None = None):
        if capacity < 1:
            raise ReplayBufferError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._items: list[T] = []
        self._next = 0
        self._rng = rng if rng is not None else np.random.default_rng()
        self.pushed = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, item: T) -> None:
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._next] = item
        self._next = (self._next + 1) % self.capacity
        self.pushed += 1

    def extend(self, items: Iterable[T]) -> None:
        for item in items:
            self.push(item)

    def contents(self) -> list[T]:
        """Stored items, oldest first."""
        if len(self._items) < self.capacity:
            return list(self._items)
        return self._items[self._next :] + self._items[: self._next]

    def sample(self, batch_size: int) -> list[T]:
        if batch_size < 1:
            raise ReplayBufferError(f"batch size must be >= 1, got {batch_size}")
        if len(self._items) < batch_size:
            raise ReplayBufferError(
                f"buffer holds {len(self._items)} transitions, batch needs {batch_size}"
            )
        idx = self._rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[int(i)] for i in idx]
