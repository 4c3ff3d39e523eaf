"""
Union-Find - equivalence classes over hashable items, smallest-index representative
"""
from collections import defaultdict
from typing import Dict, Hashable, Iterable, List, Tuple


class UnionFind:
    """Path-halving union-find that remembers insertion order.

    The representative of a class is its earliest inserted member, so class
    choices are deterministic for a deterministic insertion order.
    """

    def __init__(self, items: Iterable[Hashable] = ()):
        self._index: Dict[Hashable, int] = {}
        self._items: List[Hashable] = []
        self._parent: List[int] = []
        for item in items:
            self.add(item)

    def add(self, item: Hashable) -> int:
        idx = self._index.get(item)
        if idx is None:
            idx = len(self._items)
            self._index[item] = idx
            self._items.append(item)
            self._parent.append(idx)
        return idx

    def __contains__(self, item: Hashable) -> bool:
        return item in self._index

    def __len__(self) -> int:
        return len(self._items)

    def _root(self, idx: int) -> int:
        parent = self._parent
        while parent[idx] != idx:
            parent[idx] = parent[parent[idx]]
            idx = parent[idx]
        return idx

    def union(self, a: Hashable, b: Hashable) -> None:
        x, y = self._root(self.add(a)), self._root(self.add(b))
        if x == y:
            return
        if y < x:
            x, y = y, x
        self._parent[y] = x

    def find(self, item: Hashable) -> Hashable:
        return self._items[self._root(self.add(item))]

    def same(self, a: Hashable, b: Hashable) -> bool:
        return self.find(a) == self.find(b)

    def classes(self) -> List[Tuple[Hashable, ...]]:
        bins: Dict[int, List[Hashable]] = defaultdict(list)
        for idx, item in enumerate(self._items):
            bins[self._root(idx)].append(item)
        return [tuple(bins[root]) for root in sorted(bins)]

    def representatives(self) -> List[Hashable]:
        return [members[0] for members in self.classes()]
