"""FP-tree construction and recursive FP-growth over integer item transactions."""
from __future__ import annotations

from collections import defaultdict
from typing import Iterable, Optional


class _Node:
    __slots__ = ("item", "count", "parent", "children", "link")

    def __init__(self, item, parent):
        self.item = item
        self.count = 0
        self.parent = parent
        self.children = {}
        self.link = None


class FPTree:
    """Prefix tree of frequency-ordered transactions with per-item node chains.

    ``rank`` fixes the insertion order: items with higher support come first,
    equal supports are ordered by item id.
    """

    def __init__(self, weighted_transactions: Iterable, min_support: int):
        weighted_transactions = list(weighted_transactions)
        support = defaultdict(int)
        for items, weight in weighted_transactions:
            for item in items:
                support[item] += weight
        self.support = {i: c for i, c in support.items() if c >= min_support}
        ordered = sorted(self.support, key=lambda i: (-self.support[i], i))
        self.rank = {item: r for r, item in enumerate(ordered)}
        self.root = _Node(None, None)
        self.heads = {}
        self._tails = {}
        for items, weight in weighted_transactions:
            path = sorted((i for i in items if i in self.rank), key=self.rank.__getitem__)
            if path:
                self._insert(path, weight)

    def _insert(self, path, weight):
        node = self.root
        for item in path:
            child = node.children.get(item)
            if child is None:
                child = _Node(item, node)
                node.children[item] = child
                if item in self._tails:
                    self._tails[item].link = child
                else:
                    self.heads[item] = child
                self._tails[item] = child
            child.count += weight
            node = child

    def nodes_of(self, item):
        node = self.heads.get(item)
        while node is not None:
            yield node
            node = node.link

    def prefix_paths(self, item):
        """Conditional pattern base of ``item``: ``(path items, count)`` pairs."""
        for node in self.nodes_of(item):
            path = []
            parent = node.parent
            while parent.item is not None:
                path.append(parent.item)
                parent = parent.parent
            if path:
                yield path, node.count

    def single_path(self):
        """Items along the tree if it has no branches, else ``None``."""
        path = []
        node = self.root
        while node.children:
            if len(node.children) > 1:
                return None
            node = next(iter(node.children.values()))
            path.append((node.item, node.count))
        return path


def fpgrowth(transactions: Iterable[Iterable[int]], min_support: int,
             max_size: Optional[int] = None) -> dict:
    """All itemsets contained in at least ``min_support`` transactions.

    Duplicate items within a transaction are ignored.  Returns a mapping of
    sorted item tuples to their support.  ``max_size`` stops the recursion
    once itemsets reach that many items.
    """
    if min_support < 1:
        raise ValueError("min_support must be >= 1")
    tree = FPTree(((frozenset(t), 1) for t in transactions), min_support)
    out = {}
    _mine(tree, (), min_support, max_size, out)
    return out


def _mine(tree: FPTree, suffix: tuple, min_support: int, max_size, out: dict):
    path = tree.single_path()
    if path is not None and path:
        _emit_single_path(path, suffix, max_size, out)
        return
    # least frequent first, so conditional bases stay small
    for item in sorted(tree.support, key=lambda i: -tree.rank[i]):
        itemset = suffix + (item,)
        out[tuple(sorted(itemset))] = tree.support[item]
        if max_size is not None and len(itemset) >= max_size:
            continue
        cond = FPTree(tree.prefix_paths(item), min_support)
        if cond.support:
            _mine(cond, itemset, min_support, max_size, out)


def _emit_single_path(path, suffix, max_size, out):
    """Every combination of a branch-free path is frequent with its minimum count."""
    limit = len(path) if max_size is None else max(0, max_size - len(suffix))

    def rec(start, chosen, count):
        for j in range(start, len(path)):
            item, c = path[j]
            picked = chosen + (item,)
            cnt = min(count, c)
            out[tuple(sorted(suffix + picked))] = cnt
            if len(picked) < limit:
                rec(j + 1, picked, cnt)

    if limit > 0:
        rec(0, (), float("inf"))
