"""Belief tree storage shared by the forward and backward planners.

Nodes live in preallocated arrays so nearest/neighbor scans vectorize;
deleted subtrees are tombstoned via an alive mask and excluded from all
queries.  Cumulative costs are maintained by the planners: in a forward
tree cost(n) accumulates from the root outward, in a backward tree it
is the cost-to-go toward the root.
"""

from __future__ import annotations

import numpy as np

from .beliefs import Belief, ProcessNoise
from .validation import ValidationError

__all__ = ["BeliefTree"]


class BeliefTree:
    """Directed tree of belief nodes with parent links and cumulative costs."""

    def __init__(
        self,
        root: Belief,
        orientation: str,
        alpha: float,
        noise: ProcessNoise,
        capacity: int = 64,
        clearance_step: float = 0.01,
    ):
        if orientation not in ("forward", "backward"):
            raise ValidationError(f"unknown orientation {orientation!r}")
        d = root.dim
        capacity = max(int(capacity), 1)
        self.orientation = orientation
        self.alpha = float(alpha)
        self.noise = noise
        self.clearance_step = float(clearance_step)
        self.dim = d
        self.means = np.zeros((capacity, d))
        self.covs = np.zeros((capacity, d, d))
        self.parent = np.full(capacity, -1, dtype=np.int64)
        self.cost = np.zeros(capacity)
        self.alive = np.zeros(capacity, dtype=bool)
        self.children: list[list[int]] = [[]]
        self.size = 1
        self.means[0] = root.mean
        self.covs[0] = root.cov
        self.alive[0] = True

    # -- construction ------------------------------------------------

    def _grow(self):
        cap = self.means.shape[0]
        new_cap = cap * 2

        def widen(arr, shape):
            out = np.zeros(shape, dtype=arr.dtype)
            out[:cap] = arr
            return out

        self.means = widen(self.means, (new_cap, self.dim))
        self.covs = widen(self.covs, (new_cap, self.dim, self.dim))
        self.parent = widen(self.parent, (new_cap,))
        self.cost = widen(self.cost, (new_cap,))
        self.alive = widen(self.alive, (new_cap,))

    def add_node(self, mean: np.ndarray, cov: np.ndarray, parent: int, cost: float) -> int:
        if not self.alive[parent]:
            raise ValidationError("parent node is not alive")
        if self.size == self.means.shape[0]:
            self._grow()
        idx = self.size
        self.means[idx] = mean
        self.covs[idx] = cov
        self.parent[idx] = parent
        self.cost[idx] = cost
        self.alive[idx] = True
        self.children.append([])
        self.children[parent].append(idx)
        self.size += 1
        return idx

    def reparent(self, idx: int, new_parent: int, new_cost: float):
        old = int(self.parent[idx])
        self.children[old].remove(idx)
        self.parent[idx] = new_parent
        self.children[new_parent].append(idx)
        self.cost[idx] = new_cost

    def kill_subtree(self, idx: int):
        """Tombstone a node and all of its descendants."""
        stack = [idx]
        while stack:
            i = stack.pop()
            if not self.alive[i]:
                continue
            self.alive[i] = False
            stack.extend(self.children[i])
        p = int(self.parent[idx])
        if p >= 0:
            self.children[p].remove(idx)
            self.parent[idx] = -1

    # -- queries -----------------------------------------------------

    @property
    def num_alive(self) -> int:
        return int(np.count_nonzero(self.alive[: self.size]))

    def alive_indices(self) -> np.ndarray:
        return np.flatnonzero(self.alive[: self.size])

    def belief(self, idx: int) -> Belief:
        if not (0 <= idx < self.size):
            raise ValidationError(f"node index {idx} out of range")
        return Belief(self.means[idx].copy(), self.covs[idx].copy())

    def root_index(self) -> int:
        return 0

    def path_to_root(self, idx: int) -> list[int]:
        """Node indices from ``idx`` up to (and including) the root."""
        out = [idx]
        seen = {idx}
        while True:
            p = int(self.parent[out[-1]])
            if p < 0:
                break
            if p in seen:
                raise ValidationError("parent links contain a cycle")
            seen.add(p)
            out.append(p)
        return out

    def descendants_breadth_first(self, idx: int) -> list[int]:
        out = []
        frontier = list(self.children[idx])
        while frontier:
            out.extend(frontier)
            nxt = []
            for i in frontier:
                nxt.extend(self.children[i])
            frontier = nxt
        return out
