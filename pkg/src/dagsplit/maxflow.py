"""Exact integer max-flow / min-cut (Dinic)."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Hashable

from .errors import FlowError

INF = 2**62


@dataclass(frozen=True)
class MinCut:
    source_side: frozenset
    cut_arcs: tuple[tuple[Hashable, Hashable, int], ...]
    value: int


class FlowNetwork:
    """Directed network with paired forward/residual arcs.

    Arc ``2*i`` is the i-th added arc, ``2*i + 1`` its residual twin. A network is
    single-use: ``max_flow`` consumes residual capacity.
    """

    def __init__(self, source: Hashable, sink: Hashable) -> None:
        if source == sink:
            raise ValueError("source and sink must differ")
        self._index: dict[Hashable, int] = {}
        self._keys: list[Hashable] = []
        self._head: list[int] = []
        self._to: list[int] = []
        self._next: list[int] = []
        self._cap: list[int] = []
        self._orig: list[int] = []
        self.source = source
        self.sink = sink
        self._s = self._vertex(source)
        self._t = self._vertex(sink)
        self._flow: int | None = None

    def _vertex(self, key: Hashable) -> int:
        idx = self._index.get(key)
        if idx is None:
            idx = len(self._keys)
            self._index[key] = idx
            self._keys.append(key)
            self._head.append(-1)
        return idx

    def add_vertex(self, key: Hashable) -> None:
        self._vertex(key)

    def add_arc(self, u: Hashable, v: Hashable, capacity: int) -> None:
        if capacity < 0:
            raise ValueError(f"negative capacity on ({u!r}, {v!r})")
        if self._flow is not None:
            raise FlowError("network already solved")
        a, b = self._vertex(u), self._vertex(v)
        for tail, head, cap in ((a, b, capacity), (b, a, 0)):
            self._to.append(head)
            self._cap.append(cap)
            self._next.append(self._head[tail])
            self._head[tail] = len(self._to) - 1
        self._orig.append(capacity)

    @property
    def num_vertices(self) -> int:
        return len(self._keys)

    @property
    def num_arcs(self) -> int:
        return len(self._orig)

    def _levels(self) -> list[int] | None:
        level = [-1] * len(self._keys)
        level[self._s] = 0
        queue = deque([self._s])
        to, cap, nxt = self._to, self._cap, self._next
        while queue:
            v = queue.popleft()
            e = self._head[v]
            while e != -1:
                w = to[e]
                if cap[e] > 0 and level[w] < 0:
                    level[w] = level[v] + 1
                    queue.append(w)
                e = nxt[e]
        return level if level[self._t] >= 0 else None

    def _blocking_flow(self, level: list[int]) -> int:
        to, cap, nxt = self._to, self._cap, self._next
        it = list(self._head)
        s, t = self._s, self._t
        total = 0
        while True:
            path: list[int] = []
            v = s
            while v != t:
                e = it[v]
                while e != -1 and not (cap[e] > 0 and level[to[e]] == level[v] + 1):
                    e = nxt[e]
                it[v] = e
                if e == -1:
                    if v == s:
                        return total
                    level[v] = -1
                    back = path.pop()
                    v = to[back ^ 1]
                    it[v] = nxt[it[v]]
                    continue
                path.append(e)
                v = to[e]
            pushed = min(cap[e] for e in path)
            for e in path:
                cap[e] -= pushed
                cap[e ^ 1] += pushed
            total += pushed

    def max_flow(self) -> int:
        if self._flow is not None:
            return self._flow
        flow = 0
        while True:
            level = self._levels()
            if level is None:
                break
            flow += self._blocking_flow(level)
            if flow >= INF:
                raise FlowError("max flow reached the INF sentinel; network is not pinnable")
        self._flow = flow
        return flow

    def min_cut(self) -> MinCut:
        """Source side = vertices reachable from the source in the residual graph."""
        value = self.max_flow()
        seen = [False] * len(self._keys)
        seen[self._s] = True
        queue = deque([self._s])
        while queue:
            v = queue.popleft()
            e = self._head[v]
            while e != -1:
                w = self._to[e]
                if self._cap[e] > 0 and not seen[w]:
                    seen[w] = True
                    queue.append(w)
                e = self._next[e]
        cut = []
        for i, cap in enumerate(self._orig):
            tail, head = self._to[2 * i + 1], self._to[2 * i]
            if cap > 0 and seen[tail] and not seen[head]:
                cut.append((self._keys[tail], self._keys[head], cap))
        total = sum(c for _, _, c in cut)
        if total != value:
            raise FlowError(f"cut value {total} != flow value {value}")
        side = frozenset(k for k, flag in zip(self._keys, seen) if flag)
        return MinCut(side, tuple(cut), value)


def max_flow(net: FlowNetwork) -> int:
    return net.max_flow()


def min_cut(net: FlowNetwork) -> MinCut:
    return net.min_cut()
