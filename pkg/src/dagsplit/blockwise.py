"""Block-wise splitting: intra-block cut test and block-level abstraction.

A block whose cheapest internal input/output cut moves at least as much smashed
data as its input layer alone is never cut internally by an optimal split, so
it can be collapsed to one vertex before solving.
"""
from __future__ import annotations

import logging
import weakref
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Iterable

from .delay import NetParams, Partition
from .errors import BlockError
from .graph import (
    SINK,
    SOURCE,
    Arc,
    SplitDag,
    Vertex,
    build_split_dag,
    multi_child_parents,
    restructure,
)
from .maxflow import INF, FlowNetwork
from .profile import BlockAnnotation, ModelProfile
from .splitter import SplitDecision, _verified, optimal_split, solve_dag

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BlockView:
    block_id: str
    members: tuple[str, ...]
    input_layer_id: str
    output_layer_id: str
    edges: tuple[tuple[str, str], ...]
    """data edges inside {input} + members"""
    sizes: dict[str, int]
    """smashed-data bytes of the input layer and every member"""

    @property
    def a_in_bytes(self) -> int:
        return self.sizes[self.input_layer_id]

    @property
    def vertices(self) -> tuple[str, ...]:
        return (self.input_layer_id,) + self.members


def block_view(p: ModelProfile, b: BlockAnnotation) -> BlockView:
    members = set(b.members)
    outside = {u for m in members for u in p.parents[m] if u not in members}
    if outside != {b.input_layer_id}:
        raise BlockError(f"block {b.block_id!r}: external predecessors {sorted(outside)}")
    try:
        out = p.block_output(b)
    except Exception as exc:
        raise BlockError(f"block {b.block_id!r}: multiple outputs (unsupported block shape)") from exc
    inside = members | {b.input_layer_id}
    edges = tuple((u, v) for u, v in p.data_edges if u in inside and v in members)
    sizes = {lid: p.by_id[lid].output_bytes for lid in inside}
    return BlockView(b.block_id, tuple(b.members), b.input_layer_id, out, edges, sizes)


def _block_network(b: BlockView, w: Callable[[int], int]) -> FlowNetwork:
    kids: dict[str, list[str]] = {v: [] for v in b.vertices}
    for u, v in b.edges:
        kids[u].append(v)

    def send(v: str):
        return ("out", v) if len(kids[v]) >= 2 else ("in", v)

    net = FlowNetwork(("in", b.input_layer_id), ("in", b.output_layer_id))
    for v in b.vertices:
        if len(kids[v]) >= 2:
            net.add_arc(("in", v), send(v), w(b.sizes[v]))
    for u, v in b.edges:
        net.add_arc(send(u), ("in", v), w(b.sizes[u]))
        net.add_arc(("in", v), ("in", u), INF)
    return net


def block_min_cut(b: BlockView, weight: Callable[[int], int] | None = None) -> int:
    """Minimum input->output cut of the block graph.

    Multi-child vertices are split so their data is paid once, and INF
    child->parent arcs restrict the cut to data-flow-ordered device sets.
    ``weight`` maps a size in bytes to the unit being cut (bytes by default).
    """
    return _block_network(b, weight or (lambda x: x)).max_flow()


def block_min_cut_members(b: BlockView) -> tuple[int, frozenset[str]]:
    """Byte value of the block min cut and the members on its input side."""
    cut = _block_network(b, lambda x: x).min_cut()
    members = frozenset(v for kind, v in cut.source_side if kind == "in") - {b.input_layer_id}
    return cut.value, members


def intra_block_test(b: BlockView, net: NetParams | None = None) -> bool:
    """True when abstraction is safe: cheapest internal cut >= input-layer cut.

    Compared in bytes by default. With ``net`` both sides are priced in the
    rounded microseconds the delay model uses, which removes rounding slack.
    """
    if net is None:
        return block_min_cut(b) >= b.a_in_bytes
    w = net.round_trip_us
    return block_min_cut(b, w) >= w(b.a_in_bytes)


def _abstract_all(g: SplitDag, blocks: list[BlockAnnotation]) -> SplitDag:
    """Collapse every block in one sweep over the arcs."""
    group: dict[Vertex, Vertex] = {}
    provenance = dict(g.provenance)
    for block in blocks:
        members = frozenset(block.members)
        vb = Vertex("block", block.block_id)
        for v, prov in g.provenance.items():
            if prov and prov <= members:
                group[v] = vb
                provenance.pop(v, None)
        provenance[vb] = members
    server_w: dict[Vertex, int] = {}
    device_w: dict[Vertex, int] = {}
    incoming: dict[tuple[Vertex, Vertex], set[int]] = {}
    summed: dict[tuple[Vertex, Vertex], int] = {}
    kept: list[Arc] = []
    for a in g.arcs:
        gt, gh = group.get(a.tail), group.get(a.head)
        if gt is None and gh is None:
            kept.append(a)
        elif gt is not None and gt == gh:
            continue
        elif a.tail == SOURCE:
            server_w[gh] = server_w.get(gh, 0) + a.capacity
        elif a.head == SINK:
            device_w[gt] = device_w.get(gt, 0) + a.capacity
        elif gh is not None:
            # a parent's arcs into one block all carry its smashed data: merge
            incoming.setdefault((a.tail, gh), set()).add(a.capacity)
        else:
            summed[(gt, a.head)] = summed.get((gt, a.head), 0) + a.capacity
    for (tail, gh), caps in incoming.items():
        if len(caps) != 1:
            raise BlockError(f"block {gh.name!r}: parent {tail.name!r} enters with weights {sorted(caps)}")
        key = (group.get(tail, tail), gh)
        summed[key] = summed.get(key, 0) + caps.pop()
    vertices: list[Vertex] = []
    seen: set[Vertex] = set()
    for v in g.vertices:
        v = group.get(v, v)
        if v not in seen:
            seen.add(v)
            vertices.append(v)
    arcs = kept
    for v in vertices:
        if v in server_w or v in device_w:
            arcs.append(Arc(SOURCE, v, server_w.get(v, 0), "server"))
            arcs.append(Arc(v, SINK, device_w.get(v, 0), "device"))
    arcs.extend(Arc(t, h, c, "prop") for (t, h), c in summed.items())
    placement = {lid: group.get(v, v) for lid, v in g.placement.items()}
    inner = frozenset(group)
    return SplitDag(tuple(vertices), tuple(arcs), placement, provenance, g.data_edges, g.broadcast - inner)


def abstract_blocks(
    g: SplitDag,
    p: ModelProfile,
    blocks: Iterable[BlockAnnotation] | None = None,
    *,
    check: bool = True,
) -> SplitDag:
    """Collapse each block to a single vertex.

    Execution arcs are summed, a parent's arcs into the block merge into one arc
    of the same weight, and arcs out to each child are summed.
    """
    blocks = list(p.blocks if blocks is None else blocks)
    for b in blocks:
        if check and not intra_block_test(block_view(p, b)):
            raise BlockError(f"block {b.block_id!r} failed the intra-block test")
    return _abstract_all(g, blocks) if blocks else g


def _chain_order(g: SplitDag) -> list[Vertex] | None:
    succ: dict[Vertex, list[Vertex]] = {}
    indeg: dict[Vertex, int] = {}
    for a in g.arcs:
        if a.kind == "prop":
            succ.setdefault(a.tail, []).append(a.head)
            indeg[a.head] = indeg.get(a.head, 0) + 1
    nodes = [v for v in g.vertices if v not in (SOURCE, SINK)]
    roots = [v for v in nodes if indeg.get(v, 0) == 0]
    if len(roots) != 1 or any(len(s) > 1 for s in succ.values()) or any(d > 1 for d in indeg.values()):
        return None
    order = [roots[0]]
    while order[-1] in succ:
        order.append(succ[order[-1]][0])
    return order if len(order) == len(nodes) else None


def _chain_scan(g: SplitDag, order: list[Vertex]) -> tuple[int, int]:
    """Best prefix length and its cut value on a chain-shaped DAG."""
    dev = {v: 0 for v in order}
    srv = {v: 0 for v in order}
    prop = {}
    for a in g.arcs:
        if a.head == SINK:
            dev[a.tail] += a.capacity
        elif a.tail == SOURCE:
            srv[a.head] = INF if a.capacity == INF else srv[a.head] + a.capacity
        elif a.kind == "prop":
            prop[a.tail] = a.capacity
    best = None
    dev_sum = 0
    srv_sum = sum(srv.values())
    for k in range(len(order) + 1):
        if srv_sum < INF:
            value = dev_sum + srv_sum + (prop.get(order[k - 1], 0) if 0 < k < len(order) else 0)
            if best is None or value < best[1]:
                best = (k, value)
        if k < len(order):
            v = order[k]
            dev_sum += dev[v]
            srv_sum -= srv[v]
    return best


def blockwise_split(
    p: ModelProfile,
    n: NetParams,
    *,
    strict_alg3: bool = False,
    precedence: bool = True,
) -> SplitDecision:
    """Abstract every block that passes the intra-block test, then solve.

    Blocks are tested one by one and only passing ones are collapsed; with
    ``strict_alg3`` a single failure disables abstraction for the whole model.
    """
    if not p.blocks:
        return replace(optimal_split(p, n, precedence=precedence), method="blockwise")
    passing = _passing_blocks(p, n)
    if strict_alg3 and len(passing) != len(p.blocks):
        passing = []
    if not passing:
        return replace(optimal_split(p, n, precedence=precedence), method="blockwise")
    g = abstract_blocks(build_split_dag(p, n), p, passing, check=False)
    log.debug("abstracted %d/%d blocks: %d vertices, %d arcs",
              len(passing), len(p.blocks), g.num_vertices, g.num_arcs)
    order = None if multi_child_parents(g) else _chain_order(g)
    if order is not None:
        k, value = _chain_scan(g, order)
        device = {lid for lid, v in g.placement.items() if v in order[:k]}
        return _verified(p, n, g, Partition.from_device(p, device), value, "blockwise")
    return solve_dag(restructure(g), p, n, "blockwise", precedence=precedence)


# Byte-valued block cuts depend only on the profile, so they are computed
# once per profile: block_id -> (a_min bytes, a_in bytes, vertex count, skip)
# or None when the block can never be abstracted.
_OFFLINE: "weakref.WeakKeyDictionary[ModelProfile, dict]" = weakref.WeakKeyDictionary()


def _offline(p: ModelProfile) -> dict:
    table = _OFFLINE.get(p)
    if table is None:
        table = {}
        for b in p.blocks:
            view = block_view(p, b)
            a_min = block_min_cut(view)
            # the test is only sound when no member runs faster on the device
            ok = a_min >= view.a_in_bytes and all(p.by_id[m].device_not_faster() for m in b.members)
            # With an input->output arc every cut already pays the input layer,
            # so the test holds under any nonnegative pricing of sizes.
            skip = (view.input_layer_id, view.output_layer_id) in view.edges
            table[b.block_id] = (a_min, view.a_in_bytes, len(view.vertices), skip) if ok else None
        _OFFLINE[p] = table
    return table


def _passing_blocks(p: ModelProfile, n: NetParams) -> list[BlockAnnotation]:
    table = _offline(p)
    per_byte = Fraction(10**6) / Fraction(n.rate_up_Bps) + Fraction(10**6) / Fraction(n.rate_down_Bps)
    out = []
    for b in p.blocks:
        entry = table[b.block_id]
        if entry is None:
            continue
        a_min, a_in, nv, skip = entry
        # Each rounded transfer term is within 1/2 us of its exact value, so a
        # byte margin worth at least nv + 1 us settles the microsecond test too.
        if skip or (a_min - a_in) * per_byte >= nv + 1 or intra_block_test(block_view(p, b), n):
            out.append(b)
    return out


def abstraction_stats(p: ModelProfile, n: NetParams) -> dict:
    """Vertex/arc counts and |V|^2|E| before and after abstraction."""
    full = restructure(build_split_dag(p, n))
    passing = _passing_blocks(p, n)
    small = restructure(abstract_blocks(build_split_dag(p, n), p, passing, check=False))
    return {
        "blocks": len(p.blocks),
        "abstracted": len(passing),
        "full": {"vertices": full.num_vertices, "arcs": full.num_arcs, "work": full.work_metric()},
        "blockwise": {"vertices": small.num_vertices, "arcs": small.num_arcs, "work": small.work_metric()},
    }
