"""Weighted split-DAG: a flow network whose s-t cuts price device/server partitions.

Source ``D`` is the device and sink ``S`` the server. A vertex on the source
side of a cut runs on the device. Arc classes:

``device``  v -> S   paid when v runs on the device
``server``  D -> v   paid when v runs on the server
``prop``    u -> v   round-trip smashed data/gradient transfer of u
``aux``     p' -> p  once-only transfer of a multi-child parent
``pin``     D -> input (INF) and input -> S (0)

Precedence (child -> parent, INF) constraints are not arcs of the DAG; they are
added when converting to a :class:`~dagsplit.maxflow.FlowNetwork`.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple

from .delay import CONSISTENT, NetParams
from .errors import CapacityOverflowError, GraphError
from .maxflow import INF, FlowNetwork
from .profile import INPUT_ID, ModelProfile


class Vertex(NamedTuple):
    kind: str  # source | sink | layer | aux | block
    name: str

    def label(self) -> str:
        return self.name


SOURCE = Vertex("source", "D")
SINK = Vertex("sink", "S")

EXEC_KINDS = ("device", "server")


@dataclass(frozen=True)
class Arc:
    tail: Vertex
    head: Vertex
    capacity: int
    kind: str


@dataclass(frozen=True)
class SplitDag:
    vertices: tuple[Vertex, ...]
    arcs: tuple[Arc, ...]
    placement: dict[str, Vertex]
    """layer id -> vertex whose execution arcs decide the layer's side"""
    provenance: dict[Vertex, frozenset[str]]
    """non-terminal vertex -> layer ids it stands for"""
    data_edges: tuple[tuple[str, str], ...]
    broadcast: frozenset[Vertex] = field(default=frozenset())
    """parents already split by :func:`restructure`"""

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_arcs(self) -> int:
        return len(self.arcs)

    def work_metric(self) -> int:
        """|V|^2 |E|, the Dinic bound."""
        return self.num_vertices**2 * self.num_arcs

    def out_arcs(self, v: Vertex) -> list[Arc]:
        return [a for a in self.arcs if a.tail == v]

    def arc(self, tail: Vertex, head: Vertex) -> Arc:
        for a in self.arcs:
            if a.tail == tail and a.head == head:
                return a
        raise KeyError((tail, head))

    def precedence_pairs(self) -> list[tuple[Vertex, Vertex]]:
        """(child placement, parent placement) for every data edge between vertices."""
        pairs = []
        seen = set()
        for u, v in self.data_edges:
            pu, pv = self.placement.get(u), self.placement.get(v)
            if pu is None or pv is None or pu == pv:
                continue
            if (pv, pu) not in seen:
                seen.add((pv, pu))
                pairs.append((pv, pu))
        return pairs


def layer_vertex(layer_id: str) -> Vertex:
    return Vertex("layer", layer_id)


def _check_capacities(arcs: Iterable[Arc]) -> None:
    total = 0
    for a in arcs:
        if a.capacity == INF:
            continue
        if a.capacity < 0:
            raise GraphError(f"negative capacity on {a}")
        total += a.capacity
    if total >= INF:
        raise CapacityOverflowError(f"finite capacities sum to {total} >= INF sentinel")


def execution_weights(p: ModelProfile, n: NetParams, layer_id: str) -> tuple[int, int]:
    """(device-execution weight, server-execution weight) of one layer."""
    layer = p.by_id[layer_id]
    N = n.local_iters
    if n.weight_mode == CONSISTENT:
        return (
            N * layer.xi_device_us + n.up_us(layer.param_bytes) + n.down_us(layer.param_bytes),
            N * layer.xi_server_us,
        )
    return (
        N * layer.xi_device_us + n.up_us(layer.param_bytes),
        N * layer.xi_server_us + n.down_us(layer.param_bytes),
    )


def propagation_weight(p: ModelProfile, n: NetParams, layer_id: str) -> int:
    return n.local_iters * n.round_trip_us(p.by_id[layer_id].output_bytes)


def build_split_dag(p: ModelProfile, n: NetParams) -> SplitDag:
    """Weighted DAG with execution arcs to/from the terminals and propagation arcs.

    With ``n.input_cost`` the input pseudo-layer is a vertex pinned to the device;
    otherwise it is left out, as are its outgoing transfers.
    """
    vertices = [SOURCE, SINK]
    arcs: list[Arc] = []
    placement: dict[str, Vertex] = {}
    provenance: dict[Vertex, frozenset[str]] = {}
    if n.input_cost:
        vin = layer_vertex(INPUT_ID)
        vertices.append(vin)
        placement[INPUT_ID] = vin
        provenance[vin] = frozenset({INPUT_ID})
        arcs.append(Arc(SOURCE, vin, INF, "pin"))
        arcs.append(Arc(vin, SINK, 0, "pin"))
    for layer in p.layers:
        v = layer_vertex(layer.id)
        vertices.append(v)
        placement[layer.id] = v
        provenance[v] = frozenset({layer.id})
        dev, srv = execution_weights(p, n, layer.id)
        arcs.append(Arc(SOURCE, v, srv, "server"))
        arcs.append(Arc(v, SINK, dev, "device"))
    for u, v in p.data_edges:
        if u == INPUT_ID and not n.input_cost:
            continue
        arcs.append(Arc(layer_vertex(u), layer_vertex(v), propagation_weight(p, n, u), "prop"))
    _check_capacities(arcs)
    return SplitDag(tuple(vertices), tuple(arcs), placement, provenance, tuple(p.data_edges))


def multi_child_parents(g: SplitDag) -> list[Vertex]:
    """Vertices with two or more outgoing propagation arcs, in vertex order."""
    count: dict[Vertex, int] = defaultdict(int)
    for a in g.arcs:
        if a.kind == "prop":
            count[a.tail] += 1
    return [v for v in g.vertices if count[v] >= 2 and v not in g.broadcast]


def aux_vertex(v: Vertex) -> Vertex:
    return Vertex("aux", v.name + "'")


def restructure(g: SplitDag) -> SplitDag:
    """Insert an auxiliary vertex for every multi-child parent.

    The auxiliary vertex takes over the parent's incoming arcs and its arc to the
    sink; a new arc aux -> parent carries the parent's propagation weight once.
    """
    parents = multi_child_parents(g)
    if not parents:
        return g
    arcs = list(g.arcs)
    vertices = list(g.vertices)
    placement = dict(g.placement)
    provenance = dict(g.provenance)
    for vp in parents:
        weights = {a.capacity for a in arcs if a.tail == vp and a.kind == "prop"}
        if len(weights) != 1:
            raise GraphError(
                f"parent {vp.name!r} has heterogeneous propagation weights {sorted(weights)}"
            )
        aux = aux_vertex(vp)
        if aux in provenance:
            raise GraphError(f"auxiliary vertex {aux.name!r} already exists")
        vertices.insert(vertices.index(vp), aux)
        new_arcs = []
        for a in arcs:
            if a.head == vp:
                new_arcs.append(replace(a, head=aux))
            elif a.tail == vp and a.head == SINK:
                new_arcs.append(replace(a, tail=aux))
            else:
                new_arcs.append(a)
        new_arcs.append(Arc(aux, vp, weights.pop(), "aux"))
        arcs = new_arcs
        for lid, pv in placement.items():
            if pv == vp:
                placement[lid] = aux
        provenance[aux] = provenance[vp]
    return SplitDag(
        tuple(vertices),
        tuple(arcs),
        placement,
        provenance,
        g.data_edges,
        g.broadcast | frozenset(parents),
    )


def source_set_for(g: SplitDag, device_layers: Iterable[str]) -> frozenset[Vertex]:
    """Cheapest source side of ``g`` realising a layer partition.

    Placement vertices follow their layers; a broadcast vertex sits on the
    device side only when every one of its out-neighbours does.
    """
    device_layers = set(device_layers)
    side = {SOURCE}
    for lid, v in g.placement.items():
        if lid in device_layers:
            side.add(v)
    for b in g.broadcast:
        heads = [a.head for a in g.arcs if a.tail == b]
        if all(h in side for h in heads) and any(
            a.head == b and a.tail in side for a in g.arcs
        ):
            side.add(b)
    return frozenset(side)


def cut_value(g: SplitDag, source_side: Iterable[Vertex]) -> int:
    side = set(source_side)
    return sum(a.capacity for a in g.arcs if a.tail in side and a.head not in side)


def partition_cut_value(g: SplitDag, device_layers: Iterable[str]) -> int:
    return cut_value(g, source_set_for(g, device_layers))


def to_flow_network(g: SplitDag, precedence: bool = True) -> FlowNetwork:
    net = FlowNetwork(SOURCE, SINK)
    for v in g.vertices:
        net.add_vertex(v)
    for a in g.arcs:
        net.add_arc(a.tail, a.head, a.capacity)
    if precedence:
        for child, parent in g.precedence_pairs():
            net.add_arc(child, parent, INF)
    return net


def sum_dags(dags: list[SplitDag]) -> SplitDag:
    """Arc-wise capacity sum of structurally identical DAGs."""
    first = dags[0]
    caps = [0] * len(first.arcs)
    for g in dags:
        if len(g.arcs) != len(first.arcs):
            raise GraphError("DAGs differ in structure")
        for i, (a, b) in enumerate(zip(g.arcs, first.arcs)):
            if (a.tail, a.head, a.kind) != (b.tail, b.head, b.kind):
                raise GraphError("DAGs differ in structure")
            caps[i] = INF if (a.capacity == INF or caps[i] == INF) else caps[i] + a.capacity
    arcs = tuple(replace(a, capacity=c) for a, c in zip(first.arcs, caps))
    _check_capacities(arcs)
    return replace(first, arcs=arcs)


def to_dot(g: SplitDag) -> str:
    """Graphviz text; vertex labels show provenance, arc labels capacities."""

    def vid(v: Vertex) -> str:
        return '"' + f"{v.kind}:{v.name}".replace('"', r"\"") + '"'

    lines = ["digraph splitdag {", "  rankdir=LR;"]
    shapes = {"source": "doublecircle", "sink": "doublecircle", "aux": "diamond", "block": "box"}
    for v in g.vertices:
        members = g.provenance.get(v)
        label = v.label()
        if members and (v.kind != "layer" or members != {v.name}):
            label += "\\n{" + ",".join(sorted(members)) + "}"
        shape = shapes.get(v.kind, "ellipse")
        lines.append(f'  {vid(v)} [label="{label}", shape={shape}];')
    colors = {"device": "blue", "server": "orange", "prop": "black", "aux": "gray", "pin": "red"}
    for a in g.arcs:
        cap = "INF" if a.capacity == INF else str(a.capacity)
        lines.append(f'  {vid(a.tail)} -> {vid(a.head)} [label="{cap}", color={colors[a.kind]}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
