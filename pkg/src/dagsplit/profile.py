"""Profiled model representation: layers, data-flow edges and block annotations.

A profile is read from a JSON document::

    {
      "model_name": "chain3",
      "input": {"output_bytes": 4000000},
      "layers": [{"id": "v1", "xi_device_us": 1000000, "xi_server_us": 1000000,
                  "param_bytes": 0, "output_bytes": 1000000}, ...],
      "edges": [["v1", "v2"], ...],
      "blocks": [{"block_id": "b1", "template_id": "res", "input_layer_id": "v1",
                  "members": ["v2", "v3"]}]
    }

Layers without a parent in ``edges`` are fed by the raw-data pseudo-layer
``"input"``, which may also be named explicitly as a parent.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

from .errors import ProfileError

INPUT_ID = "input"

_LAYER_INT_FIELDS = ("xi_device_us", "xi_server_us", "param_bytes", "output_bytes")


@dataclass(frozen=True)
class LayerProfile:
    id: str
    xi_device_us: int
    xi_server_us: int
    param_bytes: int
    output_bytes: int

    def device_not_faster(self) -> bool:
        return self.xi_device_us >= self.xi_server_us


@dataclass(frozen=True)
class BlockAnnotation:
    """A reused multi-layer component.

    ``input_layer_id`` is the block's single external predecessor: the layer whose
    output enters the block. It is not itself a member.
    """

    block_id: str
    members: tuple[str, ...]
    input_layer_id: str
    template_id: str = ""


@dataclass(frozen=True)
class Diagnostic:
    subject: str
    rule: str
    message: str

    def __str__(self) -> str:
        return f"{self.subject}: [{self.rule}] {self.message}"


@dataclass(frozen=True)
class ModelProfile:
    model_name: str
    input_bytes: int
    layers: tuple[LayerProfile, ...]
    edges: tuple[tuple[str, str], ...] = ()
    blocks: tuple[BlockAnnotation, ...] = field(default=())

    def __post_init__(self) -> None:
        _check_structure(self)

    # -- lookup ----------------------------------------------------------

    @cached_property
    def input(self) -> LayerProfile:
        return LayerProfile(INPUT_ID, 0, 0, 0, self.input_bytes)

    @cached_property
    def by_id(self) -> dict[str, LayerProfile]:
        table = {INPUT_ID: self.input}
        table.update((layer.id, layer) for layer in self.layers)
        return table

    def layer(self, layer_id: str) -> LayerProfile:
        return self.by_id[layer_id]

    @cached_property
    def layer_ids(self) -> tuple[str, ...]:
        """All ids including the input pseudo-layer, input first."""
        return (INPUT_ID,) + tuple(layer.id for layer in self.layers)

    @cached_property
    def data_edges(self) -> tuple[tuple[str, str], ...]:
        """Explicit edges plus implicit ``input -> root`` edges."""
        has_parent = {child for _, child in self.edges}
        implicit = tuple(
            (INPUT_ID, layer.id) for layer in self.layers if layer.id not in has_parent
        )
        return implicit + tuple(self.edges)

    @cached_property
    def children(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {lid: [] for lid in self.layer_ids}
        for u, v in self.data_edges:
            out[u].append(v)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def parents(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {lid: [] for lid in self.layer_ids}
        for u, v in self.data_edges:
            out[v].append(u)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def topological_order(self) -> tuple[str, ...]:
        order = _toposort(self.layer_ids, self.data_edges)
        assert order is not None  # checked at construction
        return order

    @cached_property
    def block_by_id(self) -> dict[str, BlockAnnotation]:
        return {b.block_id: b for b in self.blocks}

    def is_chain(self) -> bool:
        """True when the layers form a single path fed by the input."""
        return all(len(self.children[lid]) <= 1 for lid in self.layer_ids) and all(
            len(self.parents[layer.id]) == 1 for layer in self.layers
        )

    def block_output(self, block: BlockAnnotation) -> str:
        """The unique member without in-block children."""
        members = set(block.members)
        sinks = [m for m in block.members if not any(c in members for c in self.children[m])]
        if len(sinks) != 1:
            raise ProfileError(f"block {block.block_id!r} has {len(sinks)} outputs")
        return sinks[0]

    def replace(self, **changes) -> "ModelProfile":
        data = {
            "model_name": self.model_name,
            "input_bytes": self.input_bytes,
            "layers": self.layers,
            "edges": self.edges,
            "blocks": self.blocks,
        }
        data.update(changes)
        return ModelProfile(**data)


def _toposort(nodes: Iterable[str], edges: Iterable[tuple[str, str]]) -> tuple[str, ...] | None:
    nodes = list(nodes)
    indeg = {n: 0 for n in nodes}
    succ: dict[str, list[str]] = {n: [] for n in nodes}
    for u, v in edges:
        succ[u].append(v)
        indeg[v] += 1
    rank = {n: i for i, n in enumerate(nodes)}
    ready = deque(n for n in nodes if indeg[n] == 0)
    order = []
    while ready:
        n = ready.popleft()
        order.append(n)
        for m in sorted(succ[n], key=rank.__getitem__):
            indeg[m] -= 1
            if indeg[m] == 0:
                ready.append(m)
    if len(order) != len(nodes):
        return None
    return tuple(order)


def _check_structure(p: ModelProfile) -> None:
    """Hard errors: duplicates, unknown references, cycles."""
    seen = {INPUT_ID}
    for layer in p.layers:
        if layer.id in seen:
            raise ProfileError(f"duplicate layer id {layer.id!r}")
        seen.add(layer.id)
    edge_set = set()
    for u, v in p.edges:
        for x in (u, v):
            if x not in seen:
                raise ProfileError(f"edge ({u!r}, {v!r}) references unknown layer {x!r}")
        if v == INPUT_ID:
            raise ProfileError(f"edge ({u!r}, {v!r}) targets the input pseudo-layer")
        if u == v:
            raise ProfileError(f"cycle detected: self-loop on {u!r}")
        if (u, v) in edge_set:
            raise ProfileError(f"duplicate edge ({u!r}, {v!r})")
        edge_set.add((u, v))
    if _toposort(p.layer_ids, p.data_edges) is None:
        raise ProfileError("cycle detected in layer edges")
    block_ids = set()
    for b in p.blocks:
        if b.block_id in block_ids:
            raise ProfileError(f"duplicate block id {b.block_id!r}")
        block_ids.add(b.block_id)
        if not b.members:
            raise ProfileError(f"block {b.block_id!r} has no members")
        for m in (*b.members, b.input_layer_id):
            if m not in seen:
                raise ProfileError(f"block {b.block_id!r} references unknown layer {m!r}")


def validate_profile(p: ModelProfile) -> list[Diagnostic]:
    """Check value ranges, device-not-faster compute and block shape rules.

    Returns an empty list when the profile is fully valid.
    """
    diags: list[Diagnostic] = []
    if p.input_bytes < 0:
        diags.append(Diagnostic(INPUT_ID, "non-negative", "output_bytes < 0"))
    for layer in p.layers:
        for name in _LAYER_INT_FIELDS:
            if getattr(layer, name) < 0:
                diags.append(Diagnostic(layer.id, "non-negative", f"{name} < 0"))
        if not layer.device_not_faster():
            diags.append(
                Diagnostic(
                    layer.id,
                    "device-not-faster",
                    f"xi_device_us={layer.xi_device_us} < xi_server_us={layer.xi_server_us}",
                )
            )
    owner: dict[str, str] = {}
    layer_ids = set(p.layer_ids)
    for b in p.blocks:
        if b.block_id in layer_ids:
            diags.append(Diagnostic(b.block_id, "block-id", "block id collides with a layer id"))
        for m in b.members:
            if m == INPUT_ID:
                diags.append(Diagnostic(b.block_id, "block-member", "input cannot be a member"))
            elif m in owner:
                diags.append(
                    Diagnostic(b.block_id, "block-overlap", f"layer {m!r} also in block {owner[m]!r}")
                )
            else:
                owner[m] = b.block_id
        diags.extend(_block_shape_diagnostics(p, b))
    return diags


def _block_shape_diagnostics(p: ModelProfile, b: BlockAnnotation) -> list[Diagnostic]:
    diags = []
    members = set(b.members)
    if b.input_layer_id in members:
        diags.append(Diagnostic(b.block_id, "block-input", "input_layer_id must not be a member"))
        return diags
    external_parents = {u for m in members for u in p.parents[m] if u not in members}
    if external_parents != {b.input_layer_id}:
        diags.append(
            Diagnostic(
                b.block_id,
                "block-input",
                f"external predecessors {sorted(external_parents)} != [{b.input_layer_id!r}]",
            )
        )
    # weak connectivity of the induced subgraph
    adj: dict[str, set[str]] = {m: set() for m in members}
    for u, v in p.data_edges:
        if u in members and v in members:
            adj[u].add(v)
            adj[v].add(u)
    start = b.members[0]
    seen = {start}
    stack = [start]
    while stack:
        for n in adj[stack.pop()]:
            if n not in seen:
                seen.add(n)
                stack.append(n)
    if seen != members:
        diags.append(Diagnostic(b.block_id, "block-connected", "members are not weakly connected"))
    sinks = [m for m in b.members if not any(c in members for c in p.children[m])]
    if len(sinks) != 1:
        diags.append(Diagnostic(b.block_id, "block-output", f"{len(sinks)} in-block sinks, need 1"))
    else:
        leaking = [m for m in b.members if m != sinks[0] and any(c not in members for c in p.children[m])]
        if leaking:
            diags.append(
                Diagnostic(b.block_id, "block-output", f"non-output members feed outside: {leaking}")
            )
    return diags


# -- document I/O ---------------------------------------------------------


def _int_field(obj: dict, key: str, where: str) -> int:
    if key not in obj:
        raise ProfileError(f"{where}: missing field {key!r}")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ProfileError(f"{where}: field {key!r} must be an integer, got {value!r}")
    return value


def profile_from_dict(doc: dict) -> ModelProfile:
    if not isinstance(doc, dict):
        raise ProfileError("profile document must be an object")
    try:
        name = str(doc.get("model_name", ""))
        input_bytes = _int_field(doc.get("input") or {}, "output_bytes", "input")
        layers = []
        for i, raw in enumerate(doc.get("layers", [])):
            where = f"layers[{i}]"
            if not isinstance(raw, dict) or "id" not in raw:
                raise ProfileError(f"{where}: expected an object with an 'id'")
            layers.append(
                LayerProfile(str(raw["id"]), *(_int_field(raw, f, where) for f in _LAYER_INT_FIELDS))
            )
        edges = []
        for i, e in enumerate(doc.get("edges", [])):
            if not isinstance(e, (list, tuple)) or len(e) != 2:
                raise ProfileError(f"edges[{i}]: expected [parent, child]")
            edges.append((str(e[0]), str(e[1])))
        blocks = []
        for i, raw in enumerate(doc.get("blocks", [])):
            if not isinstance(raw, dict):
                raise ProfileError(f"blocks[{i}]: expected an object")
            for key in ("block_id", "input_layer_id", "members"):
                if key not in raw:
                    raise ProfileError(f"blocks[{i}]: missing field {key!r}")
            blocks.append(
                BlockAnnotation(
                    block_id=str(raw["block_id"]),
                    members=tuple(str(m) for m in raw["members"]),
                    input_layer_id=str(raw["input_layer_id"]),
                    template_id=str(raw.get("template_id", "")),
                )
            )
    except (TypeError, AttributeError) as exc:
        raise ProfileError(f"malformed profile document: {exc}") from exc
    return ModelProfile(name, input_bytes, tuple(layers), tuple(edges), tuple(blocks))


def parse_model_profile(text: str) -> ModelProfile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProfileError(f"malformed profile document: {exc}") from exc
    return profile_from_dict(doc)


def profile_to_dict(p: ModelProfile) -> dict:
    return {
        "model_name": p.model_name,
        "input": {"output_bytes": p.input_bytes},
        "layers": [
            {"id": layer.id, **{f: getattr(layer, f) for f in _LAYER_INT_FIELDS}}
            for layer in p.layers
        ],
        "edges": [list(e) for e in p.edges],
        "blocks": [
            {
                "block_id": b.block_id,
                "template_id": b.template_id,
                "input_layer_id": b.input_layer_id,
                "members": list(b.members),
            }
            for b in p.blocks
        ],
    }


def serialize_profile(p: ModelProfile, indent: int | None = 1) -> str:
    return json.dumps(profile_to_dict(p), indent=indent)


def load_profile(path) -> ModelProfile:
    with open(path, encoding="utf-8") as fh:
        return parse_model_profile(fh.read())
