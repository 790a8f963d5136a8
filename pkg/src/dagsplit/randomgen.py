"""Seeded random instances for equivalence checks."""
from __future__ import annotations

import random

from .delay import NetParams
from .profile import INPUT_ID, BlockAnnotation, LayerProfile, ModelProfile

# All divide 10**9, so sizes that are multiples of 1000 bytes convert to whole
# microseconds without rounding.
EXACT_RATES = (1e6, 2e6, 4e6, 5e6, 8e6, 1e7, 2e7, 2.5e7, 5e7)


def _layer(rng: random.Random, lid: str, slow_device: bool) -> LayerProfile:
    xi_s = rng.randint(0, 2000)
    if slow_device:
        xi_d = xi_s + rng.choice((0, rng.randint(0, 6000)))
    else:
        xi_d = rng.randint(0, 6000)
    k = rng.choice((0, rng.randint(0, 400))) * 1000
    a = rng.randint(1, 500) * 1000
    return LayerProfile(lid, xi_d, xi_s, k, a)


def random_net(rng: random.Random, exact: bool = False, **kw) -> NetParams:
    if exact:
        up, down = rng.choice(EXACT_RATES), rng.choice(EXACT_RATES)
    else:
        up, down = rng.uniform(1e5, 5e7), rng.uniform(1e5, 5e7)
    return NetParams(up, down, local_iters=rng.randint(1, 5), **kw)


def random_dag_profile(
    rng: random.Random,
    n_layers: int,
    *,
    extra_parent_prob: float = 0.35,
    slow_device: bool = True,
    nonlinear: bool = True,
    tree: bool = False,
) -> ModelProfile:
    """Random DAG of ``n_layers`` layers hanging off the input.

    ``tree`` keeps every layer to one parent; ``nonlinear`` retries until some
    vertex (possibly the input) has several children.
    """
    for _ in range(1000):
        ids = [f"v{i}" for i in range(1, n_layers + 1)]
        layers = tuple(_layer(rng, lid, slow_device) for lid in ids)
        edges = []
        for i, lid in enumerate(ids):
            pool = [INPUT_ID] + ids[:i]
            first = pool[max(0, len(pool) - 1 - int(rng.expovariate(0.7)))]
            parents = {first}
            if not tree and len(pool) > 1 and rng.random() < extra_parent_prob:
                parents.add(rng.choice(pool))
            edges.extend((u, lid) for u in sorted(parents, key=pool.index))
        p = ModelProfile("random", rng.randint(1, 500) * 1000, layers, tuple(edges))
        if not nonlinear or n_layers < 2 or not p.is_chain():
            return p
    raise RuntimeError("could not draw a nonlinear profile")


# -- block-structured instances -------------------------------------------

BLOCK_SHAPES = ("residual", "inception", "dense", "chain")


def _block_edges(shape: str, vin: str, m: list[str]) -> list[tuple[str, str]]:
    if shape == "residual":  # vin -> m0 -> m1 -> m2, vin -> m2
        return [(vin, m[0]), (m[0], m[1]), (m[1], m[2]), (vin, m[2])]
    if shape == "inception":  # vin -> {m0, m1 -> m2, m3} -> m4
        return [(vin, m[0]), (vin, m[1]), (m[1], m[2]), (vin, m[3]),
                (m[0], m[4]), (m[2], m[4]), (m[3], m[4])]
    if shape == "dense":  # every member feeds all later members; vin feeds all
        edges = [(vin, x) for x in m]
        edges += [(m[i], m[j]) for i in range(len(m)) for j in range(i + 1, len(m))]
        return edges
    if shape == "chain":
        return [(vin, m[0])] + [(m[i], m[i + 1]) for i in range(len(m) - 1)]
    raise ValueError(shape)


BLOCK_SIZES = {"residual": 3, "inception": 5, "dense": 3, "chain": 3}


def random_block_profile(
    rng: random.Random,
    max_layers: int = 12,
    *,
    shapes=BLOCK_SHAPES,
    failing_ok: bool = True,
) -> ModelProfile:
    """Stem layers followed by a sequence of annotated blocks, each fed by the
    previous block's output. Sizes are multiples of 1000 bytes."""
    layers: list[LayerProfile] = []
    edges: list[tuple[str, str]] = []
    blocks: list[BlockAnnotation] = []
    counter = 0

    def new_layer(small: bool = False) -> str:
        nonlocal counter
        counter += 1
        lid = f"v{counter}"
        layer = _layer(rng, lid, True)
        if small:
            layer = LayerProfile(lid, layer.xi_device_us, layer.xi_server_us,
                                 layer.param_bytes, rng.randint(1, 20) * 1000)
        layers.append(layer)
        return lid

    prev = INPUT_ID
    for _ in range(rng.randint(0, 2)):
        lid = new_layer()
        edges.append((prev, lid))
        prev = lid
    bi = 0
    while True:
        shape = rng.choice(shapes)
        size = BLOCK_SIZES[shape]
        if counter + size > max_layers:
            break
        members = [new_layer(small=(shape == "chain" and failing_ok and i == 1)) for i in range(size)]
        edges.extend(_block_edges(shape, prev, members))
        bi += 1
        blocks.append(BlockAnnotation(f"b{bi}", tuple(members), prev, shape))
        prev = members[-1]
        if counter < max_layers and rng.random() < 0.3:
            lid = new_layer()
            edges.append((prev, lid))
            prev = lid
    if counter < max_layers and rng.random() < 0.5:
        lid = new_layer()
        edges.append((prev, lid))
    return ModelProfile("random-blocks", rng.randint(1, 500) * 1000, tuple(layers), tuple(edges), tuple(blocks))
