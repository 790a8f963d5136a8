import itertools

from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")


def brute_min_cut(vertices, arcs, s, t):
    """Minimum directed crossing capacity over every s/t bipartition."""
    others = [v for v in vertices if v not in (s, t)]
    best = None
    for r in range(len(others) + 1):
        for extra in itertools.combinations(others, r):
            side = {s, *extra}
            value = sum(c for u, v, c in arcs if u in side and v not in side)
            if best is None or value < best:
                best = value
    return best


def block_cut_oracle(view):
    """Cheapest input->output cut of a block by enumerating every device set
    W (containing the input, not the output, closed under parents); each
    vertex with a child outside W pays its size once."""
    verts = [v for v in view.vertices if v not in (view.input_layer_id, view.output_layer_id)]
    parents = {v: [u for u, w in view.edges if w == v] for v in view.vertices}
    kids = {v: [w for u, w in view.edges if u == v] for v in view.vertices}
    best = None
    for r in range(len(verts) + 1):
        for extra in itertools.combinations(verts, r):
            w = {view.input_layer_id, *extra}
            if any(u not in w for x in extra for u in parents[x]):
                continue
            value = sum(view.sizes[u] for u in w if any(k not in w for k in kids[u]))
            if best is None or value < best:
                best = value
    return best


def block_delta_closed_form(p, block, n, members_on_device, a_min, a_in):
    """Closed-form delay difference between the block's min cut and the cut
    just after its input layer (exact when no rounding occurs)."""
    from fractions import Fraction

    us = 10**6
    rd, rs = Fraction(n.rate_up_Bps), Fraction(n.rate_down_Bps)
    N = n.local_iters
    k = sum(p.by_id[m].param_bytes for m in members_on_device)
    xi = sum(p.by_id[m].xi_device_us - p.by_id[m].xi_server_us for m in members_on_device)
    delta = N * Fraction(a_min - a_in) * us / rd + N * Fraction(a_min - a_in) * us / rs
    delta += Fraction(k) * us / rd + Fraction(k) * us / rs + N * xi
    return delta
