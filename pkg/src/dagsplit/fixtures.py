"""Built-in model-shaped profiles.

Large fixtures derive per-layer numbers from a layer spec (channels, kernel,
spatial size) with a simple FLOP model; they are shaped like the named
networks, not measured on hardware.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .profile import INPUT_ID, BlockAnnotation, LayerProfile, ModelProfile

MB = 10**6
S = 10**6  # microseconds per second


def chain3() -> ModelProfile:
    """input(4 MB) -> v1 -> v2; the optimum keeps v1 on the device at 1 MB/s."""
    return ModelProfile(
        "chain3",
        4 * MB,
        (
            LayerProfile("v1", 1 * S, 1 * S, 0, 1 * MB),
            LayerProfile("v2", 5 * S, 1 * S, 0, 1 * MB),
        ),
        (("v1", "v2"),),
    )


def chain(n: int = 18) -> ModelProfile:
    layers = tuple(
        LayerProfile(f"l{i}", 4000 + 300 * i, 400 + 30 * i, 1000 * (i % 5), 200_000 - 9000 * i)
        for i in range(1, n + 1)
    )
    edges = tuple((f"l{i}", f"l{i + 1}") for i in range(1, n))
    return ModelProfile(f"chain{n}", 600_000, layers, edges)


def diamond() -> ModelProfile:
    layers = tuple(LayerProfile(f"v{i}", 3000, 1000, 5000, 100_000) for i in range(1, 5))
    edges = (("v1", "v2"), ("v1", "v3"), ("v2", "v4"), ("v3", "v4"))
    return ModelProfile("diamond", 400_000, layers, edges)


def fig3() -> ModelProfile:
    """A parent with three children that merge again."""
    layers = (
        LayerProfile("v1", 2000, 500, 1000, 300_000),
        LayerProfile("v2", 30_000, 1000, 2000, 120_000),
        LayerProfile("v3", 30_000, 1000, 2000, 120_000),
        LayerProfile("v4", 30_000, 1000, 2000, 120_000),
        LayerProfile("v5", 20_000, 500, 1000, 40_000),
    )
    edges = (("v1", "v2"), ("v1", "v3"), ("v1", "v4"), ("v2", "v5"), ("v3", "v5"), ("v4", "v5"))
    return ModelProfile("fig3", 600_000, layers, edges)


def fig7() -> ModelProfile:
    """v1 followed by a four-layer block {v2..v5}; build without input cost to
    get the 8-vertex / 17-arc restructured graph."""
    layers = (
        LayerProfile("v1", 2000, 500, 1000, 200_000),
        LayerProfile("v2", 3000, 600, 2000, 250_000),
        LayerProfile("v3", 3000, 600, 2000, 100_000),
        LayerProfile("v4", 3000, 600, 2000, 100_000),
        LayerProfile("v5", 1000, 300, 1000, 250_000),
    )
    edges = (
        ("v1", "v2"), ("v2", "v3"), ("v2", "v4"), ("v2", "v5"), ("v3", "v5"), ("v4", "v5"),
    )
    blocks = (BlockAnnotation("B1", ("v2", "v3", "v4", "v5"), "v1", "fig7"),)
    return ModelProfile("fig7", 600_000, layers, edges, blocks)


# -- spec-driven CNN builder ------------------------------------------------

DEVICE_FLOP_PER_US = 1.0e6  # ~1 TFLOP/s reference edge device
SERVER_FLOP_PER_US = 2.0e7  # ~20 TFLOP/s server GPU
DEVICE_OVERHEAD_US = 150
SERVER_OVERHEAD_US = 40
BYTES = 4


@dataclass
class _Builder:
    name: str
    batch: int
    hw: int
    ch: int
    layers: list
    edges: list
    blocks: list
    shape: dict

    @classmethod
    def start(cls, name: str, batch: int = 16, hw: int = 32, ch: int = 3) -> "_Builder":
        return cls(name, batch, hw, ch, [], [], [], {INPUT_ID: (ch, hw)})

    def act_bytes(self, ch: int, hw: int) -> int:
        return ch * hw * hw * BYTES * self.batch

    def add(self, lid: str, parents: list[str], cout: int, k: int = 3, stride: int = 1,
            cin: int | None = None, params: bool = True) -> str:
        cin_, hw_in = self.shape[parents[0]]
        cin = cin if cin is not None else cin_
        hw = max(1, hw_in // stride)
        macs = cin * cout * k * k * hw * hw if params else cout * hw * hw * k * k
        flops = 3 * 2 * macs * self.batch  # forward + backward
        self.layers.append(
            LayerProfile(
                lid,
                int(flops / DEVICE_FLOP_PER_US) + DEVICE_OVERHEAD_US,
                int(flops / SERVER_FLOP_PER_US) + SERVER_OVERHEAD_US,
                (cin * cout * k * k + cout) * BYTES if params else 0,
                self.act_bytes(cout, hw),
            )
        )
        self.edges.extend((p, lid) for p in parents if p != INPUT_ID or len(parents) > 1)
        self.shape[lid] = (cout, hw)
        return lid

    def block(self, bid: str, template: str, vin: str, members: list[str]) -> None:
        self.blocks.append(BlockAnnotation(bid, tuple(members), vin, template))

    def build(self) -> ModelProfile:
        ch, hw = self.shape[INPUT_ID]
        return ModelProfile(self.name, self.act_bytes(ch, hw), tuple(self.layers),
                            tuple(self.edges), tuple(self.blocks))


def _inception(b: _Builder, bid: str, vin: str, c1: int, c3r: int, c3: int,
               c5r: int, c5: int, cp: int) -> str:
    cin, _ = b.shape[vin]
    m = [
        b.add(f"{bid}.1x1", [vin], c1, k=1),
        b.add(f"{bid}.3x3r", [vin], c3r, k=1),
    ]
    m.append(b.add(f"{bid}.3x3", [m[1]], c3, k=3))
    m.append(b.add(f"{bid}.5x5r", [vin], c5r, k=1))
    m.append(b.add(f"{bid}.5x5", [m[3]], c5, k=5))
    m.append(b.add(f"{bid}.pool", [vin], cin, k=3, params=False))
    m.append(b.add(f"{bid}.poolproj", [m[5]], cp, k=1))
    out = b.add(f"{bid}.concat", [m[0], m[2], m[4], m[6]], c1 + c3 + c5 + cp, k=1, params=False)
    b.shape[out] = (c1 + c3 + c5 + cp, b.shape[vin][1])
    b.block(bid, "inception", vin, m + [out])
    return out


def googlenet(batch: int = 16, hw: int = 224) -> ModelProfile:
    """Stem, nine inception blocks in three stages, classifier."""
    b = _Builder.start("googlenet", batch, hw)
    x = b.add("conv1", [INPUT_ID], 64, k=7, stride=2)
    x = b.add("pool1", [x], 64, k=3, stride=2, params=False)
    x = b.add("conv2", [x], 64, k=1)
    x = b.add("conv3", [x], 192, k=3)
    x = b.add("pool2", [x], 192, k=3, stride=2, params=False)
    # reduce widths are raised above the reference network so that every
    # block's narrowest internal cut carries strictly more than its input
    cfg = {
        "3a": (64, 96, 128, 16, 32, 32), "3b": (128, 128, 192, 32, 96, 64),
        "4a": (192, 208, 208, 48, 48, 64), "4b": (160, 224, 224, 64, 64, 96),
        "4c": (128, 256, 256, 64, 64, 128), "4d": (112, 288, 288, 64, 64, 128),
        "4e": (256, 320, 320, 128, 128, 128),
        "5a": (256, 320, 320, 128, 128, 160), "5b": (384, 384, 384, 128, 128, 128),
    }
    for name, c in cfg.items():
        if name in ("4a", "5a"):
            x = b.add(f"pool{name[0]}", [x], b.shape[x][0], k=3, stride=2, params=False)
        x = _inception(b, f"inc{name}", x, *c)
    x = b.add("avgpool", [x], b.shape[x][0], k=1, stride=b.shape[x][1], params=False)
    b.add("fc", [x], 100, k=1)
    return b.build()


def _resnet(name: str, stages: list[int], bottleneck: bool, batch: int) -> ModelProfile:
    b = _Builder.start(name, batch)
    x = b.add("conv1", [INPUT_ID], 64, k=3)
    width = 64
    expansion = 4 if bottleneck else 1
    bi = 0
    for si, depth in enumerate(stages):
        for j in range(depth):
            bi += 1
            stride = 2 if (j == 0 and si > 0) else 1
            cin, _ = b.shape[x]
            cout = width * expansion
            pre = f"s{si + 1}b{j + 1}"
            members = []
            if bottleneck:
                members.append(b.add(f"{pre}.c1", [x], width, k=1))
                members.append(b.add(f"{pre}.c2", [members[-1]], width, k=3, stride=stride))
                last = members[-1]
            else:
                members.append(b.add(f"{pre}.c1", [x], width, k=3, stride=stride))
                last = members[-1]
            skip = x
            if stride != 1 or cin != cout:
                skip = b.add(f"{pre}.ds", [x], cout, k=1, stride=stride)
                members.append(skip)
            out = b.add(f"{pre}.c{3 if bottleneck else 2}", [last, skip], cout,
                        k=1 if bottleneck else 3, cin=width)
            members.append(out)
            b.block(f"rb{bi}", "bottleneck" if bottleneck else "basic", x, members)
            x = out
        width *= 2
    x = b.add("avgpool", [x], b.shape[x][0], k=1, stride=b.shape[x][1], params=False)
    b.add("fc", [x], 100, k=1)
    return b.build()


def resnet18(batch: int = 16) -> ModelProfile:
    return _resnet("resnet18", [2, 2, 2, 2], False, batch)


def resnet50(batch: int = 16) -> ModelProfile:
    return _resnet("resnet50", [3, 4, 6, 3], True, batch)


def densenet121(batch: int = 16, growth: int = 32) -> ModelProfile:
    """121 weighted layers: stem, 58 two-layer dense blocks, 3 transitions, fc.

    Each dense block is ``vin -> 1x1 -> 3x3`` plus ``vin -> 3x3``; the 3x3
    output carries the concatenation of its input and ``growth`` new channels.
    """
    b = _Builder.start("densenet121", batch)
    x = b.add("conv1", [INPUT_ID], 2 * growth, k=3)
    bi = 0
    for si, depth in enumerate((6, 12, 24, 16)):
        for j in range(depth):
            bi += 1
            cin, _ = b.shape[x]
            pre = f"d{si + 1}l{j + 1}"
            c1 = b.add(f"{pre}.1x1", [x], 4 * growth, k=1)
            c3 = b.add(f"{pre}.3x3", [c1, x], growth, k=3)
            hw = b.shape[c3][1]
            b.shape[c3] = (cin + growth, hw)
            last = b.layers[-1]
            b.layers[-1] = LayerProfile(last.id, last.xi_device_us, last.xi_server_us,
                                        last.param_bytes, b.act_bytes(cin + growth, hw))
            b.block(f"db{bi}", "dense", x, [c1, c3])
            x = c3
        if si < 3:
            x = b.add(f"trans{si + 1}", [x], b.shape[x][0] // 2, k=1, stride=2)
    x = b.add("fc", [x], 100, k=1, cin=b.shape[x][0])
    return b.build()


# -- single-block networks ------------------------------------------------


def residual_net(batch: int = 16) -> ModelProfile:
    b = _Builder.start("residual-net", batch)
    x = b.add("conv1", [INPUT_ID], 64, k=3)
    m1 = b.add("res.c1", [x], 64, k=3)
    m2 = b.add("res.c2", [m1, x], 64, k=3)
    b.block("res", "residual", x, [m1, m2])
    b.add("fc", [m2], 100, k=1)
    return b.build()


def inception_net(batch: int = 16) -> ModelProfile:
    b = _Builder.start("inception-net", batch)
    x = b.add("conv1", [INPUT_ID], 192, k=3)
    out = _inception(b, "inc", x, 64, 96, 128, 16, 32, 32)
    b.add("fc", [out], 100, k=1)
    return b.build()


def dense_net(batch: int = 16, growth: int = 32, depth: int = 4) -> ModelProfile:
    """One dense block: every member feeds all later members."""
    b = _Builder.start("dense-net", batch)
    x = b.add("conv1", [INPUT_ID], 2 * growth, k=3)
    members: list[str] = []
    for i in range(depth):
        members.append(b.add(f"dense.l{i + 1}", [x] + members, growth, k=3))
    out = b.add("dense.concat", members + [x], 2 * growth + depth * growth, k=1, params=False)
    b.block("dense", "dense", x, members + [out])
    b.add("fc", [out], 100, k=1)
    return b.build()


FIXTURES: dict[str, Callable[[], ModelProfile]] = {
    "chain3": chain3,
    "chain18": lambda: chain(18),
    "diamond": diamond,
    "fig3": fig3,
    "fig7": fig7,
    "residual-net": residual_net,
    "inception-net": inception_net,
    "dense-net": dense_net,
    "googlenet": googlenet,
    "resnet18": resnet18,
    "resnet50": resnet50,
    "densenet121": densenet121,
}


def get_fixture(name: str) -> ModelProfile:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None
