"""Architecture description for gated residual networks."""

from dataclasses import dataclass, field

from ..errors import ConfigurationError

GATE_KINDS = ("ffgate1", "ffgate2", "rnngate")


@dataclass
class SkipNetConfig:
    """Stacked residual groups with one gate per block.

    The standard layout is 3 groups of ``n`` blocks (depth 6n+2 with stem and
    classifier); 1- or 2-group configs are allowed for small oracle networks.
    """

    n: int
    group_widths: tuple = (16, 32, 64)
    gate_kind: str | None = "rnngate"
    num_classes: int = 10
    input_geometry: tuple = (3, 32, 32)
    gate_hidden: int = 10

    def __post_init__(self):
        self.group_widths = tuple(int(w) for w in self.group_widths)
        self.input_geometry = tuple(int(v) for v in self.input_geometry)
        if self.n < 1:
            raise ConfigurationError(f"blocks per group must be >= 1, got {self.n}")
        if not 1 <= len(self.group_widths) <= 3:
            raise ConfigurationError(
                f"expected 1-3 groups, got {len(self.group_widths)}"
            )
        for a, b in zip(self.group_widths, self.group_widths[1:]):
            if b != 2 * a:
                raise ConfigurationError(
                    f"group widths must double group to group, got {self.group_widths}"
                )
        if self.gate_kind is not None and self.gate_kind not in GATE_KINDS:
            raise ConfigurationError(
                f"gate_kind must be one of {GATE_KINDS} or None, got {self.gate_kind!r}"
            )
        if self.num_classes < 2:
            raise ConfigurationError("num_classes must be >= 2")
        if len(self.input_geometry) != 3 or min(self.input_geometry) < 1:
            raise ConfigurationError(
                f"input_geometry must be (channels, height, width), got {self.input_geometry}"
            )
        if self.gate_hidden < 1:
            raise ConfigurationError("gate_hidden must be >= 1")
        self._validate_geometry()

    @property
    def blocks_per_group(self):
        return self.n

    @property
    def num_gates(self):
        return len(self.group_widths) * self.n

    @property
    def depth(self):
        # stem + two weighted layers per block + classifier
        return 2 * self.num_gates + 2

    def _validate_geometry(self):
        _, h, w = self.input_geometry
        for gi in range(len(self.group_widths)):
            for bi in range(self.n):
                stride = 2 if (gi > 0 and bi == 0) else 1
                if stride == 2 and (h % 2 or w % 2):
                    raise ConfigurationError(
                        f"group {gi} needs even spatial dims to downsample, got {h}x{w}"
                    )
                if self.gate_kind == "ffgate1":
                    if h < 4 or w < 4 or h % 2 or w % 2:
                        raise ConfigurationError(
                            f"ffgate1 needs even spatial dims >= 4 at every gate, "
                            f"got {h}x{w} in group {gi}"
                        )
                elif self.gate_kind == "ffgate2" and (h < 2 or w < 2):
                    raise ConfigurationError(
                        f"ffgate2 needs spatial dims >= 2, got {h}x{w} in group {gi}"
                    )
                h, w = h // stride, w // stride
        if h < 1 or w < 1:
            raise ConfigurationError("input geometry collapses before the classifier")

    def block_layout(self):
        """Yield (index, group, in_channels, out_channels, stride) per gated block."""
        out = []
        c = self.group_widths[0]
        for gi, width in enumerate(self.group_widths):
            for bi in range(self.n):
                stride = 2 if (gi > 0 and bi == 0) else 1
                out.append((len(out), gi, c, width, stride))
                c = width
        return out

    def to_dict(self):
        return {
            "n": self.n,
            "group_widths": list(self.group_widths),
            "gate_kind": self.gate_kind,
            "num_classes": self.num_classes,
            "input_geometry": list(self.input_geometry),
            "gate_hidden": self.gate_hidden,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            n=d["n"],
            group_widths=tuple(d["group_widths"]),
            gate_kind=d["gate_kind"],
            num_classes=d["num_classes"],
            input_geometry=tuple(d["input_geometry"]),
            gate_hidden=d.get("gate_hidden", 10),
        )
