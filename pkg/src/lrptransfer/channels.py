"""Channel-set registry and channel selection.

Custom sets grow concentrically around C1 over the left hemisphere (right-arm
movement planning lateralizes to the left motor cortex); standard sets are
nested subsets of the extended 10-20 layout. Both families are defaults and
can be overridden from a plain-text config, one set per line:

    custom-4 = C1,C3,FC1,CP1
"""

from dataclasses import dataclass, replace

from . import layout
from .errors import ChannelMissingError, RegistryError

CUSTOM_SIZES = (32, 21, 16, 8, 4)
STANDARD_SIZES = (32, 21, 16)


@dataclass(frozen=True)
class ChannelSet:
    """Named, ordered electrode subset."""

    name: str
    channels: tuple
    kind: str  # "custom" | "standard"

    def __post_init__(self):
        if not self.channels:
            raise ValueError(f"channel set {self.name!r} is empty")
        if len(set(self.channels)) != len(self.channels):
            raise ValueError(f"channel set {self.name!r} has duplicate channels")
        unknown = [c for c in self.channels if c not in layout.POSITIONS]
        if unknown:
            raise ValueError(
                f"channel set {self.name!r} names channels outside the "
                f"64-channel cap: {unknown}"
            )
        if self.kind not in ("custom", "standard"):
            raise ValueError(f"channel set kind must be custom/standard, got {self.kind!r}")

    def __len__(self):
        return len(self.channels)


def _ranked_left_neighborhood():
    """All cap channels ordered by closeness to C1.

    Strictly left-hemisphere (odd-numbered) channels rank before midline
    ones so small sets stay fully lateralized; right-hemisphere channels are
    excluded. Ties break toward the central row, then alphabetically.
    """
    candidates = [c for c in layout.CAP_64 if layout.hemisphere(c) != "right"]

    def key(name):
        x, y = layout.POSITIONS[name]
        return (
            layout.hemisphere(name) == "midline",
            layout.distance(name, "C1"),
            abs(y),
            name,
        )

    return sorted(candidates, key=key)


_STANDARD_16 = (
    "Fp1", "Fp2", "F7", "F3", "F4", "F8",
    "T7", "C3", "C4", "T8",
    "P7", "P3", "P4", "P8", "O1", "O2",
)
_STANDARD_21 = _STANDARD_16 + ("Fz", "Cz", "Pz", "Oz", "CPz")
_STANDARD_32 = _STANDARD_21 + (
    "AF3", "AF4", "FC5", "FC1", "FC2", "FC6",
    "CP5", "CP1", "CP2", "CP6", "POz",
)


def _builtin_sets():
    ranked = _ranked_left_neighborhood()
    sets = {}
    for n in CUSTOM_SIZES:
        sets[f"custom-{n}"] = ChannelSet(f"custom-{n}", tuple(ranked[:n]), "custom")
    for n, members in ((16, _STANDARD_16), (21, _STANDARD_21), (32, _STANDARD_32)):
        sets[f"standard-{n}"] = ChannelSet(f"standard-{n}", members, "standard")
    return sets


_REGISTRY = _builtin_sets()


def available_sets():
    """Names of all registered channel sets."""
    return sorted(_REGISTRY)


def make_channel_set(name):
    """Resolve a registered channel set by name."""
    try:
        return _REGISTRY[name]
    except KeyError:
        raise RegistryError(
            f"unknown channel set {name!r}; available: " + ", ".join(available_sets())
        ) from None


def register_channel_set(cset):
    """Add or override a named set (used by config loading)."""
    _REGISTRY[cset.name] = cset


def load_channel_config(path):
    """Register definitions from a plain-text file, one per line.

    `name = ch1,ch2,...` defines a channel set; `condition:X = train,test`
    defines a study condition. Returns the registered names. Lines
    starting with '#' and blank lines are skipped.
    """
    from .types import StudyCondition, register_condition

    registered = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected `name = values`")
            name, _, rhs = line.partition("=")
            name = name.strip()
            members = tuple(c.strip() for c in rhs.split(",") if c.strip())
            if name.startswith("condition:"):
                cid = name.split(":", 1)[1].strip()
                if len(members) != 2:
                    raise ValueError(
                        f"{path}:{lineno}: condition needs `train,test`"
                    )
                register_condition(StudyCondition(cid, members[0], members[1]))
            else:
                kind = "standard" if name.startswith("standard") else "custom"
                register_channel_set(ChannelSet(name, members, kind))
            registered.append(name)
    return registered


def select_channels(rec, cset):
    """Project a recording onto a channel set, rows reordered to set order."""
    missing = [c for c in cset.channels if c not in rec.channel_names]
    if missing:
        raise ChannelMissingError(
            f"recording lacks channels required by {cset.name!r}: "
            + ", ".join(missing)
        )
    index = [rec.channel_names.index(c) for c in cset.channels]
    return replace(rec, data=rec.data[index], channel_names=tuple(cset.channels))
