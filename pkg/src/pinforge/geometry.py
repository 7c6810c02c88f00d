"""Keypad geometry: planar key layouts, pair distances, and the pointing
index of difficulty that drives the timing model.

Layouts are immutable after construction and safe to share; every function
here is pure.
"""

import hashlib
import math
from dataclasses import dataclass, field

ENTER = "ENTER"
DIGITS = tuple("0123456789")
KEY_IDS = DIGITS + (ENTER,)

# Uniform effective key width, in inches. The press area of each key is
# close to a circle of this diameter regardless of the physical key shape.
DEFAULT_KEY_WIDTH = 0.5


def validate_key(key):
    if key not in KEY_IDS:
        raise ValueError(f"unknown key {key!r} (expected one of '0'-'9' or 'ENTER')")
    return key


@dataclass(frozen=True)
class KeyGeometry:
    """One key: identity, center coordinates (inches) and effective width."""

    key: str
    center_x: float
    center_y: float
    effective_width: float = DEFAULT_KEY_WIDTH

    def __post_init__(self):
        validate_key(self.key)
        if not (math.isfinite(self.center_x) and math.isfinite(self.center_y)):
            raise ValueError(f"key {self.key!r}: center coordinates must be finite")
        if not (math.isfinite(self.effective_width) and self.effective_width > 0):
            raise ValueError(f"key {self.key!r}: non-positive width")


@dataclass(frozen=True)
class KeypadLayout:
    """A complete keypad: all ten digits plus ENTER, each placed once.

    Layouts with coincident key centers are rejected unless explicitly
    flagged degenerate.
    """

    name: str
    keys: tuple
    degenerate_ok: bool = field(default=False, compare=False)
    _by_key: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        seen = {}
        for kg in self.keys:
            if not isinstance(kg, KeyGeometry):
                raise TypeError("layout keys must be KeyGeometry instances")
            if kg.key in seen:
                raise ValueError(f"duplicate key {kg.key!r} in layout")
            seen[kg.key] = kg
        missing = [k for k in KEY_IDS if k not in seen]
        if missing:
            raise ValueError(f"incomplete layout: missing {', '.join(missing)}")
        if not self.degenerate_ok:
            centers = {}
            for kg in self.keys:
                c = (kg.center_x, kg.center_y)
                if c in centers:
                    raise ValueError(
                        f"degenerate layout: keys {centers[c]!r} and {kg.key!r} "
                        f"share center {c}"
                    )
                centers[c] = kg.key
        # Canonical key order makes construction-order-insensitive equality.
        object.__setattr__(self, "keys", tuple(seen[k] for k in KEY_IDS))
        object.__setattr__(self, "_by_key", seen)

    def geometry(self, key):
        try:
            return self._by_key[key]
        except KeyError:
            validate_key(key)
            raise ValueError(f"key {key!r} not present in layout {self.name!r}") from None

    def canonical_text(self):
        """Serialization with keys in fixed order; basis for the layout hash."""
        lines = [f"# name: {self.name}"]
        for k in KEY_IDS:
            g = self._by_key[k]
            lines.append(f"{k},{g.center_x!r},{g.center_y!r},{g.effective_width!r}")
        return "\n".join(lines) + "\n"

    def content_hash(self):
        """SHA-256 over the geometry (name excluded); 32 bytes."""
        body = "\n".join(line for line in self.canonical_text().splitlines()
                         if not line.startswith("#"))
        return hashlib.sha256(body.encode("utf-8")).digest()


def standard_numpad():
    """The canonical physical numpad: 0.75-inch pitch, wide '0' below the
    digit grid, tall ENTER on the right, all effective widths 0.5 inches."""
    coords = {
        "1": (0.0, 0.75), "2": (0.75, 0.75), "3": (1.5, 0.75),
        "4": (0.0, 1.5), "5": (0.75, 1.5), "6": (1.5, 1.5),
        "7": (0.0, 2.25), "8": (0.75, 2.25), "9": (1.5, 2.25),
        "0": (0.375, 0.0), ENTER: (2.25, 0.375),
    }
    keys = tuple(KeyGeometry(k, x, y, DEFAULT_KEY_WIDTH) for k, (x, y) in coords.items())
    return KeypadLayout(name="standard", keys=keys)


def circular_layout(radius=1.0, enter_at_center=True):
    """Digits evenly spaced on a circle (digit k at angle 2*pi*k/10, starting
    at 12 o'clock and going clockwise); ENTER at the origin so that every
    digit-to-ENTER distance equals the radius.

    With enter_at_center=False the ENTER key is placed outside the ring at
    (2*radius, 0), which serves as a control layout where digit-to-ENTER
    distances differ.
    """
    if not (math.isfinite(radius) and radius > 0):
        raise ValueError("non-positive radius")
    keys = []
    for d in range(10):
        theta = 2.0 * math.pi * d / 10.0
        keys.append(KeyGeometry(str(d), radius * math.sin(theta),
                                radius * math.cos(theta), DEFAULT_KEY_WIDTH))
    if enter_at_center:
        keys.append(KeyGeometry(ENTER, 0.0, 0.0, DEFAULT_KEY_WIDTH))
        name = "circular"
    else:
        keys.append(KeyGeometry(ENTER, 2.0 * radius, 0.0, DEFAULT_KEY_WIDTH))
        name = "circular-offset"
    return KeypadLayout(name=name, keys=tuple(keys))


def builtin_layout(name):
    """Resolve a canonical layout name ("standard", "circular",
    "circular-offset"); returns None for unknown names."""
    if name == "standard":
        return standard_numpad()
    if name == "circular":
        return circular_layout(1.0, enter_at_center=True)
    if name == "circular-offset":
        return circular_layout(1.0, enter_at_center=False)
    return None


def key_distance(layout, key_from, key_to):
    """Euclidean distance between two key centers, in inches."""
    a = layout.geometry(key_from)
    b = layout.geometry(key_to)
    return math.hypot(b.center_x - a.center_x, b.center_y - a.center_y)


def index_of_difficulty(layout, key_from, key_to):
    """log2(D/W + 1) with W the target key's effective width; exactly 0 for a
    repeated key."""
    if key_from == key_to:
        layout.geometry(validate_key(key_from))
        return 0.0
    d = key_distance(layout, key_from, key_to)
    w = layout.geometry(key_to).effective_width
    return math.log2(d / w + 1.0)


def save_layout(layout):
    """Render a layout in the line-oriented file format
    (`key,center_x_in,center_y_in,width_in`, one record per key)."""
    return layout.canonical_text()


def load_layout(text, name=None):
    """Parse the layout file format. Requires exactly one record per key;
    comment lines start with '#'. A `# name:` comment, when present, names
    the layout unless `name` overrides it."""
    parsed_name = name
    records = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if parsed_name is None and body.startswith("name:"):
                parsed_name = body[len("name:"):].strip()
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ValueError(f"malformed layout line {lineno}: {raw!r}")
        key, xs, ys, ws = (p.strip() for p in parts)
        validate_key(key)
        try:
            x, y, w = float(xs), float(ys), float(ws)
        except ValueError:
            raise ValueError(f"malformed layout line {lineno}: {raw!r}") from None
        if w <= 0 or not math.isfinite(w):
            raise ValueError(f"non-positive width for key {key!r} (line {lineno})")
        records.append(KeyGeometry(key, x, y, w))
    if len(records) != len(KEY_IDS):
        found = {r.key for r in records}
        missing = [k for k in KEY_IDS if k not in found]
        if missing:
            raise ValueError(f"incomplete layout: missing {', '.join(missing)}")
        raise ValueError("duplicate key records in layout file")
    return KeypadLayout(name=parsed_name or "custom", keys=tuple(records))
