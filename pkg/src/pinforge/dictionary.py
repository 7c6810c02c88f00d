"""Timing dictionaries: the predicted inter-keystroke sequence of every PIN
in a full or digit-constrained PIN space, with text and binary persistence.

Entries are generated on the fly from (model, layout); persistence exists to
freeze experiment inputs and for interop. Values are 64-bit floats; the text
format prints 4 decimal places.
"""

import hashlib
import io
import math
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import DIGITS, ENTER, KEY_IDS, builtin_layout
from .model import ExtendedModel, index_of_difficulty

BINARY_MAGIC = b"PFDICT01"
TEXT_TAG = "pinforge-dict v1"

_ENTER_INDEX = 10
MAX_PIN_LENGTH = 10


def parse_pin(pin):
    """Validate a PIN string (digits only, length 1..10); returns it."""
    if not isinstance(pin, str) or not pin:
        raise ValueError(f"invalid PIN {pin!r}")
    if not 1 <= len(pin) <= MAX_PIN_LENGTH:
        raise ValueError(f"PIN length {len(pin)} outside 1..{MAX_PIN_LENGTH}")
    if not all(c in DIGITS for c in pin):
        raise ValueError(f"invalid PIN {pin!r}: digits '0'-'9' only")
    return pin


def format_pin(index, pin_length):
    """Zero-padded canonical text of the PIN with the given numeric value."""
    if not 0 <= index < 10 ** pin_length:
        raise ValueError(f"PIN index {index} outside the length-{pin_length} space")
    return f"{index:0{pin_length}d}"


def pin_pair_keys(pin):
    """Key sequence of a standard entry: the digits followed by ENTER."""
    parse_pin(pin)
    return list(pin) + [ENTER]


def interleaved_pair_keys(pin, include_final_double_press=True):
    """Key sequence of a countermeasure entry: starting from ENTER, each
    digit is followed by an ENTER press; submitting ends on a double ENTER."""
    parse_pin(pin)
    keys = [ENTER]
    for d in pin:
        keys.extend((d, ENTER))
    if include_final_double_press:
        keys.append(ENTER)
    return keys


def pair_time_table(model, layout):
    """(11, 11) ms table of base predictions a + b*I for every ordered key
    pair, indexed digit value 0-9 then ENTER."""
    table = np.empty((11, 11))
    for i, ki in enumerate(KEY_IDS):
        for j, kj in enumerate(KEY_IDS):
            table[i, j] = model.a + model.b * index_of_difficulty(layout, ki, kj)
    return table


def _position_offsets(model, n_pairs):
    offs = np.zeros(n_pairs)
    if isinstance(model, ExtendedModel):
        for j in range(n_pairs):
            offs[j] = model.position_offset(j + 1, n_pairs)
    return offs


def predicted_sequence(model, layout, pin, pattern="standard",
                       include_final_double_press=True):
    """Model-predicted interval vector for one PIN entry.

    pattern "standard" yields the usual l intervals ending on the
    digit-to-ENTER pair; "interleaved" yields the countermeasure entry's
    2l+1 (or 2l without the final double press) intervals.
    """
    if pattern == "standard":
        keys = pin_pair_keys(pin)
    elif pattern == "interleaved":
        keys = interleaved_pair_keys(pin, include_final_double_press)
    else:
        raise ValueError(f"unknown entry pattern {pattern!r}")
    table = pair_time_table(model, layout)
    idx = [_key_index(k) for k in keys]
    n_pairs = len(keys) - 1
    seq = np.array([table[idx[j], idx[j + 1]] for j in range(n_pairs)])
    return seq + _position_offsets(model, n_pairs)


def _key_index(key):
    return _ENTER_INDEX if key == ENTER else int(key)


def validate_sequence(values, pin_length=None):
    """Check an interval vector: positive, finite, and of the expected
    dimension when one is given. Returns a float64 array."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("timing sequence must be a non-empty 1-D vector")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError("timing sequence values must be positive and finite")
    if pin_length is not None and arr.size != pin_length:
        raise ValueError(f"dimension mismatch: sequence has {arr.size} values, "
                         f"expected {pin_length}")
    return arr


@dataclass(frozen=True)
class DigitConstraint:
    """A known digit at a 1-based PIN position."""

    position: int
    digit: str

    def __post_init__(self):
        if self.position < 1:
            raise ValueError(f"constraint position must be >= 1, got {self.position}")
        if self.digit not in DIGITS:
            raise ValueError(f"constraint digit must be '0'-'9', got {self.digit!r}")


@dataclass(frozen=True, eq=False)
class TimingDictionary:
    """Predicted sequences for every PIN of a (possibly constrained) space.

    pin_indices is None for the full space (PINs implicit, ascending) and an
    ascending int64 array of PIN values otherwise. seq_length normally equals
    pin_length; countermeasure dictionaries carry longer rows and cannot be
    persisted in the v1 file formats.
    """

    pin_length: int
    a: float
    b: float
    layout_name: str | None
    layout_hash: bytes | None
    values: np.ndarray
    pin_indices: np.ndarray | None = None
    seq_length: int = field(default=0)

    def __post_init__(self):
        if not 1 <= self.pin_length <= MAX_PIN_LENGTH:
            raise ValueError(f"pin length {self.pin_length} out of range")
        if self.seq_length == 0:
            object.__setattr__(self, "seq_length", self.pin_length)
        if self.values.ndim != 2 or self.values.shape[1] != self.seq_length:
            raise ValueError("values must be (count, seq_length)")
        if self.pin_indices is None:
            if self.values.shape[0] != 10 ** self.pin_length:
                raise ValueError("full dictionary must cover the whole PIN space")
        else:
            if self.pin_indices.shape[0] != self.values.shape[0]:
                raise ValueError("pin_indices and values disagree on entry count")

    def __len__(self):
        return self.values.shape[0]

    @property
    def is_full(self):
        return self.pin_indices is None

    def pin_values(self):
        """Numeric PIN values of the entries, ascending."""
        if self.pin_indices is None:
            return np.arange(10 ** self.pin_length, dtype=np.int64)
        return self.pin_indices

    def pin_at(self, row):
        return format_pin(int(self.pin_values()[row]), self.pin_length)

    def row_of(self, pin):
        """Row index of a PIN; raises if the PIN is not in the dictionary."""
        value = int(parse_pin(pin), 10)
        if len(pin) != self.pin_length:
            raise ValueError(f"PIN {pin!r} has length {len(pin)}, "
                             f"dictionary holds length {self.pin_length}")
        if self.pin_indices is None:
            return value
        pos = int(np.searchsorted(self.pin_indices, value))
        if pos >= len(self.pin_indices) or self.pin_indices[pos] != value:
            raise ValueError(f"PIN {pin!r} not present in the constrained dictionary")
        return pos

    def sequence_for(self, pin):
        return self.values[self.row_of(pin)]

    def entries(self):
        vals = self.pin_values()
        for row in range(len(self)):
            yield format_pin(int(vals[row]), self.pin_length), self.values[row]

    @property
    def model_fingerprint(self):
        """SHA-256 over (length, a, b, layout hash); identifies the generator."""
        h = hashlib.sha256()
        h.update(struct.pack("<B", self.pin_length))
        h.update(struct.pack("<dd", self.a, self.b))
        h.update(self.layout_hash if self.layout_hash is not None else b"\x00" * 32)
        return h.digest()

    def __eq__(self, other):
        if not isinstance(other, TimingDictionary):
            return NotImplemented
        return (
            self.pin_length == other.pin_length
            and self.seq_length == other.seq_length
            and self.a == other.a
            and self.b == other.b
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.pin_values(), other.pin_values())
        )


def digit_matrix(pin_length, pin_values=None):
    """(N, l) uint8 digit values of the PINs, most significant first."""
    idx = (np.arange(10 ** pin_length, dtype=np.int64)
           if pin_values is None else np.asarray(pin_values, dtype=np.int64))
    digits = np.empty((idx.size, pin_length), dtype=np.uint8)
    for j in range(pin_length):
        digits[:, j] = (idx // 10 ** (pin_length - 1 - j)) % 10
    return digits


def build_dictionary(model, layout, pin_length):
    """Predicted sequence of every PIN of the given length, ascending."""
    if not 1 <= pin_length <= MAX_PIN_LENGTH:
        raise ValueError(f"pin length {pin_length} out of range 1..{MAX_PIN_LENGTH}")
    if pin_length > 7:
        # 10^8 rows of f64 already exceed desk-scale memory.
        raise ValueError(f"pin length {pin_length} too large to materialize")
    table = pair_time_table(model, layout)
    offs = _position_offsets(model, pin_length)
    digits = digit_matrix(pin_length)
    n = digits.shape[0]
    values = np.empty((n, pin_length))
    for j in range(pin_length):
        to_idx = (digits[:, j + 1].astype(np.intp) if j + 1 < pin_length
                  else np.full(n, _ENTER_INDEX, dtype=np.intp))
        values[:, j] = table[digits[:, j].astype(np.intp), to_idx]
        if offs[j] != 0.0:
            values[:, j] += offs[j]
    return TimingDictionary(
        pin_length=pin_length, a=model.a, b=model.b,
        layout_name=layout.name, layout_hash=layout.content_hash(),
        values=values,
    )


def build_interleaved_dictionary(model, layout, pin_length,
                                 include_final_double_press=True):
    """Countermeasure dictionary: every PIN's interleaved-entry sequence
    (2l+1 intervals, or 2l when the final ENTER double press is dropped).
    In-memory only; not persistable in the v1 file formats."""
    if not 1 <= pin_length <= 7:
        raise ValueError(f"pin length {pin_length} out of range")
    table = pair_time_table(model, layout)
    offs_len = 2 * pin_length + (1 if include_final_double_press else 0)
    offs = _position_offsets(model, offs_len)
    digits = digit_matrix(pin_length)
    n = digits.shape[0]
    values = np.empty((n, offs_len))
    for j in range(pin_length):
        d = digits[:, j].astype(np.intp)
        values[:, 2 * j] = table[_ENTER_INDEX, d]
        values[:, 2 * j + 1] = table[d, _ENTER_INDEX]
    if include_final_double_press:
        values[:, -1] = table[_ENTER_INDEX, _ENTER_INDEX]
    values += offs
    return TimingDictionary(
        pin_length=pin_length, a=model.a, b=model.b,
        layout_name=layout.name, layout_hash=layout.content_hash(),
        values=values, seq_length=offs_len,
    )


def reduce_dictionary(dictionary, constraints):
    """Restrict a dictionary to the PINs matching known digits at known
    positions; entry order is preserved."""
    if not constraints:
        return dictionary
    seen = set()
    for c in constraints:
        if c.position > dictionary.pin_length:
            raise ValueError(f"constraint position {c.position} exceeds "
                             f"PIN length {dictionary.pin_length}")
        if c.position in seen:
            raise ValueError(f"duplicate constraint position {c.position}")
        seen.add(c.position)
    l = dictionary.pin_length
    if dictionary.is_full:
        # Direct enumeration of matching PIN values, ascending.
        fixed = {c.position - 1: int(c.digit) for c in constraints}
        idx = np.zeros(1, dtype=np.int64)
        for pos in range(l):
            scale = 10 ** (l - 1 - pos)
            if pos in fixed:
                idx = idx + fixed[pos] * scale
            else:
                idx = (idx[:, None] + np.arange(10, dtype=np.int64) * scale).ravel()
        values = dictionary.values[idx]
    else:
        pins = dictionary.pin_indices
        mask = np.ones(pins.size, dtype=bool)
        for c in constraints:
            scale = 10 ** (l - c.position)
            mask &= (pins // scale) % 10 == int(c.digit)
        idx = pins[mask]
        values = dictionary.values[mask]
    return TimingDictionary(
        pin_length=l, a=dictionary.a, b=dictionary.b,
        layout_name=dictionary.layout_name, layout_hash=dictionary.layout_hash,
        values=values, pin_indices=idx, seq_length=dictionary.seq_length,
    )


def _require_persistable(dictionary):
    if dictionary.seq_length != dictionary.pin_length:
        raise ValueError("interleaved dictionaries cannot be persisted "
                         "in the v1 formats")


def save_dictionary(dictionary, path, format="text"):
    """Write a dictionary in the text or binary format."""
    _require_persistable(dictionary)
    if format == "text":
        with open(path, "w", encoding="utf-8") as fh:
            _write_text(dictionary, fh)
    elif format == "binary":
        with open(path, "wb") as fh:
            _write_binary(dictionary, fh)
    else:
        raise ValueError(f"unknown dictionary format {format!r}")


def dumps_dictionary(dictionary):
    """Text-format dictionary as a string (used by tests and the CLI)."""
    _require_persistable(dictionary)
    buf = io.StringIO()
    _write_text(dictionary, buf)
    return buf.getvalue()


def _write_text(d, fh):
    name = d.layout_name if d.layout_name is not None else "unknown"
    fh.write(f"# {TEXT_TAG} length={d.pin_length} a={d.a!r} b={d.b!r} layout={name}\n")
    vals = d.pin_values()
    for row in range(len(d)):
        pin = format_pin(int(vals[row]), d.pin_length)
        fh.write(pin + "," + ",".join(f"{v:.4f}" for v in d.values[row]) + "\n")


def _write_binary(d, fh):
    fh.write(BINARY_MAGIC)
    fh.write(struct.pack("<BQdd", d.pin_length, len(d), d.a, d.b))
    fh.write(d.layout_hash if d.layout_hash is not None else b"\x00" * 32)
    if d.is_full:
        fh.write(d.values.astype("<f8", copy=False).tobytes())
    else:
        row_t = np.dtype([("pin", "<u4"), ("dt", "<f8", (d.pin_length,))])
        rows = np.empty(len(d), dtype=row_t)
        rows["pin"] = d.pin_indices.astype(np.uint32)
        rows["dt"] = d.values
        fh.write(rows.tobytes())


def load_dictionary(path):
    """Read a dictionary, auto-detecting the format from the magic bytes."""
    with open(path, "rb") as fh:
        head = fh.read(len(BINARY_MAGIC))
        if head == BINARY_MAGIC:
            return _read_binary(fh)
    with open(path, "r", encoding="utf-8") as fh:
        return loads_dictionary(fh.read())


def loads_dictionary(text):
    """Parse the text dictionary format."""
    lines = text.splitlines()
    header = None
    body = []
    for raw in lines:
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if header is None and TEXT_TAG in line:
                header = line
            continue
        body.append(line)
    if header is None:
        raise ValueError("not a pinforge dictionary: missing header")
    fields = {}
    for tok in header.split():
        if "=" in tok:
            k, _, v = tok.partition("=")
            fields[k] = v
    try:
        pin_length = int(fields["length"])
        a = float(fields["a"])
        b = float(fields["b"])
        layout_name = fields.get("layout", "unknown")
    except (KeyError, ValueError):
        raise ValueError(f"malformed dictionary header: {header!r}") from None
    pins = np.empty(len(body), dtype=np.int64)
    values = np.empty((len(body), pin_length))
    for i, line in enumerate(body):
        parts = line.split(",")
        if len(parts) != pin_length + 1:
            raise ValueError(f"malformed dictionary record: {line!r}")
        pin = parse_pin(parts[0])
        if len(pin) != pin_length:
            raise ValueError(f"record PIN {pin!r} does not match header length")
        pins[i] = int(pin, 10)
        try:
            values[i] = [float(p) for p in parts[1:]]
        except ValueError:
            raise ValueError(f"malformed dictionary record: {line!r}") from None
    if np.any(np.diff(pins) <= 0):
        raise ValueError("dictionary records must be in ascending PIN order")
    full = len(body) == 10 ** pin_length
    known = builtin_layout(layout_name)
    return TimingDictionary(
        pin_length=pin_length, a=a, b=b, layout_name=layout_name,
        layout_hash=known.content_hash() if known is not None else None,
        values=values,
        pin_indices=None if full else pins,
    )


def _read_binary(fh):
    head = fh.read(struct.calcsize("<BQdd"))
    if len(head) < struct.calcsize("<BQdd"):
        raise ValueError("unexpected end of dictionary")
    pin_length, count, a, b = struct.unpack("<BQdd", head)
    if not 1 <= pin_length <= MAX_PIN_LENGTH:
        raise ValueError(f"corrupt dictionary: pin length {pin_length}")
    layout_hash = fh.read(32)
    if len(layout_hash) != 32:
        raise ValueError("unexpected end of dictionary")
    full = count == 10 ** pin_length
    if full:
        payload = fh.read(count * pin_length * 8)
        if len(payload) != count * pin_length * 8:
            raise ValueError("unexpected end of dictionary")
        values = np.frombuffer(payload, dtype="<f8").reshape(count, pin_length).copy()
        pins = None
    else:
        row_t = np.dtype([("pin", "<u4"), ("dt", "<f8", (pin_length,))])
        payload = fh.read(count * row_t.itemsize)
        if len(payload) != count * row_t.itemsize:
            raise ValueError("unexpected end of dictionary")
        rows = np.frombuffer(payload, dtype=row_t)
        pins = rows["pin"].astype(np.int64)
        values = rows["dt"].astype(np.float64).reshape(count, pin_length)
    if fh.read(1):
        raise ValueError("trailing bytes after dictionary payload")
    return TimingDictionary(
        pin_length=pin_length, a=a, b=b, layout_name=None,
        layout_hash=None if layout_hash == b"\x00" * 32 else layout_hash,
        values=values, pin_indices=pins,
    )


def check_fingerprint(dictionary, model=None, layout=None):
    """Warn when a dictionary is paired with a different model or layout.
    Returns True when no mismatch was detected."""
    ok = True
    if model is not None and (dictionary.a != model.a or dictionary.b != model.b):
        warnings.warn(
            f"dictionary was built with (a={dictionary.a}, b={dictionary.b}) "
            f"but is used with (a={model.a}, b={model.b})", stacklevel=2)
        ok = False
    if layout is not None and dictionary.layout_hash is not None:
        if dictionary.layout_hash != layout.content_hash():
            warnings.warn(
                f"dictionary layout hash does not match layout {layout.name!r}",
                stacklevel=2)
            ok = False
    return ok
