"""PIN strength from directional density of the timing dictionary.

For each PIN, the cosine similarities against every other entry are sorted
descending and grouped into decade bands (ranks 1-9, 10-99, 100-999, ...);
the band means form the PIN's strength tuple. A stable multi-key sort over
the tuples then partitions the space into levels of 100 / 900 / 9,000 / ...
PINs, weakest first.

The exact computation touches all ~10^(2l) ordered pairs; it is blocked and
BLAS-backed and intended for l <= 4 (an opt-in flag unlocks larger spaces,
at hours of wall clock). A seeded sampling estimator provides labeled
approximations for large spaces in minutes.
"""

import math
from dataclasses import dataclass

import numpy as np

from .dictionary import format_pin, parse_pin

EXACT_LENGTH_LIMIT = 4


@dataclass(frozen=True, eq=False)
class StrengthProfile:
    """Per-PIN band-mean tuples for a complete PIN space. method is "exact"
    or "sampled"; sampled profiles are approximations and carry the sample
    size used per PIN block."""

    pin_length: int
    g_bars: np.ndarray
    method: str = "exact"
    sample_size: int | None = None

    def __post_init__(self):
        n = 10 ** self.pin_length
        if self.g_bars.shape != (n, self.pin_length):
            raise ValueError(
                f"profile must be ({n}, {self.pin_length}), got {self.g_bars.shape}")

    def tuple_for(self, pin):
        value = int(parse_pin(pin), 10)
        if len(pin) != self.pin_length:
            raise ValueError(f"PIN {pin!r} has the wrong length")
        return self.g_bars[value]


@dataclass(frozen=True, eq=False)
class LevelPartition:
    """Level label (1 = weakest) for every PIN of the space."""

    pin_length: int
    levels: np.ndarray
    level_sizes: tuple

    def level_of(self, pin):
        value = int(parse_pin(pin), 10)
        return int(self.levels[value])

    def pins_at_level(self, level):
        """Numeric PIN values at one level, ascending."""
        return np.flatnonzero(self.levels == level)

    @property
    def n_levels(self):
        return len(self.level_sizes)


@dataclass(frozen=True)
class FrequencyRecord:
    """Occurrence count of one PIN in a leaked corpus."""

    pin: str
    count: int

    def __post_init__(self):
        parse_pin(self.pin)
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")


def _band_bounds(pin_length):
    """Descending-rank band boundaries: band j covers sorted ranks
    10^(j-1) .. 10^j - 1, exhausting the 10^l - 1 neighbors exactly."""
    return [(10 ** j, 10 ** (j + 1) - 1) for j in range(pin_length)]


def _require_full(dictionary):
    if not dictionary.is_full:
        raise ValueError("strength measurement needs the unconstrained dictionary")
    if dictionary.pin_length < 2:
        raise ValueError("strength measurement needs PIN length >= 2")


def strength_measure(dictionary, block_size=1024, allow_large=False):
    """Exact band means for every PIN of a complete dictionary.

    Work grows with 10^(2l); lengths above 4 are refused unless allow_large
    is set (the l=6 space takes hours).
    """
    _require_full(dictionary)
    l = dictionary.pin_length
    if l > EXACT_LENGTH_LIMIT and not allow_large:
        raise ValueError(
            f"exact strength measurement for length {l} is hours-scale; "
            "pass allow_large=True or use strength_measure_sampled")
    values = dictionary.values
    n = values.shape[0]
    norms = np.sqrt((values * values).sum(axis=1))
    unit = values / norms[:, None]
    bounds = _band_bounds(l)
    g_bars = np.empty((n, l))
    # Ascending slice for descending ranks [lo, hi] of m = n-1 neighbors:
    # descending rank r is ascending index m - r.
    kth = sorted({idx for lo, hi in bounds for idx in (n - 1 - hi, n - lo)
                  if 0 < idx <= n - 1})
    for start in range(0, n, block_size):
        stop = min(start + block_size, n)
        sims = unit[start:stop] @ unit.T
        np.clip(sims, -1.0, 1.0, out=sims)  # ulp overshoot from the gemm
        rows = np.arange(start, stop)
        sims[rows - start, rows] = np.inf  # self slot sorts to the end
        part = np.partition(sims, kth, axis=1) if kth else np.sort(sims, axis=1)
        for j, (lo, hi) in enumerate(bounds):
            a = n - 1 - hi
            b = n - lo
            g_bars[start:stop, j] = part[:, a:b].mean(axis=1)
    return StrengthProfile(pin_length=l, g_bars=g_bars, method="exact")


def strength_measure_sampled(dictionary, sample_size=100_000, seed=0,
                             block_size=512):
    """Approximate band means from sampled counterparts.

    PINs are processed in fixed-size blocks; each block draws its own
    sample of counterpart PINs from a substream of the seed, so results do
    not depend on scheduling. Band boundaries are mapped onto sample ranks
    proportionally. Output is labeled approximate via method="sampled".
    """
    _require_full(dictionary)
    if sample_size < 100:
        raise ValueError("sample_size too small to resolve the bands")
    l = dictionary.pin_length
    values = dictionary.values
    n = values.shape[0]
    norms = np.sqrt((values * values).sum(axis=1))
    unit = values / norms[:, None]
    bounds = _band_bounds(l)
    m = n - 1
    # Sample ranks [a, b) for the band's share of the m descending neighbors.
    spans = []
    for lo, hi in bounds:
        a = math.floor((lo - 1) / m * sample_size)
        b = max(a + 1, math.floor(hi / m * sample_size))
        spans.append((sample_size - b, sample_size - a))
    kth = sorted({idx for a, b in spans for idx in (a, b)
                  if 0 < idx < sample_size})
    g_bars = np.empty((n, l))
    root = np.random.SeedSequence(seed)
    for block_idx, start in enumerate(range(0, n, block_size)):
        stop = min(start + block_size, n)
        rng = np.random.default_rng(root.spawn(block_idx + 1)[0])
        counterparts = rng.integers(0, n, size=sample_size)
        sims = unit[start:stop] @ unit[counterparts].T
        np.clip(sims, -1.0, 1.0, out=sims)
        part = np.partition(sims, kth, axis=1)
        for j, (a, b) in enumerate(spans):
            g_bars[start:stop, j] = part[:, a:b].mean(axis=1)
    return StrengthProfile(pin_length=l, g_bars=g_bars, method="sampled",
                           sample_size=sample_size)


def partition_levels(profile):
    """Stable multi-key ascending sort on the strength tuples, then decade
    cuts: ranks 1-100 are level 1, 101-1000 level 2, and so on; an l-digit
    space yields l-1 levels."""
    n = 10 ** profile.pin_length
    keys = tuple(profile.g_bars[:, j] for j in reversed(range(profile.pin_length)))
    order = np.lexsort(keys)
    levels = np.empty(n, dtype=np.int8)
    sizes = []
    lo = 0
    for level in range(1, profile.pin_length):
        hi = min(10 ** (level + 1), n)
        levels[order[lo:hi]] = level
        sizes.append(hi - lo)
        lo = hi
    return LevelPartition(pin_length=profile.pin_length, levels=levels,
                          level_sizes=tuple(sizes))


def frequency_analysis(partition, records):
    """Share of human-choice mass and mean per-PIN frequency at each level.

    Returns a list of (level, proportion_of_mass, mean_frequency_per_pin).
    """
    if not records:
        raise ValueError("no frequency records")
    totals = np.zeros(partition.n_levels + 1)
    for r in records:
        if len(r.pin) != partition.pin_length:
            raise ValueError(
                f"record PIN {r.pin!r} does not match partition length "
                f"{partition.pin_length}")
        totals[partition.level_of(r.pin)] += r.count
    mass = totals.sum()
    out = []
    for level in range(1, partition.n_levels + 1):
        size = partition.level_sizes[level - 1]
        out.append((level, float(totals[level] / mass), float(totals[level] / size)))
    return out


# ---------------------------------------------------------------------------
# Profile / frequency files


def write_profile(profile, partition, path, meta_lines=()):
    """`pin,g1,...,gl,level` per line, 6 decimal places."""
    n = 10 ** profile.pin_length
    with open(path, "w", encoding="utf-8") as fh:
        for line in meta_lines:
            fh.write(f"# {line}\n")
        for i in range(n):
            pin = format_pin(i, profile.pin_length)
            gs = ",".join(f"{g:.6f}" for g in profile.g_bars[i])
            fh.write(f"{pin},{gs},{partition.levels[i]}\n")


def read_profile(path):
    """Parse a profile file back into (StrengthProfile, LevelPartition).
    Band means are read at file precision; the profile is labeled "file"."""
    pins, rows, lvls = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            pins.append(parts[0])
            rows.append([float(p) for p in parts[1:-1]])
            lvls.append(int(parts[-1]))
    if not pins:
        raise ValueError("empty profile file")
    l = len(pins[0])
    n = 10 ** l
    if len(pins) != n:
        raise ValueError(f"profile must cover all {n} PINs, found {len(pins)}")
    g = np.empty((n, l))
    levels = np.empty(n, dtype=np.int8)
    for pin, row, lvl in zip(pins, rows, lvls):
        value = int(parse_pin(pin), 10)
        g[value] = row
        levels[value] = lvl
    sizes = tuple(int(np.count_nonzero(levels == lev))
                  for lev in range(1, int(levels.max()) + 1))
    profile = StrengthProfile(pin_length=l, g_bars=g, method="file")
    return profile, LevelPartition(pin_length=l, levels=levels, level_sizes=sizes)


def read_frequency_records(path):
    """`pin,count` per line."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValueError(f"malformed frequency record line {lineno}: {raw!r}")
            records.append(FrequencyRecord(pin=parse_pin(parts[0]),
                                           count=int(parts[1])))
    return records


def write_frequency_records(records, path, meta_lines=()):
    with open(path, "w", encoding="utf-8") as fh:
        for line in meta_lines:
            fh.write(f"# {line}\n")
        for r in records:
            fh.write(f"{r.pin},{r.count}\n")
