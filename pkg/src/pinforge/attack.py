"""Candidate ranking and attack modes.

Every dictionary entry is scored against an observed interval sequence,
then fully ordered best-first. All metrics share a "higher is better"
contract (Euclidean distances are negated); ties are broken by ascending
numeric PIN value so rankings are deterministic.
"""

import math
from dataclasses import dataclass

import numpy as np

from .dictionary import (format_pin, parse_pin, reduce_dictionary,
                         validate_sequence)

METRICS = ("cosine", "euclidean", "pearson")
DEFAULT_METRIC = "cosine"


def validate_metric(metric):
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r} (expected one of {METRICS})")
    return metric


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def cosine_similarity(a, b):
    """Normalized dot product; exactly 1.0 for identical vectors and
    invariant under positive rescaling of either argument."""
    a, b = _check_pair(a, b)
    num = float((a * b).sum())
    return num / math.sqrt(float((a * a).sum()) * float((b * b).sum()))


def euclidean_score(a, b):
    """Negated Euclidean distance, so that higher is better (max 0)."""
    a, b = _check_pair(a, b)
    d = a - b
    return -math.sqrt(float((d * d).sum()))


def pearson_score(a, b):
    """Centered correlation coefficient in [-1, 1]. Constant vectors have
    no defined correlation and are an error."""
    a, b = _check_pair(a, b)
    ac = a - a.mean()
    bc = b - b.mean()
    va = float((ac * ac).sum())
    vb = float((bc * bc).sum())
    if va == 0.0 or vb == 0.0:
        raise ValueError("undefined correlation: constant vector")
    return float((ac * bc).sum()) / math.sqrt(va * vb)


def _batch_scores(values, observed, metric):
    """Scores of every dictionary row against one observation; accumulation
    order matches the scalar metric functions so exact values agree."""
    if metric == "cosine":
        num = (values * observed).sum(axis=1)
        row_sq = (values * values).sum(axis=1)
        obs_sq = (observed * observed).sum()
        return num / np.sqrt(row_sq * obs_sq)
    if metric == "euclidean":
        d = values - observed
        return -np.sqrt((d * d).sum(axis=1))
    if metric == "pearson":
        vc = values - values.mean(axis=1, keepdims=True)
        oc = observed - observed.mean()
        vv = (vc * vc).sum(axis=1)
        oo = (oc * oc).sum()
        if oo == 0.0 or np.any(vv == 0.0):
            raise ValueError("undefined correlation: constant vector")
        return (vc * oc).sum(axis=1) / np.sqrt(vv * oo)
    raise ValueError(f"unknown metric {metric!r}")


@dataclass(frozen=True, eq=False)
class ObservedEntry:
    """One captured PIN entry: the interval sequence plus labels. true_pin is
    known in evaluation and absent in deployment."""

    case_id: str
    subject_id: str
    sequence: np.ndarray
    true_pin: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "sequence", validate_sequence(self.sequence))
        if self.true_pin is not None:
            parse_pin(self.true_pin)


@dataclass(frozen=True)
class AttackOutcome:
    """Result of one attacking case: 1-based rank of the true PIN in the
    ranked guess list and its similarity score. A non-empty note flags a
    case that could not be ranked (rank is then None and the case never
    counts as a success)."""

    case_id: str
    true_pin: str
    rank: int | None
    score: float
    note: str = ""

    def succeeds_within(self, attempts):
        return self.rank is not None and self.rank <= attempts


@dataclass(frozen=True, eq=False)
class RankedGuessList:
    """Full ordering of dictionary entries, best first; ties by ascending
    numeric PIN value."""

    pin_length: int
    ranked_pins: np.ndarray
    scores: np.ndarray
    metric: str = DEFAULT_METRIC

    def __len__(self):
        return self.ranked_pins.size

    def __iter__(self):
        for pin_value, score in zip(self.ranked_pins, self.scores):
            yield format_pin(int(pin_value), self.pin_length), float(score)

    def pin(self, rank):
        """PIN at a 1-based rank."""
        return format_pin(int(self.ranked_pins[rank - 1]), self.pin_length)

    def top(self, n):
        return [(format_pin(int(p), self.pin_length), float(s))
                for p, s in zip(self.ranked_pins[:n], self.scores[:n])]

    def rank_of(self, pin):
        """1-based rank of a PIN; raises if absent."""
        value = int(parse_pin(pin), 10)
        hits = np.nonzero(self.ranked_pins == value)[0]
        if hits.size == 0:
            raise ValueError(f"PIN {pin!r} not present in the ranked list")
        return int(hits[0]) + 1

    def score_of(self, pin):
        value = int(parse_pin(pin), 10)
        hits = np.nonzero(self.ranked_pins == value)[0]
        if hits.size == 0:
            raise ValueError(f"PIN {pin!r} not present in the ranked list")
        return float(self.scores[hits[0]])


def rank_candidates(dictionary, observed, metric=DEFAULT_METRIC):
    """Order every dictionary entry by similarity to the observation, best
    first, deterministically."""
    validate_metric(metric)
    if len(dictionary) == 0:
        raise ValueError("empty dictionary")
    observed = validate_sequence(observed, dictionary.seq_length)
    scores = _batch_scores(dictionary.values, observed, metric)
    pins = dictionary.pin_values()
    order = np.lexsort((pins, -scores))
    return RankedGuessList(
        pin_length=dictionary.pin_length,
        ranked_pins=pins[order],
        scores=scores[order],
        metric=metric,
    )


def _true_rank(dictionary, observed, metric, true_pin):
    """Exact rank and score of the true PIN without materializing the full
    sort: count strictly better scores plus lower-PIN ties."""
    observed = validate_sequence(observed, dictionary.seq_length)
    scores = _batch_scores(dictionary.values, observed, metric)
    row = dictionary.row_of(true_pin)
    s = scores[row]
    pins = dictionary.pin_values()
    true_value = int(true_pin, 10)
    rank = 1 + int(np.count_nonzero(scores > s)) + int(
        np.count_nonzero((scores == s) & (pins < true_value)))
    return rank, float(s)


def average_entries(sequences):
    """Speed-normalized elementwise average of k same-PIN entries: each
    sequence is rescaled so its interval sum matches the group mean sum,
    then the rescaled sequences are averaged."""
    if len(sequences) == 0:
        raise ValueError("cannot average zero entries")
    arrs = [validate_sequence(s) for s in sequences]
    dim = arrs[0].size
    for a in arrs[1:]:
        if a.size != dim:
            raise ValueError(f"dimension mismatch: {a.size} vs {dim}")
    stack = np.stack(arrs)
    sums = stack.sum(axis=1)
    mean_sum = sums.mean()
    scaled = stack * (mean_sum / sums)[:, None]
    return scaled.mean(axis=0)


def random_baseline(pin_length, known_digits, attempts):
    """Probability that uniform random guessing hits the PIN within the
    given attempts when known_digits positions are already revealed:
    attempts / 10**(pin_length - known_digits)."""
    if not 1 <= pin_length <= 10:
        raise ValueError(f"pin length {pin_length} out of range")
    if not 0 <= known_digits < pin_length:
        raise ValueError(f"known digits {known_digits} outside [0, {pin_length - 1}]")
    space = 10 ** (pin_length - known_digits)
    if not 1 <= attempts <= space:
        raise ValueError(f"attempts {attempts} outside [1, {space}]")
    return attempts / space


def run_attack(dictionary, entries, mode="general", metric=DEFAULT_METRIC,
               k=10, constraints=None):
    """Attack a batch of observed entries against a timing dictionary.

    Modes: "general" ranks each entry independently; "known_digits" first
    reduces the dictionary by the given constraints; "multi_entry" groups
    entries by (subject, true PIN), averages the first k of each group and
    ranks once per group. Entries whose true PIN conflicts with the
    constraints are flagged, not fatal.
    """
    validate_metric(metric)
    if mode == "general":
        return [_attack_one(dictionary, e, metric) for e in entries]
    if mode == "known_digits":
        constraints = list(constraints or [])
        reduced = reduce_dictionary(dictionary, constraints)
        outcomes = []
        for e in entries:
            _require_true_pin(e)
            bad = [c for c in constraints if e.true_pin[c.position - 1] != c.digit]
            if bad:
                outcomes.append(AttackOutcome(
                    case_id=e.case_id, true_pin=e.true_pin, rank=None,
                    score=float("nan"),
                    note="constraint inconsistent with true PIN",
                ))
                continue
            outcomes.append(_attack_one(reduced, e, metric))
        return outcomes
    if mode == "multi_entry":
        if k < 1:
            raise ValueError(f"multi-entry group size must be >= 1, got {k}")
        groups = {}
        order = []
        for e in entries:
            _require_true_pin(e)
            gk = (e.subject_id, e.true_pin)
            if gk not in groups:
                groups[gk] = []
                order.append(gk)
            groups[gk].append(e)
        outcomes = []
        for gk in order:
            subject, pin = gk
            group = groups[gk]
            if len(group) < k:
                raise ValueError(
                    f"group ({subject}, {pin}) has {len(group)} entries, needs {k}")
            averaged = average_entries([e.sequence for e in group[:k]])
            rank, score = _true_rank(dictionary, averaged, metric, pin)
            outcomes.append(AttackOutcome(
                case_id=f"{subject}:{pin}:avg{k}", true_pin=pin,
                rank=rank, score=score,
            ))
        return outcomes
    raise ValueError(f"unknown attack mode {mode!r}")


def _require_true_pin(entry):
    if entry.true_pin is None:
        raise ValueError(f"case {entry.case_id!r} has no true PIN; "
                         "evaluation modes require one")


def _attack_one(dictionary, entry, metric):
    _require_true_pin(entry)
    rank, score = _true_rank(dictionary, entry.sequence, metric, entry.true_pin)
    return AttackOutcome(case_id=entry.case_id, true_pin=entry.true_pin,
                         rank=rank, score=score)


def success_curve(outcomes, xs):
    """Fraction of outcomes whose true PIN ranks within the top x, for each
    x. Non-decreasing in x."""
    if not outcomes:
        raise ValueError("no outcomes")
    ranks = np.array([o.rank if o.rank is not None else np.inf for o in outcomes])
    return [(int(x), float(np.count_nonzero(ranks <= x) / ranks.size)) for x in xs]


# ---------------------------------------------------------------------------
# Observed-entry / outcome / curve files


def write_entries(entries, path, meta_lines=()):
    """`case_id,subject_id,true_pin_or_dash,dt1,...,dtl` per line; interval
    values keep full precision."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in meta_lines:
            fh.write(f"# {line}\n")
        for e in entries:
            pin = e.true_pin if e.true_pin is not None else "-"
            fh.write(f"{e.case_id},{e.subject_id},{pin},"
                     + ",".join(repr(float(v)) for v in e.sequence) + "\n")


def read_entries(path, pin_length=None):
    with open(path, "r", encoding="utf-8") as fh:
        entries = []
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) < 4:
                raise ValueError(f"malformed observed-entry line {lineno}: {raw!r}")
            case_id, subject_id, pin = parts[0], parts[1], parts[2]
            seq = validate_sequence([float(p) for p in parts[3:]], pin_length)
            entries.append(ObservedEntry(
                case_id=case_id, subject_id=subject_id, sequence=seq,
                true_pin=None if pin == "-" else parse_pin(pin),
            ))
        return entries


def write_outcomes(outcomes, path, meta_lines=()):
    """`case_id,true_pin,rank,score` per line; unrankable cases write '-'."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in meta_lines:
            fh.write(f"# {line}\n")
        for o in outcomes:
            rank = o.rank if o.rank is not None else "-"
            fh.write(f"{o.case_id},{o.true_pin},{rank},{o.score:.6f}\n")


def write_curve(curve, path, meta_lines=()):
    """`x,success_rate` per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in meta_lines:
            fh.write(f"# {line}\n")
        for x, rate in curve:
            fh.write(f"{x},{rate:.6f}\n")


def read_curve(path):
    curve = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            xs, rs = line.split(",")
            curve.append((int(xs), float(rs)))
    return curve
