"""Cognitive timing models for inter-keystroke intervals.

Two models are supported: the two-parameter pointing model
T = a + b * I (I the index of difficulty of the key pair) and a
six-parameter extension adding a last-pair effect and per-position
segment effects. Both are fitted by ordinary least squares with
t-distribution coefficient significance tests.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .geometry import KEY_IDS, index_of_difficulty, validate_key

# Default fitted coefficients (milliseconds, ms per bit) used by the CLI and
# the experiment presets.
DEFAULT_A = 135.9120
DEFAULT_B = 47.7334


@dataclass(frozen=True)
class FittsModel:
    """Intercept a (ms, the repeated-key time) and slope b (ms per bit)."""

    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and self.a > 0):
            raise ValueError(f"intercept a must be finite and positive, got {self.a}")
        if not math.isfinite(self.b):
            raise ValueError(f"slope b must be finite, got {self.b}")


@dataclass(frozen=True)
class ExtendedModel:
    """a + b*I plus a last-pair effect c and segment effects d, e, f bound to
    pair positions 2, 3 and 4."""

    a: float
    b: float
    c: float
    d: float
    e: float
    f: float

    def __post_init__(self):
        for name in ("a", "b", "c", "d", "e", "f"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"coefficient {name} must be finite")

    def position_offset(self, pair_position, pin_length):
        """Additive ms for a pair at the given 1-based position of a PIN
        entry whose last pair (position == pin_length) hits ENTER."""
        off = 0.0
        if pair_position == pin_length:
            off += self.c
        if pair_position == 2:
            off += self.d
        elif pair_position == 3:
            off += self.e
        elif pair_position == 4:
            off += self.f
        return off


@dataclass(frozen=True)
class TrainingSample:
    """One observed inter-keystroke interval for a key pair."""

    key_from: str
    key_to: str
    observed_dt: float
    pair_position: int | None = None
    pin_length: int | None = None

    def __post_init__(self):
        validate_key(self.key_from)
        validate_key(self.key_to)
        if not (math.isfinite(self.observed_dt) and self.observed_dt > 0):
            raise ValueError(f"observed_dt must be positive, got {self.observed_dt}")
        if self.pair_position is not None:
            if self.pin_length is None:
                raise ValueError("pair_position requires pin_length")
            if not 1 <= self.pair_position <= self.pin_length:
                raise ValueError(
                    f"pair_position {self.pair_position} outside [1, {self.pin_length}]"
                )


@dataclass(frozen=True)
class FitReport:
    """Per-coefficient estimates, standard errors, t statistics and two-sided
    p-values, plus the residual standard deviation."""

    names: tuple
    coefficients: np.ndarray
    standard_errors: np.ndarray
    t_statistics: np.ndarray
    p_values: np.ndarray
    residual_sd: float
    n_samples: int

    def __post_init__(self):
        k = len(self.names)
        if self.n_samples <= k:
            raise ValueError("need more samples than parameters")
        if np.any(self.p_values < 0) or np.any(self.p_values > 1):
            raise ValueError("p-values outside [0, 1]")

    def p_value(self, name):
        return float(self.p_values[self.names.index(name)])

    def coefficient(self, name):
        return float(self.coefficients[self.names.index(name)])


def predict_interkey(model, layout, key_from, key_to):
    """Predicted inter-keystroke time a + b * I for one key pair (ms)."""
    return model.a + model.b * index_of_difficulty(layout, key_from, key_to)


def predict_interkey_extended(model, layout, key_from, key_to, pair_position, pin_length):
    """Extended-model prediction: the pointing time plus position effects."""
    base = model.a + model.b * index_of_difficulty(layout, key_from, key_to)
    return base + model.position_offset(pair_position, pin_length)


def _ols(x, y, names):
    n, k = x.shape
    rank = np.linalg.matrix_rank(x)
    if rank < k:
        raise ValueError("rank-deficient design")
    beta, _, _, _ = np.linalg.lstsq(x, y, rcond=None)
    resid = y - x @ beta
    dof = n - k
    sse = float(resid @ resid)
    s2 = sse / dof
    cov = s2 * np.linalg.inv(x.T @ x)
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / se, np.inf * np.sign(beta))
    p = 2.0 * stats.t.sf(np.abs(t), dof)
    report = FitReport(
        names=tuple(names),
        coefficients=beta,
        standard_errors=se,
        t_statistics=t,
        p_values=np.clip(p, 0.0, 1.0),
        residual_sd=math.sqrt(s2),
        n_samples=n,
    )
    return beta, report


def fit_fitts(samples, layout):
    """Least-squares fit of observed intervals on the index of difficulty.

    Requires at least 3 samples spanning at least 2 distinct difficulty
    values. Returns (FittsModel, FitReport); a negative fitted slope is
    flagged with a warning.
    """
    if len(samples) < 3:
        raise ValueError(f"too few samples: {len(samples)} < 3")
    i_vals = np.array([index_of_difficulty(layout, s.key_from, s.key_to) for s in samples])
    y = np.array([s.observed_dt for s in samples])
    if np.unique(i_vals).size < 2:
        raise ValueError("rank-deficient design: all samples share one difficulty value")
    x = np.column_stack([np.ones_like(i_vals), i_vals])
    beta, report = _ols(x, y, ("a", "b"))
    a, b = float(beta[0]), float(beta[1])
    if b < 0:
        warnings.warn(f"fitted slope b = {b:.4f} ms/bit is negative", stacklevel=2)
    return FittsModel(a=a, b=b), report


_EXTENDED_NAMES = ("a", "b", "c", "d", "e", "f")


def fit_extended(samples, layout, pin_length):
    """Fit the six-parameter model over regressors
    [1, I, last-pair, pos-2, pos-3, pos-4]. Every sample must carry its pair
    position; the design must be full rank."""
    if len(samples) < 7:
        raise ValueError(f"too few samples: {len(samples)} < 7")
    rows = []
    y = np.empty(len(samples))
    for idx, s in enumerate(samples):
        if s.pair_position is None:
            raise ValueError("fit_extended requires pair_position on every sample")
        i_val = index_of_difficulty(layout, s.key_from, s.key_to)
        pos = s.pair_position
        rows.append([
            1.0,
            i_val,
            1.0 if pos == pin_length else 0.0,
            1.0 if pos == 2 else 0.0,
            1.0 if pos == 3 else 0.0,
            1.0 if pos == 4 else 0.0,
        ])
        y[idx] = s.observed_dt
    x = np.array(rows)
    dead = [nm for col, nm in zip(x.T, _EXTENDED_NAMES) if not np.any(col)]
    if dead:
        raise ValueError(f"missing positions: no samples activate {', '.join(dead)}")
    beta, report = _ols(x, y, _EXTENDED_NAMES)
    if beta[1] < 0:
        warnings.warn(f"fitted slope b = {beta[1]:.4f} ms/bit is negative", stacklevel=2)
    model = ExtendedModel(*(float(v) for v in beta))
    if model.a <= 0:
        raise ValueError(f"fitted intercept a = {model.a:.4f} is not positive")
    return model, report


KEYLOG_HEADER = "# pinforge-keylog v1"


def ingest_keystroke_log(text):
    """Parse a `session_id,key,key_down_ms` log into training samples.

    Consecutive key-down differences within each session become samples;
    pair positions are assigned from the position within the session.
    Timestamps within a session must be strictly increasing and every
    session needs at least two keystrokes.
    """
    sessions = {}
    order = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"malformed keystroke-log line {lineno}: {raw!r}")
        sid, key, ts = (p.strip() for p in parts)
        validate_key(key)
        try:
            t = float(ts)
        except ValueError:
            raise ValueError(f"malformed timestamp on line {lineno}: {ts!r}") from None
        if t < 0 or not math.isfinite(t):
            raise ValueError(f"invalid timestamp {t} on line {lineno}")
        if sid not in sessions:
            sessions[sid] = []
            order.append(sid)
        sessions[sid].append((key, t))
    samples = []
    for sid in order:
        events = sessions[sid]
        if len(events) < 2:
            raise ValueError(f"session {sid!r} too short: fewer than 2 keystrokes")
        n_pairs = len(events) - 1
        for j in range(n_pairs):
            (k1, t1), (k2, t2) = events[j], events[j + 1]
            if t2 <= t1:
                raise ValueError(f"non-monotonic timestamps in session {sid!r}")
            samples.append(TrainingSample(
                key_from=k1, key_to=k2, observed_dt=t2 - t1,
                pair_position=j + 1, pin_length=n_pairs,
            ))
    return samples


def samples_from_entry(pin, sequence, pattern_keys=None):
    """Training samples for one PIN entry: interval j (0-based) labels the
    key pair (keys[j], keys[j+1]) at 1-based pair position j + 1."""
    from .dictionary import pin_pair_keys  # local import to avoid a cycle

    keys = pattern_keys if pattern_keys is not None else pin_pair_keys(pin)
    if len(keys) != len(sequence) + 1:
        raise ValueError("sequence length does not match the key sequence")
    n_pairs = len(sequence)
    return [
        TrainingSample(keys[j], keys[j + 1], float(sequence[j]),
                       pair_position=j + 1, pin_length=n_pairs)
        for j in range(n_pairs)
    ]
