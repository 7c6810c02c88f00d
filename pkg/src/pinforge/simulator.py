"""Synthetic typist oracle: noisy, speed-scaled, grid-quantized interval
sequences generated from a ground-truth model.

Every entry draws from its own substream derived from (seed, subject tag,
pin, entry index), so cohorts are reproducible bit for bit and independent
of generation order.
"""

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .attack import ObservedEntry
from .dictionary import interleaved_pair_keys, parse_pin, pin_pair_keys, predicted_sequence
from .model import KEYLOG_HEADER


@dataclass(frozen=True)
class TypistProfile:
    """Synthetic-user parameters. speed_scale multiplies every model
    prediction; noise_sd is per-interval Gaussian jitter (ms); quantization
    snaps to a ms grid (0 disables, ties round up); min_interval floors the
    result."""

    speed_scale: float = 1.0
    noise_sd: float = 25.0
    quantization: float = 15.0
    min_interval: float = 30.0
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.speed_scale) and self.speed_scale > 0):
            raise ValueError(f"speed_scale must be positive, got {self.speed_scale}")
        if self.noise_sd < 0:
            raise ValueError(f"noise_sd must be >= 0, got {self.noise_sd}")
        if self.quantization < 0:
            raise ValueError(f"quantization must be >= 0, got {self.quantization}")
        if not self.min_interval > 0:
            raise ValueError(f"min_interval must be positive, got {self.min_interval}")


@dataclass(frozen=True)
class GroundTruth:
    """The generating model/layout pair."""

    model: object
    layout: object


def _subject_tag(subject_id):
    digest = hashlib.sha256(subject_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def _entry_rng(profile, pin, entry_index, subject_tag=0):
    ss = np.random.SeedSequence(
        entropy=[profile.seed, subject_tag, len(pin), int(pin, 10), entry_index])
    return np.random.default_rng(ss)


def simulate_entry(truth, pin, profile, entry_index=0, subject_tag=0,
                   pattern="standard", include_final_double_press=True):
    """One simulated interval sequence:
    clamp(quantize(speed_scale * prediction + N(0, noise_sd^2))).

    Deterministic given (seed, subject tag, pin, entry index). With zero
    noise, unit scale and no quantization the output equals the model's
    predicted sequence bitwise.
    """
    parse_pin(pin)
    seq = predicted_sequence(truth.model, truth.layout, pin, pattern=pattern,
                             include_final_double_press=include_final_double_press)
    rng = _entry_rng(profile, pin, entry_index, subject_tag)
    out = profile.speed_scale * seq + rng.normal(0.0, profile.noise_sd, seq.size)
    if profile.quantization > 0:
        out = np.floor(out / profile.quantization + 0.5) * profile.quantization
    return np.maximum(out, profile.min_interval)


def simulate_cohort(truth, pins, profiles, entries_per_pin, subject_ids=None,
                    pattern="standard", include_final_double_press=True):
    """Observed entries for every (profile, pin) pair, entries_per_pin each.

    Subjects default to s000, s001, ... by profile position; entries carry
    case ids `<subject>-<pin>-<entry index>`.
    """
    pins = list(pins)
    profiles = list(profiles)
    if not pins or not profiles:
        raise ValueError("cohort needs at least one pin and one profile")
    if entries_per_pin < 1:
        raise ValueError(f"entries_per_pin must be >= 1, got {entries_per_pin}")
    if subject_ids is None:
        subject_ids = [f"s{i:03d}" for i in range(len(profiles))]
    elif len(subject_ids) != len(profiles):
        raise ValueError("subject_ids and profiles must align")
    cohort = []
    for subject, profile in zip(subject_ids, profiles):
        tag = _subject_tag(subject)
        for pin in pins:
            for k in range(entries_per_pin):
                seq = simulate_entry(
                    truth, pin, profile, entry_index=k, subject_tag=tag,
                    pattern=pattern,
                    include_final_double_press=include_final_double_press)
                cohort.append(ObservedEntry(
                    case_id=f"{subject}-{pin}-{k}", subject_id=subject,
                    sequence=seq, true_pin=pin))
    return cohort


def export_keystroke_log(cohort, pattern="standard",
                         include_final_double_press=True):
    """Key-down log whose per-session consecutive differences reproduce each
    entry's sequence (first key-down at 0). Round-trips through
    ingest_keystroke_log; exact for grid-quantized sequences."""
    lines = [KEYLOG_HEADER]
    for e in cohort:
        if e.true_pin is None:
            raise ValueError(f"case {e.case_id!r} has no true PIN; cannot "
                             "reconstruct its key sequence")
        if pattern == "standard":
            keys = pin_pair_keys(e.true_pin)
        elif pattern == "interleaved":
            keys = interleaved_pair_keys(e.true_pin, include_final_double_press)
        else:
            raise ValueError(f"unknown entry pattern {pattern!r}")
        if len(keys) != e.sequence.size + 1:
            raise ValueError(f"case {e.case_id!r}: sequence length "
                             f"{e.sequence.size} does not fit the entry pattern")
        t = 0.0
        lines.append(f"{e.case_id},{keys[0]},{t!r}")
        for key, dt in zip(keys[1:], e.sequence):
            t += float(dt)
            lines.append(f"{e.case_id},{key},{t!r}")
    return "\n".join(lines) + "\n"


def default_profiles(n, seed, noise_sd=25.0, quantization=15.0,
                     min_interval=30.0, speed_range=(0.7, 1.4)):
    """Cohort profiles with log-uniform speed scales over speed_range and
    per-profile seeds derived from the given seed."""
    if n < 1:
        raise ValueError("need at least one profile")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x9E3779B9]))
    lo, hi = speed_range
    if not 0 < lo <= hi:
        raise ValueError(f"invalid speed range {speed_range}")
    scales = np.exp(rng.uniform(math.log(lo), math.log(hi), n))
    seeds = rng.integers(0, 2 ** 63 - 1, n)
    return [TypistProfile(speed_scale=float(s), noise_sd=noise_sd,
                          quantization=quantization, min_interval=min_interval,
                          seed=int(sd))
            for s, sd in zip(scales, seeds)]
