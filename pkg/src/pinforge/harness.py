"""Experiment orchestration: end-to-end evaluation of the general, targeted,
multi-entry and known-digits attacks plus the circular-keypad countermeasure,
on synthetic cohorts sampled per strength level.

Every run derives all randomness from the plan seed, so reports are
reproducible bit for bit (wall-clock timings excepted, which are kept out of
the data files).
"""

import hashlib
import itertools
import math
import time
from dataclasses import dataclass, field, fields

import numpy as np

from .attack import (AttackOutcome, random_baseline, run_attack,
                     success_curve, _true_rank)
from .dictionary import (DigitConstraint, build_dictionary,
                         build_interleaved_dictionary, format_pin,
                         load_dictionary, reduce_dictionary)
from .geometry import ENTER, builtin_layout, circular_layout, key_distance, load_layout
from .model import DEFAULT_A, DEFAULT_B, FittsModel, fit_fitts, samples_from_entry
from .simulator import (GroundTruth, default_profiles, simulate_cohort,
                        simulate_entry)
from .strength import partition_levels, strength_measure, strength_measure_sampled


@dataclass(frozen=True)
class ExperimentPlan:
    """Everything a run needs; serializable as key = value text."""

    pin_length: int = 4
    a: float = DEFAULT_A
    b: float = DEFAULT_B
    layout: str = "standard"
    dictionary_path: str | None = None
    metric: str = "cosine"
    pins: tuple = ()              # explicit test PINs; empty = sample per level
    pins_per_level: int = 50
    entries_per_pin: int = 15
    pins_per_subject: int = 5
    noise_sd: float = 25.0
    quantization: float = 15.0
    min_interval: float = 30.0
    speed_min: float = 0.7
    speed_max: float = 1.4
    xs: tuple = (1, 3, 10, 100, 1000)
    seed: int = 0
    multi_k: int = 10
    known_digits: int = 2
    training_subjects: int = 5
    training_pins: int = 3
    countermeasure_cases: int = 5000
    countermeasure_radius: float = 1.0
    include_final_double_press: bool = True

    def __post_init__(self):
        if not 2 <= self.pin_length <= 10:
            raise ValueError("plans need pin_length in 2..10")
        if tuple(sorted(self.xs)) != tuple(self.xs) or len(self.xs) == 0:
            raise ValueError("xs must be non-empty and ascending")
        if min(self.xs) < 1:
            raise ValueError("attempt counts must be >= 1")
        if self.pins_per_level < 1 or self.entries_per_pin < 1:
            raise ValueError("sampling counts must be >= 1")
        if not 1 <= self.known_digits < self.pin_length:
            raise ValueError("known_digits must be in 1..pin_length-1")


_PLAN_INT_TUPLES = {"xs"}
_PLAN_STR_TUPLES = {"pins"}


def plan_to_text(plan):
    lines = []
    for f in fields(ExperimentPlan):
        v = getattr(plan, f.name)
        if isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def plan_from_text(text):
    known = {f.name: f for f in fields(ExperimentPlan)}
    kwargs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"malformed plan line {lineno}: {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in known:
            raise ValueError(f"unknown plan key {key!r} (line {lineno})")
        if key in _PLAN_INT_TUPLES:
            kwargs[key] = tuple(int(v) for v in val.split(",") if v)
        elif key in _PLAN_STR_TUPLES:
            kwargs[key] = tuple(v.strip() for v in val.split(",") if v.strip())
        elif key == "dictionary_path":
            kwargs[key] = None if val in ("", "None") else val
        else:
            target = ExperimentPlan.__dataclass_fields__[key].default
            if isinstance(target, bool):
                kwargs[key] = val.lower() in ("1", "true", "yes")
            elif isinstance(target, int):
                kwargs[key] = int(val)
            elif isinstance(target, float):
                kwargs[key] = float(val)
            else:
                kwargs[key] = val
    return ExperimentPlan(**kwargs)


@dataclass(eq=False)
class ExperimentReport:
    """Per-level and aggregate success curves, the random-guessing baseline,
    improvement ratios, and run metadata. Timings are informational only and
    excluded from the reproducibility contract."""

    mode: str
    plan: ExperimentPlan
    per_level_curves: dict
    aggregate_curve: list
    baseline_curve: list
    improvement: dict
    outcomes: list
    levels_by_pin: dict
    metadata: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)


def resolve_layout(spec):
    """Layout from a name ("standard", "circular", "circular:<radius>",
    "circular-offset") or a layout file path."""
    if spec.startswith("circular:"):
        return circular_layout(float(spec.split(":", 1)[1]), enter_at_center=True)
    known = builtin_layout(spec)
    if known is not None:
        return known
    with open(spec, "r", encoding="utf-8") as fh:
        return load_layout(fh.read())


def _subseed(seed, *tags):
    text = f"{seed}|" + "|".join(str(t) for t in tags)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")


_PARTITION_CACHE = {}


def level_partition_for(model, layout, pin_length):
    """Strength partition of the full space under a model; cached. Exact for
    lengths up to 4, sampled (approximate) beyond."""
    key = (model.a, model.b, layout.content_hash(), pin_length)
    if key not in _PARTITION_CACHE:
        dictionary = build_dictionary(model, layout, pin_length)
        if pin_length <= 4:
            profile = strength_measure(dictionary)
        else:
            profile = strength_measure_sampled(dictionary, seed=0)
        _PARTITION_CACHE[key] = partition_levels(profile)
    return _PARTITION_CACHE[key]


def _sample_test_pins(plan, partition, rng):
    """Per-level sample of distinct PINs (capped at the level size),
    interleaved across levels for subject assignment."""
    per_level = {}
    for level in range(1, partition.n_levels + 1):
        members = partition.pins_at_level(level)
        count = min(plan.pins_per_level, members.size)
        chosen = rng.choice(members, size=count, replace=False)
        per_level[level] = [format_pin(int(v), plan.pin_length) for v in chosen]
    interleaved = []
    for group in itertools.zip_longest(*per_level.values()):
        interleaved.extend(p for p in group if p is not None)
    return per_level, interleaved


def _build_cohort(plan, truth, pins_in_order, seed_tag):
    """Assign pins to subjects in chunks and simulate their entries."""
    chunks = [pins_in_order[i:i + plan.pins_per_subject]
              for i in range(0, len(pins_in_order), plan.pins_per_subject)]
    profiles = default_profiles(
        len(chunks), seed=_subseed(plan.seed, seed_tag),
        noise_sd=plan.noise_sd, quantization=plan.quantization,
        min_interval=plan.min_interval,
        speed_range=(plan.speed_min, plan.speed_max))
    cohort = []
    assignment = {}
    for idx, (chunk, profile) in enumerate(zip(chunks, profiles)):
        subject = f"subj{idx:03d}"
        assignment[subject] = (chunk, profile)
        cohort.extend(simulate_cohort(truth, chunk, [profile],
                                      plan.entries_per_pin,
                                      subject_ids=[subject]))
    return cohort, assignment


def _train_attacker_model(plan, truth, require_disjoint_from=()):
    """Fit the attack model from simulated attacker-side typists."""
    rng = np.random.default_rng(_subseed(plan.seed, "train-pins"))
    pins = [format_pin(int(v), plan.pin_length)
            for v in rng.integers(0, 10 ** plan.pin_length, plan.training_pins)]
    profiles = default_profiles(
        plan.training_subjects, seed=_subseed(plan.seed, "train-profiles"),
        noise_sd=plan.noise_sd, quantization=plan.quantization,
        min_interval=plan.min_interval,
        speed_range=(plan.speed_min, plan.speed_max))
    subject_ids = [f"train{i:03d}" for i in range(plan.training_subjects)]
    overlap = set(subject_ids) & set(require_disjoint_from)
    if overlap:
        raise ValueError(f"training subjects overlap testing subjects: {overlap}")
    cohort = simulate_cohort(GroundTruth(truth.model, truth.layout), pins,
                             profiles, plan.entries_per_pin,
                             subject_ids=subject_ids)
    samples = []
    for e in cohort:
        samples.extend(samples_from_entry(e.true_pin, e.sequence))
    model, report = fit_fitts(samples, truth.layout)
    return model, report, cohort


def _attack_dictionary(plan, layout, fitted_model):
    if plan.dictionary_path is not None:
        return load_dictionary(plan.dictionary_path)
    return build_dictionary(fitted_model, layout, plan.pin_length)


def _baseline_curve(pin_length, known_digits, xs):
    space = 10 ** (pin_length - known_digits)
    return [(int(x), random_baseline(pin_length, known_digits, min(x, space)))
            for x in xs]


def _assemble(mode, plan, outcomes, levels_by_pin, known_digits=0,
              metadata=None, timings=None):
    aggregate = success_curve(outcomes, plan.xs)
    per_level = {}
    by_level = {}
    for o in outcomes:
        lvl = levels_by_pin.get(o.true_pin, 0)
        by_level.setdefault(lvl, []).append(o)
    for lvl in sorted(by_level):
        per_level[lvl] = success_curve(by_level[lvl], plan.xs)
    baseline = _baseline_curve(plan.pin_length, known_digits, plan.xs)
    improvement = {}
    for (x, rate), (_, base) in zip(aggregate, baseline):
        improvement[x] = rate / base if base > 0 else math.inf
    return ExperimentReport(
        mode=mode, plan=plan, per_level_curves=per_level,
        aggregate_curve=aggregate, baseline_curve=baseline,
        improvement=improvement, outcomes=outcomes,
        levels_by_pin=dict(levels_by_pin), metadata=metadata or {},
        timings=timings or {},
    )


def _prepare_cohort(plan, truth):
    """Per-level test PINs and cohort simulation; shared by the evaluation
    modes. Explicit plan PINs skip the strength partition (their level
    labels are then unknown and the report has a single unlabeled group)."""
    if plan.pins:
        pins_in_order = list(plan.pins)
        levels_by_pin = {}
    else:
        partition = level_partition_for(truth.model, truth.layout,
                                        plan.pin_length)
        rng = np.random.default_rng(_subseed(plan.seed, "test-pins"))
        _, pins_in_order = _sample_test_pins(plan, partition, rng)
        levels_by_pin = {p: partition.level_of(p) for p in pins_in_order}
    cohort, assignment = _build_cohort(plan, truth, pins_in_order, "cohort")
    return levels_by_pin, cohort, assignment


def run_general(plan):
    """Attacker-side training, one dictionary, one ranking per cohort entry."""
    t0 = time.perf_counter()
    layout = resolve_layout(plan.layout)
    truth = GroundTruth(FittsModel(plan.a, plan.b), layout)
    levels_by_pin, cohort, _ = _prepare_cohort(plan, truth)
    t1 = time.perf_counter()
    fitted, fit_report, _ = _train_attacker_model(
        plan, truth, require_disjoint_from=[e.subject_id for e in cohort])
    dictionary = _attack_dictionary(plan, layout, fitted)
    t2 = time.perf_counter()
    outcomes = run_attack(dictionary, cohort, mode="general", metric=plan.metric)
    t3 = time.perf_counter()
    metadata = {
        "fitted_a": fitted.a, "fitted_b": fitted.b,
        "residual_sd": fit_report.residual_sd,
        "cases": len(outcomes), "distinct_pins": len(levels_by_pin),
    }
    timings = {"cohort_s": t1 - t0, "train_s": t2 - t1, "attack_s": t3 - t2}
    return _assemble("general", plan, outcomes, levels_by_pin,
                     metadata=metadata, timings=timings)


def run_targeted(plan):
    """Per-subject model fits from that subject's other PINs, then
    per-subject dictionaries; reports the general attack on the same cohort
    for comparison."""
    t0 = time.perf_counter()
    layout = resolve_layout(plan.layout)
    truth = GroundTruth(FittsModel(plan.a, plan.b), layout)
    if plan.pins_per_subject < 3:
        raise ValueError("targeted attacks need pins_per_subject >= 3 "
                         "(2 training PINs plus the attacked PIN)")
    levels_by_pin, cohort, assignment = _prepare_cohort(plan, truth)
    by_subject = {}
    for e in cohort:
        by_subject.setdefault(e.subject_id, []).append(e)
    pick_rng = np.random.default_rng(_subseed(plan.seed, "targeted-picks"))
    outcomes = []
    dict_cache = {}
    for subject in sorted(by_subject):
        entries = by_subject[subject]
        subject_pins = assignment[subject][0]
        by_pin = {}
        for e in entries:
            by_pin.setdefault(e.true_pin, []).append(e)
        for attacked in subject_pins:
            others = [p for p in subject_pins if p != attacked]
            if len(others) < 2:
                raise ValueError(f"subject {subject} lacks training PINs "
                                 f"for {attacked}")
            train_pins = tuple(sorted(
                pick_rng.choice(others, size=2, replace=False)))
            cache_key = (subject, train_pins)
            if cache_key not in dict_cache:
                samples = []
                for p in train_pins:
                    for e in by_pin[p]:
                        samples.extend(samples_from_entry(p, e.sequence))
                model, _ = fit_fitts(samples, layout)
                dict_cache[cache_key] = build_dictionary(
                    model, layout, plan.pin_length)
            dictionary = dict_cache[cache_key]
            for e in by_pin[attacked]:
                rank, score = _true_rank(dictionary, e.sequence, plan.metric,
                                         attacked)
                outcomes.append(AttackOutcome(case_id=e.case_id,
                                              true_pin=attacked,
                                              rank=rank, score=score))
    t1 = time.perf_counter()
    general = run_general(plan)
    report = _assemble("targeted", plan, outcomes, levels_by_pin,
                       timings={"targeted_s": t1 - t0})
    report.metadata["general_aggregate"] = general.aggregate_curve
    report.metadata["success_delta_vs_general"] = {
        x: rate - dict(general.aggregate_curve)[x]
        for x, rate in report.aggregate_curve
    }
    return report


def run_multi_entry(plan, k=None):
    """Averages k same-PIN entries per (subject, pin) group before ranking;
    reports the per-entry general attack alongside."""
    k = plan.multi_k if k is None else k
    if k < 1:
        raise ValueError("multi-entry k must be >= 1")
    if k > plan.entries_per_pin:
        raise ValueError(f"multi-entry k={k} exceeds entries_per_pin="
                         f"{plan.entries_per_pin}")
    t0 = time.perf_counter()
    layout = resolve_layout(plan.layout)
    truth = GroundTruth(FittsModel(plan.a, plan.b), layout)
    levels_by_pin, cohort, _ = _prepare_cohort(plan, truth)
    fitted, _, _ = _train_attacker_model(
        plan, truth, require_disjoint_from=[e.subject_id for e in cohort])
    dictionary = _attack_dictionary(plan, layout, fitted)
    general_outcomes = run_attack(dictionary, cohort, mode="general",
                                  metric=plan.metric)
    multi_outcomes = run_attack(dictionary, cohort, mode="multi_entry",
                                metric=plan.metric, k=k)
    t1 = time.perf_counter()
    report = _assemble("multi_entry", plan, multi_outcomes, levels_by_pin,
                       timings={"total_s": t1 - t0})
    report.metadata.update({
        "k": k,
        "fitted_a": fitted.a, "fitted_b": fitted.b,
        "general_aggregate": success_curve(general_outcomes, plan.xs),
        "general_mean_rank": float(np.mean([o.rank for o in general_outcomes])),
        "multi_mean_rank": float(np.mean([o.rank for o in multi_outcomes])),
    })
    return report


def run_known_digits(plan, positions_revealed=None):
    """For each entry, every position subset of the revealed size constrains
    and shrinks the dictionary; all (entry, subset) cases are pooled."""
    k = plan.known_digits if positions_revealed is None else positions_revealed
    if not 1 <= k < plan.pin_length:
        raise ValueError(f"positions_revealed {k} outside 1..{plan.pin_length - 1}")
    t0 = time.perf_counter()
    layout = resolve_layout(plan.layout)
    truth = GroundTruth(FittsModel(plan.a, plan.b), layout)
    levels_by_pin, cohort, _ = _prepare_cohort(plan, truth)
    fitted, _, _ = _train_attacker_model(
        plan, truth, require_disjoint_from=[e.subject_id for e in cohort])
    dictionary = _attack_dictionary(plan, layout, fitted)
    subsets = list(itertools.combinations(range(plan.pin_length), k))
    outcomes = []
    for subset in subsets:
        groups = {}
        for e in cohort:
            digits = tuple(e.true_pin[p] for p in subset)
            groups.setdefault(digits, []).append(e)
        for digits, entries in groups.items():
            constraints = [DigitConstraint(position=p + 1, digit=d)
                           for p, d in zip(subset, digits)]
            reduced = reduce_dictionary(dictionary, constraints)
            tag = "".join(str(p + 1) for p in subset)
            for e in entries:
                rank, score = _true_rank(reduced, e.sequence, plan.metric,
                                         e.true_pin)
                outcomes.append(AttackOutcome(
                    case_id=f"{e.case_id}@pos{tag}", true_pin=e.true_pin,
                    rank=rank, score=score))
    t1 = time.perf_counter()
    report = _assemble("known_digits", plan, outcomes, levels_by_pin,
                       known_digits=k,
                       timings={"total_s": t1 - t0})
    report.metadata.update({
        "positions_revealed": k,
        "subsets": len(subsets),
        "fitted_a": fitted.a, "fitted_b": fitted.b,
    })
    return report


def run_countermeasure(plan, strict=True):
    """Evaluates the interleaved-ENTER entry scheme on the circular keypad:
    every PIN's predicted vector is identical, so ranking degenerates to the
    deterministic tie order and success matches random guessing."""
    t0 = time.perf_counter()
    layout = (circular_layout(plan.countermeasure_radius, enter_at_center=True)
              if plan.layout == "standard" else resolve_layout(plan.layout))
    if strict:
        dists = [key_distance(layout, str(d), ENTER) for d in range(10)]
        if max(dists) - min(dists) > 1e-9:
            raise ValueError("countermeasure layout is not circular: "
                             "digit-to-ENTER distances differ")
    truth = GroundTruth(FittsModel(plan.a, plan.b), layout)
    dictionary = build_interleaved_dictionary(
        truth.model, layout, plan.pin_length,
        include_final_double_press=plan.include_final_double_press)
    # Structural diagnostic: worst cosine deviation of any row from row 0.
    # Accumulation order matches the ranking path so identical rows score 1.0.
    v0 = dictionary.values[0]
    num = (dictionary.values * v0).sum(axis=1)
    denom = np.sqrt((dictionary.values * dictionary.values).sum(axis=1)
                    * (v0 * v0).sum())
    max_dev = float(np.max(np.abs(1.0 - num / denom)))
    rng = np.random.default_rng(_subseed(plan.seed, "countermeasure-pins"))
    pin_values = rng.integers(0, 10 ** plan.pin_length,
                              plan.countermeasure_cases)
    profiles = default_profiles(
        plan.countermeasure_cases, seed=_subseed(plan.seed, "countermeasure"),
        noise_sd=plan.noise_sd, quantization=plan.quantization,
        min_interval=plan.min_interval,
        speed_range=(plan.speed_min, plan.speed_max))
    outcomes = []
    for i, (pv, profile) in enumerate(zip(pin_values, profiles)):
        pin = format_pin(int(pv), plan.pin_length)
        seq = simulate_entry(
            truth, pin, profile, entry_index=0, pattern="interleaved",
            include_final_double_press=plan.include_final_double_press)
        rank, score = _true_rank(dictionary, seq, plan.metric, pin)
        outcomes.append(AttackOutcome(case_id=f"cm{i:05d}", true_pin=pin,
                                      rank=rank, score=score))
    t1 = time.perf_counter()
    report = _assemble("countermeasure", plan, outcomes, {},
                       timings={"total_s": t1 - t0})
    report.metadata.update({
        "layout": layout.name,
        "intervals_per_entry": dictionary.seq_length,
        "max_cosine_deviation": max_dev,
    })
    return report
