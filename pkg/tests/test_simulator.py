import numpy as np
import pytest

import pinforge as pf
from pinforge.dictionary import predicted_sequence
from pinforge.model import ingest_keystroke_log

from conftest import zero_noise_profile


@pytest.fixture()
def truth(canonical_model, layout):
    return pf.GroundTruth(canonical_model, layout)


def test_zero_noise_reproduces_dictionary_rows(truth, dict4):
    prof = zero_noise_profile()
    rng = np.random.default_rng(0)
    for v in rng.integers(0, 10 ** 4, 50):
        pin = f"{int(v):04d}"
        seq = pf.simulate_entry(truth, pin, prof)
        assert np.array_equal(seq, dict4.sequence_for(pin))


def test_speed_scale_preserves_direction(truth, dict4):
    prof = pf.TypistProfile(speed_scale=2.0, noise_sd=0.0, quantization=0.0,
                            min_interval=1e-9, seed=0)
    seq = pf.simulate_entry(truth, "5043", prof)
    assert pf.cosine_similarity(seq, dict4.sequence_for("5043")) == 1.0


def test_quantization_nearest_multiple(truth):
    prof = pf.TypistProfile(speed_scale=1.0, noise_sd=0.0, quantization=15.0,
                            min_interval=1e-9, seed=0)
    seq = pf.simulate_entry(truth, "50", prof)
    # the '5'->'0' prediction 232.9502 sits 7.05 below 240 and 7.95 above 225
    assert seq[0] == 240.0
    assert np.all(seq % 15.0 == 0.0)


def test_quantization_ties_round_up(layout):
    model = pf.FittsModel(a=15.0, b=0.0)
    truth = pf.GroundTruth(model, layout)
    prof = pf.TypistProfile(speed_scale=1.0, noise_sd=0.0, quantization=10.0,
                            min_interval=1e-9, seed=0)
    seq = pf.simulate_entry(truth, "77", prof)
    assert seq[0] == 20.0  # 15 is equidistant from 10 and 20


def test_min_interval_clamp(truth):
    prof = pf.TypistProfile(speed_scale=1.0, noise_sd=0.0, quantization=0.0,
                            min_interval=500.0, seed=0)
    seq = pf.simulate_entry(truth, "5043", prof)
    assert np.all(seq == 500.0)


def test_determinism_and_substreams(truth):
    prof = pf.TypistProfile(seed=99)
    a = pf.simulate_entry(truth, "5043", prof, entry_index=0)
    b = pf.simulate_entry(truth, "5043", prof, entry_index=0)
    assert np.array_equal(a, b)
    c = pf.simulate_entry(truth, "5043", prof, entry_index=1)
    assert not np.array_equal(a, c)
    d = pf.simulate_entry(truth, "5044", prof, entry_index=0)
    assert not np.array_equal(a, d)


def test_profile_validation():
    with pytest.raises(ValueError, match="speed_scale"):
        pf.TypistProfile(speed_scale=0.0)
    with pytest.raises(ValueError, match="noise_sd"):
        pf.TypistProfile(noise_sd=-1.0)
    with pytest.raises(ValueError, match="quantization"):
        pf.TypistProfile(quantization=-1.0)
    with pytest.raises(ValueError, match="min_interval"):
        pf.TypistProfile(min_interval=0.0)


def test_cohort_cardinality_and_labels(truth):
    profiles = pf.default_profiles(1, seed=4)
    pins = [f"{v:04d}" for v in range(50)]
    cohort = pf.simulate_cohort(truth, pins, profiles, 15)
    assert len(cohort) == 750
    assert {e.subject_id for e in cohort} == {"s000"}
    assert cohort[0].case_id == "s000-0000-0"
    assert all(e.true_pin is not None for e in cohort)


def test_cohort_determinism(truth):
    profiles = pf.default_profiles(3, seed=8)
    a = pf.simulate_cohort(truth, ["5043", "1202"], profiles, 4)
    b = pf.simulate_cohort(truth, ["5043", "1202"], profiles, 4)
    assert all(np.array_equal(x.sequence, y.sequence) for x, y in zip(a, b))


def test_cohort_order_independence(truth):
    """Entries depend only on (subject, pin, entry index), not on the order
    the cohort was generated in."""
    profiles = pf.default_profiles(2, seed=3)
    full = pf.simulate_cohort(truth, ["11", "22"], profiles, 2)
    lookup = {e.case_id: e.sequence for e in full}
    from pinforge.simulator import _subject_tag
    for sid, profile in zip(("s000", "s001"), profiles):
        for pin in ("22", "11"):
            for k in (1, 0):
                solo = pf.simulate_entry(truth, pin, profile, entry_index=k,
                                         subject_tag=_subject_tag(sid))
                assert np.array_equal(solo, lookup[f"{sid}-{pin}-{k}"])


def test_speed_only_difference_keeps_cosine(truth):
    base = pf.TypistProfile(speed_scale=1.0, noise_sd=0.0, quantization=0.0,
                            min_interval=1e-9, seed=5)
    fast = pf.TypistProfile(speed_scale=2.0, noise_sd=0.0, quantization=0.0,
                            min_interval=1e-9, seed=5)
    ca = pf.simulate_cohort(truth, ["504316"], [base], 3)
    cb = pf.simulate_cohort(truth, ["504316"], [fast], 3)
    for x, y in zip(ca, cb):
        assert pf.cosine_similarity(x.sequence, y.sequence) == 1.0


def test_noise_mean_converges(truth):
    prof = pf.TypistProfile(speed_scale=1.0, noise_sd=25.0, quantization=0.0,
                            min_interval=1.0, seed=17)
    n = 10_000
    first = np.empty(n)
    for k in range(n):
        first[k] = pf.simulate_entry(truth, "50", prof, entry_index=k)[0]
    target = predicted_sequence(truth.model, truth.layout, "50")[0]
    assert abs(first.mean() - target) < 3 * 25.0 / np.sqrt(n)


def test_cohort_errors(truth):
    with pytest.raises(ValueError, match="at least one"):
        pf.simulate_cohort(truth, [], pf.default_profiles(1, seed=1), 2)
    with pytest.raises(ValueError, match="entries_per_pin"):
        pf.simulate_cohort(truth, ["12"], pf.default_profiles(1, seed=1), 0)
    with pytest.raises(ValueError, match="align"):
        pf.simulate_cohort(truth, ["12"], pf.default_profiles(2, seed=1), 1,
                           subject_ids=["only-one"])


def test_keystroke_log_round_trip_exact(truth):
    # default profiles quantize to a 15 ms grid: cumulative sums and their
    # differences are then exact in floating point
    profiles = pf.default_profiles(2, seed=21)
    cohort = pf.simulate_cohort(truth, ["5043", "9218"], profiles, 3)
    log = pf.export_keystroke_log(cohort)
    samples = ingest_keystroke_log(log)
    recovered = np.array([s.observed_dt for s in samples])
    original = np.concatenate([e.sequence for e in cohort])
    assert np.array_equal(recovered, original)
    positions = [s.pair_position for s in samples[:4]]
    assert positions == [1, 2, 3, 4]


def test_keystroke_log_round_trip_unquantized(truth):
    prof = [pf.TypistProfile(noise_sd=10.0, quantization=0.0,
                             min_interval=1.0, seed=2)]
    cohort = pf.simulate_cohort(truth, ["504316"], prof, 5)
    samples = ingest_keystroke_log(pf.export_keystroke_log(cohort))
    recovered = np.array([s.observed_dt for s in samples])
    original = np.concatenate([e.sequence for e in cohort])
    # timestamp subtraction re-rounds: exact to within one ulp of the sums
    assert np.max(np.abs(recovered - original)) < 1e-9


def test_export_hand_example(truth):
    entry = pf.ObservedEntry(case_id="c0", subject_id="s0",
                             sequence=np.array([233.0, 233.0]), true_pin="50")
    log = pf.export_keystroke_log([entry])
    lines = [l for l in log.splitlines() if not l.startswith("#")]
    assert lines == ["c0,5,0.0", "c0,0,233.0", "c0,ENTER,466.0"]


def test_export_empty_cohort_is_header_only():
    log = pf.export_keystroke_log([])
    assert log.strip() == "# pinforge-keylog v1"


def test_export_errors(truth):
    anon = pf.ObservedEntry(case_id="c", subject_id="s",
                            sequence=np.array([200.0, 210.0]))
    with pytest.raises(ValueError, match="no true PIN"):
        pf.export_keystroke_log([anon])
    wrong = pf.ObservedEntry(case_id="c", subject_id="s",
                             sequence=np.array([200.0, 210.0, 220.0]),
                             true_pin="50")
    with pytest.raises(ValueError, match="does not fit"):
        pf.export_keystroke_log([wrong])


def test_interleaved_simulation(truth, canonical_model):
    circ = pf.circular_layout(1.0)
    ctruth = pf.GroundTruth(canonical_model, circ)
    prof = zero_noise_profile()
    seq = pf.simulate_entry(ctruth, "504", prof, pattern="interleaved")
    d = pf.build_interleaved_dictionary(canonical_model, circ, 3)
    assert np.array_equal(seq, d.sequence_for("504"))
    assert seq.size == 7
    log = pf.export_keystroke_log(
        [pf.ObservedEntry(case_id="c", subject_id="s", sequence=seq,
                          true_pin="504")], pattern="interleaved")
    assert log.count("ENTER") == 5


def test_default_profiles():
    profs = pf.default_profiles(40, seed=10)
    scales = np.array([p.speed_scale for p in profs])
    assert np.all((scales >= 0.7) & (scales <= 1.4))
    assert len({p.seed for p in profs}) == 40
    again = pf.default_profiles(40, seed=10)
    assert profs == again
    with pytest.raises(ValueError, match="at least one"):
        pf.default_profiles(0, seed=1)
