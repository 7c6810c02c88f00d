import math
import warnings

import numpy as np
import pytest
from scipy import stats

import pinforge as pf
from pinforge.dictionary import format_pin, pin_pair_keys
from pinforge.geometry import ENTER
from pinforge.model import TrainingSample, samples_from_entry


def synth_samples(layout, a, b, sigma, n_samples, rng, positions=False, l=6):
    """Random-PIN synthetic training data from the base timing law."""
    samples = []
    while len(samples) < n_samples:
        pin = format_pin(int(rng.integers(0, 10 ** l)), l)
        keys = pin_pair_keys(pin)
        for j in range(l):
            i_val = pf.index_of_difficulty(layout, keys[j], keys[j + 1])
            dt = a + b * i_val + (rng.normal(0.0, sigma) if sigma else 0.0)
            samples.append(TrainingSample(
                keys[j], keys[j + 1], max(dt, 1e-6),
                pair_position=j + 1 if positions else None,
                pin_length=l if positions else None))
    return samples[:n_samples]


def test_predict_reference_values(layout, canonical_model):
    m = canonical_model
    assert pf.predict_interkey(m, layout, "5", "0") == pytest.approx(232.9502, abs=0.02)
    assert pf.predict_interkey(m, layout, "2", "2") == m.a
    assert pf.predict_interkey(m, layout, "7", ENTER) == pytest.approx(268.502, abs=0.02)


def test_predict_repeated_key_equals_intercept(layout, canonical_model):
    for k in "0123456789":
        assert pf.predict_interkey(canonical_model, layout, k, k) == canonical_model.a
    assert pf.predict_interkey(canonical_model, layout, ENTER, ENTER) == canonical_model.a


def test_model_invariants():
    with pytest.raises(ValueError, match="positive"):
        pf.FittsModel(a=0.0, b=10.0)
    with pytest.raises(ValueError, match="positive"):
        pf.FittsModel(a=-5.0, b=10.0)
    with pytest.raises(ValueError, match="finite"):
        pf.FittsModel(a=100.0, b=math.nan)
    with pytest.raises(ValueError, match="finite"):
        pf.ExtendedModel(100.0, 10.0, 1.0, 1.0, math.inf, 1.0)


def test_training_sample_validation():
    with pytest.raises(ValueError, match="positive"):
        TrainingSample("1", "2", 0.0)
    with pytest.raises(ValueError, match="pin_length"):
        TrainingSample("1", "2", 100.0, pair_position=1)
    with pytest.raises(ValueError, match="outside"):
        TrainingSample("1", "2", 100.0, pair_position=7, pin_length=6)


def test_fit_noiseless_exact(layout):
    rng = np.random.default_rng(3)
    samples = synth_samples(layout, 150.0, 40.0, 0.0, 600, rng)
    model, report = pf.fit_fitts(samples, layout)
    assert abs(model.a - 150.0) / 150.0 < 1e-9
    assert abs(model.b - 40.0) / 40.0 < 1e-9
    assert report.residual_sd < 1e-9
    assert report.n_samples == 600


def test_fit_rank_deficient(layout):
    same_pair = [TrainingSample("5", "0", 230.0 + i) for i in range(10)]
    with pytest.raises(ValueError, match="rank-deficient"):
        pf.fit_fitts(same_pair, layout)
    with pytest.raises(ValueError, match="too few"):
        pf.fit_fitts(same_pair[:2], layout)


def test_fit_scale_consistency(layout):
    rng = np.random.default_rng(4)
    samples = synth_samples(layout, 140.0, 45.0, 12.0, 300, rng)
    m1, _ = pf.fit_fitts(samples, layout)
    doubled = [TrainingSample(s.key_from, s.key_to, 2.0 * s.observed_dt)
               for s in samples]
    m2, _ = pf.fit_fitts(doubled, layout)
    # power-of-two scaling commutes with rounding, so this is exact
    assert m2.a == 2.0 * m1.a
    assert m2.b == 2.0 * m1.b
    tripled = [TrainingSample(s.key_from, s.key_to, 3.0 * s.observed_dt)
               for s in samples]
    m3, _ = pf.fit_fitts(tripled, layout)
    assert m3.a == pytest.approx(3.0 * m1.a, rel=1e-12)
    assert m3.b == pytest.approx(3.0 * m1.b, rel=1e-12)


def test_fit_slope_recovery_monte_carlo(layout):
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        samples = synth_samples(layout, 135.912, 47.7334, 10.0, 1350, rng)
        model, _ = pf.fit_fitts(samples, layout)
        if abs(model.b - 47.7334) <= 2.0:
            hits += 1
    assert hits >= 95


def test_negative_slope_warns(layout):
    rng = np.random.default_rng(5)
    samples = []
    # decreasing trend forces a negative fitted slope
    for i in range(30):
        pair = ("3", "1") if i % 2 else ("2", "2")
        i_val = pf.index_of_difficulty(layout, *pair)
        samples.append(TrainingSample(pair[0], pair[1],
                                      300.0 - 50.0 * i_val + rng.normal(0, 1)))
    with pytest.warns(UserWarning, match="negative"):
        pf.fit_fitts(samples, layout)


def test_p_values_uniform_under_null(layout):
    pvals = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for seed in range(2000):
            rng = np.random.default_rng(10_000 + seed)
            samples = synth_samples(layout, 200.0, 0.0, 20.0, 36, rng)
            _, report = pf.fit_fitts(samples, layout)
            pvals.append(report.p_value("b"))
    ks = stats.kstest(pvals, "uniform")
    assert ks.pvalue > 0.001


def test_t_distribution_against_independent_oracle():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 40

    def oracle_two_sided(t_val, df):
        x = mpmath.mpf(df) / (df + mpmath.mpf(t_val) ** 2)
        return float(mpmath.betainc(mpmath.mpf(df) / 2, mpmath.mpf(1) / 2,
                                    0, x, regularized=True))

    for t_val, df in [(2.228, 10), (1.0, 5), (3.5, 2), (0.5, 100), (2.0, 28)]:
        ours = 2.0 * stats.t.sf(t_val, df)
        assert abs(ours - oracle_two_sided(t_val, df)) < 1e-12
    # published two-sided 5% quantile at 10 degrees of freedom
    assert 2.0 * stats.t.sf(2.228, 10) == pytest.approx(0.05, abs=1e-3)


def test_fit_extended_noiseless_exact(layout):
    rng = np.random.default_rng(6)
    truth = pf.ExtendedModel(150.0, 40.0, 17.0, 8.0, 7.0, 31.0)
    samples = []
    for _ in range(200):
        pin = format_pin(int(rng.integers(0, 10 ** 6)), 6)
        keys = pin_pair_keys(pin)
        for j in range(6):
            i_val = pf.index_of_difficulty(layout, keys[j], keys[j + 1])
            dt = truth.a + truth.b * i_val + truth.position_offset(j + 1, 6)
            samples.append(TrainingSample(keys[j], keys[j + 1], dt,
                                          pair_position=j + 1, pin_length=6))
    fitted, report = pf.fit_extended(samples, layout, 6)
    for name in "abcdef":
        got = getattr(fitted, name)
        want = getattr(truth, name)
        assert abs(got - want) / abs(want) < 1e-9
    assert report.p_value("a") < 1e-6  # strong effects are significant
    assert report.p_value("b") < 1e-6


def test_fit_extended_requires_positions(layout):
    rng = np.random.default_rng(7)
    samples = synth_samples(layout, 140.0, 40.0, 5.0, 60, rng, positions=False)
    with pytest.raises(ValueError, match="pair_position"):
        pf.fit_extended(samples, layout, 6)


def test_fit_extended_missing_positions(layout):
    rng = np.random.default_rng(8)
    base = synth_samples(layout, 140.0, 40.0, 5.0, 120, rng, positions=True)
    only_late = [s for s in base if s.pair_position >= 5]
    with pytest.raises(ValueError, match="missing positions"):
        pf.fit_extended(only_late, layout, 6)


def test_fit_extended_null_effects_nonsignificant(layout):
    ok = 0
    for seed in range(30):
        rng = np.random.default_rng(1000 + seed)
        samples = synth_samples(layout, 135.912, 47.7334, 15.0, 1350, rng,
                                positions=True)
        _, report = pf.fit_extended(samples, layout, 6)
        if all(report.p_value(nm) >= 0.01 for nm in "cdef"):
            ok += 1
    assert ok >= 25


def test_ingest_keystroke_log_basic():
    log = "\n".join([
        "# comment",
        "sess1,5,0",
        "sess1,0,233",
        "sess1,4,466",
    ])
    samples = pf.ingest_keystroke_log(log)
    assert len(samples) == 2
    assert (samples[0].key_from, samples[0].key_to) == ("5", "0")
    assert samples[0].observed_dt == 233.0
    assert samples[0].pair_position == 1
    assert samples[1].observed_dt == 233.0
    assert samples[1].pair_position == 2
    assert samples[1].pin_length == 2


def test_ingest_keystroke_log_errors():
    with pytest.raises(ValueError, match="non-monotonic"):
        pf.ingest_keystroke_log("s,5,100\ns,0,50\n")
    with pytest.raises(ValueError, match="too short"):
        pf.ingest_keystroke_log("s,5,100\n")
    with pytest.raises(ValueError, match="unknown key"):
        pf.ingest_keystroke_log("s,q,0\ns,5,100\n")
    with pytest.raises(ValueError, match="malformed"):
        pf.ingest_keystroke_log("s,5\n")
    with pytest.raises(ValueError, match="non-monotonic"):
        pf.ingest_keystroke_log("s,5,100\ns,0,100\n")


def test_ingest_interleaved_sessions():
    log = "a,1,0\nb,7,0\na,2,200\nb,8,150\n"
    samples = pf.ingest_keystroke_log(log)
    assert len(samples) == 2
    assert {(s.key_from, s.key_to, s.observed_dt) for s in samples} == {
        ("1", "2", 200.0), ("7", "8", 150.0)}


def test_samples_from_entry():
    samples = samples_from_entry("50", np.array([233.0, 250.0]))
    assert [(s.key_from, s.key_to) for s in samples] == [("5", "0"), ("0", ENTER)]
    assert [s.pair_position for s in samples] == [1, 2]
    with pytest.raises(ValueError, match="length"):
        samples_from_entry("50", np.array([233.0]))


def test_fit_report_lookup(layout):
    rng = np.random.default_rng(9)
    samples = synth_samples(layout, 140.0, 45.0, 10.0, 200, rng)
    _, report = pf.fit_fitts(samples, layout)
    assert report.names == ("a", "b")
    assert report.coefficient("a") == report.coefficients[0]
    assert 0.0 <= report.p_value("b") <= 1.0
    assert np.all(report.standard_errors > 0)
