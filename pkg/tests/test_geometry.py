import math

import numpy as np
import pytest

import pinforge as pf
from pinforge.geometry import ENTER, KEY_IDS, KeyGeometry, KeypadLayout


def test_standard_numpad_shape(layout):
    assert len(layout.keys) == 11
    assert {k.key for k in layout.keys} == set(KEY_IDS)
    assert all(k.effective_width == 0.5 for k in layout.keys)


def test_key_distances(layout):
    assert pf.key_distance(layout, "2", "2") == 0.0
    # independent hand computations from the canonical coordinates
    assert pf.key_distance(layout, "5", "0") == pytest.approx(
        math.hypot(0.375, 1.5), abs=1e-9)
    assert pf.key_distance(layout, "4", "3") == pytest.approx(
        math.hypot(1.5, 0.75), abs=1e-9)
    assert pf.key_distance(layout, "3", "1") == 1.5
    for k in KEY_IDS:
        assert pf.key_distance(layout, k, k) == 0.0


def test_distance_symmetry(layout):
    for a in KEY_IDS:
        for b in KEY_IDS:
            assert pf.key_distance(layout, a, b) == pf.key_distance(layout, b, a)


def test_distance_triangle_inequality(layout):
    for a in KEY_IDS:
        for b in KEY_IDS:
            for c in KEY_IDS:
                ab = pf.key_distance(layout, a, b)
                bc = pf.key_distance(layout, b, c)
                ac = pf.key_distance(layout, a, c)
                assert ac <= ab + bc + 1e-12


def test_index_of_difficulty(layout):
    assert pf.index_of_difficulty(layout, "3", "1") == 2.0
    assert pf.index_of_difficulty(layout, "9", "9") == 0.0
    d = math.hypot(0.75, 1.125)
    assert pf.index_of_difficulty(layout, "6", ENTER) == pytest.approx(
        math.log2(d / 0.5 + 1), abs=1e-12)
    assert pf.index_of_difficulty(layout, "6", ENTER) == pytest.approx(
        1.889148, abs=1e-6)


def test_index_of_difficulty_increases_with_distance():
    prev = -1.0
    for sep in np.linspace(0.1, 8.0, 40):
        keys = [KeyGeometry("0", 0.0, 0.0), KeyGeometry("1", sep, 0.0)]
        keys += [KeyGeometry(str(d), 100.0 + d, 50.0) for d in range(2, 10)]
        keys.append(KeyGeometry(ENTER, 200.0, 200.0))
        lay = KeypadLayout(name="sweep", keys=tuple(keys))
        i_val = pf.index_of_difficulty(lay, "0", "1")
        assert i_val > prev
        prev = i_val


def test_unknown_key_errors(layout):
    with pytest.raises(ValueError, match="unknown key"):
        pf.key_distance(layout, "5", "X")
    with pytest.raises(ValueError, match="unknown key"):
        pf.index_of_difficulty(layout, "enter", "5")


def test_circular_layout_distances():
    lay = pf.circular_layout(1.0)
    for d in range(10):
        assert abs(pf.key_distance(lay, str(d), ENTER) - 1.0) < 1e-12
    assert pf.key_distance(lay, "0", "5") == pytest.approx(2.0, abs=1e-12)
    lay3 = pf.circular_layout(3.5)
    for d in range(10):
        assert abs(pf.key_distance(lay3, str(d), ENTER) - 3.5) < 1e-12


def test_circular_layout_offset_control():
    lay = pf.circular_layout(1.0, enter_at_center=False)
    dists = {pf.key_distance(lay, str(d), ENTER) for d in range(10)}
    assert len(dists) > 1


def test_circular_layout_rejects_bad_radius():
    with pytest.raises(ValueError, match="radius"):
        pf.circular_layout(0.0)
    with pytest.raises(ValueError, match="radius"):
        pf.circular_layout(-2.0)


def test_layout_requires_all_keys():
    keys = tuple(KeyGeometry(str(d), float(d), 0.0) for d in range(10))
    with pytest.raises(ValueError, match="incomplete layout"):
        KeypadLayout(name="partial", keys=keys)


def test_layout_rejects_duplicate_keys():
    keys = tuple(KeyGeometry(str(d), float(d), 0.0) for d in range(10))
    keys += (KeyGeometry(ENTER, 10.0, 0.0), KeyGeometry("3", 11.0, 0.0))
    with pytest.raises(ValueError, match="duplicate key"):
        KeypadLayout(name="dup", keys=keys)


def test_layout_rejects_coincident_centers_by_default():
    keys = [KeyGeometry(str(d), float(d), 0.0) for d in range(10)]
    keys.append(KeyGeometry(ENTER, 0.0, 0.0))  # same center as '0'
    with pytest.raises(ValueError, match="degenerate"):
        KeypadLayout(name="deg", keys=tuple(keys))
    lay = KeypadLayout(name="deg", keys=tuple(keys), degenerate_ok=True)
    assert pf.key_distance(lay, "0", ENTER) == 0.0


def test_key_geometry_validation():
    with pytest.raises(ValueError, match="non-positive width"):
        KeyGeometry("5", 0.0, 0.0, 0.0)
    with pytest.raises(ValueError, match="finite"):
        KeyGeometry("5", math.inf, 0.0, 0.5)


def test_layout_round_trip(layout):
    assert pf.load_layout(pf.save_layout(layout)) == layout
    circ = pf.circular_layout(2.0)
    assert pf.load_layout(pf.save_layout(circ)) == circ


def test_load_layout_errors():
    good = pf.save_layout(pf.standard_numpad())
    missing_enter = "\n".join(ln for ln in good.splitlines() if "ENTER" not in ln)
    with pytest.raises(ValueError, match="incomplete layout"):
        pf.load_layout(missing_enter)
    zero_width = good.replace("ENTER,2.25,0.375,0.5", "ENTER,2.25,0.375,0")
    with pytest.raises(ValueError, match="non-positive width"):
        pf.load_layout(zero_width)
    with pytest.raises(ValueError, match="malformed"):
        pf.load_layout(good + "5,1.0\n")
    dup = good + "5,9.0,9.0,0.5\n"
    with pytest.raises(ValueError):
        pf.load_layout(dup)


def test_load_layout_reads_name_comment():
    text = pf.save_layout(pf.circular_layout(1.0))
    assert pf.load_layout(text).name == "circular"
    assert pf.load_layout(text, name="other").name == "other"


def test_random_layout_round_trips():
    rng = np.random.default_rng(11)
    for _ in range(25):
        coords = rng.uniform(-5, 5, (11, 2))
        while len({(x, y) for x, y in coords}) < 11:
            coords = rng.uniform(-5, 5, (11, 2))
        widths = rng.uniform(0.1, 2.0, 11)
        keys = tuple(KeyGeometry(k, float(x), float(y), float(w))
                     for k, (x, y), w in zip(KEY_IDS, coords, widths))
        lay = KeypadLayout(name="rand", keys=keys)
        assert pf.load_layout(pf.save_layout(lay)) == lay
