import math
import os
import pathlib

import numpy as np
import pytest

import resetfd

SCENARIOS = pathlib.Path(os.environ.get("RESETFD_SCENARIO_DIR", pathlib.Path(__file__).resolve().parents[2] / "scenarios"))
TWO_PI = 2.0 * math.pi


def test_clegg_describing_function():
    el = resetfd.ResetElement(np.zeros((1, 1)), [1.0], [[1.0]], 0.0, [0.0])
    for w in (0.5, 10.0):
        h1 = resetfd.hosidf(el, w, 1)
        assert abs(h1) * w == pytest.approx(1.6189931866062328, rel=1e-10)
        assert math.degrees(np.angle(h1)) == pytest.approx(-38.146025987222544, rel=1e-10)


def test_notch_depth_and_inverse():
    f = resetfd.notch(resetfd.reference_notch())
    wn = resetfd.reference_notch().omega_n
    assert abs(f(wn)) == pytest.approx(2.38 / 6.79, rel=1e-12)
    assert abs(f(wn) * resetfd.invert(f)(wn) - 1.0) < 1e-12


def test_scenario_pipeline():
    sc = resetfd.load_scenario(SCENARIOS / "c_nl.json")
    assert sc.n_max == 61
    grid = sc.grid
    s2 = resetfd.sigma2_curve(sc.loop, grid)
    assert s2.shape == grid.shape
    assert s2.max() > 0.40
    assert abs(grid[s2.argmax()] / TWO_PI - 28.0) <= 5.0
    rep = resetfd.verify_bound(sc.loop, resetfd.notch(resetfd.reference_notch()), grid, 0.15)
    assert rep["feasible"] and rep["direct_feasible"]
    shaped = sc.loop.with_filter(resetfd.notch(resetfd.reference_notch()))
    assert resetfd.sigma2_curve(shaped, grid).max() <= 0.15


def test_sensitivity_matches_sigma2():
    loop = resetfd.case_study_reset_loop()
    w = TWO_PI * 28.0
    s = resetfd.sensitivity(loop, w, 61)
    assert s.shape == (61,)
    assert s[1] == 0 and s[3] == 0
    curve = resetfd.sigma2_curve(loop, [w])
    assert resetfd.sigma2(list(s)) == pytest.approx(curve[0], rel=1e-12)
    d = resetfd.sensitivity(loop, w, 61, disturbance=True)
    assert resetfd.sigma2(list(d)) == pytest.approx(curve[0], rel=1e-10)


def test_linear_loop_has_no_harmonics():
    s2 = resetfd.sigma2_curve(resetfd.case_study_linear_loop(), np.geomspace(TWO_PI, TWO_PI * 1000, 50))
    assert np.all(s2 == 0.0)


def test_simulation_round_trip():
    loop = resetfd.case_study_reset_loop()
    f = resetfd.snap_frequency(40.0, 5e-5)
    r = resetfd.simulate_steady(loop, f)
    assert r["settled"]
    assert len(r["e"]) == len(r["y"])
    assert abs(r["harmonics"][0]) == pytest.approx(abs(resetfd.sensitivity(loop, TWO_PI * f, 1)[0]), rel=0.15)


def test_errors_map_to_python_exceptions():
    with pytest.raises(resetfd.ValidationError):
        resetfd.RationalTF([1.0], [0.0, 1.0])
    with pytest.raises(resetfd.Error):
        resetfd.parse_scenario('{"name": "x", "colour": 1}')
    with pytest.raises(resetfd.ParseError):
        resetfd.parse_scenario("{")
