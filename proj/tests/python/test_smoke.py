import math
from pathlib import Path

import numpy as np
import pytest

import flexagg

DATA = Path(__file__).resolve().parents[2] / "data"
FEEDER = str(DATA / "feeder_toy8.json")
FLEET = str(DATA / "fleet_toy8.json")


@pytest.fixture(scope="module")
def toy8():
    return flexagg.load_model(FLEET, FEEDER, horizon=2)


def test_model_shapes(toy8):
    assert toy8.horizon == 2
    assert toy8.D.shape == (2, toy8.dim)
    assert toy8.W().shape == (toy8.num_rows, toy8.dim)
    assert toy8.w().shape == (toy8.num_rows,)


def test_intervals_are_dispatchable(toy8):
    r = flexagg.solve_apa(toy8)
    lo, hi = np.array(r["lo"]), np.array(r["hi"])
    assert np.all(lo <= hi + 1e-12)
    assert r["objective"] == pytest.approx(float(np.sum(hi - lo)))
    for p in ([lo[0], hi[1]], [hi[0], lo[1]]):
        assert flexagg.solve_pd(toy8, p)["feasible"]
    mc = flexagg.monte_carlo_verify(toy8, list(lo), list(hi), n=50, seed=42)
    assert mc["feasible_rate"] == 1.0


def test_method1_never_beats_apa(toy8):
    apa = flexagg.solve_apa(toy8)
    base = flexagg.solve_apa(toy8, method1=True)
    assert apa["objective"] > base["objective"]


def test_ellipse_boundary_is_dispatchable(toy8):
    s = flexagg.solve_arpa(toy8)
    pts = []
    for per in s["periods"]:
        assert not per["degenerate"]
        y = np.asarray(per["Y"])
        assert per["area"] == pytest.approx(math.pi * abs(np.linalg.det(y)))
        pts.append(np.asarray(per["center"]) + y @ np.array([0.0, 1.0]))
    r = flexagg.solve_pd(toy8, [p[0] for p in pts], [p[1] for p in pts])
    assert r["feasible"]


def test_unreachable_signal_reports_conflict(toy8):
    r = flexagg.solve_pd(toy8, [9.0, 0.6])
    assert not r["feasible"]
    assert any(tag == "tracking.p" for _, tag, _ in r["conflict"])


def test_run_and_errors(tmp_path):
    summary = flexagg.run("aggregate-p", ders=FLEET, feeder=FEEDER, horizon=2, out=str(tmp_path))
    assert (tmp_path / "intervals.csv").read_text().count("\n") == 3
    assert summary["rounds"] >= 1
    with pytest.raises(flexagg.FlexaggError, match="missing.json"):
        flexagg.run("aggregate-p", ders=str(tmp_path / "missing.json"), out=str(tmp_path))
    with pytest.raises(flexagg.FlexaggError):
        flexagg.run("aggregate-p", ders=FLEET, out=str(tmp_path), bogus=1)
