import math

import pytest

import surf


def test_distribution_basics():
    d = surf.StepDistribution("geom:0.5")
    assert d.spec == "geom:0.5"
    assert d.pmf(1) == 0.5
    assert d.tail(3) == 0.25
    assert d.mean_info()["value"] == pytest.approx(2.0)
    draws = d.sample(1000, 7)
    assert len(draws) == 1000 and min(draws) >= 1
    assert draws == d.sample(1000, 7)


def test_bad_spec_raises():
    with pytest.raises(ValueError):
        surf.StepDistribution("geom:1.5")
    with pytest.raises(surf.SpecError):
        surf.simulate("zipf:-1", 10)


def test_worked_example():
    assert surf.colors([3, 2, 1, 6, 3]) == [-2, 0, 0, -2, 0]
    st = surf.stats_from_steps([3, 2, 1, 6, 3])
    assert (st["M"], st["O"], st["H"]) == (2, 3, 2)


def test_simulate_is_seeded():
    a = surf.simulate("zipf:0.5", 5000, seed=42)
    b = surf.simulate("zipf:0.5", 5000, seed=42)
    assert a == b
    assert sum(a["tree_sizes"].values()) == 5000
    assert a["M"] <= a["O"]


def test_exact_anchors():
    r = surf.renewal_sequence("table:1/3,1/3,1/3", 3)
    assert r[3] == pytest.approx(16 / 27, abs=1e-15)
    assert surf.expected_size_series("table:1/3,1/3,1/3", 3)[3] == pytest.approx(64 / 27, abs=1e-15)
    t = surf.expected_trees("table:1/3,1/3,1/3", 2)
    assert t["EM"] == pytest.approx(13 / 9, abs=1e-15)
    assert surf.expected_leaves("geom:0.5", 2) == pytest.approx(0.75)
    assert surf.survival_probability("geom:0.5") == 0.5


def test_oracle_matches_exact():
    o = surf.enumerate_exact("table:1/3,1/3,1/3", 4)
    assert o["EM"]["value"] == pytest.approx(surf.expected_trees("table:1/3,1/3,1/3", 4)["EM"], abs=1e-12)
    with pytest.raises(surf.BudgetError):
        surf.enumerate_exact("table:1/3,1/3,1/3", 6, budget=10)


def test_verify_report():
    rep = surf.verify("geom:0.5", [100, 1000], reps=200)
    assert rep["failed"] is False
    names = {c["name"] for c in rep["checks"]}
    assert {"renewal-limit", "o-mean", "block-escape"} <= names
    assert all(c["source"] for c in rep["checks"])
    assert not math.isnan(rep["stats"][0]["mean"])
