import numpy as np
import pytest

from mmqkd.montecarlo import (
    FluctuationSpec,
    draw_variances,
    draws_hash,
    run_fluctuating,
    summarize,
)
from mmqkd.protocol import Scenario
from mmqkd.security import key_rate

BASE = Scenario.build([3.0], None, 0.03, 0.05, beta=0.95)


def test_draws_reproducible_per_run():
    spec = FluctuationSpec(n_runs=10, seed=42)
    a, _ = draw_variances(spec, 3)
    b, _ = draw_variances(spec, 3)
    c, _ = draw_variances(spec, 4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_draws_independent_of_run_count():
    short = run_fluctuating(FluctuationSpec(n_runs=3, seed=1), BASE)
    long = run_fluctuating(FluctuationSpec(n_runs=6, seed=1), BASE)
    assert short.hashes == long.hashes[:3]
    np.testing.assert_array_equal(short.key_rates, long.key_rates[:3])


def test_hash_format():
    h = draws_hash(np.array([1.0, 2.0]))
    assert len(h) == 16 and int(h, 16) >= 0
    assert h != draws_hash(np.array([1.0, 2.0000001]))


def test_zero_spread_collapses_to_constant():
    series = run_fluctuating(FluctuationSpec(spread=0.0, n_runs=5), BASE)
    ref = key_rate(BASE).key_rate
    np.testing.assert_allclose(series.key_rates, ref, atol=1e-12)
    assert summarize(series)["std"] == pytest.approx(0.0, abs=1e-12)


def test_spread_reading():
    assert FluctuationSpec(spread=0.75).std == pytest.approx(np.sqrt(0.75))
    assert FluctuationSpec(spread=0.75, spread_is_std=True).std == 0.75


def test_clamping_counted():
    spec = FluctuationSpec(mean=1.2, spread=1.0, n_modes=50, n_runs=4)
    series = run_fluctuating(spec, BASE)
    assert series.clamped_draws > 0
    assert 0 < series.clamp_fraction < 1
    for r in series.reports:
        assert min(r.scenario_echo.source.variances) >= 1.0
    meta = series.metadata()
    assert meta["clamped_draws"] == series.clamped_draws and "SeedSequence" in meta["generator"]


def test_invalid_spec():
    for kw in ({"mean": 1.0}, {"spread": -1}, {"n_modes": 0}, {"seed": -1}):
        with pytest.raises(ValueError):
            FluctuationSpec(**kw)


def test_summarize():
    out = summarize([1.0, -1.0, 3.0])
    assert out == {"mean": 1.0, "std": 2.0, "min": -1.0, "fraction_secure": pytest.approx(2 / 3)}
    with pytest.raises(ValueError):
        summarize([])


def test_more_modes_more_stable():
    few = summarize(run_fluctuating(FluctuationSpec(n_modes=5, n_runs=200, seed=3), BASE))
    many = summarize(run_fluctuating(FluctuationSpec(n_modes=100, n_runs=200, seed=3), BASE))
    assert many["std"] < few["std"]
    assert many["fraction_secure"] >= few["fraction_secure"]
