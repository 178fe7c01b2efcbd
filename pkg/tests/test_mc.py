import logging
import math

import numpy as np
import pytest
from scipy import stats

from movsum.core import ProcessSpec, standardize, std_normal_sf
from movsum.errors import InvalidInput
from movsum import mc


def test_config_validation():
    with pytest.raises(InvalidInput):
        mc.MCConfig(replications=0)
    with pytest.raises(InvalidInput):
        mc.MCConfig(seed=-1)
    with pytest.raises(InvalidInput):
        mc.MCConfig(thread_hint=0)
    with pytest.raises(InvalidInput):
        mc.MCConfig(max_horizon=5).horizon_cap(10)
    assert mc.MCConfig().horizon_cap(10) == 10 ** 6
    assert mc.MCConfig().horizon_cap(5000) == 5 * 10 ** 6


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv(mc.SEED_ENV, "123")
    assert mc.MCConfig().resolved_seed == 123
    assert mc.MCConfig(seed=7).resolved_seed == 7
    monkeypatch.delenv(mc.SEED_ENV)
    assert mc.MCConfig().resolved_seed == mc.DEFAULT_SEED


def test_normals_ks():
    z = mc.normals(mc.stream_keys(2024, np.arange(1000)), 0, 1000).ravel()
    n = z.size
    D = stats.kstest(z, "norm").statistic
    assert D < 1.628 / math.sqrt(n)


def test_stream_positions_are_addressable():
    keys = mc.stream_keys(5, np.arange(4))
    full = mc.normals(keys, 0, 30)
    np.testing.assert_array_equal(mc.normals(keys, 10, 20), full[:, 10:])
    np.testing.assert_array_equal(mc.normals(keys[2:3], 0, 30), full[2:3])


def test_substream_independence():
    n = 20_000
    x = mc.normals(mc.stream_keys(17, np.arange(n)), 0, 1)[:, 0]
    r = np.corrcoef(x[:-1], x[1:])[0, 1]
    assert abs(r) < 3 / math.sqrt(n)
    # neighbouring seeds give unrelated streams
    y = mc.normals(mc.stream_keys(18, np.arange(n)), 0, 1)[:, 0]
    assert abs(np.corrcoef(x, y)[0, 1]) < 3 / math.sqrt(n)


def test_derive_seed_distinct():
    seeds = {mc.derive_seed(1, g) for g in range(100)}
    assert len(seeds) == 100
    assert mc.derive_seed(1, 3) == mc.derive_seed(1, 3)


def test_incremental_paths_match_naive():
    spec = ProcessSpec(7, 0.3, 2.0)
    keys = mc.stream_keys(3, np.arange(100))
    xi = mc.standardized_paths(spec, keys, 0, 60)
    eps = spec.mu + spec.sigma * mc.normals(keys, 0, 66)
    naive = np.array([[eps[r, n : n + 7].sum() for n in range(60)] for r in range(100)])
    np.testing.assert_allclose(xi, standardize(naive, spec), atol=1e-9)


@pytest.mark.parametrize("threads", [2, 3])
def test_thread_determinism(threads):
    spec = ProcessSpec(10)
    base = mc.MCConfig(5000, seed=11, block=512)
    other = mc.MCConfig(5000, seed=11, block=512, thread_hint=threads)
    assert mc.simulate_bcp(spec, 20, 2.0, base) == mc.simulate_bcp(spec, 20, 2.0, other)
    a = mc.simulate_passage(spec, 2.0, base).taus
    b = mc.simulate_passage(spec, 2.0, other).taus
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(
        mc.crossing_counts(spec, 20, [1.5, 2.5], base), mc.crossing_counts(spec, 20, [1.5, 2.5], other)
    )


def test_block_size_does_not_matter():
    spec = ProcessSpec(5)
    a = mc.simulate_maxima(spec, 15, mc.MCConfig(3000, seed=4, block=100))
    b = mc.simulate_maxima(spec, 15, mc.MCConfig(3000, seed=4, block=2048))
    np.testing.assert_array_equal(a, b)


def test_bcp_limits():
    spec = ProcessSpec(10)
    cfg = mc.MCConfig(20_000, seed=1)
    assert mc.simulate_bcp(spec, 10, -math.inf, cfg).estimate == 1.0
    r = mc.simulate_bcp(spec, 0, 1.5, cfg)
    assert abs(r.estimate - std_normal_sf(1.5)) < 3 * r.stderr
    assert r.stderr == pytest.approx(math.sqrt(r.estimate * (1 - r.estimate) / r.replications))


def test_running_max_consistent_with_maxima():
    spec = ProcessSpec(6)
    cfg = mc.MCConfig(500, seed=9)
    run = mc.simulate_running_max(spec, 12, cfg)
    np.testing.assert_array_equal(run[:, -1], mc.simulate_maxima(spec, 12, cfg))
    counts = mc.crossing_counts(spec, 12, [1.0], cfg)[0]
    np.testing.assert_array_equal(counts, (run >= 1.0).sum(axis=0))


def test_passage_trivial_threshold():
    spec = ProcessSpec(10)
    cfg = mc.MCConfig(1000, seed=2)
    s = mc.simulate_passage(spec, -math.inf, cfg)
    assert np.all(s.taus == 0)
    assert mc.simulate_arl(spec, -math.inf, cfg).value == 0.0


def test_passage_consistent_with_maxima():
    # tau <= M exactly when the maximum over 0..M reaches h
    spec = ProcessSpec(10)
    cfg = mc.MCConfig(3000, seed=21)
    taus = mc.simulate_passage(spec, 2.0, cfg).taus
    mx = mc.simulate_maxima(spec, 300, cfg)
    np.testing.assert_array_equal(taus <= 300, mx >= 2.0)


def test_truncation_reported(caplog):
    spec = ProcessSpec(10)
    cfg = mc.MCConfig(500, seed=3, max_horizon=20)
    with caplog.at_level(logging.WARNING, logger="movsum.mc"):
        s = mc.simulate_passage(spec, 3.0, cfg)
    assert s.truncated_fraction > 0.5
    assert s.warning
    assert s.taus.max() == 20
    assert "max_horizon" in caplog.text


def test_arl_moderate_case():
    est = mc.simulate_arl(ProcessSpec(10), 2.0, mc.MCConfig(100_000, seed=5))
    # mean first-passage index; an index counted from 1 would add one
    assert est.value == pytest.approx(127, rel=0.03)
    assert est.method == "mc" and est.stderr > 0


def test_ecdf():
    s = mc.PassageSample(np.array([0, 10, 20, 30]), 10, 1.0, 100, 0.0)
    np.testing.assert_allclose(s.ecdf([0, 1, 1.5, 3, 5]), [0.25, 0.5, 0.5, 1.0, 1.0])
