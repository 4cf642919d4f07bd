import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from t2tnet.coverage import (
    CoverageExperiment,
    connectivity_once,
    coverage_csv,
    run_coverage,
    run_max_range_curve,
    wilson_interval,
)
from t2tnet.rf import Position, RfEnvironment
from t2tnet.topology import OFF, CancellationMode

ENV = RfEnvironment()

# link closes iff d(exciter, tx) * d(tx, rx) <= C, with C from the budget written out by hand
LAM = 299_792_458.0 / 868e6
C = LAM**2 / (4 * math.pi) ** 2 * 0.4 * math.sqrt(10 ** 0.3 * 10 ** 0.4 / 1e-8)
D_MIN = 2 * 0.17**2 / LAM


def pair_probability(side, exciter=(0.0, 3.0), n1=60, n_phi=240, n_r=240):
    """P(both links of a uniform pair close | pair spacing >= D_MIN), by midpoint quadrature."""
    h = side / n1
    xs = (np.arange(n1) + 0.5) * h
    x1, y1 = [a.ravel() for a in np.meshgrid(xs, xs)]
    phi = (np.arange(n_phi) + 0.5) * 2 * math.pi / n_phi
    r_max = side * math.sqrt(2)
    dr = r_max / n_r
    r = (np.arange(n_r) + 0.5) * dr
    ex, ey = exciter
    d1 = np.hypot(x1 - ex, y1 - ey)
    both = close = 0.0
    for i in range(0, len(x1), 200):
        sl = slice(i, i + 200)
        x2 = x1[sl, None, None] + r[None, None, :] * np.cos(phi)[None, :, None]
        y2 = y1[sl, None, None] + r[None, None, :] * np.sin(phi)[None, :, None]
        inside = (x2 >= 0) & (x2 <= side) & (y2 >= 0) & (y2 <= side)
        d2 = np.hypot(x2 - ex, y2 - ey)
        rr = np.broadcast_to(r, inside.shape)
        w = rr * dr * (2 * math.pi / n_phi) * h * h
        alive = inside & (rr >= D_MIN) & (np.maximum(d1[sl, None, None], d2) * rr <= C)
        both += (w * alive).sum()
        close += (w * (inside & (rr < D_MIN))).sum()
    total = side**4
    return (both / total) / (1 - close / total)


def test_budget_constant_matches_epsilon():
    assert C == pytest.approx(6.7646, abs=1e-4)


def test_wilson_interval():
    lo, hi = wilson_interval(0, 1000)
    assert lo == 0.0 and hi == pytest.approx(0.00383, abs=1e-4)
    lo, hi = wilson_interval(500, 1000)
    assert lo < 0.5 < hi and hi - lo == pytest.approx(0.0619, abs=1e-3)
    with pytest.raises(ValueError):
        wilson_interval(0, 0)


def test_single_tag_is_connected():
    pts = run_coverage(CoverageExperiment(tag_counts=[1], runs_per_point=20))
    assert pts[0].sh_probability == pts[0].mh_probability == 1.0


def test_tiny_area_is_fully_connected():
    exp = CoverageExperiment(area_side=0.5, tag_counts=[2, 3, 4], runs_per_point=200)
    for p in run_coverage(exp):
        assert p.sh_probability == p.mh_probability == 1.0


@pytest.mark.parametrize("side,runs", [(3.0, 3000), (30.0, 1000)])
def test_pair_matches_quadrature(side, runs):
    expect = pair_probability(side)
    p = run_coverage(CoverageExperiment(area_side=side, tag_counts=[2], runs_per_point=runs, base_seed=5))[0]
    assert p.sh_probability == p.mh_probability
    lo, hi = wilson_interval(p.sh_count, runs)
    assert lo - 0.005 <= expect <= hi + 0.005


def test_dense_small_area_curves():
    # a 3 m square keeps the link range comparable to the area, so the curves have shape
    base = dict(area_side=3.0, tag_counts=[2, 4, 6, 8, 10], runs_per_point=600, base_seed=1)
    off = run_coverage(CoverageExperiment(**base))
    geo = run_coverage(CoverageExperiment(**base, cancellation=CancellationMode("geometric")))
    for a, b in zip(off, off[1:]):
        assert b.sh_probability <= a.sh_probability + a.confidence_halfwidth + b.confidence_halfwidth
    for p in off + geo:
        assert p.mh_probability >= p.sh_probability - p.confidence_halfwidth
    for o, g in zip(off, geo):
        assert g.sh_probability <= o.sh_probability + o.confidence_halfwidth
        assert g.mh_probability <= o.mh_probability + o.confidence_halfwidth
    # relays make up for what single hop loses
    assert off[-1].mh_probability > 0.9 > 0.1 > off[-1].sh_probability


def test_same_seed_same_csv():
    exp = CoverageExperiment(area_side=3.0, tag_counts=[3, 5], runs_per_point=100, base_seed=9)
    assert coverage_csv(run_coverage(exp), OFF, 9) == coverage_csv(run_coverage(exp), OFF, 9)


def test_max_range_curve_shape():
    rows = run_max_range_curve(ENV, 3.0)
    assert [r.n_tags for r in rows] == list(range(1, len(rows) + 1))
    assert all(a.range_m < b.range_m for a, b in zip(rows, rows[1:]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8))
def test_single_hop_implies_multi_hop(seed, n):
    rng = np.random.default_rng(seed)
    xy = rng.uniform(0, 3.0, size=(n, 2))
    for mode in (OFF, CancellationMode("geometric"), CancellationMode("bernoulli", 0.2)):
        sh, mh = connectivity_once(ENV, Position(0.0, 3.0), xy, mode, np.random.default_rng(seed))
        assert mh or not sh
