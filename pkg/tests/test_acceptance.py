"""Full-scale runs of the detection and bound checks. Deselected by default; run with `pytest -m slow`."""
import os

import numpy as np
import pytest

from atypicality.iid import pa_upper_bound
from atypicality.models import BoundSpec, IIDTypicalModel, ScanConfig
from atypicality.montecarlo import freezing_demo, min_inside, phase_transition, simulate_miss, simulate_pa
from atypicality.scanner import flag_segments, scan
from atypicality.utils import derive_rng

pytestmark = pytest.mark.slow

WORKERS = os.cpu_count() or 1
LENGTHS = [64, 128, 256, 512, 1024]
# vectorised iid atypical coder keeps a 100-seed sweep over 20,000-bit streams tractable
INSERTION_CONFIG = ScanConfig(l_min=16, l_max=512, max_depth=0, atypical_coder="iid")


@pytest.mark.parametrize("tau", [1.0, 4.0])
def test_false_alarm_rate_under_hoeffding_bound(tau):
    result = simulate_pa(BoundSpec(p=0.5, tau=tau, lengths=LENGTHS, trials=1_000_000, seed=1), workers=WORKERS)
    for point in result.points:
        assert point.estimate <= 2.0 ** (-tau + 1) * point.x ** -1.5 + point.half_width


def test_false_alarm_rate_under_chernoff_bound():
    result = simulate_pa(BoundSpec(p=0.3, tau=1.0, lengths=LENGTHS, trials=1_000_000, seed=2), workers=WORKERS)
    for point in result.points:
        assert point.estimate <= pa_upper_bound(int(point.x), 1.0, 0.3) + point.half_width


def test_miss_rate_under_bound():
    spec = BoundSpec(p=0.5, p_a=0.3, tau=2.0, lengths=[100, 200, 400], trials=100_000, seed=3)
    for point in simulate_miss(spec, workers=WORKERS).points:
        assert point.estimate <= point.bound + point.half_width


def test_phase_transition_shape():
    spec = BoundSpec(tau=12.0, alphas=[0.5, 1.0, 1.5, 2.0, 2.5, 3.0], trials=20, seed=4)
    points = phase_transition(spec, stream_length=1 << 16, workers=WORKERS).points
    for left, right in zip(points, points[1:]):
        assert right.estimate <= left.estimate + left.half_width + right.half_width
    assert points[0].estimate >= 10 * points[-1].estimate
    assert points[0].estimate > 0


def test_freezing_effect():
    tau = 20.0
    found = worse = 0
    for seed in range(100):
        demo = freezing_demo(seed=seed, workers=WORKERS)
        l_min = demo.frozen.config.l_min
        frozen_min, inside = min_inside(demo.frozen, demo.segment_start - l_min, demo.segment_end)
        found += inside and frozen_min < -tau
        worse += min(demo.adaptive.scores) > frozen_min
    assert found >= 95
    assert worse >= 95


def _insertion_stream(seed, with_insertion):
    gen = derive_rng(seed, 1)
    bits = gen.integers(0, 2, size=20_000, dtype=np.uint8)
    if with_insertion:
        bits[10_000:10_500] = (gen.random(500) < 0.8).astype(np.uint8)
    return bits


def test_insertion_recovery():
    model = IIDTypicalModel(p=0.5)
    hits = 0
    for seed in range(100):
        profile = scan(_insertion_stream(seed, True), model, INSERTION_CONFIG, workers=WORKERS)
        best = int(np.argmin(profile.scores))
        hits += 10_000 - INSERTION_CONFIG.l_min <= best < 10_500
    assert hits >= 95


def test_no_flags_without_insertion():
    model = IIDTypicalModel(p=0.5)
    clean = 0
    for seed in range(100):
        profile = scan(_insertion_stream(seed, False), model, INSERTION_CONFIG, workers=WORKERS)
        clean += not flag_segments(profile, 16.0)
    assert clean >= 99


# CTW atypical coder at reduced length and depth; D = 16 over 20,000 bits is out of reach in pure Python
CTW_CONFIG = ScanConfig(l_min=16, l_max=128, max_depth=8)


def _short_stream(seed, with_insertion):
    gen = derive_rng(seed, 2)
    bits = gen.integers(0, 2, size=2_000, dtype=np.uint8)
    if with_insertion:
        bits[1_000:1_300] = (gen.random(300) < 0.8).astype(np.uint8)
    return bits


def test_ctw_insertion_recovery():
    model = IIDTypicalModel(p=0.5)
    hits = 0
    for seed in range(20):
        profile = scan(_short_stream(seed, True), model, CTW_CONFIG, workers=WORKERS)
        best = int(np.argmin(profile.scores))
        hits += 1_000 - CTW_CONFIG.l_min <= best < 1_300
    assert hits >= 19


def test_ctw_no_flags_without_insertion():
    model = IIDTypicalModel(p=0.5)
    clean = 0
    for seed in range(20):
        profile = scan(_short_stream(seed, False), model, CTW_CONFIG, workers=WORKERS)
        clean += not flag_segments(profile, 16.0)
    assert clean >= 19
