import numpy as np
import pytest
from pydantic import ValidationError

from atypicality.codelength import binary_entropy
from atypicality.errors import InvalidParameterError
from atypicality.models import BoundSpec, MarkovSpec, ScanConfig
from atypicality.montecarlo import (
    ANOMALOUS_CHAIN, TYPICAL_CHAIN, covered_fractions, freezing_demo, generate_binary_markov,
    generate_markov, markov_entropy_rate, min_inside, phase_transition, simulate_ctw_pa, simulate_miss,
    simulate_pa, write_grid_csv,
)


def test_unreachable_threshold_gives_zero():
    result = simulate_pa(BoundSpec(tau=60.0, lengths=[16, 32, 64], trials=10_000))
    assert [p.estimate for p in result.points] == [0.0, 0.0, 0.0]


def test_pa_under_hoeffding_bound_at_half():
    result = simulate_pa(BoundSpec(p=0.5, tau=1.0, lengths=[64, 128, 256], trials=20_000, seed=3))
    for point in result.points:
        assert point.bound == pytest.approx(2.0 ** 0 * point.x ** -1.5)
        assert point.estimate <= point.bound + point.half_width


def test_pa_under_chernoff_bound_away_from_half():
    result = simulate_pa(BoundSpec(p=0.3, tau=1.0, lengths=[100, 1000], trials=20_000, seed=4))
    for point in result.points:
        assert point.bound is not None
        assert point.estimate <= point.bound + point.half_width


def test_exact_criterion_variant_runs():
    result = simulate_pa(BoundSpec(tau=1.0, lengths=[64], trials=5_000), exact=True)
    assert result.parameters["exact"] is True
    assert 0.0 <= result.points[0].estimate <= 1.0


def test_estimates_are_seeded_and_schedule_independent():
    spec = BoundSpec(p=0.5, tau=0.0, lengths=[16, 32, 64], trials=5_000, seed=11)
    first = simulate_pa(spec)
    assert first == simulate_pa(spec)
    assert first == simulate_pa(spec, workers=2)


def test_miss_rate_under_bound_and_decreasing():
    spec = BoundSpec(p=0.5, p_a=0.3, tau=2.0, lengths=[100, 200, 400], trials=20_000, seed=5)
    points = simulate_miss(spec).points
    for point in points:
        assert point.estimate <= point.bound + point.half_width
    for shorter, longer in zip(points, points[1:]):
        assert longer.estimate <= shorter.estimate + shorter.half_width + longer.half_width


def test_miss_requires_distinct_alternative():
    with pytest.raises(InvalidParameterError):
        simulate_miss(BoundSpec(p=0.5, p_a=None))
    with pytest.raises(InvalidParameterError):
        simulate_miss(BoundSpec(p=0.5, p_a=0.5))


def test_covered_fractions_extremes():
    ones = np.ones(64, dtype=np.uint8)
    assert covered_fractions(ones, 0.0, [3.0], 64) == [1.0]
    alternating = np.array([0, 1] * 32, dtype=np.uint8)
    assert covered_fractions(alternating, 1.0, [3.0], 64) == [0.0]


def test_phase_transition_shape():
    spec = BoundSpec(tau=4.0, alphas=[0.5, 1.5, 3.0], trials=3, seed=2)
    result = phase_transition(spec, stream_length=4096, l_max=128)
    estimates = [p.estimate for p in result.points]
    assert result.x_label == "alpha"
    assert estimates[0] > estimates[-1]
    assert estimates[0] >= estimates[1] >= estimates[2]


def test_ctw_intrinsic_atypicality_decays():
    spec = BoundSpec(tau=1.0, lengths=[16, 128], trials=150, seed=1)
    points = simulate_ctw_pa(spec, max_depth=2).points
    assert points[1].estimate <= points[0].estimate


def test_three_state_chains_emit_their_patterns():
    rng = np.random.default_rng(0)
    typical, state = generate_markov(TYPICAL_CHAIN, 3000, rng)
    anomalous, _ = generate_markov(ANOMALOUS_CHAIN, 3000, rng, state)
    assert typical.mean() == pytest.approx(2 / 3, abs=0.05)
    assert anomalous.mean() == pytest.approx(1 / 3, abs=0.05)
    first, _ = generate_markov(TYPICAL_CHAIN, 100, np.random.default_rng(9))
    second, _ = generate_markov(TYPICAL_CHAIN, 100, np.random.default_rng(9))
    assert np.array_equal(first, second)


def test_markov_spec_validation():
    with pytest.raises(ValidationError):
        MarkovSpec(transitions=[[0.5, 0.6], [0.5, 0.5]], emissions=[[0, 1], [0, 1]])
    with pytest.raises(ValidationError):
        MarkovSpec(transitions=[[0.5, 0.5], [0.5, 0.5]], emissions=[[0, None], [0, 1]])
    with pytest.raises(ValidationError):
        MarkovSpec(transitions=[[1.0]], emissions=[[0], [1]])


def test_binary_markov_source():
    bits = generate_binary_markov([0.9, 0.2], 20_000, np.random.default_rng(1))
    previous, following = bits[:-1], bits[1:]
    assert following[previous == 0].mean() == pytest.approx(0.9, abs=0.03)
    assert following[previous == 1].mean() == pytest.approx(0.2, abs=0.03)
    with pytest.raises(InvalidParameterError):
        generate_binary_markov([0.5, 0.5, 0.5], 10, np.random.default_rng(1))


def test_markov_entropy_rate():
    assert markov_entropy_rate([0.3]) == pytest.approx(binary_entropy(0.3))
    assert markov_entropy_rate([0.5, 0.5, 0.5, 0.5]) == pytest.approx(1.0)
    pi_one = 0.9 / 1.7
    expected = (1 - pi_one) * binary_entropy(0.9) + pi_one * binary_entropy(0.2)
    assert markov_entropy_rate([0.9, 0.2]) == pytest.approx(expected)


def test_freezing_demo_desk_scale():
    demo = freezing_demo(training_length=5_000, test_length=1_500, segment_length=300, seed=4, depth=3,
                         cfg=ScanConfig(l_min=16, l_max=48, max_depth=3))
    assert (demo.segment_start, demo.segment_end) == (600, 900)
    assert len(demo.test_bits) == 1_500
    frozen_min, frozen_inside = min_inside(demo.frozen, demo.segment_start - 3, demo.segment_end)
    assert frozen_inside
    assert frozen_min < -20
    # once the adaptive coder has seen part of the segment it stops finding it unusual
    late = slice(750, 900)
    assert np.mean(demo.adaptive.scores[late]) > np.mean(demo.frozen.scores[late]) + 5


def test_freezing_demo_rejects_bad_segment():
    with pytest.raises(InvalidParameterError):
        freezing_demo(training_length=100, test_length=50, segment_length=50)


def test_grid_csv(tmp_path):
    result = simulate_pa(BoundSpec(p=0.3, tau=4.0, lengths=[1, 64], trials=100))
    path = tmp_path / "grid.csv"
    write_grid_csv(result, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# simulation: pa")
    assert lines[1] == "l,estimate,half_width,bound"
    # l = 1 leaves the bound's valid region, so the bound column is empty
    assert lines[2].endswith(",")
    assert len(lines) == 4
