import csv
import math

import numpy as np
import pytest

from atypicality.codelength import log_star
from atypicality.ctw import atypical_codelength
from atypicality.errors import InputTooShortError
from atypicality.iid import iid_atypicality_test, typical_codelength_iid
from atypicality.models import IIDTypicalModel, ScanConfig, ScanProfile
from atypicality.scanner import (
    flag_segments, random_walk, scan, write_flags_csv, write_profile_csv, write_ranking_csv,
)
from atypicality.utils import derive_rng

HALF = IIDTypicalModel(p=0.5)


def test_random_walk_examples():
    assert random_walk("1111").tolist() == [0, 1, 2, 3, 4]
    assert random_walk("10").tolist() == [0, 1, 0]
    assert random_walk("").tolist() == [0]


def test_random_walk_parity(rng):
    walk = random_walk(rng.integers(0, 2, size=500))
    assert np.all((walk - np.arange(walk.size)) % 2 == 0)


def test_scan_rejects_short_input():
    with pytest.raises(InputTooShortError):
        scan("0101", HALF, ScanConfig(l_min=4, l_max=8, max_depth=2))


def test_profile_shape_and_witness_ranges(rng):
    cfg = ScanConfig(l_min=8, l_max=24, max_depth=3)
    profile = scan(rng.integers(0, 2, size=300), HALF, cfg)
    assert profile.positions == 300 - 8 + 1
    assert profile.input_length == 300
    assert all(8 <= l <= 24 for l in profile.best_lengths)
    assert all(0 <= d <= 3 for d in profile.best_depths)
    # windows near the end are clipped to the remaining samples
    assert profile.best_lengths[-1] == 8


def test_fixed_length_scan_matches_brute_force(rng):
    tau = 2.0
    cfg = ScanConfig(l_min=10, l_max=10, max_depth=3, tau=tau)
    x = rng.integers(0, 2, size=600)
    profile = scan(x, HALF, cfg)
    brute = [atypical_codelength(x[n:n + 10], 3).total_bits - 10.0 for n in range(591)]
    assert profile.scores == brute
    flagged = {s for s, score in enumerate(profile.scores) if score < -tau}
    assert flagged == {n for n, b in enumerate(brute) if b < -tau}


def test_witnesses_recompute_from_scratch(rng):
    model = IIDTypicalModel(p=0.3)
    x = (rng.random(400) < 0.3).astype(np.uint8)
    profile = scan(x, model, ScanConfig(l_min=8, l_max=40, max_depth=3))
    for n in (0, 57, 200, 390):
        l = profile.best_lengths[n]
        window = x[n:n + l]
        atypical = atypical_codelength(window, 3)
        assert atypical.best_depth == profile.best_depths[n]
        expected = atypical.total_bits - typical_codelength_iid(window, model)
        assert profile.scores[n] == pytest.approx(expected, abs=1e-9)


def test_iid_atypical_coder_relation(rng):
    l0, tau = 12, 3.0
    x = (rng.random(200) < 0.6).astype(np.uint8)
    profile = scan(x, HALF, ScanConfig(l_min=l0, l_max=l0, max_depth=0, atypical_coder="iid"))
    for n in range(profile.positions):
        verdict = iid_atypicality_test(x[n:n + l0], HALF, tau)
        expected = verdict.delta - tau - math.log2(l0) + log_star(l0)
        assert profile.scores[n] == pytest.approx(expected, abs=1e-9)
        assert profile.best_depths[n] == 0


def test_results_do_not_depend_on_worker_count(rng):
    x = rng.integers(0, 2, size=700)
    cfg = ScanConfig(l_min=8, l_max=16, max_depth=2)
    assert scan(x, HALF, cfg, workers=1) == scan(x, HALF, cfg, workers=3)


def test_frozen_typical_model_is_untouched(alternating_model, alternating_bits):
    digest = alternating_model.state_digest()
    profile = scan(alternating_bits[:200], alternating_model, ScanConfig(l_min=16, l_max=32, max_depth=2))
    assert alternating_model.state_digest() == digest
    # the frozen model predicts alternating data almost perfectly, so nothing looks atypical
    assert min(profile.scores) > 0


def test_insertion_is_found(insertion_stream):
    profile = scan(insertion_stream, HALF, ScanConfig(l_min=16, l_max=96, max_depth=2))
    best = int(np.argmin(profile.scores))
    assert 1000 - 16 <= best < 1200
    assert profile.scores[best] < -16


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_ctw_scan_recovers_insertions_across_seeds(seed):
    gen = derive_rng(seed, 5)
    bits = gen.integers(0, 2, size=1500, dtype=np.uint8)
    bits[700:900] = (gen.random(200) < 0.9).astype(np.uint8)
    profile = scan(bits, HALF, ScanConfig(l_min=16, l_max=64, max_depth=2))
    best = int(np.argmin(profile.scores))
    assert 700 - 16 <= best < 900
    assert flag_segments(profile, 16.0)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_ctw_scan_of_typical_data_raises_no_flags(seed):
    bits = derive_rng(seed, 6).integers(0, 2, size=1500, dtype=np.uint8)
    profile = scan(bits, HALF, ScanConfig(l_min=16, l_max=64, max_depth=2))
    assert flag_segments(profile, 16.0) == []


def _profile(scores, lengths):
    return ScanProfile(config=ScanConfig(l_min=1, l_max=10, max_depth=0), input_length=len(scores) + 1,
                       scores=scores, best_lengths=lengths, best_depths=[0] * len(scores))


def test_flag_segments_trivial_cases():
    assert flag_segments(_profile([], []), 1.0) == []
    segments = flag_segments(_profile([0.0, -3.0, 0.5], [2, 2, 2]), 1.0)
    assert len(segments) == 1
    assert (segments[0].start, segments[0].length, segments[0].score) == (1, 2, -3.0)
    assert (segments[0].segment_start, segments[0].segment_end) == (1, 3)


def test_flag_segments_merges_overlaps():
    scores = [-2.0, -5.0, 0.0, 0.0, 0.0, 0.0, -9.0, 0.0]
    lengths = [3, 3, 1, 1, 1, 1, 2, 1]
    segments = flag_segments(_profile(scores, lengths), 1.0)
    assert [(s.start, s.segment_start, s.segment_end) for s in segments] == [(6, 6, 8), (1, 0, 4)]
    assert [s.score for s in segments] == sorted(s.score for s in segments)


def test_flagged_set_shrinks_with_tau(rng):
    profile = _profile(rng.normal(0, 5, size=200).tolist(), [3] * 200)
    previous = None
    for tau in np.linspace(0, 15, 16):
        flagged = {n for n, s in enumerate(profile.scores) if s < -tau}
        covered = set()
        for segment in flag_segments(profile, tau):
            assert segment.score < -tau
            covered |= set(range(segment.segment_start, segment.segment_end))
        assert flagged <= covered
        if previous is not None:
            assert covered <= previous
        previous = covered


def _read_rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        first = f.readline()
        return first, list(csv.DictReader(f))


def test_csv_exports(rng, tmp_path):
    profile = scan(rng.integers(0, 2, size=120), HALF, ScanConfig(l_min=8, l_max=16, max_depth=2, tau=0.0))
    write_profile_csv(profile, tmp_path / "profile.csv", "iid:p=0.5")
    write_ranking_csv(profile, tmp_path / "ranking.csv", "iid:p=0.5")
    segments = flag_segments(profile, 0.0)
    write_flags_csv(profile, segments, tmp_path / "flags.csv", 0.0, "iid:p=0.5")

    config, rows = _read_rows(tmp_path / "profile.csv")
    assert config.startswith("# config: l_min=8 l_max=16 max_depth=2")
    assert [int(r["n"]) for r in rows] == list(range(profile.positions))
    assert float(rows[5]["delta_l"]) == profile.scores[5]

    _, ranked = _read_rows(tmp_path / "ranking.csv")
    values = [float(r["delta_l"]) for r in ranked]
    assert values == sorted(values)

    _, flags = _read_rows(tmp_path / "flags.csv")
    assert len(flags) == len(segments)
    if flags:
        assert set(flags[0]) == {"n", "delta_l", "best_l", "best_d", "segment_start", "segment_end"}
