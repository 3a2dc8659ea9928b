"""
------------------------------------------------------------------------------
Project: Atypicality Toolkit
Description: Seeded Monte-Carlo validation of the false-alarm and miss bounds,
             the alpha phase transition, the freezing effect and the CTW
             intrinsic-atypicality rate. Every unit of work draws from its own
             generator derived from (seed, grid point, chunk), so estimates do
             not depend on the number of workers.
------------------------------------------------------------------------------
"""
import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from atypicality.codelength import binary_entropy
from atypicality.config import logger, settings
from atypicality.ctw import atypical_codelength
from atypicality.errors import BoundNotEvaluableError, InvalidParameterError
from atypicality.frozen import AdaptiveTypicalCoder, train
from atypicality.iid import clt_threshold, criterion_flags, miss_upper_bound, pa_upper_bound
from atypicality.models import (
    BoundSpec, FreezingDemo, GridPoint, MarkovSpec, ScanConfig, ScanProfile, SimulationResult,
)
from atypicality.scanner import scan
from atypicality.utils import binomial_half_width, derive_rng

THREE_STATE_TRANSITIONS = [[0.05, 0.95, 0.0], [0.0, 0.05, 0.95], [0.95, 0.0, 0.05]]
# mostly emits the pattern 1 0 1
TYPICAL_CHAIN = MarkovSpec(
    transitions=THREE_STATE_TRANSITIONS,
    emissions=[[0, 1, None], [None, 1, 0], [1, None, 0]],
)
# mostly emits the pattern 1 0 0
ANOMALOUS_CHAIN = MarkovSpec(
    transitions=THREE_STATE_TRANSITIONS,
    emissions=[[0, 1, None], [None, 1, 0], [0, None, 1]],
)


def _map(fn: Callable, tasks: Sequence, workers: int) -> List:
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(task) for task in tasks]


def _chunk_sizes(trials: int) -> List[int]:
    size = settings.MC_CHUNK_SIZE
    return [min(size, trials - start) for start in range(0, trials, size)]


def _count_flags(task: Tuple) -> int:
    """Number of length-l iid(prob) sequences flagged against the typical p."""
    seed, point, chunk, size, l, prob, p, tau, exact = task
    ones = derive_rng(seed, point, chunk).binomial(l, prob, size=size)
    return int(np.count_nonzero(criterion_flags(ones, l, p, tau, exact=exact)))


def _flag_rates(spec: BoundSpec, prob: float, exact: bool, workers: int) -> List[float]:
    tasks = []
    for point, l in enumerate(spec.lengths):
        for chunk, size in enumerate(_chunk_sizes(spec.trials)):
            tasks.append((spec.seed, point, chunk, size, l, prob, spec.p, spec.tau, exact))
    counts = _map(_count_flags, tasks, workers)
    per_point = [0] * len(spec.lengths)
    for task, count in zip(tasks, counts):
        per_point[task[1]] += count
    return [c / spec.trials for c in per_point]


def simulate_pa(spec: BoundSpec, exact: bool = False, workers: int = 1) -> SimulationResult:
    """Fraction of iid(p) sequences flagged by the criterion, per length, against the bound."""
    start_time = time.time()
    rates = _flag_rates(spec, spec.p, exact, workers)
    points = []
    for l, rate in zip(spec.lengths, rates):
        try:
            bound = pa_upper_bound(l, spec.tau, spec.p)
        except BoundNotEvaluableError:
            bound = None
        points.append(GridPoint(x=l, estimate=rate, half_width=binomial_half_width(rate, spec.trials),
                                bound=bound))
    logger.info("simulate_pa completed", p=spec.p, tau=spec.tau, trials=spec.trials,
                duration_ms=round((time.time() - start_time) * 1000, 2))
    return SimulationResult(kind="pa", x_label="l", points=points,
                            parameters={**spec.model_dump(), "exact": exact})


def simulate_miss(spec: BoundSpec, workers: int = 1) -> SimulationResult:
    """Fraction of iid(p_a) sequences NOT flagged against the typical p, per length."""
    if spec.p_a is None or spec.p_a == spec.p:
        raise InvalidParameterError("miss simulation needs p_a different from p")
    start_time = time.time()
    rates = _flag_rates(spec, spec.p_a, False, workers)
    points = []
    for l, flagged in zip(spec.lengths, rates):
        miss = 1.0 - flagged
        points.append(GridPoint(x=l, estimate=miss, half_width=binomial_half_width(miss, spec.trials),
                                bound=miss_upper_bound(l, spec.tau, spec.p, spec.p_a)))
    logger.info("simulate_miss completed", p=spec.p, p_a=spec.p_a, tau=spec.tau, trials=spec.trials,
                duration_ms=round((time.time() - start_time) * 1000, 2))
    return SimulationResult(kind="miss", x_label="l", points=points, parameters=spec.model_dump())


def covered_fractions(bits: np.ndarray, tau: float, alphas: Sequence[float], l_max: int) -> List[float]:
    """For each alpha, the fraction of samples inside at least one flagged window.

    A window of length l is flagged when |sum(2x-1)| / sqrt(l) > sqrt(2·tau·ln2 + alpha·ln l).
    """
    n_total = bits.size
    walk = np.concatenate(([0], np.cumsum(2 * bits.astype(np.int64) - 1)))
    marks = np.zeros((len(alphas), n_total + 1), dtype=np.int64)
    for l in range(1, min(l_max, n_total) + 1):
        z = np.abs(walk[l:] - walk[:-l]) / math.sqrt(l)
        for a, alpha in enumerate(alphas):
            starts = np.flatnonzero(z > clt_threshold(l, tau, alpha))
            if starts.size:
                marks[a] += np.bincount(starts, minlength=n_total + 1)
                marks[a] -= np.bincount(starts + l, minlength=n_total + 1)
    covered = np.cumsum(marks, axis=1)[:, :n_total] > 0
    return covered.mean(axis=1).tolist()


def _phase_stream(task: Tuple) -> List[float]:
    seed, index, stream_length, tau, alphas, l_max = task
    bits = derive_rng(seed, index).integers(0, 2, size=stream_length, dtype=np.uint8)
    return covered_fractions(bits, tau, alphas, l_max)


def phase_transition(spec: BoundSpec, stream_length: int = 1 << 16, l_max: Optional[int] = None,
                     workers: int = 1) -> SimulationResult:
    """Mean covered-sample fraction per alpha over `spec.trials` independent iid(½) streams."""
    l_max = l_max or settings.DEFAULT_L_MAX
    start_time = time.time()
    tasks = [(spec.seed, i, stream_length, spec.tau, list(spec.alphas), l_max) for i in range(spec.trials)]
    fractions = np.array(_map(_phase_stream, tasks, workers))
    means = fractions.mean(axis=0)
    spread = fractions.std(axis=0, ddof=1) if spec.trials > 1 else np.zeros(len(spec.alphas))
    points = [
        GridPoint(x=alpha, estimate=float(m), half_width=float(settings.CI_Z * s / math.sqrt(spec.trials)))
        for alpha, m, s in zip(spec.alphas, means, spread)
    ]
    logger.info("phase_transition completed", streams=spec.trials, stream_length=stream_length,
                duration_ms=round((time.time() - start_time) * 1000, 2))
    return SimulationResult(kind="phase", x_label="alpha", points=points,
                            parameters={**spec.model_dump(), "stream_length": stream_length, "l_max": l_max})


def _ctw_pa_point(task: Tuple) -> int:
    seed, point, l, tau, max_depth, trials = task
    rng = derive_rng(seed, point)
    hits = 0
    for _ in range(trials):
        bits = rng.integers(0, 2, size=l, dtype=np.uint8)
        # the iid-uniform typical coder spends exactly one bit per sample
        if atypical_codelength(bits, max_depth).total_bits + tau < l:
            hits += 1
    return hits


def simulate_ctw_pa(spec: BoundSpec, max_depth: int, workers: int = 1) -> SimulationResult:
    """Frequency with which iid-uniform sequences are coded shorter by CTW (plus tau) than by the typical coder."""
    tasks = [(spec.seed, point, l, spec.tau, max_depth, spec.trials) for point, l in enumerate(spec.lengths)]
    hits = _map(_ctw_pa_point, tasks, workers)
    points = []
    for l, h in zip(spec.lengths, hits):
        rate = h / spec.trials
        points.append(GridPoint(x=l, estimate=rate, half_width=binomial_half_width(rate, spec.trials)))
    return SimulationResult(kind="ctw-pa", x_label="l", points=points,
                            parameters={**spec.model_dump(), "max_depth": max_depth})


def generate_markov(chain: MarkovSpec, length: int, rng: np.random.Generator,
                    state: int = 0) -> Tuple[np.ndarray, int]:
    """Runs the chain for `length` transitions, emitting one bit per transition."""
    cumulative = np.cumsum(np.asarray(chain.transitions), axis=1)
    uniforms = rng.random(length)
    out = np.empty(length, dtype=np.uint8)
    for i in range(length):
        nxt = int(np.searchsorted(cumulative[state], uniforms[i], side="right"))
        nxt = min(nxt, chain.states - 1)
        out[i] = chain.emissions[state][nxt]
        state = nxt
    return out, state


def generate_binary_markov(probs_one: Sequence[float], length: int, rng: np.random.Generator) -> np.ndarray:
    """Order-k binary source; probs_one[c] = P(1 | context c), c = sum of x_{n-j}·2^(j-1)."""
    order = int(round(math.log2(len(probs_one))))
    if 1 << order != len(probs_one):
        raise InvalidParameterError("probs_one must have 2^k entries")
    mask = (1 << order) - 1
    uniforms = rng.random(length)
    out = np.empty(length, dtype=np.uint8)
    context = 0
    for i in range(length):
        bit = 1 if uniforms[i] < probs_one[context] else 0
        out[i] = bit
        context = ((context << 1) | bit) & mask
    return out


def markov_entropy_rate(probs_one: Sequence[float]) -> float:
    """Entropy rate in bits/symbol of the order-k binary source, from its stationary distribution."""
    size = len(probs_one)
    mask = size - 1
    transition = np.zeros((size, size))
    for context, p in enumerate(probs_one):
        transition[context, ((context << 1) | 1) & mask] += p
        transition[context, (context << 1) & mask] += 1.0 - p
    # stationary pi solves pi (T - I) = 0 with sum(pi) = 1
    system = np.vstack([transition.T - np.eye(size), np.ones(size)])
    rhs = np.concatenate([np.zeros(size), [1.0]])
    stationary = np.linalg.lstsq(system, rhs, rcond=None)[0]
    return float(sum(pi * binary_entropy(p) for pi, p in zip(stationary, probs_one)))


def freezing_demo(typical: MarkovSpec = TYPICAL_CHAIN, anomalous: MarkovSpec = ANOMALOUS_CHAIN,
                  training_length: int = 100_000, test_length: int = 10_000, segment_length: int = 2_000,
                  seed: int = 0, depth: int = 6, cfg: Optional[ScanConfig] = None,
                  workers: int = 1) -> FreezingDemo:
    """Scans one test stream twice: against the frozen model and against an adaptive CTW."""
    if not 0 < segment_length < test_length:
        raise InvalidParameterError("segment_length must lie strictly between 0 and test_length")
    cfg = cfg or ScanConfig(l_min=16, l_max=128, max_depth=depth)
    rng = derive_rng(seed, 0)

    training, _ = generate_markov(typical, training_length, rng)
    segment_start = (test_length - segment_length) // 2
    head, state = generate_markov(typical, segment_start, rng)
    middle, state = generate_markov(anomalous, segment_length, rng, state)
    tail, _ = generate_markov(typical, test_length - segment_start - segment_length, rng, state)
    test = np.concatenate([head, middle, tail])

    frozen_model = train([training], depth)
    frozen_profile = scan(test, frozen_model, cfg, workers=workers)
    adaptive_profile = scan(test, AdaptiveTypicalCoder([training], depth), cfg, workers=workers)
    return FreezingDemo(frozen=frozen_profile, adaptive=adaptive_profile, segment_start=segment_start,
                        segment_end=segment_start + segment_length, test_bits=test.tolist())


def min_inside(profile: ScanProfile, start: int, end: int) -> Tuple[float, bool]:
    """Global minimum score and whether its start position lies in [start, end)."""
    scores = np.asarray(profile.scores)
    n = int(np.argmin(scores))
    return float(scores[n]), start <= n < end


def write_grid_csv(result: SimulationResult, path: Union[str, Path]) -> None:
    """One row per grid point: x, estimate, CI half-width, bound (empty when not evaluable)."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        params = " ".join(f"{k}={v}" for k, v in result.parameters.items())
        f.write(f"# simulation: {result.kind} {params}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow([result.x_label, "estimate", "half_width", "bound"])
        for point in result.points:
            bound = "" if point.bound is None else repr(point.bound)
            writer.writerow([point.x, repr(point.estimate), repr(point.half_width), bound])
