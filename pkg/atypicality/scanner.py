"""
------------------------------------------------------------------------------
Project: Atypicality Toolkit
Description: Sliding atypical-subsequence detector. For every start position
             a fresh atypical coder grows over the window and the best
             atypical-minus-typical code-length difference is recorded.
------------------------------------------------------------------------------
"""
import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import entr

from atypicality.codelength import LN2, log_star
from atypicality.config import logger
from atypicality.ctw import ContextTree
from atypicality.errors import ConfigurationError, InputTooShortError
from atypicality.frozen import AdaptiveTypicalCoder, FrozenModel, frozen_symbol_costs
from atypicality.models import FlaggedSegment, IIDTypicalModel, ScanConfig, ScanProfile
from atypicality.utils import BitsLike, as_bit_array

TypicalCoder = Union[IIDTypicalModel, FrozenModel, AdaptiveTypicalCoder]

# starts per unit of work; fixed so results never depend on the worker count
SCAN_CHUNK = 256


def typical_symbol_costs(x: BitsLike, typical: TypicalCoder) -> np.ndarray:
    """-log2 P(x_i | x_0..x_{i-1}) for every sample, from one pass over the stream."""
    bits = as_bit_array(x)
    if isinstance(typical, IIDTypicalModel):
        return np.where(bits == 1, -math.log2(typical.p), -math.log2(1.0 - typical.p))
    if isinstance(typical, FrozenModel):
        return frozen_symbol_costs(typical, bits)
    if isinstance(typical, AdaptiveTypicalCoder):
        return typical.symbol_costs(bits)
    raise ConfigurationError(f"unsupported typical model: {type(typical).__name__}")


def context_depth(typical: TypicalCoder) -> int:
    if isinstance(typical, (FrozenModel, AdaptiveTypicalCoder)):
        return typical.depth
    return 0


def cumulative_codelength(costs: np.ndarray) -> np.ndarray:
    """L(n) as a prefix sum; L_T(X(n, l)) = L[n + l] - L[n]."""
    return np.concatenate(([0.0], np.cumsum(costs)))


# Worker state, installed once per process by _init_worker.
_WORKER_STATE: dict = {}


def _init_worker(bits: List[int], cumulative: List[float], cfg: ScanConfig) -> None:
    _WORKER_STATE["bits"] = bits
    _WORKER_STATE["cumulative"] = cumulative
    _WORKER_STATE["cfg"] = cfg


def _scan_range_ctw(bits: List[int], cumulative: List[float], cfg: ScanConfig,
                    start: int, stop: int) -> Tuple[List[float], List[int], List[int]]:
    n_total = len(bits)
    length_penalty = [0.0] + [log_star(l) for l in range(1, cfg.l_max + 1)]
    scores, lengths, depths = [], [], []
    for n in range(start, stop):
        tree = ContextTree(cfg.max_depth, track_all_depths=True)
        base = cumulative[n]
        best, best_l, best_d = math.inf, -1, -1
        for i in range(min(cfg.l_max, n_total - n)):
            tree.update(bits[n + i])
            l = i + 1
            if l < cfg.l_min:
                continue
            tree_bits, depth = tree.best_depth_codelength()
            score = tree_bits + length_penalty[l] - (cumulative[n + l] - base)
            if score < best:
                best, best_l, best_d = score, l, depth
        scores.append(best)
        lengths.append(best_l)
        depths.append(best_d)
    return scores, lengths, depths


def _scan_range_iid(bits: List[int], cumulative: List[float], cfg: ScanConfig,
                    start: int, stop: int) -> Tuple[List[float], List[int], List[int]]:
    """Atypical coder l·H(p̂) + ½·log2 l + log*(l): the binary-iid description."""
    n_total = len(bits)
    ones = np.concatenate(([0], np.cumsum(bits)))
    cum = np.asarray(cumulative)
    penalty = np.array([0.0] + [0.5 * math.log2(l) + log_star(l) for l in range(1, cfg.l_max + 1)])
    scores, lengths, depths = [], [], []
    for n in range(start, stop):
        ls = np.arange(cfg.l_min, min(cfg.l_max, n_total - n) + 1)
        p_hat = (ones[n + ls] - ones[n]) / ls
        atypical = ls * (entr(p_hat) + entr(1.0 - p_hat)) / LN2 + penalty[ls]
        diff = atypical - (cum[n + ls] - cum[n])
        best = int(np.argmin(diff))
        scores.append(float(diff[best]))
        lengths.append(int(ls[best]))
        depths.append(0)
    return scores, lengths, depths


def _scan_range(bits: List[int], cumulative: List[float], cfg: ScanConfig, start: int, stop: int):
    if cfg.atypical_coder == "iid":
        return _scan_range_iid(bits, cumulative, cfg, start, stop)
    return _scan_range_ctw(bits, cumulative, cfg, start, stop)


def _scan_chunk(bounds: Tuple[int, int]):
    start, stop = bounds
    return _scan_range(_WORKER_STATE["bits"], _WORKER_STATE["cumulative"], _WORKER_STATE["cfg"], start, stop)


def scan(x: BitsLike, typical: TypicalCoder, cfg: ScanConfig, workers: int = 1) -> ScanProfile:
    """ΔL(n) = min over l in [l_min, l_max] of L_A(X(n, l)) - L_T(X(n, l)) for every start n."""
    bits_array = as_bit_array(x)
    n_total = int(bits_array.size)
    depth = context_depth(typical)
    if n_total <= cfg.l_min + depth:
        raise InputTooShortError(
            f"input of {n_total} samples is too short to scan with l_min={cfg.l_min} "
            f"and a typical context of {depth} samples",
            details={"input_length": n_total, "l_min": cfg.l_min, "context_depth": depth},
        )

    start_time = time.time()
    cumulative = cumulative_codelength(typical_symbol_costs(bits_array, typical)).tolist()
    bits = bits_array.tolist()
    positions = n_total - cfg.l_min + 1
    chunks = [(s, min(s + SCAN_CHUNK, positions)) for s in range(0, positions, SCAN_CHUNK)]

    logger.info(f"Scanning {n_total} samples: {positions} start positions in {len(chunks)} chunks",
                workers=workers, l_min=cfg.l_min, l_max=cfg.l_max, max_depth=cfg.max_depth)

    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(bits, cumulative, cfg)) as pool:
            results = list(pool.map(_scan_chunk, chunks))
    else:
        results = [_scan_range(bits, cumulative, cfg, s, e) for s, e in chunks]

    scores: List[float] = []
    lengths: List[int] = []
    depths: List[int] = []
    for chunk_scores, chunk_lengths, chunk_depths in results:
        scores.extend(chunk_scores)
        lengths.extend(chunk_lengths)
        depths.extend(chunk_depths)

    duration_ms = round((time.time() - start_time) * 1000, 2)
    logger.info("scan_completed", positions=positions, min_score=min(scores), duration_ms=duration_ms)
    return ScanProfile(config=cfg, input_length=n_total, scores=scores,
                       best_lengths=lengths, best_depths=depths)


def flag_segments(profile: ScanProfile, tau: float) -> List[FlaggedSegment]:
    """Positions with ΔL < -tau, overlapping windows merged, sorted by score."""
    flagged = [n for n, score in enumerate(profile.scores) if score < -tau]
    segments: List[FlaggedSegment] = []
    current: Optional[List] = None  # [segment_start, segment_end, witness n]
    for n in flagged:
        end = n + profile.best_lengths[n]
        if current is not None and n < current[1]:
            current[1] = max(current[1], end)
            if profile.scores[n] < profile.scores[current[2]]:
                current[2] = n
            continue
        if current is not None:
            segments.append(_segment(profile, *current))
        current = [n, end, n]
    if current is not None:
        segments.append(_segment(profile, *current))
    segments.sort(key=lambda s: (s.score, s.start))
    return segments


def _segment(profile: ScanProfile, segment_start: int, segment_end: int, witness: int) -> FlaggedSegment:
    return FlaggedSegment(
        start=witness,
        length=profile.best_lengths[witness],
        score=profile.scores[witness],
        depth=profile.best_depths[witness],
        segment_start=segment_start,
        segment_end=segment_end,
    )


def random_walk(x: BitsLike) -> np.ndarray:
    """S[N] = sum of y[n] with y = +1 for bit 1 and -1 for bit 0; S[0] = 0."""
    steps = 2 * as_bit_array(x).astype(np.int64) - 1
    return np.concatenate(([0], np.cumsum(steps)))


def _config_line(profile: ScanProfile, typical_label: str) -> str:
    cfg = profile.config
    return (f"# config: l_min={cfg.l_min} l_max={cfg.l_max} max_depth={cfg.max_depth} "
            f"tau={cfg.tau} atypical_coder={cfg.atypical_coder} typical={typical_label} "
            f"input_length={profile.input_length}")


def write_profile_csv(profile: ScanProfile, path: Union[str, Path], typical_label: str = "",
                      order: Optional[Sequence[int]] = None) -> None:
    """One row per start position: n, delta_l, best_l, best_d."""
    rows = range(profile.positions) if order is None else order
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(_config_line(profile, typical_label) + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["n", "delta_l", "best_l", "best_d"])
        for n in rows:
            writer.writerow([n, repr(profile.scores[n]), profile.best_lengths[n], profile.best_depths[n]])


def write_ranking_csv(profile: ScanProfile, path: Union[str, Path], typical_label: str = "") -> None:
    """The profile sorted ascending by ΔL, most atypical first."""
    order = sorted(range(profile.positions), key=lambda n: (profile.scores[n], n))
    write_profile_csv(profile, path, typical_label, order=order)


def write_flags_csv(profile: ScanProfile, segments: Sequence[FlaggedSegment], path: Union[str, Path],
                    tau: float, typical_label: str = "") -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(_config_line(profile, typical_label) + f" flag_tau={tau}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["n", "delta_l", "best_l", "best_d", "segment_start", "segment_end"])
        for s in segments:
            writer.writerow([s.start, repr(s.score), s.length, s.depth, s.segment_start, s.segment_end])
