"""
------------------------------------------------------------------------------
Project: Atypicality Toolkit
Description: SVG figures for the CLI. CSV files stay the primary artifact;
             these are for reading results at a glance.
------------------------------------------------------------------------------
"""
from pathlib import Path
from typing import Optional, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from atypicality.config import logger  # noqa: E402
from atypicality.models import FreezingDemo, ScanProfile, SimulationResult  # noqa: E402
from atypicality.scanner import random_walk  # noqa: E402
from atypicality.utils import BitsLike  # noqa: E402

# svg.hashsalt fixes the element ids so identical runs give identical files
_RC = {"svg.hashsalt": "atypicality", "svg.fonttype": "none"}


def _save(fig, path: Union[str, Path]) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"Wrote figure {path}")


def plot_scan(bits: BitsLike, profile: ScanProfile, path: Union[str, Path],
              tau: Optional[float] = None) -> None:
    """Random-walk representation on top, ΔL(n) below, sharing the sample axis."""
    walk = random_walk(bits)
    with plt.rc_context(_RC):
        fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(10, 6))
        top.plot(np.arange(walk.size), walk, linewidth=0.8)
        top.set_ylabel("S[N]")
        bottom.plot(np.arange(profile.positions), profile.scores, linewidth=0.8)
        if tau is not None:
            bottom.axhline(-tau, color="red", linestyle="--", linewidth=0.8, label=f"-tau = {-tau:g}")
            bottom.legend(loc="lower right")
        bottom.set_ylabel("ΔL(n) [bits]")
        bottom.set_xlabel("n")
        fig.tight_layout()
        _save(fig, path)


def plot_grid(result: SimulationResult, path: Union[str, Path], log_scale: bool = True) -> None:
    """Estimates with CI error bars, plus the bound curve where one exists."""
    xs = [p.x for p in result.points]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        ax.errorbar(xs, [p.estimate for p in result.points], yerr=[p.half_width for p in result.points],
                    marker="o", capsize=3, label="simulated")
        bounded = [(p.x, p.bound) for p in result.points if p.bound is not None]
        if bounded:
            bx, by = zip(*bounded)
            ax.plot(bx, by, marker="x", linestyle="--", label="upper bound")
        positive = [p.estimate for p in result.points if p.estimate > 0] + [b for _, b in bounded if b > 0]
        if log_scale and positive:
            ax.set_yscale("log")
        ax.set_xlabel(result.x_label)
        ax.set_ylabel("probability" if result.kind != "phase" else "covered fraction")
        ax.set_title(result.kind)
        ax.legend()
        fig.tight_layout()
        _save(fig, path)


def plot_freezing(demo: FreezingDemo, path: Union[str, Path], tau: Optional[float] = None) -> None:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(10, 4.5))
        ax.plot(demo.frozen.scores, linewidth=0.8, label="frozen")
        ax.plot(demo.adaptive.scores, linewidth=0.8, label="adaptive")
        ax.axvspan(demo.segment_start, demo.segment_end, color="grey", alpha=0.2, label="anomalous segment")
        if tau is not None:
            ax.axhline(-tau, color="red", linestyle="--", linewidth=0.8)
        ax.set_xlabel("n")
        ax.set_ylabel("ΔL(n) [bits]")
        ax.legend(loc="lower right")
        fig.tight_layout()
        _save(fig, path)
