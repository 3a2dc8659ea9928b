"""
------------------------------------------------------------------------------
Project: Atypicality Toolkit
Description: Pydantic domain types shared across modules.
------------------------------------------------------------------------------
"""
from datetime import datetime, timezone
from typing import Any, Dict, List, Literal, Optional
from pydantic import BaseModel, ConfigDict, Field, model_validator

from atypicality import __version__
from atypicality.config import settings


class KTCounts(BaseModel):
    """Number of 0s (a) and 1s (b) seen in a context."""
    model_config = ConfigDict(frozen=True)

    a: int = Field(default=0, ge=0, description="count of 0-symbols")
    b: int = Field(default=0, ge=0, description="count of 1-symbols")

    @property
    def total(self) -> int:
        return self.a + self.b


class IIDTypicalModel(BaseModel):
    """Binary iid typical law with P(X=1) = p."""
    model_config = ConfigDict(frozen=True)

    p: float = Field(..., gt=0.0, lt=1.0, description="probability of symbol 1")


class AtypicalityVerdict(BaseModel):
    typical_bits: float
    atypical_bits: float = Field(..., description="atypical code length including tau")
    delta: float = Field(..., description="atypical_bits - typical_bits")
    is_atypical: bool

    @model_validator(mode="after")
    def _check_sign(self):
        if self.is_atypical != (self.delta < 0):
            raise ValueError("is_atypical must hold exactly when delta < 0")
        return self


class AtypicalCodeLength(BaseModel):
    total_bits: float
    best_depth: int = Field(..., ge=0)
    tree_bits: float = Field(..., description="-log2 P_w at the root for best_depth")
    depth_penalty: float
    length_penalty: float


class ScanConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    l_min: int = Field(default_factory=lambda: settings.DEFAULT_L_MIN, ge=1)
    l_max: int = Field(default_factory=lambda: settings.DEFAULT_L_MAX, ge=1)
    max_depth: int = Field(default_factory=lambda: settings.DEFAULT_MAX_DEPTH, ge=0, le=63)
    tau: Optional[float] = Field(default=None, ge=0.0, description="unset = ranking mode")
    atypical_coder: Literal["ctw", "iid"] = "ctw"

    @model_validator(mode="after")
    def _check_range(self):
        if self.l_min > self.l_max:
            raise ValueError(f"l_min ({self.l_min}) must not exceed l_max ({self.l_max})")
        return self


class ScanProfile(BaseModel):
    """Per-start scores. Index n of every list is start position n."""
    config: ScanConfig
    input_length: int
    scores: List[float]
    best_lengths: List[int]
    best_depths: List[int]

    @property
    def positions(self) -> int:
        return len(self.scores)


class FlaggedSegment(BaseModel):
    start: int
    length: int
    score: float
    depth: int
    segment_start: int = Field(..., description="first sample of the merged flagged region")
    segment_end: int = Field(..., description="one past the last sample of the merged region")


class BoundSpec(BaseModel):
    p: float = Field(default=0.5, gt=0.0, lt=1.0)
    p_a: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    tau: float = Field(default=1.0, ge=0.0)
    lengths: List[int] = Field(default_factory=lambda: [64, 128, 256, 512, 1024])
    alphas: List[float] = Field(default_factory=lambda: [3.0])
    trials: int = Field(default=10_000, ge=1)
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_grids(self):
        if not self.lengths or any(l < 1 for l in self.lengths):
            raise ValueError("length grid must be non-empty with positive entries")
        if self.lengths != sorted(self.lengths):
            raise ValueError("length grid must be sorted")
        if not self.alphas or self.alphas != sorted(self.alphas):
            raise ValueError("alpha grid must be non-empty and sorted")
        if any(a <= 0 or a > 4 for a in self.alphas):
            raise ValueError("alpha values must lie in (0, 4]")
        return self


class MarkovSpec(BaseModel):
    """Markov chain emitting one bit per transition; None marks an impossible transition."""
    model_config = ConfigDict(frozen=True)

    transitions: List[List[float]]
    emissions: List[List[Optional[int]]]

    @model_validator(mode="after")
    def _check_chain(self):
        k = len(self.transitions)
        if k == 0 or any(len(row) != k for row in self.transitions):
            raise ValueError("transition matrix must be square and non-empty")
        if len(self.emissions) != k or any(len(row) != k for row in self.emissions):
            raise ValueError("emission matrix must match the transition matrix shape")
        for i, row in enumerate(self.transitions):
            if any(v < 0 for v in row) or abs(sum(row) - 1.0) > 1e-12:
                raise ValueError(f"row {i} of the transition matrix is not stochastic")
            for j, v in enumerate(row):
                symbol = self.emissions[i][j]
                if v > 0 and symbol not in (0, 1):
                    raise ValueError(f"transition {i}->{j} is possible but emits no bit")
        return self

    @property
    def states(self) -> int:
        return len(self.transitions)


class GridPoint(BaseModel):
    x: float = Field(..., description="grid coordinate (l or alpha)")
    estimate: float = Field(..., ge=0.0, le=1.0)
    half_width: float = Field(..., ge=0.0)
    bound: Optional[float] = None


class SimulationResult(BaseModel):
    kind: str
    x_label: str
    points: List[GridPoint]
    parameters: Dict[str, Any] = Field(default_factory=dict)


class RunManifest(BaseModel):
    subcommand: str
    parameters: Dict[str, Any]
    inputs: Dict[str, str] = Field(default_factory=dict, description="path -> sha256")
    outputs: List[str] = Field(default_factory=list)
    tool_version: str = __version__
    created_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))


class FreezingDemo(BaseModel):
    """Frozen and adaptive scans of the same test stream with one anomalous segment."""
    frozen: ScanProfile
    adaptive: ScanProfile
    segment_start: int
    segment_end: int
    test_bits: List[int]
