"""
------------------------------------------------------------------------------
Project: Atypicality Toolkit
Description: Trainable typical coder. A CTW tree is run over the training
             data and then frozen: every context keeps only the posterior
             weight of the memoryless hypothesis and its KT prediction.
------------------------------------------------------------------------------
"""
import hashlib
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from atypicality.config import logger
from atypicality.ctw import ContextNode, ContextTree
from atypicality.errors import InvalidParameterError, ModelFormatError
from atypicality.utils import BitsLike, as_bit_array

MAGIC = b"ATYPFRZN"
FORMAT_VERSION = 1
MAX_MODEL_DEPTH = 63

# little-endian throughout
_HEADER = struct.Struct("<8sHHdI")   # magic, version, depth, training bits, node count
_RECORD = struct.Struct("<BQdQQ")    # depth, context path, w1, a, b


class FrozenNode(NamedTuple):
    a: int
    b: int
    w1: float  # P(M1 | training data) at this context
    children: Tuple[Optional["FrozenNode"], Optional["FrozenNode"]]

    @property
    def q1(self) -> float:
        """P(1 | s, M1), the KT estimate from the training counts."""
        return (self.b + 0.5) / (self.a + self.b + 1.0)


@dataclass(frozen=True)
class FrozenModel:
    depth: int
    root: FrozenNode
    training_codelength: float

    def iter_nodes(self) -> Iterator[Tuple[Tuple[int, ...], FrozenNode]]:
        """Preorder walk, child 0 before child 1; contexts are most-recent-first."""
        stack: List[Tuple[Tuple[int, ...], FrozenNode]] = [((), self.root)]
        while stack:
            context, node = stack.pop()
            yield context, node
            for symbol in (1, 0):
                child = node.children[symbol]
                if child is not None:
                    stack.append((context + (symbol,), child))

    @property
    def node_count(self) -> int:
        return sum(1 for _ in self.iter_nodes())

    def to_bytes(self) -> bytes:
        records = []
        for context, node in self.iter_nodes():
            path = 0
            for i, symbol in enumerate(context):
                path |= symbol << i
            records.append(_RECORD.pack(len(context), path, node.w1, node.a, node.b))
        header = _HEADER.pack(MAGIC, FORMAT_VERSION, self.depth, self.training_codelength, len(records))
        return header + b"".join(records)

    @classmethod
    def from_bytes(cls, data: bytes) -> "FrozenModel":
        if len(data) < _HEADER.size:
            raise ModelFormatError("model file is truncated (no header)")
        magic, version, depth, training_bits, count = _HEADER.unpack_from(data, 0)
        if magic != MAGIC:
            raise ModelFormatError("not a frozen model file (bad magic)")
        if version != FORMAT_VERSION:
            raise ModelFormatError(f"unsupported model format version {version}")
        if len(data) != _HEADER.size + count * _RECORD.size:
            raise ModelFormatError("model file size does not match its node count")
        if count == 0:
            raise ModelFormatError("model file holds no nodes")

        # records are preorder, so every parent precedes its children
        fields = {}
        order = []
        for i in range(count):
            node_depth, path, w1, a, b = _RECORD.unpack_from(data, _HEADER.size + i * _RECORD.size)
            if node_depth > depth or not 0.0 <= w1 <= 1.0 or math.isnan(w1):
                raise ModelFormatError(f"invalid node record {i}")
            context = tuple((path >> j) & 1 for j in range(node_depth))
            if context and context[:-1] not in fields:
                raise ModelFormatError(f"node record {i} has no parent")
            fields[context] = (a, b, w1)
            order.append(context)
        if order[0] != ():
            raise ModelFormatError("first node record must be the root")

        known = set(order)

        def build(context: Tuple[int, ...]) -> FrozenNode:
            a, b, w1 = fields[context]
            children = tuple(
                build(context + (s,)) if context + (s,) in known else None for s in (0, 1)
            )
            return FrozenNode(a, b, w1, children)

        return cls(depth=depth, root=build(()), training_codelength=training_bits)

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "FrozenModel":
        return cls.from_bytes(Path(path).read_bytes())

    def state_digest(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()


def _run_training(tree: ContextTree, sequences: Sequence[BitsLike]) -> int:
    """Feeds every sequence; the first `depth` symbols of each are context only."""
    depth = tree.max_depth
    coded = 0
    for sequence in sequences:
        bits = as_bit_array(sequence).tolist()
        for i in range(depth, len(bits)):
            tree.update_with_context(bits[i], bits[i - depth:i])
            coded += 1
    return coded


def _freeze(node: ContextNode, max_depth: int) -> FrozenNode:
    k = max_depth - node.depth
    children = tuple(
        _freeze(child, max_depth) if child is not None else None for child in node.children
    )
    if k == 0:
        w1 = 1.0
    else:
        split = node.log_pt
        for child in node.children:
            if child is not None:
                split += child.log_pw[k - 1]
        w1 = float(2.0 ** (node.log_pe - np.logaddexp2(node.log_pe, split)))
    return FrozenNode(node.a, node.b, w1, children)


def train(sequences: Sequence[BitsLike], depth: int) -> FrozenModel:
    """Runs CTW over the training sequences and freezes the result."""
    if not sequences:
        raise InvalidParameterError("training needs at least one sequence")
    if not 0 <= depth <= MAX_MODEL_DEPTH:
        raise InvalidParameterError(f"depth must lie in [0, {MAX_MODEL_DEPTH}], got {depth}")

    tree = ContextTree(depth)
    coded = _run_training(tree, sequences)
    if coded == 0:
        raise InvalidParameterError(
            f"every training sequence is at most {depth} symbols long; nothing to code"
        )
    model = FrozenModel(depth=depth, root=_freeze(tree.root, depth), training_codelength=tree.codelength())
    logger.info(f"Trained frozen model: depth={depth}, coded symbols={coded}, "
                f"nodes={model.node_count}, training bits={model.training_codelength:.1f}")
    return model


def _predict_one(model: FrozenModel, history: Sequence[int]) -> float:
    """P(1 | history) reading at most `depth` symbols from the end of history."""
    available = min(len(history), model.depth)
    path = []
    node = model.root
    tail = None
    for d in range(available):
        path.append(node)
        child = node.children[history[-1 - d]]
        if child is None:
            # unseen context: the deeper model has nothing to say
            tail = 0.5
            break
        node = child
    if tail is None:
        tail = node.q1
    for ancestor in reversed(path):
        tail = ancestor.w1 * ancestor.q1 + (1.0 - ancestor.w1) * tail
    return tail


def frozen_predict(model: FrozenModel, context: BitsLike) -> float:
    """Probability that the next symbol is 1 after `context` (chronological order)."""
    return _predict_one(model, as_bit_array(context).tolist())


def frozen_symbol_costs(model: FrozenModel, x: BitsLike, preceding_context: BitsLike = ()) -> np.ndarray:
    """Per-symbol code lengths -log2 P(x_i | preceding symbols) under the frozen model."""
    history = as_bit_array(preceding_context).tolist()
    bits = as_bit_array(x).tolist()
    costs = np.empty(len(bits), dtype=np.float64)
    for i, symbol in enumerate(bits):
        p_one = _predict_one(model, history)
        costs[i] = -math.log2(p_one if symbol else 1.0 - p_one)
        history.append(symbol)
    return costs


def typical_codelength_frozen(model: FrozenModel, x: BitsLike, preceding_context: BitsLike = ()) -> float:
    return float(frozen_symbol_costs(model, x, preceding_context).sum())


class AdaptiveTypicalCoder:
    """Control coder: a CTW trained like the frozen model that keeps learning while it codes."""

    def __init__(self, sequences: Sequence[BitsLike], depth: int):
        if not sequences:
            raise InvalidParameterError("training needs at least one sequence")
        self.depth = depth
        self._training = [as_bit_array(s) for s in sequences]

    def symbol_costs(self, x: BitsLike, preceding_context: BitsLike = ()) -> np.ndarray:
        # a fresh tree per call keeps the coder reusable across scans
        tree = ContextTree(self.depth)
        _run_training(tree, self._training)
        history = as_bit_array(preceding_context).tolist()
        bits = as_bit_array(x).tolist()
        costs = np.empty(len(bits), dtype=np.float64)
        for i, symbol in enumerate(bits):
            costs[i] = -math.log2(tree.update_with_context(symbol, history[-self.depth:] if self.depth else ()))
            history.append(symbol)
        return costs
