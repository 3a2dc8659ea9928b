"""
------------------------------------------------------------------------------
Project: Atypicality Toolkit
Description: Binary Context-Tree-Weighting coder used as the atypical
             (self-description) coder, with depth minimisation and the log*
             headers for depth and length.
------------------------------------------------------------------------------
"""
from typing import Iterator, List, Optional, Sequence, Tuple

from atypicality.codelength import depth_penalty, kt_log2_predict, log2_mix, log_star
from atypicality.errors import InvalidParameterError
from atypicality.models import AtypicalCodeLength, KTCounts
from atypicality.utils import BitsLike, as_bit_array


class ContextNode:
    """One context s. Probabilities are kept as log2 values.

    `log_pw[k]` is log2 P_w(s) in the tree truncated at depth `depth + k`.
    Symbols whose available context ends exactly at this node (sequence start)
    are "terminal" here: they are coded by the node's own estimator under the
    memoryless hypothesis and by a separate KT estimator (ta, tb, log_pt) under
    the split hypothesis, since no child can see them.
    """
    __slots__ = ("depth", "a", "b", "ta", "tb", "log_pe", "log_pt", "log_pw", "children")

    def __init__(self, depth: int, span: int):
        self.depth = depth
        self.a = 0
        self.b = 0
        self.ta = 0
        self.tb = 0
        self.log_pe = 0.0
        self.log_pt = 0.0
        self.log_pw = [0.0] * span
        self.children: List[Optional["ContextNode"]] = [None, None]

    @property
    def counts(self) -> KTCounts:
        return KTCounts(a=self.a, b=self.b)


class ContextTree:
    """CTW state for one sequence. Single writer; nodes are created lazily.

    With `track_all_depths` the tree also maintains the root probability of
    every truncated tree D = 0..max_depth, so one pass yields -log P_w(D) for
    all depths at once.
    """

    def __init__(self, max_depth: int, track_all_depths: bool = False,
                 initial_context: Sequence[int] = ()):
        if max_depth < 0:
            raise InvalidParameterError(f"max_depth must be non-negative, got {max_depth}")
        self.max_depth = max_depth
        self.track_all_depths = track_all_depths
        self.root = ContextNode(0, max_depth + 1)
        self.symbols = 0
        self._lowest_tracked = 0 if track_all_depths else max_depth
        self._history: List[int] = [int(c) for c in as_bit_array(initial_context)]
        self._penalties = [depth_penalty(d) for d in range(max_depth + 1)]

    def update(self, symbol: int) -> float:
        """Codes `symbol` after the symbols seen so far; returns its predictive probability."""
        prob = self.update_with_context(symbol, self._history)
        self._history.append(symbol)
        return prob

    def update_with_context(self, symbol: int, context: Sequence[int]) -> float:
        """Codes `symbol` given `context` (chronological, most recent last)."""
        max_depth = self.max_depth
        root = self.root
        before = root.log_pw[max_depth]

        available = min(len(context), max_depth)
        path = [root]
        node = root
        for d in range(available):
            c = context[-1 - d]
            child = node.children[c]
            if child is None:
                child = ContextNode(d + 1, max_depth - d)
                node.children[c] = child
            path.append(child)
            node = child

        for node in path:
            if symbol:
                node.log_pe += kt_log2_predict(node.a, node.b, 1)
                node.b += 1
            else:
                node.log_pe += kt_log2_predict(node.a, node.b, 0)
                node.a += 1
        if available < max_depth:
            if symbol:
                node.log_pt += kt_log2_predict(node.ta, node.tb, 1)
                node.tb += 1
            else:
                node.log_pt += kt_log2_predict(node.ta, node.tb, 0)
                node.ta += 1

        lowest = self._lowest_tracked
        for node in reversed(path):
            d = node.depth
            log_pw = node.log_pw
            child0, child1 = node.children
            for depth in range(max(d, lowest), max_depth + 1):
                k = depth - d
                if k == 0:
                    log_pw[0] = node.log_pe
                    continue
                split = node.log_pt
                if child0 is not None:
                    split += child0.log_pw[k - 1]
                if child1 is not None:
                    split += child1.log_pw[k - 1]
                log_pw[k] = log2_mix(node.log_pe, split)

        self.symbols += 1
        return 2.0 ** (root.log_pw[max_depth] - before)

    def codelength(self) -> float:
        """-log2 P_w at the root for the full depth."""
        return -self.root.log_pw[self.max_depth]

    def root_codelengths(self) -> List[float]:
        """-log2 P_w at the root for every truncation depth D = 0..max_depth."""
        if not self.track_all_depths:
            raise InvalidParameterError("tree was built without track_all_depths")
        return [-v for v in self.root.log_pw]

    def best_depth_codelength(self) -> Tuple[float, int]:
        """min over D of (-log2 P_w(D) + log*(D)), smallest D on ties."""
        log_pw = self.root.log_pw
        penalties = self._penalties
        if not self.track_all_depths:
            return -log_pw[self.max_depth] + penalties[self.max_depth], self.max_depth
        best_bits = -log_pw[0]
        best_depth = 0
        for depth in range(1, self.max_depth + 1):
            bits = penalties[depth] - log_pw[depth]
            if bits < best_bits:
                best_bits = bits
                best_depth = depth
        return best_bits, best_depth

    def iter_nodes(self) -> Iterator[Tuple[Tuple[int, ...], ContextNode]]:
        """Yields (context, node) in preorder; context is most-recent-first."""
        stack: List[Tuple[Tuple[int, ...], ContextNode]] = [((), self.root)]
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


def ctw_update(tree: ContextTree, context: Sequence[int], symbol: int) -> Tuple[ContextTree, float]:
    """Updates every node on the context path of `symbol`; returns the tree and P(symbol)."""
    if symbol not in (0, 1):
        raise InvalidParameterError(f"symbol must be 0 or 1, got {symbol}")
    bits = [int(c) for c in as_bit_array(context)]
    return tree, tree.update_with_context(symbol, bits)


def ctw_codelength(x: BitsLike, depth: int, initial_context: BitsLike = ()) -> float:
    """-log2 of the root weighted block probability of x."""
    tree = ContextTree(depth, initial_context=as_bit_array(initial_context))
    for symbol in as_bit_array(x).tolist():
        tree.update(symbol)
    return tree.codelength()


def atypical_codelength(x: BitsLike, max_depth: int) -> AtypicalCodeLength:
    """L_A = min_D(-log P_w(D) + log* D) + log* l, tau excluded."""
    bits = as_bit_array(x).tolist()
    if not bits:
        raise InvalidParameterError("atypical code length needs at least one symbol")
    tree = ContextTree(max_depth, track_all_depths=True)
    for symbol in bits:
        tree.update(symbol)
    best_bits, best_depth = tree.best_depth_codelength()
    length_penalty = log_star(len(bits))
    penalty = depth_penalty(best_depth)
    return AtypicalCodeLength(
        total_bits=best_bits + length_penalty,
        best_depth=best_depth,
        tree_bits=best_bits - penalty,
        depth_penalty=penalty,
        length_penalty=length_penalty,
    )
