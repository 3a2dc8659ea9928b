"""
------------------------------------------------------------------------------
Project: Atypicality Toolkit
Description: Information-theoretic primitives shared by every coder.
             All lengths are ideal code lengths in bits (-log2 probability),
             never rounded to whole bits.
------------------------------------------------------------------------------
"""
import math

from scipy.special import entr, gammaln, rel_entr

from atypicality.errors import InvalidParameterError
from atypicality.models import KTCounts

LN2 = math.log(2.0)
_LOG2_PI = math.log2(math.pi)


def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0 or math.isnan(value):
        raise InvalidParameterError(f"{name} must lie in [0, 1], got {value}")


def binary_entropy(p: float) -> float:
    """H(p) in bits, with 0·log 0 = 0."""
    _check_probability("p", p)
    return float((entr(p) + entr(1.0 - p)) / LN2)


def relative_entropy(p_hat: float, p: float) -> float:
    """D(p_hat || p) in bits between two Bernoulli laws."""
    _check_probability("p_hat", p_hat)
    if not 0.0 < p < 1.0:
        raise InvalidParameterError(
            f"typical probability must lie strictly inside (0, 1), got {p}"
        )
    value = (rel_entr(p_hat, p) + rel_entr(1.0 - p_hat, 1.0 - p)) / LN2
    return max(float(value), 0.0)


def log_star(l: int) -> float:
    """Elias iterated-log length: log l + log log l + ... over the positive terms."""
    if l < 1:
        raise InvalidParameterError(f"log* is defined for l >= 1, got {l}")
    total = 0.0
    term = math.log2(l)
    while term > 0.0:
        total += term
        term = math.log2(term)
    return total


def depth_penalty(depth: int) -> float:
    """log*(D) header for the chosen tree depth; log*(0) = log*(1) = 0."""
    if depth < 0:
        raise InvalidParameterError(f"depth must be non-negative, got {depth}")
    return log_star(depth) if depth >= 2 else 0.0


def kt_log2_predict(a: int, b: int, symbol: int) -> float:
    """log2 of the KT predictive probability; scalar hot path for the tree coders."""
    if symbol:
        return math.log2((b + 0.5) / (a + b + 1.0))
    return math.log2((a + 0.5) / (a + b + 1.0))


def kt_predict(counts: KTCounts, next_symbol: int) -> float:
    """KT estimate of P(next_symbol) given the counts seen so far."""
    if next_symbol not in (0, 1):
        raise InvalidParameterError(f"symbol must be 0 or 1, got {next_symbol}")
    numerator = counts.b if next_symbol else counts.a
    return (numerator + 0.5) / (counts.a + counts.b + 1.0)


def kt_block_log2(a: int, b: int) -> float:
    """log2 P_e(a, b) = log2 Γ(a+½)Γ(b+½) / (π Γ(a+b+1))."""
    return float(
        (gammaln(a + 0.5) + gammaln(b + 0.5) - gammaln(a + b + 1.0)) / LN2 - _LOG2_PI
    )


def kt_block_codelength(counts: KTCounts) -> float:
    """-log2 of the KT block probability of any sequence with these counts."""
    if counts.a == 0 and counts.b == 0:
        return 0.0
    return -kt_block_log2(counts.a, counts.b)


def log2_mix(u: float, v: float) -> float:
    """log2(½·2^u + ½·2^v) without leaving the log domain."""
    if u >= v:
        return u + math.log2(1.0 + 2.0 ** (v - u)) - 1.0
    return v + math.log2(1.0 + 2.0 ** (u - v)) - 1.0
