"""
------------------------------------------------------------------------------
Project: Atypicality Toolkit
Description: Binary iid typical/atypical code lengths, the atypicality
             criterion (exact and approximate), the GLRT statistic and the
             false-alarm / miss probability bounds.
------------------------------------------------------------------------------
"""
import math
from typing import Tuple

import numpy as np
from scipy.special import rel_entr
from scipy.stats import norm

from atypicality.codelength import LN2, binary_entropy, relative_entropy
from atypicality.errors import BoundNotEvaluableError, InvalidParameterError
from atypicality.models import AtypicalityVerdict, IIDTypicalModel
from atypicality.utils import BitsLike, as_bit_array


def _counts(x: BitsLike) -> Tuple[int, int]:
    """Returns (length, number of ones)."""
    bits = as_bit_array(x)
    return int(bits.size), int(bits.sum())


def _require_length(l: int) -> None:
    if l < 1:
        raise InvalidParameterError(f"sequence length must be at least 1, got {l}")


def _require_tau(tau: float) -> None:
    if tau < 0:
        raise InvalidParameterError(f"tau must be non-negative, got {tau}")


def typical_codelength_iid(x: BitsLike, model: IIDTypicalModel) -> float:
    """L_t = N(1|x)·log 1/p + N(0|x)·log 1/(1-p). The separator cost cancels and is left out."""
    l, ones = _counts(x)
    return ones * -math.log2(model.p) + (l - ones) * -math.log2(1.0 - model.p)


def atypical_codelength_iid(x: BitsLike) -> float:
    """L_a = l·H(p̂) + (3/2)·log2 l, without tau (added at comparison time)."""
    l, ones = _counts(x)
    _require_length(l)
    return l * binary_entropy(ones / l) + 1.5 * math.log2(l)


def iid_atypicality_test(x: BitsLike, model: IIDTypicalModel, tau: float) -> AtypicalityVerdict:
    """Atypical when L_a + tau < L_t, i.e. l·D(p̂||p) > tau + (3/2)·log2 l."""
    _require_tau(tau)
    typical_bits = typical_codelength_iid(x, model)
    atypical_bits = atypical_codelength_iid(x) + tau
    delta = atypical_bits - typical_bits
    return AtypicalityVerdict(
        typical_bits=typical_bits,
        atypical_bits=atypical_bits,
        delta=delta,
        is_atypical=delta < 0,
    )


def approx_threshold(model: IIDTypicalModel, l: int, tau: float) -> float:
    """Deviation bound Δτ: the approximate criterion flags |p̂ - p| > Δτ."""
    _require_length(l)
    _require_tau(tau)
    p = model.p
    return math.sqrt(p * (1.0 - p) * math.log(4.0) / l) * math.sqrt(tau + 1.5 * math.log2(l))


def clt_threshold(l: int, tau: float, alpha: float = 3.0) -> float:
    """Normalised threshold sqrt(2·tau·ln2 + alpha·ln l); alpha = 3 is the approximate criterion."""
    _require_length(l)
    _require_tau(tau)
    return math.sqrt(2.0 * tau * LN2 + alpha * math.log(l))


def clt_pa_approximation(tau: float) -> float:
    """Length-independent CLT estimate 2·Q(sqrt(2·ln2·tau)) of the false-alarm rate."""
    _require_tau(tau)
    return float(2.0 * norm.sf(math.sqrt(2.0 * LN2 * tau)))


def glrt_statistic(x: BitsLike, model: IIDTypicalModel) -> float:
    """Generalised likelihood ratio l·D(p̂||p), in bits."""
    l, ones = _counts(x)
    _require_length(l)
    return l * relative_entropy(ones / l, model.p)


def criterion_flags(ones: np.ndarray, l: int, p: float, tau: float, exact: bool = False) -> np.ndarray:
    """Vectorised criterion over count vectors of length-l sequences.

    exact=True evaluates l·D(p̂||p) > tau + (3/2)·log2 l, otherwise |p̂ - p| > Δτ.
    """
    _require_length(l)
    p_hat = np.asarray(ones, dtype=np.float64) / l
    if exact:
        divergence = (rel_entr(p_hat, p) + rel_entr(1.0 - p_hat, 1.0 - p)) / LN2
        return l * divergence > tau + 1.5 * math.log2(l)
    return np.abs(p_hat - p) > approx_threshold(IIDTypicalModel(p=p), l, tau)


def _chernoff_upper_tail(l: int, p: float, b: float) -> float:
    """Minimised Chernoff exponent (natural log) of P(sum >= l·p + b)."""
    q = 1.0 - p
    return l * -math.log1p(-b / (l * q)) - (l * p + b) * (
        math.log1p(b / (l * p)) - math.log1p(-b / (l * q))
    )


def pa_upper_bound(l: int, tau: float, p: float) -> float:
    """Upper bound on the probability that an iid(p) sequence of length l is flagged.

    For p = ½ this is the Hoeffding form 2^(-tau+1)·l^(-3/2). Otherwise both
    one-sided Chernoff bounds are minimised exactly over s and summed.
    """
    _require_length(l)
    _require_tau(tau)
    if not 0.0 < p < 1.0:
        raise InvalidParameterError(f"p must lie in (0, 1), got {p}")
    if p == 0.5:
        return 2.0 ** (-tau + 1.0) * l ** -1.5

    # the tail towards ½ is the heavy one; relabel so that it is the upper tail
    p = min(p, 1.0 - p)
    q = 1.0 - p
    b = math.sqrt(l * p * q * math.log(4.0)) * math.sqrt(tau + 1.5 * math.log2(l))
    if b >= l * q:
        raise BoundNotEvaluableError(
            "bound not evaluable at this (l, tau, p)",
            details={"l": l, "tau": tau, "p": p, "b": b},
        )
    bound = math.exp(_chernoff_upper_tail(l, p, b))
    if b < l * p:
        bound += math.exp(_chernoff_upper_tail(l, q, b))
    return min(bound, 1.0)


def miss_upper_bound(l: int, tau: float, p: float, p_a: float) -> float:
    """Upper bound on the probability that an iid(p_a) sequence is not flagged against p."""
    _require_length(l)
    _require_tau(tau)
    for name, value in (("p", p), ("p_a", p_a)):
        if not 0.0 < value < 1.0:
            raise InvalidParameterError(f"{name} must lie in (0, 1), got {value}")
    if p_a == p:
        raise InvalidParameterError("miss probability is undefined when p_a equals p")
    if p_a > p:
        p, p_a = 1.0 - p, 1.0 - p_a
    q, q_a = 1.0 - p, 1.0 - p_a

    log_bound = (
        -tau * LN2
        - 1.5 * math.log(l)
        + math.sqrt(l * p * q * (2.0 * tau * LN2 + 3.0 * math.log(l))) * math.log(q_a * p / (p_a * q))
        - l * ((p - 1.0) * math.log(q_a) + (p + 1.0) * math.log(q) - p * math.log(p_a) - p * math.log(p))
    )
    if log_bound >= 0.0:
        return 1.0
    return math.exp(log_bound)
