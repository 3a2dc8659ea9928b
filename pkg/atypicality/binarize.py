"""
------------------------------------------------------------------------------
Project: Atypicality Toolkit
Description: Converts real-world sources into bit sequences: consecutive
             comparison of measurements, DNA 2-bit mapping, bit-text parsing
             and the RANDU bit-sum construction. Also holds the file loaders.
------------------------------------------------------------------------------
"""
import string
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from atypicality.config import logger
from atypicality.errors import DataFormatError, InvalidParameterError
from atypicality.utils import BitsLike, as_bit_array

# Deviation point: the 2-bit embedding of bases is a documented choice.
DNA_MAP: Dict[str, str] = {"A": "00", "C": "01", "G": "10", "T": "11"}
RANDU_MULTIPLIER = 65539
RANDU_MODULUS = 1 << 31

INPUT_FORMATS = ("bits", "dna", "compare", "words")


def consecutive_comparison(values: Sequence[float], seed: int) -> np.ndarray:
    """bit_i = 1 if values[i+1] > values[i], 0 if smaller, a seeded fair coin on ties."""
    if len(values) < 2:
        raise InvalidParameterError(f"comparison needs at least 2 values, got {len(values)}")
    arr = np.asarray(values, dtype=np.float64)
    diff = np.diff(arr)
    bits = (diff > 0).astype(np.uint8)
    ties = np.flatnonzero(diff == 0)
    if ties.size:
        coins = np.random.default_rng(seed).integers(0, 2, size=ties.size, dtype=np.uint8)
        bits[ties] = coins
    return bits


def dna_to_bits(bases: str, skip_invalid: bool = False, dna_map: Dict[str, str] = DNA_MAP) -> np.ndarray:
    """Maps each base to two bits (A→00, C→01, G→10, T→11); lowercase is accepted."""
    out: List[str] = []
    for position, base in enumerate(bases.upper()):
        code = dna_map.get(base)
        if code is None:
            if skip_invalid:
                continue
            raise DataFormatError(f"invalid base {base!r} at position {position}", column=position + 1)
        out.append(code)
    return as_bit_array("".join(out))


def bits_to_dna(bits: BitsLike, dna_map: Dict[str, str] = DNA_MAP) -> str:
    """Inverse of dna_to_bits."""
    arr = as_bit_array(bits)
    if arr.size % 2:
        raise InvalidParameterError("DNA bit sequences have even length")
    inverse = {code: base for base, code in dna_map.items()}
    pairs = arr.reshape(-1, 2)
    return "".join(inverse[f"{hi}{lo}"] for hi, lo in pairs.tolist())


def randu_bits(count: int, seed: int) -> np.ndarray:
    """x_{k+1} = 65539·x_k mod 2^31; each bit is 1 iff the 31-bit state has more than 15.5 ones."""
    if count < 1:
        raise InvalidParameterError(f"count must be at least 1, got {count}")
    if seed % 2 == 0 or not 0 < seed < RANDU_MODULUS:
        raise InvalidParameterError(f"RANDU seed must be odd and in (0, 2^31), got {seed}")
    out = np.empty(count, dtype=np.uint8)
    state = seed
    for i in range(count):
        state = (RANDU_MULTIPLIER * state) % RANDU_MODULUS
        out[i] = 1 if bin(state).count("1") > 15.5 else 0
    return out


def parse_bit_text(text: str, source: Optional[str] = None) -> np.ndarray:
    """'0'/'1' characters with arbitrary whitespace; anything else is reported with its position."""
    for line_no, line in enumerate(text.splitlines(), start=1):
        for col, ch in enumerate(line, start=1):
            if ch not in "01" and not ch.isspace():
                raise DataFormatError(f"unexpected character {ch!r} in bit text",
                                      line=line_no, column=col, source=source)
    return as_bit_array("".join(text.split()))


def format_bit_text(bits: BitsLike, width: int = 64) -> str:
    """Writes bits as lines of `width` characters; parse_bit_text reads it back."""
    text = "".join("1" if b else "0" for b in as_bit_array(bits).tolist())
    if not text:
        return ""
    return "\n".join(text[i:i + width] for i in range(0, len(text), width)) + "\n"


def parse_values(text: str, source: Optional[str] = None) -> List[float]:
    """One numeric value per line. Blank lines and '#' comments are skipped."""
    values: List[float] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            values.append(float(stripped))
        except ValueError:
            column = len(line) - len(line.lstrip()) + 1
            raise DataFormatError(f"not a number: {stripped!r}", line=line_no, column=column,
                                  source=source) from None
    return values


def word_lengths(text: str) -> List[int]:
    """Whitespace tokens with surrounding punctuation stripped; empty tokens dropped."""
    lengths = []
    for token in text.split():
        word = token.strip(string.punctuation)
        if word:
            lengths.append(len(word))
    return lengths


def read_fasta(text: str, source: Optional[str] = None) -> str:
    """Concatenates sequence lines; header lines starting with '>' are skipped."""
    return "".join(line for _, _, line in _fasta_lines(text, source))


def _fasta_lines(text: str, source: Optional[str]) -> Iterator[Tuple[int, int, str]]:
    """Yields (line number, column of the first base, stripped sequence line)."""
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(">") or stripped.startswith(";"):
            continue
        indent = len(line) - len(line.lstrip())
        for col, ch in enumerate(stripped, start=indent + 1):
            if not ch.isalpha():
                raise DataFormatError(f"unexpected character {ch!r} in FASTA sequence",
                                      line=line_no, column=col, source=source)
        yield line_no, indent + 1, stripped


def fasta_to_bits(text: str, source: Optional[str] = None, skip_invalid: bool = False) -> np.ndarray:
    """FASTA text to bits; an invalid base is reported with its line and column in the file."""
    parts: List[np.ndarray] = []
    for line_no, first_col, line in _fasta_lines(text, source):
        try:
            parts.append(dna_to_bits(line, skip_invalid=skip_invalid))
        except DataFormatError as exc:
            base = line[exc.column - 1]
            raise DataFormatError(f"invalid base {base!r}", line=line_no,
                                  column=first_col + exc.column - 1, source=source) from None
    if not parts:
        return np.zeros(0, dtype=np.uint8)
    return np.concatenate(parts)


def read_input_text(path: Union[str, Path]) -> str:
    """File contents as UTF-8 text; missing, unreadable or undecodable files are data errors."""
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"input file not found: {path}", source=str(path))
    try:
        return path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"input is not UTF-8 text (byte offset {exc.start})", source=str(path)) from None
    except OSError as exc:
        raise DataFormatError(f"cannot read input: {exc.strerror or exc}", source=str(path)) from None


def load_bits(path: Union[str, Path], fmt: str = "bits", seed: int = 0,
              skip_invalid: bool = False) -> np.ndarray:
    """Reads a file in one of INPUT_FORMATS and returns its bit sequence."""
    if fmt not in INPUT_FORMATS:
        raise InvalidParameterError(f"unknown input format {fmt!r}; expected one of {INPUT_FORMATS}")
    path = Path(path)
    text = read_input_text(path)

    if fmt == "bits":
        bits = parse_bit_text(text, source=str(path))
    elif fmt == "dna":
        bits = fasta_to_bits(text, source=str(path), skip_invalid=skip_invalid)
    else:
        values = parse_values(text, source=str(path)) if fmt == "compare" else word_lengths(text)
        if len(values) < 2:
            raise DataFormatError(f"need at least 2 values to compare, found {len(values)}", source=str(path))
        bits = consecutive_comparison(values, seed)

    logger.info(f"Loaded {bits.size} bits from {path} ({fmt})")
    return bits
