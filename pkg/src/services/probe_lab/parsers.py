"""
Loss-Stream and Distribution Parsers
====================================
Reads and writes the two plain-text formats ProbeLab exchanges with the
outside world.

This module handles:
1. Loss-stream files: header line "d T", then T lines of d decimals
2. Distribution literals: one "value probability" line per atom,
   distributions separated by a line holding "---"
3. Exact float round trips (values are written with repr)

No printing here - callers decide what to report.
"""

from fractions import Fraction
from io import StringIO
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError, field_validator

from probe_lab.core import EnvironmentContractError, ParameterError
from probe_lab.oracle import DiscreteDistribution


PathLike = Union[str, Path]

DISTRIBUTION_SEPARATOR = "---"


class LossStreamHeader(BaseModel):
    """
    First line of a loss-stream file.

    Pydantic validates:
    - dimension is a positive integer
    - horizon is a positive integer
    """
    dimension: int
    horizon: int

    @field_validator("dimension", "horizon")
    def must_be_positive(cls, v):
        if v < 1:
            raise ValueError("dimension and horizon must be positive")
        return v


class LossStreamParser:
    """
    Parse loss-stream files into a (T, d) float matrix.

    Example file (d=2, T=3):
        2 3
        1.0 0.0
        0.0 1.0
        1.0 0.0
    """

    def __init__(self, low: float = -1.0, high: float = 1.0):
        self.low = low
        self.high = high
        self.header: LossStreamHeader = None
        self.errors: List[str] = []

    def parse(self, path: PathLike) -> np.ndarray:
        """
        Read and validate a loss-stream file.

        Raises:
            FileNotFoundError: path does not exist
            EnvironmentContractError: malformed header, wrong shape or out-of-range entries
        """
        text = Path(path).read_text()
        return self.parse_text(text, source=str(path))

    def parse_text(self, text: str, source: str = "<string>") -> np.ndarray:
        lines = text.splitlines()
        if not lines:
            raise EnvironmentContractError(f"Loss stream {source} is empty")
        self.header = self._parse_header(lines[0], source)
        body = "\n".join(line for line in lines[1:] if line.strip())
        if not body:
            raise EnvironmentContractError(
                f"Loss stream {source} declares T={self.header.horizon} but has no rows"
            )

        try:
            frame = pd.read_csv(StringIO(body), sep=r"\s+", header=None,
                                float_precision="round_trip")
            losses = frame.to_numpy(dtype=float)
        except (pd.errors.ParserError, ValueError) as e:
            raise EnvironmentContractError(f"Loss stream {source}: unreadable body\n  {e}") from e
        self._validate_shape(losses, source)
        self._validate_range(losses, source)
        return losses

    def _parse_header(self, line: str, source: str) -> LossStreamHeader:
        parts = line.split()
        if len(parts) != 2:
            raise EnvironmentContractError(
                f"Loss stream {source}: header must be 'd T'\n  Found: {line!r}"
            )
        try:
            return LossStreamHeader(dimension=int(parts[0]), horizon=int(parts[1]))
        except (ValueError, ValidationError) as e:
            raise EnvironmentContractError(f"Loss stream {source}: bad header {line!r}\n  {e}") from e

    def _validate_shape(self, losses: np.ndarray, source: str) -> None:
        expected = (self.header.horizon, self.header.dimension)
        if losses.shape != expected:
            raise EnvironmentContractError(
                f"Loss stream {source}: header says (T, d) = {expected}, "
                f"body has shape {losses.shape}"
            )

    def _validate_range(self, losses: np.ndarray, source: str) -> None:
        bad = ~np.isfinite(losses) | (losses < self.low) | (losses > self.high)
        for row, col in zip(*np.nonzero(bad)):
            self.errors.append(f"Row {row + 1}, column {col + 1}: {losses[row, col]!r}")
        if self.errors:
            raise EnvironmentContractError(
                f"Loss stream {source}: {len(self.errors)} entries outside "
                f"[{self.low}, {self.high}]\n  First: {self.errors[0]}"
            )

    def get_summary(self) -> dict:
        if self.header is None:
            return {"error": "No stream parsed"}
        return {
            "dimension": self.header.dimension,
            "horizon": self.header.horizon,
            "errors_count": len(self.errors),
        }


def format_loss_stream(losses: np.ndarray) -> str:
    matrix = np.atleast_2d(np.asarray(losses, dtype=float))
    rows = [" ".join(repr(float(x)) for x in row) for row in matrix]
    return "\n".join([f"{matrix.shape[1]} {matrix.shape[0]}", *rows]) + "\n"


def write_loss_stream(path: PathLike, losses: np.ndarray) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(format_loss_stream(losses))
    return target


def read_loss_stream(path: PathLike, low: float = -1.0, high: float = 1.0) -> Tuple[LossStreamHeader, np.ndarray]:
    parser = LossStreamParser(low, high)
    losses = parser.parse(path)
    return parser.header, losses


# ===================================
# DISTRIBUTION LITERALS
# ===================================

def _number(token: str) -> float:
    """Decimal or exact fraction ("1/3")."""
    return float(Fraction(token)) if "/" in token else float(token)


def parse_distribution_literal(text: str) -> DiscreteDistribution:
    """
    Parse "value probability" lines (blank lines and '#' comments ignored).

    Raises:
        ParameterError: malformed line or probabilities that do not sum to 1
    """
    values, probs = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParameterError(f"Line {lineno}: expected 'value probability'\n  Found: {raw!r}")
        try:
            values.append(_number(parts[0]))
            probs.append(_number(parts[1]))
        except (ValueError, ZeroDivisionError) as e:
            raise ParameterError(f"Line {lineno}: not a number\n  Found: {raw!r}") from e
    if not values:
        raise ParameterError("Distribution literal has no atoms")
    return DiscreteDistribution.from_pairs(values, probs)


def format_distribution_literal(dist: DiscreteDistribution) -> str:
    return "".join(f"{float(v)!r} {float(p)!r}\n" for v, p in zip(dist.values, dist.probs))


def parse_distribution_block(text: str) -> List[DiscreteDistribution]:
    """Several literals separated by '---' lines."""
    chunks, current = [], []
    for line in text.splitlines():
        if line.strip() == DISTRIBUTION_SEPARATOR:
            chunks.append("\n".join(current))
            current = []
        else:
            current.append(line)
    chunks.append("\n".join(current))
    return [parse_distribution_literal(c) for c in chunks if _has_atoms(c)]


def _has_atoms(chunk: str) -> bool:
    return any(line.split("#", 1)[0].strip() for line in chunk.splitlines())


def format_distribution_block(dists: Sequence[DiscreteDistribution]) -> str:
    return f"{DISTRIBUTION_SEPARATOR}\n".join(format_distribution_literal(d) for d in dists)


def load_distribution_file(path: PathLike) -> List[DiscreteDistribution]:
    return parse_distribution_block(Path(path).read_text())
