"""Read and write embedding files in the canonical text format.

The format is one header line ``<count> <dim>`` followed by one line per
token: ``<token> <v_1> ... <v_dim>``. Values are decimal reals; tokens may
not contain whitespace. The same format is used for all three modalities
(text, knowledge graph, visual).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


class EmbeddingFormatError(ValueError):
    """Malformed embedding file (bad header, token, or value)."""


def format_value(x: float) -> str:
    """Shortest decimal string that parses back to exactly ``x``."""
    return repr(float(x))


@dataclass(frozen=True)
class EmbeddingSpace:
    """A vocabulary with one fixed-dimension real vector per token.

    ``vectors`` has one row per token. Instances are validated on
    construction and the vector matrix is marked read-only, so a loaded
    space can be shared freely across threads.
    """

    tokens: list[str]
    vectors: np.ndarray
    dim: int
    modality_tag: str = "text"
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise ValueError(f"vectors must be 2-D, got shape {vectors.shape}")
        if vectors.shape[0] != len(self.tokens):
            raise ValueError(
                f"{len(self.tokens)} tokens but {vectors.shape[0]} vector rows"
            )
        if vectors.shape[1] != self.dim:
            raise ValueError(f"dim is {self.dim} but vectors have {vectors.shape[1]} columns")
        if self.dim <= 0:
            raise ValueError("dim must be positive")
        if not np.all(np.isfinite(vectors)):
            raise ValueError("vectors contain non-finite values")
        index: dict[str, int] = {}
        for i, tok in enumerate(self.tokens):
            if not tok or any(c.isspace() for c in tok):
                raise ValueError(f"token {tok!r} is empty or contains whitespace")
            if tok in index:
                raise ValueError(f"duplicate token {tok!r}")
            index[tok] = i
        vectors.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def index(self, token: str) -> int:
        return self._index[token]

    def vector(self, token: str) -> np.ndarray:
        return self.vectors[self._index[token]]


@dataclass(frozen=True)
class EmbeddingStats:
    count: int
    dim: int
    min_norm: float
    max_norm: float
    mean_norm: float


def load_embeddings_text(
    path, modality_tag: str = "text", lowercase: bool = False
) -> EmbeddingSpace:
    """Parse an embedding text file.

    With ``lowercase=True`` tokens are case-folded and duplicates created by
    folding are merged, keeping the first occurrence.

    Raises :class:`EmbeddingFormatError` (with the offending line number) on
    header/body disagreement, non-finite values, or duplicate tokens.
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.strip():
            raise EmbeddingFormatError(f"{path}: line 1: missing '<count> <dim>' header")
        parts = header.split()
        if len(parts) != 2:
            raise EmbeddingFormatError(f"{path}: line 1: header must be '<count> <dim>'")
        try:
            count, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise EmbeddingFormatError(f"{path}: line 1: header must be two integers") from None
        if count < 0 or dim <= 0:
            raise EmbeddingFormatError(f"{path}: line 1: bad header counts {count} {dim}")

        tokens: list[str] = []
        rows = np.empty((count, dim), dtype=np.float64)
        seen: set[str] = set()
        n = 0
        merged = 0
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            if n + merged >= count:
                raise EmbeddingFormatError(
                    f"{path}: line {lineno}: more than the declared {count} tokens"
                )
            fields = line.split()
            if len(fields) != dim + 1:
                raise EmbeddingFormatError(
                    f"{path}: line {lineno}: expected token + {dim} values, got "
                    f"{len(fields) - 1} values"
                )
            tok = fields[0]
            if lowercase:
                tok = tok.lower()
            if tok in seen:
                if lowercase:
                    merged += 1  # keep first occurrence, drop this one
                    continue
                raise EmbeddingFormatError(
                    f"{path}: line {lineno}: duplicate token {tok!r}"
                )
            try:
                values = [float(v) for v in fields[1:]]
            except ValueError:
                raise EmbeddingFormatError(
                    f"{path}: line {lineno}: non-numeric value"
                ) from None
            if not all(math.isfinite(v) for v in values):
                raise EmbeddingFormatError(f"{path}: line {lineno}: non-finite value")
            seen.add(tok)
            tokens.append(tok)
            rows[n] = values
            n += 1

    if n + merged < count:
        raise EmbeddingFormatError(
            f"{path}: declared {count} tokens but file has {n + merged}"
        )
    if merged:
        log.info("%s: %d tokens merged by case folding", path, merged)
    return EmbeddingSpace(tokens, rows[:n], dim, modality_tag)


def write_embeddings_text(space: EmbeddingSpace, path) -> None:
    """Write ``space`` so that loading the file reproduces it exactly.

    Values are serialized with shortest exact decimal representation, which
    round-trips bit-for-bit (and so well within the 1e-9 contract).
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(space.tokens)} {space.dim}\n")
        for tok, row in zip(space.tokens, space.vectors):
            fh.write(tok)
            for v in row:
                fh.write(" ")
                fh.write(format_value(v))
            fh.write("\n")


def embedding_stats(space: EmbeddingSpace) -> EmbeddingStats:
    """Count, dimension, and min/max/mean Euclidean norm of the vectors."""
    if len(space) == 0:
        return EmbeddingStats(0, space.dim, math.nan, math.nan, math.nan)
    norms = np.linalg.norm(space.vectors, axis=1)
    return EmbeddingStats(
        count=len(space),
        dim=space.dim,
        min_norm=float(norms.min()),
        max_norm=float(norms.max()),
        mean_norm=float(norms.mean()),
    )
