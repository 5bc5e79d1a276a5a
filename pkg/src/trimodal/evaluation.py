"""Word-similarity benchmarks and Spearman scoring of fused spaces.

Benchmarks are (word1, word2, gold score) triples; a fused space is scored
by the Spearman rank correlation between its model similarities and the gold
scores, per dataset, plus a size-weighted average across datasets.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Collection, Sequence

import numpy as np
from scipy.stats import rankdata

from .alignment import AlignedConceptSpace
from .embedding_io import format_value
from .fusion import FusionConfig, fuse

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimilarityDataset:
    name: str
    pairs: list[tuple[str, str, float]]

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class DatasetScore:
    name: str
    pair_count: int
    rho: float


@dataclass(frozen=True)
class EvaluationReport:
    per_dataset: list[DatasetScore]
    weighted_average: float


def load_pairs(path, name: str | None = None, skip_header: bool = False) -> SimilarityDataset:
    """Read `word1<TAB>word2<TAB>score` lines, in file order."""
    if name is None:
        name = os.path.splitext(os.path.basename(path))[0]
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if skip_header and lineno == 1:
                continue
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 3:
                raise ValueError(
                    f"{path}: line {lineno}: expected 'word1<TAB>word2<TAB>score', "
                    f"got {len(fields)} fields"
                )
            try:
                score = float(fields[2])
            except ValueError:
                raise ValueError(
                    f"{path}: line {lineno}: score {fields[2]!r} is not a number"
                ) from None
            if not np.isfinite(score):
                raise ValueError(f"{path}: line {lineno}: non-finite score")
            pairs.append((fields[0], fields[1], score))
    return SimilarityDataset(name, pairs)


def restrict_to_vocabulary(
    dataset: SimilarityDataset, concepts: Collection[str]
) -> SimilarityDataset:
    """Keep only the pairs whose both words are in the vocabulary."""
    vocab = set(concepts)
    kept = [p for p in dataset.pairs if p[0] in vocab and p[1] in vocab]
    if not kept:
        log.warning("dataset %s: no pair covered by the vocabulary", dataset.name)
    return SimilarityDataset(dataset.name, kept)


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of fractional ranks (ties get averaged ranks)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError(f"need two equal-length 1-D lists, got {x.shape} and {y.shape}")
    if len(x) < 2:
        raise ValueError("need at least 2 observations")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("rank correlation of a constant list is undefined")
    rx = rankdata(x) - (len(x) + 1) / 2.0
    ry = rankdata(y) - (len(y) + 1) / 2.0
    return float(rx @ ry / np.sqrt((rx @ rx) * (ry @ ry)))


def evaluate_suite(
    space: AlignedConceptSpace,
    config: FusionConfig,
    datasets: Sequence[SimilarityDataset],
) -> EvaluationReport:
    """Fuse the space once, then score every dataset.

    All dataset words must already be in the vocabulary (use
    :func:`restrict_to_vocabulary` first). The weighted average weights each
    dataset's rho by its pair count.
    """
    fused = fuse(space, config)
    index = {c: i for i, c in enumerate(fused.concepts)}

    scores = []
    for ds in datasets:
        try:
            ii = [index[w1] for w1, _, _ in ds.pairs]
            jj = [index[w2] for _, w2, _ in ds.pairs]
        except KeyError as e:
            raise ValueError(
                f"dataset {ds.name}: word {e.args[0]!r} is not in the aligned "
                f"vocabulary; restrict the dataset first"
            ) from None
        gold = [g for _, _, g in ds.pairs]
        sims = fused.similarities(ii, jj)
        scores.append(DatasetScore(ds.name, len(ds.pairs), spearman_rho(gold, sims)))

    total = sum(s.pair_count for s in scores)
    if total == 0:
        raise ValueError("no pairs to evaluate")
    weighted = sum(s.pair_count * s.rho for s in scores) / total
    return EvaluationReport(scores, weighted)


def report_to_tsv(report: EvaluationReport) -> str:
    """`dataset<TAB>pairs<TAB>rho` lines plus a final WEIGHTED_AVG row."""
    lines = [
        f"{s.name}\t{s.pair_count}\t{format_value(s.rho)}" for s in report.per_dataset
    ]
    total = sum(s.pair_count for s in report.per_dataset)
    lines.append(f"WEIGHTED_AVG\t{total}\t{format_value(report.weighted_average)}")
    return "\n".join(lines) + "\n"


def format_report_table(report: EvaluationReport, label: str = "") -> str:
    """Human-readable one-row table: dataset columns then the weighted mean."""
    names = [s.name for s in report.per_dataset] + ["weighted avg"]
    values = [f"{s.rho:.3f}" for s in report.per_dataset] + [
        f"{report.weighted_average:.3f}"
    ]
    widths = [max(len(n), len(v)) for n, v in zip(names, values)]
    pad = max(len(label), 6)
    head = " ".join(n.rjust(w) for n, w in zip(names, widths))
    row = " ".join(v.rjust(w) for v, w in zip(values, widths))
    return f"{'':<{pad}} {head}\n{label:<{pad}} {row}"
