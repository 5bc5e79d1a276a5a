"""Grid search over modality weights on the unit simplex.

Weights (w_T, w_G, w_V) are swept over all non-negative multiples of a step
that sum to one; every triple is scored by the size-weighted average Spearman
rho across the evaluation datasets. The resulting surface can be exported as
a TSV heatmap for external ternary plotting.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Sequence

from .alignment import AlignedConceptSpace
from .embedding_io import format_value
from .evaluation import SimilarityDataset, evaluate_suite
from .fusion import FusionConfig, effective_k

log = logging.getLogger(__name__)

_OPTIMUM_PREFIX = "# optimum"


@dataclass(frozen=True)
class WeightGridPoint:
    weights: tuple[float, float, float]
    score: float


@dataclass(frozen=True)
class GridSearchResult:
    points: list[WeightGridPoint]
    best: WeightGridPoint


def enumerate_simplex(step: float) -> list[tuple[float, float, float]]:
    """All weight triples on the step grid summing to 1, lexicographic order.

    ``1/step`` must be an integer (e.g. step 0.05 gives 231 triples).
    """
    if not 0 < step <= 1:
        raise ValueError(f"step must be in (0, 1], got {step}")
    m = round(1.0 / step)
    if abs(m * step - 1.0) > 1e-9:
        raise ValueError(f"1/step must be an integer, got step {step}")
    return [
        (i / m, j / m, (m - i - j) / m)
        for i in range(m + 1)
        for j in range(m - i + 1)
    ]


def grid_search(
    space: AlignedConceptSpace,
    base_config: FusionConfig,
    datasets: Sequence[SimilarityDataset],
    step: float = 0.05,
) -> GridSearchResult:
    """Evaluate every simplex point with the base method and pick the argmax.

    Ties go to the lexicographically smallest weight triple. Zero-weight
    corners can leave the stacked matrix rank-deficient, so k is clamped to
    the per-point effective rank for svd/pca (logged once).

    Points are mutually independent; the enumeration order is the contract,
    whatever evaluation order an embarrassingly parallel caller uses.
    """
    points: list[WeightGridPoint] = []
    best: WeightGridPoint | None = None
    clamped = 0
    for weights in enumerate_simplex(step):
        config = replace(base_config, weights=weights)
        if config.method in ("svd", "pca"):
            k_eff = effective_k(space, config)
            if k_eff < config.k:
                clamped += 1
                log.debug("weights %s: k clamped %d -> %d", weights, config.k, k_eff)
                config = replace(config, k=k_eff)
        report = evaluate_suite(space, config, datasets)
        point = WeightGridPoint(weights, report.weighted_average)
        points.append(point)
        if best is None or point.score > best.score:
            best = point
    if clamped:
        log.warning(
            "k clamped to the effective rank at %d of %d grid points", clamped, len(points)
        )
    return GridSearchResult(points, best)


def export_heatmap(result: GridSearchResult, path, header: str | None = None) -> None:
    """Write `w_T<TAB>w_G<TAB>w_V<TAB>score` rows plus an optimum comment.

    ``header`` prepends extra comment lines (e.g. a resolved-config record).
    Values use shortest exact decimals, so re-exporting a loaded file is
    byte-identical.
    """
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for line in header.splitlines():
                fh.write(line if line.startswith("#") else f"# {line}")
                fh.write("\n")
        b = result.best
        fh.write(
            f"{_OPTIMUM_PREFIX}\t{format_value(b.weights[0])}\t{format_value(b.weights[1])}"
            f"\t{format_value(b.weights[2])}\t{format_value(b.score)}\n"
        )
        for p in result.points:
            fh.write(
                f"{format_value(p.weights[0])}\t{format_value(p.weights[1])}"
                f"\t{format_value(p.weights[2])}\t{format_value(p.score)}\n"
            )


def load_heatmap(path) -> GridSearchResult:
    """Parse a heatmap TSV written by :func:`export_heatmap`."""
    best: WeightGridPoint | None = None
    points: list[WeightGridPoint] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith(_OPTIMUM_PREFIX + "\t"):
                values = line.split("\t")[1:]
                if len(values) != 4:
                    raise ValueError(f"{path}: line {lineno}: malformed optimum line")
                best = WeightGridPoint(tuple(map(float, values[:3])), float(values[3]))
                continue
            if line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise ValueError(
                    f"{path}: line {lineno}: expected 4 tab-separated values"
                )
            points.append(WeightGridPoint(tuple(map(float, fields[:3])), float(fields[3])))
    if best is None or not points:
        raise ValueError(f"{path}: missing optimum comment or data rows")
    return GridSearchResult(points, best)
