"""Fusion of the aligned per-modality matrices into one similarity space.

Four methods are supported: AVG keeps the modalities separate and averages
their cosine similarities; CONC stacks the (optionally normalized, weighted)
matrices and uses the cosine of the stacked columns; SVD and PCA reduce the
stacked matrix to k dimensions before taking cosines.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .alignment import AlignedConceptSpace

log = logging.getLogger(__name__)

METHODS = ("avg", "conc", "svd", "pca")


@dataclass(frozen=True)
class FusionConfig:
    """How to combine the three modalities.

    ``weights`` scale the text, knowledge-graph, and visual blocks in that
    order; they need not sum to one. ``k`` is the reduced dimension and only
    applies to svd/pca.
    """

    method: str = "conc"
    normalize: bool = False
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    k: int = 100

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        w = tuple(float(x) for x in self.weights)
        if len(w) != 3 or not all(np.isfinite(w)):
            raise ValueError(f"weights must be three finite reals, got {self.weights!r}")
        if any(x < 0 for x in w):
            raise ValueError(f"weights must be non-negative, got {w!r}")
        if not any(w):
            raise ValueError("weights must not all be zero")
        object.__setattr__(self, "weights", w)
        if self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")

    def with_weights(self, weights) -> "FusionConfig":
        return replace(self, weights=tuple(weights))


def normalize_unit_columns(matrix: np.ndarray, names: Sequence[str] | None = None) -> np.ndarray:
    """Rescale every column to unit Euclidean length.

    Raises on an all-zero column, naming the concept when ``names`` is given.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    norms = np.linalg.norm(matrix, axis=0)
    zero = norms == 0.0
    if np.any(zero):
        j = int(np.argmax(zero))
        what = names[j] if names is not None else f"column {j}"
        raise ValueError(f"cannot normalize all-zero column for {what}")
    return matrix / norms


def scale_and_stack(
    T: np.ndarray, G: np.ndarray, V: np.ndarray, weights: Sequence[float]
) -> np.ndarray:
    """Stack w_T*T over w_G*G over w_V*V (fixed block order text, kg, visual)."""
    T, G, V = (np.asarray(m, dtype=np.float64) for m in (T, G, V))
    n = T.shape[1]
    if G.shape[1] != n or V.shape[1] != n:
        raise ValueError(
            f"column counts differ: T has {n}, G has {G.shape[1]}, V has {V.shape[1]}"
        )
    w_t, w_g, w_v = weights
    return np.vstack([w_t * T, w_g * G, w_v * V])


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """u.v / (|u||v|); raises on a zero vector."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity of a zero vector is undefined")
    return float(u @ v / (nu * nv))


def avg_similarity(
    space: AlignedConceptSpace, weights: Sequence[float], i: int, j: int
) -> float:
    """Weighted mean of the per-modality cosines of concepts i and j."""
    w = np.asarray(weights, dtype=np.float64)
    cos = np.array(
        [cosine_similarity(m[:, i], m[:, j]) for m in (space.T, space.G, space.V)]
    )
    return float(w @ cos / w.sum())


def _flip_signs(U: np.ndarray, Vt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # deterministic orientation: largest-magnitude entry of each left
    # singular vector is made positive
    rows = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[rows, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs, Vt * signs[:, None]


def svd_reduce(M: np.ndarray, k: int) -> np.ndarray:
    """k-dimensional concept vectors from a singular value decomposition.

    The stacked matrix is decomposed with concepts as rows (X = M^T = U S V^T,
    singular values descending); concept j's new vector is row j of U_k S_k.
    Returns the k x n joint representation.
    """
    M = np.asarray(M, dtype=np.float64)
    D, n = M.shape
    if not 1 <= k <= min(D, n):
        raise ValueError(f"k must be in [1, {min(D, n)}] for a {D}x{n} matrix, got {k}")
    U, s, Vt = np.linalg.svd(M.T, full_matrices=False)
    U, Vt = _flip_signs(U, Vt)
    return (U[:, :k] * s[:k]).T


def pca_reduce(M: np.ndarray, k: int) -> np.ndarray:
    """k-dimensional concept scores along the top principal directions.

    Each feature row of M is centered to mean zero across concepts, then the
    centered concept vectors are projected onto the k eigenvectors of the
    feature covariance with the largest eigenvalues (same sign convention as
    :func:`svd_reduce`). Returns the k x n joint representation.
    """
    M = np.asarray(M, dtype=np.float64)
    D, n = M.shape
    if not 1 <= k <= min(D, n):
        raise ValueError(f"k must be in [1, {min(D, n)}] for a {D}x{n} matrix, got {k}")
    centered = M - M.mean(axis=1, keepdims=True)
    U, s, Vt = np.linalg.svd(centered.T, full_matrices=False)
    U, Vt = _flip_signs(U, Vt)
    return (U[:, :k] * s[:k]).T


@dataclass(frozen=True)
class FusedSpace:
    """Concept vocabulary plus whatever representation the method produced.

    Either ``joint`` (a single d x n matrix whose column cosines are the
    similarities) or ``per_modality`` (the retained T, G, V for averaged
    cosines) is set.
    """

    concepts: list[str]
    joint: np.ndarray | None = None
    per_modality: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if (self.joint is None) == (self.per_modality is None):
            raise ValueError("exactly one of joint / per_modality must be set")
        if self.joint is not None and self.joint.shape[1] != len(self.concepts):
            raise ValueError("joint matrix must have one column per concept")
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(self.concepts)})

    def index(self, concept: str) -> int:
        return self._index[concept]

    def similarity(self, i: int, j: int) -> float:
        if self.joint is not None:
            return cosine_similarity(self.joint[:, i], self.joint[:, j])
        w = np.asarray(self.weights, dtype=np.float64)
        cos = np.array(
            [cosine_similarity(m[:, i], m[:, j]) for m in self.per_modality]
        )
        return float(w @ cos / w.sum())

    def similarities(self, ii: Sequence[int], jj: Sequence[int]) -> np.ndarray:
        """Vectorized :meth:`similarity` over index pairs (ii[p], jj[p])."""
        ii = np.asarray(ii, dtype=np.intp)
        jj = np.asarray(jj, dtype=np.intp)
        if self.joint is not None:
            return _pair_cosines(self.joint, ii, jj, self.concepts)
        w = np.asarray(self.weights, dtype=np.float64)
        total = np.zeros(len(ii))
        for weight, mat in zip(w, self.per_modality):
            total += weight * _pair_cosines(mat, ii, jj, self.concepts)
        return total / w.sum()


def _pair_cosines(mat: np.ndarray, ii, jj, names: Sequence[str]) -> np.ndarray:
    a = mat[:, ii]
    b = mat[:, jj]
    na = np.linalg.norm(a, axis=0)
    nb = np.linalg.norm(b, axis=0)
    for norms, idx in ((na, ii), (nb, jj)):
        if np.any(norms == 0.0):
            p = int(np.argmax(norms == 0.0))
            raise ValueError(f"zero vector for concept {names[idx[p]]!r}")
    return np.einsum("dp,dp->p", a, b) / (na * nb)


def fuse(space: AlignedConceptSpace, config: FusionConfig) -> FusedSpace:
    """Apply a fusion method to an aligned space."""
    T, G, V = space.T, space.G, space.V
    if config.normalize:
        T = normalize_unit_columns(T, space.concepts)
        G = normalize_unit_columns(G, space.concepts)
        V = normalize_unit_columns(V, space.concepts)

    if config.method == "avg":
        return FusedSpace(space.concepts, per_modality=(T, G, V), weights=config.weights)

    M = scale_and_stack(T, G, V, config.weights)
    if config.method == "conc":
        joint = M
    elif config.method == "svd":
        joint = svd_reduce(M, config.k)
    else:
        joint = pca_reduce(M, config.k)
    return FusedSpace(space.concepts, joint=joint, weights=config.weights)


def conc_representation(
    space: AlignedConceptSpace,
    weights: Sequence[float] = (1.0, 1.0, 1.0),
    normalize: bool = False,
) -> FusedSpace:
    """Concatenation fusion: stack the (optionally normalized) weighted blocks."""
    cfg = FusionConfig(method="conc", normalize=normalize, weights=tuple(weights))
    return fuse(space, cfg)


def effective_k(space: AlignedConceptSpace, config: FusionConfig) -> int:
    """Largest usable k: zero-weight blocks contribute no rank."""
    t, g, v = space.dims
    active = sum(d for d, w in zip((t, g, v), config.weights) if w > 0)
    return min(config.k, active, space.n)
