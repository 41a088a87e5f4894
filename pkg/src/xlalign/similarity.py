"""Cosine and CSLS similarity criteria over paired representation sets.

CSLS corrects raw cosine for hubness: the score of a pair is twice its
cosine minus the mean cosine of each vector to its k nearest neighbors
in the opposite set,

    s(u, v) = 2 cos(u, v) - r_V(u) - r_U(v),

where r_V(u) is the mean of the k largest cosines between u and the
rows of V, and symmetrically for r_U(v). A vector is never excluded
from a neighborhood pool it happens to belong to.

All computation is dense float64; at the scales this toolkit targets
(a few thousand rows) exact computation is cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CRITERION_KINDS = ("cosine", "csls")


@dataclass(frozen=True)
class SimilarityCriterion:
    """Retrieval criterion: plain cosine, or CSLS with neighborhood size k."""

    kind: str = "csls"
    k: int = 10

    def __post_init__(self):
        if self.kind not in CRITERION_KINDS:
            raise ValueError(f"criterion kind must be one of {CRITERION_KINDS}, got {self.kind!r}")
        if self.kind == "csls" and self.k < 1:
            raise ValueError(f"csls needs k >= 1, got {self.k}")


@dataclass(frozen=True)
class SimilarityMatrix:
    """Criterion scores for queries (rows) against candidates (columns).

    For CSLS the per-row and per-column neighborhood means are cached:
    ``query_correction[i]`` is r over the candidate set for query i and
    ``candidate_correction[j]`` is r over the query set for candidate j.
    """

    kind: str
    values: np.ndarray
    query_correction: np.ndarray | None = None
    candidate_correction: np.ndarray | None = None


def unit_rows(matrix, name: str = "matrix") -> np.ndarray:
    """Cast to float64 and l2-normalize rows; zero or non-finite rows are errors."""
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    norms = np.linalg.norm(arr, axis=1)
    zero = norms == 0.0
    if zero.any():
        raise ValueError(f"{name} contains a zero vector at row {int(np.argmax(zero))}")
    return arr / norms[:, None]


def paired_cosine(Un: np.ndarray, Vn: np.ndarray, rows_u=None, rows_v=None) -> np.ndarray:
    """Row-by-row cosine of two unit-row matrices.

    Bitwise-identical rows get exactly 1.0 (their cosine by definition),
    so identical representations report a similarity of exactly 1 rather
    than 1 minus rounding noise.
    """
    if rows_u is not None:
        Un = Un[rows_u]
    if rows_v is not None:
        Vn = Vn[rows_v]
    sims = np.einsum("ij,ij->i", Un, Vn)
    sims[np.all(Un == Vn, axis=1)] = 1.0
    return sims


def cosine_matrix(U, V) -> np.ndarray:
    """Pairwise cosine similarities: entry (i, j) = cos(u_i, v_j)."""
    Un = unit_rows(U, "U")
    Vn = unit_rows(V, "V")
    if Un.shape[1] != Vn.shape[1]:
        raise ValueError(f"dimension mismatch: U has d={Un.shape[1]}, V has d={Vn.shape[1]}")
    return Un @ Vn.T


def topk_row_means(scores: np.ndarray, k: int) -> np.ndarray:
    """Mean of the k largest entries per row.

    Ties at the k-th value cannot change the mean, so partial selection
    is safe regardless of tie order.
    """
    n = scores.shape[1]
    if k > n:
        raise ValueError(f"k={k} exceeds pool size {n}")
    if k == n:
        return scores.mean(axis=1)
    part = np.partition(scores, n - k, axis=1)[:, n - k:]
    return part.mean(axis=1)


def neighborhood_mean(queries, pool, k: int) -> np.ndarray:
    """For each query, the mean cosine to its k nearest pool rows."""
    return topk_row_means(cosine_matrix(queries, pool), k)


def csls_matrix(U, V, k: int) -> SimilarityMatrix:
    """CSLS scores of every U row against every V row."""
    cos = cosine_matrix(U, V)
    if k > cos.shape[0]:
        raise ValueError(f"k={k} exceeds |U|={cos.shape[0]}")
    r_query = topk_row_means(cos, k)
    r_candidate = topk_row_means(np.ascontiguousarray(cos.T), k)
    values = 2.0 * cos
    values -= r_query[:, None]
    values -= r_candidate[None, :]
    return SimilarityMatrix(
        kind="csls",
        values=values,
        query_correction=r_query,
        candidate_correction=r_candidate,
    )


def similarity_matrix(U, V, criterion: SimilarityCriterion) -> SimilarityMatrix:
    """Criterion scores of every U row against every V row."""
    if criterion.kind == "cosine":
        return SimilarityMatrix(kind="cosine", values=cosine_matrix(U, V))
    return csls_matrix(U, V, criterion.k)
