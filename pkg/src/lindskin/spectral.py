"""Small dense-spectrum helpers shared by every module."""
from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import EigensolverError


def eigvals(a: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(str(exc)) from exc


def eig(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        return np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(str(exc)) from exc


def lexsort_complex(values: np.ndarray) -> np.ndarray:
    """Indices ordering ``values`` by real part, then imaginary part."""
    values = np.asarray(values)
    return np.lexsort((values.imag, values.real))


def multiset_distance(a, b) -> float:
    """Largest pairwise gap under the optimal one-to-one matching of two multisets.

    Uses a bottleneck-friendly linear assignment on the distance matrix, which
    is robust to near-degenerate clusters where sorting fails. Returns ``inf``
    if the sizes differ.
    """
    a = np.ravel(np.asarray(a, dtype=complex))
    b = np.ravel(np.asarray(b, dtype=complex))
    if a.size != b.size:
        return float("inf")
    if a.size == 0:
        return 0.0
    dist = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(dist)
    return float(dist[rows, cols].max())


def multisets_match(a, b, tol: float) -> bool:
    return multiset_distance(a, b) <= tol


def negation_asymmetry(values) -> float:
    """How far a multiset is from being invariant under ``x -> -x``."""
    values = np.asarray(values, dtype=complex)
    return multiset_distance(values, -values)
