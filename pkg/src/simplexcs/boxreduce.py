"""Reduction from [0,1]^(K-1)-valued observations to simplex-valued ones.

The affine embedding divides each coordinate by K-1 and appends the
deficit as a K-th coordinate; the box-level confidence set is the
preimage of the simplex-level set under this map.
"""

from __future__ import annotations

import numpy as np

from .confset import ConfidenceSet

__all__ = ["embed", "box_membership"]


def embed(y, tol=1e-9):
    """Map a [0,1]^(K-1) point to its probability-vector representation."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size < 1:
        raise ValueError("embed expects a 1-d box observation")
    if np.any(y < -tol) or np.any(y > 1.0 + tol):
        raise ValueError(f"box observation outside [0,1] beyond tol: {y}")
    d = y.size
    out = np.empty(d + 1)
    out[:d] = y / d
    out[d] = 1.0 - y.sum() / d
    return out


def box_membership(m_box, simplex_set):
    """Is a box-level candidate in the set?  simplex_set is either a
    point-membership callable or a grid-realized ConfidenceSet (nearest
    candidate is used)."""
    point = embed(m_box)
    if callable(simplex_set):
        return bool(simplex_set(point))
    if isinstance(simplex_set, ConfidenceSet):
        d2 = np.sum((simplex_set.candidates - point[None, :]) ** 2, axis=1)
        return bool(simplex_set.active[int(np.argmin(d2))])
    raise TypeError("simplex_set must be callable or a ConfidenceSet")
