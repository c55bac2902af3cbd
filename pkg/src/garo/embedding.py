"""Flattening of multivector matrices into real matrices over declared blades."""

from __future__ import annotations

import numpy as np

from .algebra import Multivector
from .errors import ContractViolation


def embed(x: Multivector, blades=None, atol: float = 1e-12) -> np.ndarray:
    """Real (I*K) x J matrix from an I x J multivector matrix with K declared blades.

    Row ``i*K + k`` holds blade ``k`` of row ``i``.  A 1-D batch is read as a
    1 x J row; a scalar multivector as 1 x 1.  Coefficients on blades outside
    ``blades`` must vanish (within ``atol``) or :class:`ContractViolation` is raised.
    """
    blades = x.blades if blades is None else tuple(blades)
    outside = x.residual_outside(blades)
    if np.any(outside > atol):
        raise ContractViolation(f"coefficient {float(np.max(outside)):.3g} outside the declared blade set")
    c = x.cast(blades).coeffs
    if c.ndim == 1:
        c = c[None, None, :]
    elif c.ndim == 2:
        c = c[None, :, :]
    elif c.ndim != 3:
        raise ValueError("embed expects a scalar, row or matrix of multivectors")
    rows, cols, k = c.shape
    return np.transpose(c, (0, 2, 1)).reshape(rows * k, cols)


def unembed(mat: np.ndarray, blades, rows: int | None = None) -> Multivector:
    """Inverse of :func:`embed`; returns an I x J multivector matrix."""
    blades = tuple(blades)
    mat = np.asarray(mat, dtype=float)
    k = len(blades)
    if mat.shape[0] % k:
        raise ValueError(f"{mat.shape[0]} rows are not a multiple of {k} blades")
    rows = mat.shape[0] // k if rows is None else rows
    c = mat.reshape(rows, k, mat.shape[1]).transpose(0, 2, 1)
    return Multivector(blades, c)
