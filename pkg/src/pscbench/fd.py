"""Finite-difference stencils for structured axes.

One sparse derivative matrix per (order, length, spacing, closure) tuple,
cached, so field-level derivatives and operator assembly share bit-identical
coefficients.

Closures:
    periodic   wrap-around, 2nd order central
    mirror     cell-centered even reflection at both ends, 4th order
    bounded    2nd order central inside, 2nd order one-sided at the ends

The mirror closure assumes even symmetry of the sampled function across both
ends. Colatitude grids use it: smooth axisymmetric fields extend evenly
through the poles, and the half-offset grid never places a node on a pole.
It is 4th order because inverse-metric factors of size 1/sin^2(rho) amplify
truncation error near the poles by two powers of the spacing; a 2nd order
stencil there would leave an O(1) error in curvature at pole-adjacent nodes.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

PERIODIC = "periodic"
MIRROR = "mirror"
BOUNDED = "bounded"
VIRTUAL = "virtual"

# (offset, weight) stencil tables; weights get scaled by spacing^-order
_CENTRAL = {
    1: ((-1, -0.5), (1, 0.5)),
    2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
}
_WIDE = {
    1: ((-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)),
    2: ((-2, -1.0 / 12.0), (-1, 16.0 / 12.0), (0, -30.0 / 12.0),
        (1, 16.0 / 12.0), (2, -1.0 / 12.0)),
}
_FORWARD = {
    1: ((0, -1.5), (1, 2.0), (2, -0.5)),
    2: ((0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0)),
}


def _mirror_fold(idx: int, n: int) -> int:
    # ghost -1 -> 0, -2 -> 1; ghost n -> n-1, n+1 -> n-2
    if idx < 0:
        idx = -1 - idx
    if idx >= n:
        idx = 2 * n - 1 - idx
    return idx


@lru_cache(maxsize=None)
def diff_matrix(order: int, n: int, spacing: float, closure: str) -> sp.csr_matrix:
    """n x n sparse derivative matrix along one axis.

    order is 1 or 2. The returned matrix is cached and shared; treat it as
    immutable.
    """
    if order not in (1, 2):
        raise ValueError(f"derivative order must be 1 or 2, got {order}")
    if spacing <= 0.0:
        raise ValueError(f"axis spacing must be positive, got {spacing}")
    scale = spacing ** -order

    rows, cols, vals = [], [], []

    if closure == PERIODIC:
        if n < 3:
            raise ValueError(f"periodic axis needs >= 3 nodes, got {n}")
        for i in range(n):
            for off, w in _CENTRAL[order]:
                rows.append(i)
                cols.append((i + off) % n)
                vals.append(w * scale)
    elif closure == MIRROR:
        if n < 4:
            raise ValueError(f"mirror axis needs >= 4 nodes, got {n}")
        for i in range(n):
            for off, w in _WIDE[order]:
                rows.append(i)
                cols.append(_mirror_fold(i + off, n))
                vals.append(w * scale)
    elif closure == BOUNDED:
        if n < 4:
            raise ValueError(f"bounded axis needs >= 4 nodes, got {n}")
        for i in range(n):
            if 0 < i < n - 1:
                table = _CENTRAL[order]
                flip = 1.0
            elif i == 0:
                table = _FORWARD[order]
                flip = 1.0
            else:
                # backward stencil: reflect offsets; odd orders change sign
                table = tuple((-off, w) for off, w in _FORWARD[order])
                flip = -1.0 if order == 1 else 1.0
            for off, w in table:
                rows.append(i)
                cols.append(i + off)
                vals.append(flip * w * scale)
    else:
        raise ValueError(f"no stencils for axis closure {closure!r}")

    m = sp.coo_matrix((vals, (rows, cols)), shape=(n, n))
    return m.tocsr()


def apply_diff(values: np.ndarray, array_axis: int, order: int, n: int,
               spacing: float, closure: str) -> np.ndarray:
    """Differentiate `values` along one array axis with the matching stencil."""
    d = diff_matrix(order, n, spacing, closure)
    moved = np.moveaxis(values, array_axis, 0)
    flat = moved.reshape(n, -1)
    out = d @ flat
    return np.moveaxis(out.reshape(moved.shape), 0, array_axis)
