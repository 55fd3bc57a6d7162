"""Half-plane prediction on a lattice.

The predictor of ``x_s`` is a linear combination of values at ``s - k`` over
a half-plane lag set, ``sum_k w_k x_{s-k}``.  For the cepstral (flexible
exponential) predictor ``w_k = -a_k``; the least-squares AR predictor uses its
fitted coefficients directly.  Both share the engine in this module.

A required cell ``u = s - k`` is resolved as follows (row order; the column
order is handled by transposition):

* observed lattice cell -> its value;
* unobserved lattice cell -> predicted recursively with the same formula;
* outside the lattice -> 0 (the process mean), except for one-step-beyond
  boundary targets, where cells in the strip of rows ``n1 - r .. n1 + 1`` and
  columns ``1 - r .. n2 + r`` are predicted recursively, with
  ``r = min(n2 // 8, max lag in coordinate 2)``.

Recursive cells are evaluated in increasing order, so every reference is
already resolved when it is used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cepstrum import ARField, ar_coeffs, cepstral_coeffs, transfer_grid
from .errors import ValidationError
from .lattice import GridDims, HalfPlaneOrder, HalfPlaneWindow, Lattice2D
from .spectral import SmoothingBandwidth, smoothed_spectrum

__all__ = [
    "PredictionResult",
    "choose_ordering",
    "predict_interior",
    "predict_boundary",
    "predict",
    "fexp_field",
]

_FIXED, _RECURSE, _ZERO = 0, 1, 2


@dataclass(frozen=True)
class PredictionResult:
    value: float
    used_recursion: bool
    zero_filled_count: int
    order: HalfPlaneOrder
    recursed_cells: int = 0


def _boundary_depth(n2: int, max_lag2: int) -> int:
    return min(n2 // 8, max_lag2)


def _engine(grid, mask, s, offsets, weights, strip_r=None):
    """Row-order evaluation.  ``s`` is 1-based; returns (value, n_recursed, n_zero)."""
    n1, n2 = grid.shape
    offsets = np.asarray(offsets, dtype=np.int64).reshape(-1, 2)
    weights = np.asarray(weights, dtype=float)
    if offsets.size == 0:
        return 0.0, 0, 0
    K1 = max(int(offsets[:, 0].max()), 0)
    K2 = int(np.abs(offsets[:, 1]).max())
    r = 0 if strip_r is None else int(strip_r)
    top, left = K1, K2 + r
    shape = (top + n1 + 1, left + n2 + K2 + r)
    status = np.full(shape, _ZERO, dtype=np.int8)
    buf = np.zeros(shape)
    inner = (slice(top, top + n1), slice(left, left + n2))
    status[inner] = np.where(mask, _FIXED, _RECURSE)
    buf[inner] = np.where(mask, grid, 0.0)
    if strip_r is not None:
        rows = slice(max(top + n1 - 1 - r, top), top + n1 + 1)
        cols = slice(left - r, left + n2 + r)
        strip = status[rows, cols]
        strip[strip == _ZERO] = _RECURSE
    t = (s[0] - 1 + top, s[1] - 1 + left)
    status[t] = _RECURSE

    visited = np.zeros(shape, dtype=bool)
    zero_seen = np.zeros(shape, dtype=bool)
    visited[t] = True
    stack = [t]
    while stack:
        v1, v2 = stack.pop()
        u1 = v1 - offsets[:, 0]
        u2 = v2 - offsets[:, 1]
        st = status[u1, u2]
        z = st == _ZERO
        zero_seen[u1[z], u2[z]] = True
        rec = (st == _RECURSE) & ~visited[u1, u2]
        for a, b in zip(u1[rec], u2[rec]):
            if not visited[a, b]:
                visited[a, b] = True
                stack.append((int(a), int(b)))
    cells = np.argwhere(visited)  # argwhere is row-major, i.e. increasing row order
    for v1, v2 in cells:
        buf[v1, v2] = weights @ buf[v1 - offsets[:, 0], v2 - offsets[:, 1]]
    return float(buf[t]), len(cells) - 1, int(zero_seen.sum())


def _oriented(x: Lattice2D, s, order: HalfPlaneOrder, offsets):
    """Map a problem to row order."""
    if order is HalfPlaneOrder.ROW:
        return x.grid, x.mask_grid, (s[0], s[1]), np.asarray(offsets)
    return x.grid.T, x.mask_grid.T, (s[1], s[0]), np.asarray(offsets)[:, ::-1]


def _run(x, s, order, offsets, weights, boundary, allow_observed):
    grid, mask, s_rot, off = _oriented(x, s, order, offsets)
    n1, n2 = grid.shape
    if boundary:
        if s_rot[0] != n1 + 1 or not 1 <= s_rot[1] <= n2:
            raise ValidationError(f"target {tuple(s)} is not one step beyond the boundary under {order.value} order")
        r = _boundary_depth(n2, int(np.abs(off[:, 1]).max()) if len(off) else 0)
        value, nrec, nzero = _engine(grid, mask, s_rot, off, weights, strip_r=r)
    else:
        if not (1 <= s_rot[0] <= n1 and 1 <= s_rot[1] <= n2):
            raise ValidationError(f"target {tuple(s)} is not inside the lattice")
        if mask[s_rot[0] - 1, s_rot[1] - 1] and not allow_observed:
            raise ValidationError(f"target {tuple(s)} is observed; pass allow_observed=True to predict it anyway")
        value, nrec, nzero = _engine(grid, mask, s_rot, off, weights)
    return PredictionResult(value, boundary or nrec > 0, nzero, order, nrec)


def choose_ordering(s, dims: GridDims, mask=None, window: HalfPlaneWindow | None = None) -> HalfPlaneOrder:
    """Pick the half-plane order suited to a target location.

    One step below the last row uses row order, one step beyond the last
    column uses column order.  Interior targets default to row order unless
    ``mask`` and ``window`` are given and the row-order support holds more
    unobserved cells than the column-order support.
    """
    s1, s2 = int(s[0]), int(s[1])
    below = s1 == dims.n1 + 1
    right = s2 == dims.n2 + 1
    if s1 < 1 or s2 < 1 or s1 > dims.n1 + 1 or s2 > dims.n2 + 1 or (below and right):
        raise ValidationError(f"target {(s1, s2)} is more than one step beyond a {dims.n1}x{dims.n2} lattice")
    if below:
        return HalfPlaneOrder.ROW
    if right:
        return HalfPlaneOrder.COL
    if mask is None or window is None:
        return HalfPlaneOrder.ROW
    mask = np.asarray(mask, dtype=bool).reshape(dims.shape)

    def unobserved(order):
        w = HalfPlaneWindow(window.M1, window.M2, order)
        u = np.array([s1, s2]) - w.indices()
        inside = (u[:, 0] >= 1) & (u[:, 0] <= dims.n1) & (u[:, 1] >= 1) & (u[:, 1] <= dims.n2)
        missing = ~inside
        missing[inside] = ~mask[u[inside, 0] - 1, u[inside, 1] - 1]
        return int(missing.sum())

    return HalfPlaneOrder.COL if unobserved(HalfPlaneOrder.ROW) > unobserved(HalfPlaneOrder.COL) else HalfPlaneOrder.ROW


def predict_interior(x: Lattice2D, a: ARField, s, allow_observed: bool = False) -> PredictionResult:
    """Predict ``x_s`` for ``s`` inside the lattice with ``-sum_k a_k x_{s-k}``."""
    return _run(x, s, a.order, a.offsets(), -a.coeffs, False, allow_observed)


def predict_boundary(x: Lattice2D, a: ARField, s) -> PredictionResult:
    """Predict one step beyond the lattice along the order's leading coordinate,
    filling the missing neighbours recursively."""
    return _run(x, s, a.order, a.offsets(), -a.coeffs, True, False)


def predict(x: Lattice2D, a: ARField, s, allow_observed: bool = False) -> PredictionResult:
    if x.dims.contains(s):
        return predict_interior(x, a, s, allow_observed)
    return predict_boundary(x, a, s)


def fexp_field(
    x: Lattice2D,
    bw: SmoothingBandwidth,
    order=HalfPlaneOrder.ROW,
    weighting: str = "symmetric",
    demean="mean",
) -> ARField:
    """AR coefficients of the flexible exponential predictor fitted on ``x``."""
    f = smoothed_spectrum(x, bw, demean=demean)
    window = HalfPlaneWindow(f.M1, f.M2, HalfPlaneOrder.parse(order))
    return ar_coeffs(transfer_grid(cepstral_coeffs(f, window, weighting)))
