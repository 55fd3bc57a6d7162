"""Truncated half-plane autoregression fitted by least squares.

The lag set for window ``(pL1, pU1, pL2, pU2)`` under row order is the box
``-pL <= k <= pU`` intersected with the half-plane ``0 < k``::

    {(0, k2): 1 <= k2 <= pU2} u {(k1, k2): 1 <= k1 <= pU1, -pL2 <= k2 <= pU2}

Regression rows are the cells ``j`` with every ``j - k`` inside the lattice,
``n_p = (n1 - p1)(n2 - p2)`` of them, and the fit minimises
``n_p^-1 sum_j (x_j - sum_k d_k x_{j-k})^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import PoleError, SingularFitError, ValidationError
from .lattice import HalfPlaneOrder, Lattice2D
from .predict import PredictionResult, _run
from .spectral import SmoothingBandwidth, SpectralGrid

__all__ = [
    "ARWindow",
    "ARFit",
    "ls_fit",
    "ar_predict",
    "ar_spectrum",
    "ar_spectrum_grid",
    "order_select",
]

COND_LIMIT = 1e12


@dataclass(frozen=True)
class ARWindow:
    pL1: int
    pU1: int
    pL2: int
    pU2: int
    order: HalfPlaneOrder = HalfPlaneOrder.ROW

    def __post_init__(self):
        for name in ("pL1", "pU1", "pL2", "pU2"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValidationError(f"{name} must be a non-negative integer, got {v}")
            object.__setattr__(self, name, int(v))
        object.__setattr__(self, "order", HalfPlaneOrder.parse(self.order))
        if self.size == 0:
            raise ValidationError("AR window has an empty lag set")

    @classmethod
    def symmetric(cls, p: int, order=HalfPlaneOrder.ROW) -> "ARWindow":
        """Order ``p* = p1 = p2`` with no lower lags, the layout used in the
        Monte Carlo tables."""
        return cls(0, p, 0, p, order)

    @property
    def p1(self) -> int:
        return self.pL1 + self.pU1

    @property
    def p2(self) -> int:
        return self.pL2 + self.pU2

    def lags(self) -> np.ndarray:
        """Lag set in the order's own coordinates, canonical enumeration."""
        lead_l, lead_u, sec_l, sec_u = (
            (self.pL1, self.pU1, self.pL2, self.pU2)
            if self.order is HalfPlaneOrder.ROW
            else (self.pL2, self.pU2, self.pL1, self.pU1)
        )
        out = [(0, k2) for k2 in range(1, sec_u + 1)]
        out += [(k1, k2) for k1 in range(1, lead_u + 1) for k2 in range(-sec_l, sec_u + 1)]
        arr = np.array(out, dtype=np.int64).reshape(-1, 2)
        return arr if self.order is HalfPlaneOrder.ROW else arr[:, ::-1].copy()

    @property
    def size(self) -> int:
        return len(self.lags())

    def label(self) -> str:
        return f"{self.pL1},{self.pU1},{self.pL2},{self.pU2}"


@dataclass(frozen=True, eq=False)
class ARFit:
    window: ARWindow
    coeffs: np.ndarray
    sigma2: float
    n_p: int
    lags: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.lags is None:
            object.__setattr__(self, "lags", self.window.lags())

    def as_dict(self) -> dict:
        return {
            "window": {"pL1": self.window.pL1, "pU1": self.window.pU1, "pL2": self.window.pL2,
                       "pU2": self.window.pU2, "order": self.window.order.value},
            "coeffs": [[int(a), int(b), float(c)] for (a, b), c in zip(self.lags, self.coeffs)],
            "sigma2": self.sigma2,
            "n_p": self.n_p,
        }


def _design(grid: np.ndarray, window: ARWindow):
    n1, n2 = grid.shape
    lags = window.lags()
    # leading/secondary bounds in absolute coordinates
    lo1 = int(lags[:, 0].max())
    hi1 = n1 + int(lags[:, 0].min())
    lo2 = int(lags[:, 1].max())
    hi2 = n2 + int(lags[:, 1].min())
    # the box sizing n_l - p_l fixes the row count even when the lag set is thinner
    lo1 = max(lo1, window.pU1)
    hi1 = min(hi1, n1 - window.pL1)
    lo2 = max(lo2, window.pU2)
    hi2 = min(hi2, n2 - window.pL2)
    y = grid[lo1:hi1, lo2:hi2].ravel()
    X = np.column_stack([grid[lo1 - k1:hi1 - k1, lo2 - k2:hi2 - k2].ravel() for k1, k2 in lags])
    return X, y, lags


def ls_fit(x: Lattice2D, w: ARWindow) -> ARFit:
    """Least-squares fit of the truncated half-plane autoregression."""
    if not x.fully_observed:
        raise ValidationError("AR fitting region has unobserved cells")
    n1, n2 = x.dims.shape
    if not (n1 > w.p1 and n2 > w.p2):
        raise ValidationError(f"lattice {n1}x{n2} too small for AR window ({w.label()})")
    X, y, lags = _design(x.grid, w)
    n_p = (n1 - w.p1) * (n2 - w.p2)
    assert X.shape[0] == n_p
    G = X.T @ X
    b = X.T @ y
    if not np.all(np.isfinite(G)) or np.linalg.cond(G) > COND_LIMIT:
        raise SingularFitError("normal equations are singular or nearly so")
    try:
        coeffs = scipy.linalg.solve(G, b, assume_a="pos")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SingularFitError(str(exc)) from exc
    resid = y - X @ coeffs
    return ARFit(w, coeffs, float(resid @ resid / n_p), n_p, lags)


def ar_predict(x: Lattice2D, fit: ARFit, s, allow_observed: bool = False) -> PredictionResult:
    """``sum_k d_k x_{s-k}``, with unobserved neighbours handled as for the
    cepstral predictor."""
    boundary = not x.dims.contains(s)
    return _run(x, s, fit.window.order, fit.lags, fit.coeffs, boundary, allow_observed)


def _denominator(fit: ARFit, lam1, lam2) -> np.ndarray:
    lam1 = np.asarray(lam1, dtype=float)
    lam2 = np.asarray(lam2, dtype=float)
    phase = lam1[..., None] * fit.lags[:, 0] + lam2[..., None] * fit.lags[:, 1]
    return np.abs(1.0 - np.exp(1j * phase) @ fit.coeffs) ** 2


def ar_spectrum(fit: ARFit, lam) -> float:
    den = float(_denominator(fit, lam[0], lam[1]))
    if den <= 0.0 or not math.isfinite(den):
        raise PoleError(f"AR spectrum has a pole at {tuple(lam)}")
    return fit.sigma2 / ((2.0 * np.pi) ** 2 * den)


def ar_spectrum_grid(fit: ARFit, bw: SmoothingBandwidth, dims) -> SpectralGrid:
    """Evaluate the AR spectrum on the coarse grid implied by ``bw`` on a
    lattice of size ``dims``; the result can feed the cepstral pipeline."""
    M1, M2 = bw.lags(dims)
    shell = SpectralGrid(bw, M1, M2, np.ones((2 * M1, 2 * M2)))
    l1, l2 = shell.frequencies()
    den = _denominator(fit, l1[:, None], l2[None, :])
    if np.any(den <= 0.0):
        raise PoleError("AR spectrum has a pole on the coarse grid")
    vals = fit.sigma2 / ((2.0 * np.pi) ** 2 * den)
    if not np.all(vals > 0):
        raise PoleError("AR spectrum is not positive on the coarse grid")
    return SpectralGrid(bw, M1, M2, vals)


def _criteria(fit: ARFit) -> dict:
    h, n_p = fit.window.size, fit.n_p
    bic = math.log(fit.sigma2) + h * math.log(n_p) / n_p if fit.sigma2 > 0 else -math.inf
    fpe = fit.sigma2 * (n_p + h) / (n_p - h) if n_p > h else math.inf
    return {"bic": bic, "fpe": fpe}


def order_select(x: Lattice2D, candidates, criterion: str = "bic"):
    """Walk candidate windows in order and stop at the first increase of the
    criterion.

    Returns the chosen window and a table with ``window``, ``h``, ``n_p``,
    ``sigma2``, ``bic`` and ``fpe`` for every candidate.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValidationError("order selection needs at least one candidate window")
    if criterion not in ("bic", "fpe"):
        raise ValidationError(f"criterion must be 'bic' or 'fpe', got {criterion!r}")
    table = []
    for w in candidates:
        fit = ls_fit(x, w)
        row = {"window": w, "h": w.size, "n_p": fit.n_p, "sigma2": fit.sigma2}
        row.update(_criteria(fit))
        table.append(row)
    chosen = candidates[0]
    for prev, row, w in zip(table, table[1:], candidates[1:]):
        if row[criterion] > prev[criterion]:
            break
        chosen = w
    return chosen, table
