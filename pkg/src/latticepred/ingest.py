"""Point data to lattice aggregation and sequential filling of missing cells.

Grid orientation: row 1 is the southernmost band (row index grows with
latitude) and column 1 is the easternmost band (column index grows westward
from ``lon_max``).  Cells are half-open, ``[lo, hi)``, except that points on
the maximum latitude or on ``lon_min`` fall in the last row or column.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .autoreg import ARFit, ARWindow, ar_predict, ls_fit
from .cepstrum import ARField
from .errors import ValidationError
from .lattice import HalfPlaneOrder, HalfPlaneWindow, Lattice2D
from .predict import choose_ordering, fexp_field, predict
from .spectral import SmoothingBandwidth

__all__ = [
    "PointRecord",
    "GridSpec",
    "grid_points",
    "read_points_csv",
    "demean",
    "sequential_predict",
    "ORIENTATION_NOTE",
]

log = logging.getLogger(__name__)

ORIENTATION_NOTE = "rows: latitude ascending from lat_min; cols: westward from lon_max"


@dataclass(frozen=True)
class PointRecord:
    lat: float
    lon: float
    value: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValidationError(f"non-finite coordinates ({self.lat}, {self.lon})")


@dataclass(frozen=True)
class GridSpec:
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float
    rows: int
    cols: int

    def __post_init__(self):
        if not self.lat_min < self.lat_max or not self.lon_min < self.lon_max:
            raise ValidationError("grid bounding box must satisfy lat_min < lat_max and lon_min < lon_max")
        if self.rows < 1 or self.cols < 1:
            raise ValidationError("grid needs at least one row and one column")

    def cell_of(self, lat, lon):
        """1-based (row, col) arrays; 0 marks points outside the box."""
        lat = np.asarray(lat, dtype=float)
        lon = np.asarray(lon, dtype=float)
        inside = (lat >= self.lat_min) & (lat <= self.lat_max) & (lon >= self.lon_min) & (lon <= self.lon_max)
        r = np.floor((lat - self.lat_min) / (self.lat_max - self.lat_min) * self.rows).astype(int)
        c = np.floor((self.lon_max - lon) / (self.lon_max - self.lon_min) * self.cols).astype(int)
        r = np.minimum(r, self.rows - 1) + 1
        c = np.minimum(c, self.cols - 1) + 1
        return np.where(inside, r, 0), np.where(inside, c, 0)


def grid_points(points, spec: GridSpec) -> Lattice2D:
    """Average point values within each cell; empty cells are unobserved.

    Points outside the bounding box are dropped.
    """
    pts = list(points)
    total = np.zeros((spec.rows, spec.cols))
    count = np.zeros((spec.rows, spec.cols), dtype=np.int64)
    if pts:
        lat = np.array([p.lat for p in pts])
        lon = np.array([p.lon for p in pts])
        val = np.array([p.value for p in pts], dtype=float)
        r, c = spec.cell_of(lat, lon)
        ok = r > 0
        if not ok.all():
            log.info("dropped %d points outside the bounding box", int((~ok).sum()))
        np.add.at(total, (r[ok] - 1, c[ok] - 1), val[ok])
        np.add.at(count, (r[ok] - 1, c[ok] - 1), 1)
    observed = count > 0
    means = np.divide(total, count, out=np.zeros_like(total), where=observed)
    return Lattice2D.from_array(means, observed)


def read_points_csv(path) -> list[PointRecord]:
    """Read a ``lat,lon,value`` file."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(line for line in fh if line.strip() and not line.startswith("#"))
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["lat", "lon", "value"]:
            raise ValidationError("points file must have the header 'lat,lon,value'")
        try:
            return [PointRecord(float(row["lat"]), float(row["lon"]), float(row["value"])) for row in reader]
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"malformed points record: {exc}") from None


def demean(x: Lattice2D) -> tuple[Lattice2D, float]:
    """Subtract the mean over observed cells; masked cells stay masked."""
    if x.n_missing == x.dims.size:
        raise ValidationError("cannot demean a lattice with no observed cells")
    mu = float(x.values[x.mask].mean())
    return Lattice2D(x.dims, np.where(x.mask, x.values - mu, 0.0), x.mask), mu


def _fitter(source, sub: Lattice2D, weighting: str):
    """Return ``order -> coefficients`` with per-order caching."""
    cache = {}

    def get(order: HalfPlaneOrder):
        if order in cache:
            return cache[order]
        if isinstance(source, SmoothingBandwidth):
            fit = fexp_field(sub, source, order, weighting=weighting, demean="none")
        elif isinstance(source, ARWindow):
            fit = ls_fit(sub, ARWindow(source.pL1, source.pU1, source.pL2, source.pU2, order))
        else:
            fit = source
            if fit.window.order is not order:
                raise ValidationError(
                    f"pre-fitted coefficients use {fit.window.order.value} order but {order.value} is required"
                )
        cache[order] = fit
        return fit

    return get


def sequential_predict(
    x: Lattice2D,
    source,
    cells,
    fit_region=None,
    weighting: str = "symmetric",
    order=None,
    diagnostics: list | None = None,
) -> list[tuple[tuple[int, int], float]]:
    """Predict ``cells`` one after another, feeding each prediction back.

    Parameters
    ----------
    x : Lattice2D
        Data on the original scale.  The mean over observed cells is removed
        before fitting and added back to every reported value.
    source : SmoothingBandwidth, ARWindow, ARField or ARFit
        A bandwidth selects the cepstral predictor, a window the least-squares
        autoregression.  Pre-fitted coefficients are used as given.
    cells : sequence of (row, col)
        1-based targets in prediction order.  A target may lie one step
        beyond the last row or column.
    fit_region : ((r0, r1), (c0, c1)), optional
        Inclusive 1-based sublattice used for fitting; it must be fully
        observed.  Defaults to the whole lattice.
    order : HalfPlaneOrder or str, optional
        Force one half-plane order instead of choosing per cell.
    diagnostics : list, optional
        Receives one dict per cell with the order used and recursion flags.

    Returns
    -------
    list of ((row, col), value)
    """
    cells = [tuple(int(v) for v in c) for c in cells]
    if not cells:
        return []
    xd, mu = demean(x)
    sub = xd if fit_region is None else xd.subgrid(tuple(fit_region[0]), tuple(fit_region[1]))
    if not sub.fully_observed:
        raise ValidationError(f"fitting region has {sub.n_missing} unobserved cells")
    fit_for = _fitter(source, sub, weighting)
    forced = None if order is None else HalfPlaneOrder.parse(order)
    out = []
    for cell in cells:
        if forced is not None:
            o = forced
        elif isinstance(source, (ARField, ARFit)) and xd.dims.contains(cell):
            o = source.window.order
        else:
            window = None
            if isinstance(source, SmoothingBandwidth):
                window = HalfPlaneWindow(*source.lags(sub.dims))
            o = choose_ordering(cell, xd.dims, xd.mask_grid, window)
        fit = fit_for(o)
        if isinstance(fit, ARFit):
            res = ar_predict(xd, fit, cell, allow_observed=True)
        else:
            res = predict(xd, fit, cell, allow_observed=True)
        if xd.dims.contains(cell):
            xd = xd.with_value(cell, res.value)
        out.append((cell, res.value + mu))
        if diagnostics is not None:
            diagnostics.append({
                "cell": list(cell), "order": o.value, "used_recursion": res.used_recursion,
                "zero_filled_count": res.zero_filled_count,
            })
    return out


def write_points_csv(points, path) -> None:
    Path(path).write_text("lat,lon,value\n" + "".join(f"{p.lat!r},{p.lon!r},{p.value!r}\n" for p in points))
