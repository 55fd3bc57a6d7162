"""Tapered DFT, tapered periodogram and the smoothed spectral estimator.

Conventions
-----------
The tapered DFT of a field ``v`` observed on ``1 <= t <= n`` is::

    w(lam) = (sum_t h_t^2)^(-1/2) * sum_t h_t v_t exp(i t . lam)

with the cosine-bell taper ``h_t = h1(t1) h2(t2) / 4``,
``h_l(s) = 1 - cos(2 pi s / n_l)``.  The periodogram is ``|w|^2 / (2 pi)^2``.

The smoothed estimate lives on the coarse grid ``pi * k / M`` for
``k`` in the box ``-M < k <= M``; it averages the ``2 m1 x 2 m2`` tapered
periodogram ordinates ``lam_k + 2 pi l / n`` with ``-m < l <= m``, then
averages that window with its mirror image ``-m <= l < m`` so the estimate is
even in ``k``.  Grids are
stored in FFT order: entry ``[k1 % (2 M1), k2 % (2 M2)]`` holds ``k``.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .lattice import GridDims, Lattice2D

__all__ = [
    "TaperWeights",
    "SmoothingBandwidth",
    "SpectralGrid",
    "BandwidthWarning",
    "cosine_bell_taper",
    "tapered_dft",
    "tapered_periodogram",
    "taper_dft_identity",
    "smoothed_spectrum",
    "read_spectrum_csv",
    "write_spectrum_csv",
]

DEFAULT_FLOOR = 1e-12
TWO_PI_SQ = (2.0 * np.pi) ** 2


class BandwidthWarning(UserWarning):
    """Smoothing bandwidth is small relative to the rate guidance n^(3/4)."""


@dataclass(frozen=True, eq=False)
class TaperWeights:
    dims: GridDims
    h1: np.ndarray
    h2: np.ndarray
    weights: np.ndarray
    sumsq: float


def _marginal_taper(n: int) -> np.ndarray:
    t = np.arange(1, n + 1)
    return 1.0 - np.cos(2.0 * np.pi * t / n)


def cosine_bell_taper(dims: GridDims) -> TaperWeights:
    """Cosine-bell (Hanning) taper on the full grid."""
    if dims.n1 < 2 or dims.n2 < 2:
        raise ValidationError("cosine-bell taper needs at least 2 cells per dimension")
    h1 = _marginal_taper(dims.n1)
    h2 = _marginal_taper(dims.n2)
    w = 0.25 * np.outer(h1, h2)
    sumsq = float(np.sum(h1**2) * np.sum(h2**2) / 16.0)
    return TaperWeights(dims, h1, h2, w, sumsq)


def _prepare(x: Lattice2D, demean, taper: TaperWeights | None = None) -> np.ndarray:
    if not x.fully_observed:
        raise ValidationError(f"lattice has {x.n_missing} unobserved cells; spectral estimates need a full grid")
    v = x.grid.astype(float)
    if demean in (None, False, "none"):
        return v
    if demean in (True, "mean"):
        return v - v.mean()
    if demean == "taper":
        if taper is None:
            taper = cosine_bell_taper(x.dims)
        return v - np.sum(taper.weights * v) / np.sum(taper.weights)
    raise ValidationError(f"unknown demeaning mode {demean!r}")


def _check_taper(x: Lattice2D, taper: TaperWeights):
    if taper.dims != x.dims:
        raise ValidationError("taper dimensions do not match the lattice")


def tapered_dft(x: Lattice2D, taper: TaperWeights, lam, demean=None) -> complex:
    """Tapered DFT at a single frequency pair by direct summation."""
    _check_taper(x, taper)
    v = _prepare(x, demean, taper)
    e1 = np.exp(1j * lam[0] * np.arange(1, x.dims.n1 + 1))
    e2 = np.exp(1j * lam[1] * np.arange(1, x.dims.n2 + 1))
    return complex(e1 @ (taper.weights * v) @ e2) / np.sqrt(taper.sumsq)


def tapered_periodogram(x: Lattice2D, taper: TaperWeights, lam, demean=None) -> float:
    w = tapered_dft(x, taper, lam, demean)
    return float(abs(w) ** 2 / TWO_PI_SQ)


def _plain_dft_grid(v: np.ndarray) -> np.ndarray:
    """``sum_t v_t exp(i t . lam_j)`` at every Fourier frequency, FFT order."""
    n1, n2 = v.shape
    phase = np.exp(2j * np.pi * np.arange(n1) / n1)[:, None] * np.exp(2j * np.pi * np.arange(n2) / n2)[None, :]
    return phase * np.fft.ifft2(v) * (n1 * n2)


def taper_dft_identity(x: Lattice2D, j, demean=None) -> complex:
    """Cosine-bell tapered DFT at Fourier index ``j`` rebuilt from plain DFT
    ordinates through the three-term combination ``-w(j-1) + 2 w(j) - w(j+1)``
    in each coordinate.

    The combination is scaled by ``1 / (16 sqrt(sum h^2))`` so it agrees with
    :func:`tapered_dft` exactly; for ``n >= 3`` this equals the familiar
    ``1/6`` factor applied to ``n^(-1/2)``-normalised ordinates.
    """
    v = _prepare(x, demean)
    taper = cosine_bell_taper(x.dims)
    d = _plain_dft_grid(v)
    n1, n2 = x.dims.shape
    c = (-1.0, 2.0, -1.0)
    acc = 0j
    for a in (-1, 0, 1):
        for b in (-1, 0, 1):
            acc += c[a + 1] * c[b + 1] * d[(j[0] + a) % n1, (j[1] + b) % n2]
    return complex(acc / (16.0 * np.sqrt(taper.sumsq)))


@dataclass(frozen=True)
class SmoothingBandwidth:
    """Periodogram averaging half-widths ``m1``, ``m2``.

    The coarse-grid lags follow as ``M_l = floor(n_l / 2) // m_l``.
    """

    m1: int
    m2: int

    def __post_init__(self):
        if int(self.m1) != self.m1 or int(self.m2) != self.m2 or self.m1 < 1 or self.m2 < 1:
            raise ValidationError(f"bandwidths must be positive integers, got ({self.m1}, {self.m2})")
        object.__setattr__(self, "m1", int(self.m1))
        object.__setattr__(self, "m2", int(self.m2))

    def lags(self, dims: GridDims) -> tuple[int, int]:
        M1 = (dims.n1 // 2) // self.m1
        M2 = (dims.n2 // 2) // self.m2
        if M1 < 1 or M2 < 1:
            raise ValidationError(
                f"bandwidth ({self.m1},{self.m2}) too wide for a {dims.n1}x{dims.n2} lattice"
            )
        return M1, M2

    def exact(self, dims: GridDims) -> bool:
        """True when ``n_l = 2 M_l m_l`` so every ordinate is a Fourier frequency."""
        M1, M2 = self.lags(dims)
        return dims.n1 == 2 * M1 * self.m1 and dims.n2 == 2 * M2 * self.m2

    def check_rate(self, dims: GridDims) -> None:
        for n, m in ((dims.n1, self.m1), (dims.n2, self.m2)):
            if m < n**0.75:
                warnings.warn(
                    f"bandwidth m={m} is below n^(3/4)={n**0.75:.1f} for n={n}",
                    BandwidthWarning,
                    stacklevel=3,
                )


@dataclass(frozen=True, eq=False)
class SpectralGrid:
    """Spectral density on the coarse grid ``pi k / M``, stored in FFT order
    over the full box ``-M < k <= M`` (shape ``(2 M1, 2 M2)``)."""

    bandwidth: SmoothingBandwidth
    M1: int
    M2: int
    values: np.ndarray
    floor: float = DEFAULT_FLOOR

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (2 * self.M1, 2 * self.M2):
            raise ValidationError(f"grid values must have shape {(2 * self.M1, 2 * self.M2)}, got {vals.shape}")
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise ValidationError("spectral values must be finite and positive")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def at(self, k1: int, k2: int) -> float:
        return float(self.values[k1 % (2 * self.M1), k2 % (2 * self.M2)])

    def frequencies(self) -> tuple[np.ndarray, np.ndarray]:
        """Coarse frequencies along each axis, FFT order."""
        k1 = np.fft.fftfreq(2 * self.M1, 1.0 / (2 * self.M1))
        k2 = np.fft.fftfreq(2 * self.M2, 1.0 / (2 * self.M2))
        # fftfreq puts -M first in the upper half; the box is (-M, M]
        k1 = np.where(k1 == -self.M1, self.M1, k1)
        k2 = np.where(k2 == -self.M2, self.M2, k2)
        return np.pi * k1 / self.M1, np.pi * k2 / self.M2

    def half(self) -> list[tuple[int, int, float]]:
        """Rows ``(k1, k2, value)`` for ``k1 = 0..M1``, ``k2 = 1-M2..M2``."""
        return [
            (k1, k2, self.at(k1, k2))
            for k1 in range(0, self.M1 + 1)
            for k2 in range(1 - self.M2, self.M2 + 1)
        ]

    def scaled(self, c: float) -> "SpectralGrid":
        return SpectralGrid(self.bandwidth, self.M1, self.M2, self.values * c, self.floor)

    def transpose(self) -> "SpectralGrid":
        bw = SmoothingBandwidth(self.bandwidth.m2, self.bandwidth.m1)
        return SpectralGrid(bw, self.M2, self.M1, self.values.T, self.floor)


def _axis_freqs(M: int, m: int, n: int) -> np.ndarray:
    """``pi k / M + 2 pi l / n`` for k in FFT order and -m < l <= m; shape (2M, 2m)."""
    k = np.arange(2 * M)
    k = np.where(k > M, k - 2 * M, k)
    l = np.arange(-m + 1, m + 1)
    return np.pi * k[:, None] / M + 2.0 * np.pi * l[None, :] / n


def smoothed_spectrum(
    x: Lattice2D,
    bw: SmoothingBandwidth,
    demean="mean",
    floor: float = DEFAULT_FLOOR,
    method: str = "auto",
    warn: bool = False,
) -> SpectralGrid:
    """Average tapered periodogram on the coarse frequency grid.

    Parameters
    ----------
    x : Lattice2D
        Fully observed field.
    bw : SmoothingBandwidth
    demean : {"mean", "taper", "none"}
        Mean removal before transforming.
    floor : float
        Positivity floor applied to every grid value.
    method : {"auto", "fft", "direct"}
        ``fft`` needs ``n_l = 2 M_l m_l``; ``auto`` uses it when possible and
        otherwise evaluates the tapered DFT directly at the required
        frequencies.
    """
    M1, M2 = bw.lags(x.dims)
    if warn:
        bw.check_rate(x.dims)
    taper = cosine_bell_taper(x.dims)
    v = _prepare(x, demean, taper) * taper.weights
    n1, n2 = x.dims.shape
    if method == "auto":
        method = "fft" if bw.exact(x.dims) else "direct"
    if method == "fft":
        if not bw.exact(x.dims):
            raise ValidationError("fft path needs n = 2 M m in both dimensions")
        per = np.abs(np.fft.fft2(v)) ** 2 / (taper.sumsq * TWO_PI_SQ)
        k1 = np.arange(2 * M1)
        k2 = np.arange(2 * M2)
        l1 = np.arange(-bw.m1 + 1, bw.m1 + 1)
        l2 = np.arange(-bw.m2 + 1, bw.m2 + 1)
        i1 = (bw.m1 * k1[:, None] + l1[None, :]) % n1
        i2 = (bw.m2 * k2[:, None] + l2[None, :]) % n2
        block = per[i1[:, :, None, None], i2[None, None, :, :]]
    elif method == "direct":
        w1 = _axis_freqs(M1, bw.m1, n1).ravel()
        w2 = _axis_freqs(M2, bw.m2, n2).ravel()
        e1 = np.exp(1j * np.outer(w1, np.arange(1, n1 + 1)))
        e2 = np.exp(1j * np.outer(np.arange(1, n2 + 1), w2))
        per = np.abs(e1 @ v @ e2) ** 2 / (taper.sumsq * TWO_PI_SQ)
        block = per.reshape(2 * M1, 2 * bw.m1, 2 * M2, 2 * bw.m2)
    else:
        raise ValidationError(f"unknown method {method!r}")
    fhat = block.mean(axis=(1, 3))
    # (-m, m] is lopsided; averaging with the mirrored window [-m, m) keeps
    # the estimate even, f(lam_k) = f(lam_-k), as it must be for real data
    fhat = 0.5 * (fhat + np.roll(fhat[::-1, ::-1], 1, axis=(0, 1)))
    return SpectralGrid(bw, M1, M2, np.maximum(fhat, floor), floor)


# --------------------------------------------------------------------------
# CSV: "m1,m2,M1,M2" header, its values, then "k1,k2,value" rows for
# k1 = 0..M1, k2 = 1-M2..M2.


def format_spectrum_csv(f: SpectralGrid) -> str:
    buf = io.StringIO()
    buf.write("m1,m2,M1,M2\n")
    buf.write(f"{f.bandwidth.m1},{f.bandwidth.m2},{f.M1},{f.M2}\n")
    for k1, k2, val in f.half():
        buf.write(f"{k1},{k2},{val!r}\n")
    return buf.getvalue()


def parse_spectrum_csv(text: str) -> SpectralGrid:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if len(lines) < 2 or lines[0].replace(" ", "") != "m1,m2,M1,M2":
        raise ValidationError("spectrum file must start with the header 'm1,m2,M1,M2'")
    try:
        m1, m2, M1, M2 = (int(v) for v in lines[1].split(","))
    except ValueError:
        raise ValidationError(f"bad spectrum parameters line {lines[1]!r}") from None
    vals = np.full((2 * M1, 2 * M2), np.nan)
    rows = []
    for ln in lines[2:]:
        a, b, c = ln.split(",")
        rows.append((int(a), int(b), float(c)))
    # mirror first so that explicitly listed cells win
    for k1, k2, val in rows:
        vals[-k1 % (2 * M1), -k2 % (2 * M2)] = val
    for k1, k2, val in rows:
        vals[k1 % (2 * M1), k2 % (2 * M2)] = val
    if np.isnan(vals).any():
        raise ValidationError("spectrum file does not cover the half-plane grid")
    return SpectralGrid(SmoothingBandwidth(m1, m2), M1, M2, vals)


def read_spectrum_csv(path) -> SpectralGrid:
    return parse_spectrum_csv(Path(path).read_text())


def write_spectrum_csv(f: SpectralGrid, path) -> None:
    Path(path).write_text(format_spectrum_csv(f))
