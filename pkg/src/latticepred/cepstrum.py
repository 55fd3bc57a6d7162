"""Cepstral (canonical) factorisation of a spectral grid.

Given ``f`` on the coarse grid, the cepstral coefficients are the cosine
coefficients of ``log f``; the one-sided transfer function is::

    A_k = exp(-sum_{j in window} alpha_j exp(-i j . lam_k))

and the half-plane AR coefficients ``a_j`` (resp. MA coefficients
``zeta_j``, from ``B = 1 / A``) are its Fourier coefficients.  With these
signs an AR(1) with parameter ``rho`` gives ``alpha_1 = rho`` and
``a_1 = -rho`` so that ``x_t + a_1 x_{t-1}`` is the innovation.

Two weightings of the half-plane cosine sum are provided:

``"symmetric"`` (default)
    ``alpha_j = (4 M1 M2)^-1 * sum over the full box (-M, M] of
    cos(j . lam_k) log f_k``.  This is the exact discrete Fourier
    coefficient, so scaling ``f`` only moves ``alpha_0`` and a cepstrum
    supported strictly inside the window round-trips exactly.
``"literal"``
    ``alpha_j = (2 M1 M2)^-1 * sum over the half-plane index set`` with
    unit weights.  The set double counts the self-conjugate row
    ``k1 = M1``, which leaks ``log`` of the overall level into
    ``alpha_(odd,0)`` and ``alpha_(0,odd)``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import OverflowCapError, SymmetryError, ValidationError
from .lattice import HalfPlaneOrder, HalfPlaneWindow
from .spectral import SpectralGrid

__all__ = [
    "CepstralField",
    "TransferGrid",
    "ARField",
    "MAField",
    "cepstral_coeffs",
    "transfer_grid",
    "ar_coeffs",
    "ma_coeffs",
    "innovation_variance",
    "read_field_csv",
    "write_field_csv",
]

WEIGHTINGS = ("symmetric", "literal")
DEFAULT_CAP = 50.0
IMAG_TOL = 1e-9


def _place(window: HalfPlaneWindow, coeffs: np.ndarray) -> np.ndarray:
    """Scatter window coefficients into a ``(2 M1, 2 M2)`` FFT-order grid."""
    grid = np.zeros((2 * window.M1, 2 * window.M2), dtype=np.result_type(coeffs, float))
    idx = window.indices()
    grid[idx[:, 0] % (2 * window.M1), idx[:, 1] % (2 * window.M2)] = coeffs
    return grid


def _gather(window: HalfPlaneWindow, grid: np.ndarray) -> np.ndarray:
    idx = window.indices()
    return grid[idx[:, 0] % (2 * window.M1), idx[:, 1] % (2 * window.M2)]


@dataclass(frozen=True, eq=False)
class CepstralField:
    window: HalfPlaneWindow
    alpha0: float
    alphas: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alphas, dtype=float).copy()
        if a.shape != (self.window.size,):
            raise ValidationError(f"expected {self.window.size} cepstral coefficients, got {a.shape}")
        if not (np.isfinite(self.alpha0) and np.all(np.isfinite(a))):
            raise ValidationError("cepstral coefficients must be finite")
        a.flags.writeable = False
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "alpha0", float(self.alpha0))

    def as_dict(self) -> dict[tuple[int, int], float]:
        return {(int(j1), int(j2)): float(v) for (j1, j2), v in zip(self.window.indices(), self.alphas)}

    def exponent_grid(self) -> np.ndarray:
        """``sum_j alpha_j exp(-i j . lam_k)`` on the box, FFT order."""
        return np.fft.fft2(_place(self.window, self.alphas))


@dataclass(frozen=True, eq=False)
class TransferGrid:
    window: HalfPlaneWindow
    values: np.ndarray

    def at(self, k1: int, k2: int) -> complex:
        return complex(self.values[k1 % (2 * self.window.M1), k2 % (2 * self.window.M2)])


@dataclass(frozen=True, eq=False)
class _HalfPlaneCoefficients:
    window: HalfPlaneWindow
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).copy()
        if c.shape != (self.window.size,):
            raise ValidationError(f"expected {self.window.size} coefficients, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValidationError("coefficients must be finite")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> HalfPlaneOrder:
        return self.window.order

    def offsets(self) -> np.ndarray:
        return self.window.indices()

    def as_dict(self) -> dict[tuple[int, int], float]:
        return {(int(j1), int(j2)): float(v) for (j1, j2), v in zip(self.window.indices(), self.coeffs)}

    def __getitem__(self, j) -> float:
        idx = self.window.indices()
        hit = np.nonzero((idx[:, 0] == j[0]) & (idx[:, 1] == j[1]))[0]
        return float(self.coeffs[hit[0]]) if hit.size else 0.0

    def transpose(self):
        return type(self)(self.window.transpose(), self.coeffs)

    @classmethod
    def from_dict(cls, window: HalfPlaneWindow, values: dict) -> "_HalfPlaneCoefficients":
        c = np.zeros(window.size)
        lookup = {(int(a), int(b)): i for i, (a, b) in enumerate(window.indices())}
        for j, v in values.items():
            try:
                c[lookup[(int(j[0]), int(j[1]))]] = v
            except KeyError:
                raise ValidationError(f"lag {tuple(j)} is not in the half-plane window") from None
        return cls(window, c)


class ARField(_HalfPlaneCoefficients):
    """Half-plane AR coefficients ``a_j`` (``a_0 = 1`` implicit): the innovation
    is ``x_t + sum_j a_j x_{t-j}``."""


class MAField(_HalfPlaneCoefficients):
    """Half-plane MA (Wold) coefficients ``zeta_j`` (``zeta_0 = 1`` implicit)."""


def cepstral_coeffs(f: SpectralGrid, window: HalfPlaneWindow | None = None, weighting: str = "symmetric") -> CepstralField:
    """Cepstral coefficients of ``log f`` over the half-plane window.

    ``window`` defaults to the row-ordered window matching ``f``'s lags.
    See the module docstring for ``weighting``.
    """
    if window is None:
        window = HalfPlaneWindow(f.M1, f.M2, HalfPlaneOrder.ROW)
    if (window.M1, window.M2) != (f.M1, f.M2):
        raise ValidationError(
            f"window lags ({window.M1},{window.M2}) do not match grid lags ({f.M1},{f.M2})"
        )
    if weighting not in WEIGHTINGS:
        raise ValidationError(f"weighting must be one of {WEIGHTINGS}")
    g = np.log(f.values)
    if weighting == "symmetric":
        w = np.full(g.shape, 0.5)
    else:
        # unit weights on the half-plane index set of the active order
        w = _place(window, np.ones(window.size))
    # (2 M)^-1 sum_k w_k g_k cos(j . lam_k) == 2 Re ifft2(w g)[j]
    grid = 2.0 * np.real(np.fft.ifft2(w * g))
    return CepstralField(window, grid[0, 0], _gather(window, grid))


def transfer_grid(c: CepstralField, cap: float = DEFAULT_CAP, sign: int = -1) -> TransferGrid:
    """``exp(sign * sum_j alpha_j exp(-i j . lam_k))`` on the full box.

    ``sign=-1`` gives the AR transfer function, ``sign=+1`` its inverse.
    """
    s = c.exponent_grid()
    peak = float(np.max(np.abs(s)))
    if peak > cap:
        raise OverflowCapError(f"cepstral exponent reached {peak:.3g} (cap {cap:g})")
    return TransferGrid(c.window, np.exp(sign * s))


def _fourier_coeffs(t: TransferGrid) -> np.ndarray:
    grid = np.fft.ifft2(t.values)
    vals = _gather(t.window, grid)
    scale = max(1.0, float(np.max(np.abs(t.values))))
    resid = float(np.max(np.abs(vals.imag))) if vals.size else 0.0
    if resid > IMAG_TOL * scale:
        raise SymmetryError(f"imaginary residue {resid:.3g} exceeds tolerance; transfer grid is not Hermitian")
    return vals.real


def ar_coeffs(A: TransferGrid) -> ARField:
    """``a_j = (4 M1 M2)^-1 sum_{-M<k<=M} A_k exp(i j . lam_k)`` for j in the window."""
    return ARField(A.window, _fourier_coeffs(A))


def ma_coeffs(c: CepstralField, cap: float = DEFAULT_CAP) -> MAField:
    return MAField(c.window, _fourier_coeffs(transfer_grid(c, cap, sign=+1)))


def innovation_variance(c: CepstralField) -> float:
    """One-step prediction error variance, ``(2 pi)^2 exp(alpha_0)``."""
    return float((2.0 * np.pi) ** 2 * np.exp(c.alpha0))


# --------------------------------------------------------------------------
# CSV: "M1,M2,order" header, its values, an optional "0,0,alpha0" row (cepstra
# only), then "j1,j2,value" rows in canonical window order.


def format_field_csv(field) -> str:
    w = field.window
    buf = io.StringIO()
    buf.write("M1,M2,order\n")
    buf.write(f"{w.M1},{w.M2},{w.order.value}\n")
    if isinstance(field, CepstralField):
        buf.write(f"0,0,{field.alpha0!r}\n")
        values = field.alphas
    else:
        values = field.coeffs
    for (j1, j2), v in zip(w.indices(), values):
        buf.write(f"{j1},{j2},{float(v)!r}\n")
    return buf.getvalue()


def parse_field_csv(text: str, kind: str = "ar"):
    """Parse a coefficient file; ``kind`` is ``"ar"``, ``"ma"`` or ``"cepstrum"``."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if len(lines) < 2 or lines[0].replace(" ", "") != "M1,M2,order":
        raise ValidationError("coefficient file must start with the header 'M1,M2,order'")
    a, b, o = lines[1].split(",")
    window = HalfPlaneWindow(int(a), int(b), HalfPlaneOrder.parse(o))
    entries = {}
    for ln in lines[2:]:
        p, q, v = ln.split(",")
        entries[(int(p), int(q))] = float(v)
    alpha0 = entries.pop((0, 0), None)
    if kind == "cepstrum":
        if alpha0 is None:
            raise ValidationError("cepstrum file lacks the '0,0,alpha0' row")
        tmp = ARField.from_dict(window, entries)
        return CepstralField(window, alpha0, tmp.coeffs)
    cls = {"ar": ARField, "ma": MAField}.get(kind)
    if cls is None:
        raise ValidationError(f"unknown coefficient kind {kind!r}")
    return cls.from_dict(window, entries)


def read_field_csv(path, kind: str = "ar"):
    return parse_field_csv(Path(path).read_text(), kind)


def write_field_csv(field, path) -> None:
    Path(path).write_text(format_field_csv(field))
