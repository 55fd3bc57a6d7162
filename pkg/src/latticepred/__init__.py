"""Nonparametric prediction on two-dimensional lattices via cepstral
factorisation of the spectral density, with a least-squares autoregressive
rival and a Monte Carlo benchmark harness."""

from .errors import (
    NumericalError,
    OverflowCapError,
    PoleError,
    SingularFitError,
    SymmetryError,
    ValidationError,
)
from .lattice import (
    GridDims,
    HalfPlaneOrder,
    HalfPlaneWindow,
    Lattice2D,
    half_plane_indices,
    lex_compare,
    read_lattice_csv,
    write_lattice_csv,
)
from .spectral import (
    SmoothingBandwidth,
    SpectralGrid,
    cosine_bell_taper,
    smoothed_spectrum,
    taper_dft_identity,
    tapered_dft,
    tapered_periodogram,
)
from .cepstrum import (
    ARField,
    CepstralField,
    MAField,
    TransferGrid,
    ar_coeffs,
    cepstral_coeffs,
    innovation_variance,
    ma_coeffs,
    transfer_grid,
)
from .predict import PredictionResult, choose_ordering, fexp_field, predict, predict_boundary, predict_interior
from .autoreg import ARFit, ARWindow, ar_predict, ar_spectrum, ar_spectrum_grid, ls_fit, order_select

__version__ = "0.1.0"
