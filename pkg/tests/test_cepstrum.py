import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latticepred import (
    ARField,
    CepstralField,
    GridDims,
    HalfPlaneOrder,
    HalfPlaneWindow,
    OverflowCapError,
    SmoothingBandwidth,
    SpectralGrid,
    SymmetryError,
    TransferGrid,
    ValidationError,
    ar_coeffs,
    cepstral_coeffs,
    half_plane_indices,
    innovation_variance,
    ma_coeffs,
    smoothed_spectrum,
    transfer_grid,
)
from latticepred.cepstrum import format_field_csv, parse_field_csv
from latticepred.montecarlo import simulate_field

ROW = HalfPlaneOrder.ROW
TWO_PI_SQ = (2 * np.pi) ** 2
BW = SmoothingBandwidth(1, 1)


def grid_of(M1, M2, values):
    return SpectralGrid(BW, M1, M2, values)


def box_freqs(M1, M2):
    f = grid_of(M1, M2, np.ones((2 * M1, 2 * M2)))
    l1, l2 = f.frequencies()
    return l1[:, None], l2[None, :]


def spectrum_from_cepstrum(c: CepstralField):
    """log f = alpha0 + 2 sum_j alpha_j cos(j . lam) on the coarse grid."""
    w = c.window
    l1, l2 = box_freqs(w.M1, w.M2)
    g = np.full(l1.shape[:1] + l2.shape[1:], c.alpha0)
    for (j1, j2), a in zip(w.indices(), c.alphas):
        g = g + 2 * a * np.cos(j1 * l1 + j2 * l2)
    return grid_of(w.M1, w.M2, np.exp(g))


def separable_cepstrum(M1, M2, rho1, rho2):
    w = HalfPlaneWindow(M1, M2, ROW)
    d = {}
    for k in range(1, M1 + 1):
        d[(k, 0)] = rho1**k / k
    for k in range(1, M2 + 1):
        d[(0, k)] = rho2**k / k
    return CepstralField(w, 0.0, [d.get(tuple(j), 0.0) for j in w.indices()])


def literal_oracle(f: SpectralGrid, window: HalfPlaneWindow):
    """Direct cosine sum with unit weight on every index of the window."""
    M1, M2 = window.M1, window.M2
    ks = half_plane_indices(window)
    out = {}
    for j in [(0, 0)] + ks:
        s = 0.0
        for k in ks:
            lam = (np.pi * k[0] / M1, np.pi * k[1] / M2)
            s += np.cos(j[0] * lam[0] + j[1] * lam[1]) * np.log(f.at(*k))
        out[j] = s / (2 * M1 * M2)
    return out


def symmetric_oracle(f: SpectralGrid, window: HalfPlaneWindow):
    M1, M2 = window.M1, window.M2
    out = {}
    for j in [(0, 0)] + half_plane_indices(window):
        s = 0.0
        for k1 in range(1 - M1, M1 + 1):
            for k2 in range(1 - M2, M2 + 1):
                lam = (np.pi * k1 / M1, np.pi * k2 / M2)
                s += np.cos(j[0] * lam[0] + j[1] * lam[1]) * np.log(f.at(k1, k2))
        out[j] = s / (4 * M1 * M2)
    return out


positive_grids = st.tuples(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1)).map(
    lambda t: grid_of(t[0], t[1], np.exp(np.random.default_rng(t[2]).normal(size=(2 * t[0], 2 * t[1]))))
)


class TestCepstralCoeffs:
    def test_literal_constant_level(self):
        c = 3.7
        f = grid_of(2, 2, np.full((4, 4), c))
        cf = cepstral_coeffs(f, weighting="literal")
        assert cf.alpha0 == pytest.approx(10 / 8 * np.log(c), rel=1e-12)
        assert cf.as_dict()[(0, 1)] == pytest.approx(-np.log(c) / 8, rel=1e-12)

    def test_symmetric_constant_level(self):
        c = 3.7
        cf = cepstral_coeffs(grid_of(2, 2, np.full((4, 4), c)))
        assert cf.alpha0 == pytest.approx(np.log(c), rel=1e-12)
        np.testing.assert_allclose(cf.alphas, 0, atol=1e-14)

    @pytest.mark.parametrize("weighting", ["symmetric", "literal"])
    def test_unit_spectrum_is_null(self, weighting):
        cf = cepstral_coeffs(grid_of(3, 2, np.ones((6, 4))), weighting=weighting)
        assert cf.alpha0 == 0 and np.all(cf.alphas == 0)

    @settings(max_examples=30)
    @given(positive_grids)
    def test_literal_matches_direct_sum(self, f):
        w = HalfPlaneWindow(f.M1, f.M2, ROW)
        got = cepstral_coeffs(f, w, weighting="literal")
        ref = literal_oracle(f, w)
        assert got.alpha0 == pytest.approx(ref[(0, 0)], abs=1e-12)
        for j, v in got.as_dict().items():
            assert v == pytest.approx(ref[j], abs=1e-12)

    @settings(max_examples=30)
    @given(positive_grids)
    def test_symmetric_matches_direct_sum(self, f):
        w = HalfPlaneWindow(f.M1, f.M2, ROW)
        got = cepstral_coeffs(f, w)
        ref = symmetric_oracle(f, w)
        assert got.alpha0 == pytest.approx(ref[(0, 0)], abs=1e-12)
        for j, v in got.as_dict().items():
            assert v == pytest.approx(ref[j], abs=1e-12)

    def test_window_mismatch(self):
        with pytest.raises(ValidationError):
            cepstral_coeffs(grid_of(2, 2, np.ones((4, 4))), HalfPlaneWindow(2, 3, ROW))

    def test_unknown_weighting(self):
        with pytest.raises(ValidationError):
            cepstral_coeffs(grid_of(2, 2, np.ones((4, 4))), weighting="other")

    @pytest.mark.parametrize("M", [(3, 3), (4, 6), (5, 2)])
    def test_round_trip_inside_window(self, rng, M):
        w = HalfPlaneWindow(*M, ROW)
        idx = w.indices()
        inside = (np.abs(idx[:, 0]) < M[0]) & (np.abs(idx[:, 1]) < M[1])
        alphas = np.where(inside, 0.2 * rng.standard_normal(w.size), 0.0)
        c = CepstralField(w, 0.3, alphas)
        back = cepstral_coeffs(spectrum_from_cepstrum(c), w)
        assert back.alpha0 == pytest.approx(0.3, abs=1e-12)
        np.testing.assert_allclose(back.alphas, alphas, atol=1e-12)

    def test_col_window_matches_transposed_row(self, rng):
        f = grid_of(3, 4, np.exp(rng.normal(size=(6, 8))))
        ft = grid_of(4, 3, f.values.T)
        col = cepstral_coeffs(f, HalfPlaneWindow(3, 4, HalfPlaneOrder.COL))
        row = cepstral_coeffs(ft, HalfPlaneWindow(4, 3, ROW))
        assert col.alpha0 == pytest.approx(row.alpha0)
        for (j1, j2), v in col.as_dict().items():
            assert v == pytest.approx(row.as_dict()[(j2, j1)], abs=1e-12)


class TestScaleEquivariance:
    @settings(max_examples=30)
    @given(positive_grids, st.floats(1e-3, 1e3))
    def test_level_moves_only_alpha0(self, f, c):
        a = cepstral_coeffs(f)
        b = cepstral_coeffs(f.scaled(c))
        assert b.alpha0 - a.alpha0 == pytest.approx(np.log(c), abs=1e-10)
        np.testing.assert_allclose(b.alphas, a.alphas, atol=1e-10)
        np.testing.assert_allclose(ar_coeffs(transfer_grid(b)).coeffs, ar_coeffs(transfer_grid(a)).coeffs, atol=1e-9)
        np.testing.assert_allclose(ma_coeffs(b).coeffs, ma_coeffs(a).coeffs, atol=1e-9)
        assert innovation_variance(b) == pytest.approx(c * innovation_variance(a), rel=1e-9)


class TestTransfer:
    def test_zero_cepstrum(self):
        w = HalfPlaneWindow(3, 2, ROW)
        A = transfer_grid(CepstralField(w, 0.0, np.zeros(w.size)))
        np.testing.assert_array_equal(A.values, 1)

    def test_single_coefficient(self):
        w = HalfPlaneWindow(2, 3, ROW)
        a = 0.3
        alphas = np.zeros(w.size)
        alphas[0] = a  # (0, 1) is the first lag
        c = CepstralField(w, 0.0, alphas)
        A = transfer_grid(c)
        for k1 in range(-1, 3):
            assert A.at(k1, 0) == pytest.approx(np.exp(-a))
            lam2 = np.pi * 2 / 3
            assert A.at(k1, 2) == pytest.approx(np.exp(-a * np.exp(-1j * lam2)))

    def test_separable_closed_form(self):
        M, r1, r2 = 24, 0.5, 0.4
        A = transfer_grid(separable_cepstrum(M, M, r1, r2))
        l1, l2 = box_freqs(M, M)
        ref = (1 - r1 * np.exp(-1j * l1)) * (1 - r2 * np.exp(-1j * l2))
        assert np.max(np.abs(A.values - ref)) <= 4 * 0.5 ** (M + 1)

    def test_hermitian(self, rng):
        w = HalfPlaneWindow(3, 4, ROW)
        A = transfer_grid(CepstralField(w, 0.0, 0.1 * rng.standard_normal(w.size)))
        for k1 in range(-2, 3):
            for k2 in range(-3, 4):
                assert A.at(-k1, -k2) == pytest.approx(np.conj(A.at(k1, k2)), abs=1e-14)
        assert np.all(np.abs(A.values) > 0)

    def test_overflow_cap(self):
        w = HalfPlaneWindow(2, 2, ROW)
        with pytest.raises(OverflowCapError):
            transfer_grid(CepstralField(w, 0.0, np.full(w.size, 10.0)))
        transfer_grid(CepstralField(w, 0.0, np.full(w.size, 10.0)), cap=200)


class TestArCoeffs:
    def test_unit_transfer(self):
        w = HalfPlaneWindow(3, 3, ROW)
        a = ar_coeffs(TransferGrid(w, np.ones((6, 6), dtype=complex)))
        np.testing.assert_allclose(a.coeffs, 0, atol=1e-15)

    @pytest.mark.parametrize("M", [(2, 2), (3, 5), (6, 4)])
    def test_separable_product(self, M):
        w = HalfPlaneWindow(*M, ROW)
        l1, l2 = box_freqs(*M)
        A = TransferGrid(w, (1 - 0.5 * np.exp(-1j * l1)) * (1 - 0.4 * np.exp(-1j * l2)))
        a = ar_coeffs(A)
        expect = {(1, 0): -0.5, (0, 1): -0.4, (1, 1): 0.2}
        for j, v in a.as_dict().items():
            assert v == pytest.approx(expect.get(j, 0.0), abs=1e-12)

    def test_ar1_cepstrum_gives_minus_rho(self):
        a = ar_coeffs(transfer_grid(separable_cepstrum(16, 16, 0.6, 0.0)))
        assert a[(1, 0)] == pytest.approx(-0.6, abs=1e-10)
        assert max(abs(v) for j, v in a.as_dict().items() if j != (1, 0)) < 1e-10

    def test_non_hermitian_rejected(self, rng):
        w = HalfPlaneWindow(2, 2, ROW)
        vals = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        with pytest.raises(SymmetryError):
            ar_coeffs(TransferGrid(w, vals))

    def test_real_for_hermitian_grids(self, rng):
        w = HalfPlaneWindow(4, 3, ROW)
        for _ in range(10):
            c = CepstralField(w, rng.normal(), 0.2 * rng.standard_normal(w.size))
            a = ar_coeffs(transfer_grid(c))
            assert np.all(np.isfinite(a.coeffs))


class TestMaCoeffs:
    def test_zero(self):
        w = HalfPlaneWindow(2, 3, ROW)
        np.testing.assert_allclose(ma_coeffs(CepstralField(w, 0.0, np.zeros(w.size))).coeffs, 0, atol=1e-15)

    def test_geometric_series(self):
        rho, M = 0.5, 20
        z = ma_coeffs(separable_cepstrum(M, M, rho, 0.0))
        for k in range(1, 10):
            assert z[(k, 0)] == pytest.approx(rho**k, abs=1e-6)
        assert abs(z[(0, 1)]) < 1e-6 and abs(z[(1, 1)]) < 1e-6

    def test_duality_with_ar(self):
        M = 16
        c = separable_cepstrum(M, M, 0.5, 0.4)
        a = ar_coeffs(transfer_grid(c)).as_dict()
        z = ma_coeffs(c).as_dict()
        a[(0, 0)] = z[(0, 0)] = 1.0
        # half-plane convolution over the window at lags well inside it
        for j in [(0, 1), (0, 5), (1, -3), (2, 0), (3, 4), (5, -6)]:
            s = sum(av * z.get((j[0] - k[0], j[1] - k[1]), 0.0) for k, av in a.items())
            assert abs(s) < 1e-6


class TestInnovationVariance:
    def test_zero_alpha0(self):
        w = HalfPlaneWindow(1, 1, ROW)
        assert innovation_variance(CepstralField(w, 0.0, np.zeros(w.size))) == pytest.approx(TWO_PI_SQ)

    @pytest.mark.parametrize("sigma2", [0.3, 1.0, 25 / 3])
    def test_white_noise_calibration(self, sigma2):
        f = grid_of(3, 3, np.full((6, 6), sigma2 / TWO_PI_SQ))
        assert innovation_variance(cepstral_coeffs(f)) == pytest.approx(sigma2, rel=1e-12)

    def test_ma_model(self):
        vals = []
        for s in range(5):
            x = simulate_field(0.10, GridDims(128, 128), "normal", np.random.default_rng(100 + s))
            vals.append(innovation_variance(cepstral_coeffs(smoothed_spectrum(x, SmoothingBandwidth(8, 8)))))
        assert np.mean(vals) == pytest.approx(1.0, abs=0.10)


class TestFieldCsv:
    def test_round_trip(self, rng):
        w = HalfPlaneWindow(2, 3, HalfPlaneOrder.COL)
        c = CepstralField(w, -0.25, rng.standard_normal(w.size))
        text = format_field_csv(c)
        assert text.splitlines()[:3] == ["M1,M2,order", "2,3,col", "0,0,-0.25"]
        back = parse_field_csv(text, "cepstrum")
        assert back.alpha0 == c.alpha0 and np.array_equal(back.alphas, c.alphas)
        a = ARField(w, rng.standard_normal(w.size))
        back = parse_field_csv(format_field_csv(a), "ar")
        assert back.window == w and np.array_equal(back.coeffs, a.coeffs)

    def test_rejects_foreign_lag(self):
        with pytest.raises(ValidationError):
            parse_field_csv("M1,M2,order\n1,1,row\n0,1,0.5\n-1,0,0.1\n")

    def test_cepstrum_needs_alpha0(self):
        with pytest.raises(ValidationError):
            parse_field_csv("M1,M2,order\n1,1,row\n0,1,0.5\n", "cepstrum")
