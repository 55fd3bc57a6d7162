import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import separable_ar_field
from latticepred import ARField, ARWindow, HalfPlaneWindow, Lattice2D, SmoothingBandwidth, ValidationError
from latticepred.ingest import (
    GridSpec,
    PointRecord,
    demean,
    grid_points,
    read_points_csv,
    sequential_predict,
    write_points_csv,
)

SPEC = GridSpec(0.0, 2.0, 10.0, 13.0, 2, 3)
# order in which the empty cells of the 14 x 23 fixture are filled
FILL_ORDER = [(8, 20), (8, 21), (8, 22), (4, 21), (7, 22), (9, 23), (6, 23), (1, 23)]
LA = GridSpec(33.7, 34.4, -118.7, -117.6, 14, 23)


def centre(spec, r, c):
    h = (spec.lat_max - spec.lat_min) / spec.rows
    w = (spec.lon_max - spec.lon_min) / spec.cols
    return spec.lat_min + (r - 0.5) * h, spec.lon_max - (c - 0.5) * w


def la_points(seed=0, n=5259, empty=FILL_ORDER):
    rng = np.random.default_rng(seed)
    cells = [(r, c) for r in range(1, 15) for c in range(1, 24) if (r, c) not in empty]
    pick = np.concatenate([np.arange(len(cells)), rng.integers(0, len(cells), n - len(cells))])
    h = (LA.lat_max - LA.lat_min) / LA.rows
    w = (LA.lon_max - LA.lon_min) / LA.cols
    pts = []
    for i in pick:
        r, c = cells[i]
        lat = LA.lat_min + (r - 1 + rng.uniform(0.01, 0.99)) * h
        lon = LA.lon_max - (c - 1 + rng.uniform(0.01, 0.99)) * w
        pts.append(PointRecord(lat, lon, float(rng.normal(300 + 5 * r - 3 * c, 20))))
    return pts


class TestGrid:
    def test_one_point_per_cell(self):
        pts = [PointRecord(*centre(SPEC, r, c), 10 * r + c) for r in (1, 2) for c in (1, 2, 3)]
        x = grid_points(pts, SPEC)
        assert x.fully_observed
        np.testing.assert_array_equal(x.grid, [[11, 12, 13], [21, 22, 23]])

    def test_mean_of_two(self):
        pts = [PointRecord(0.2, 12.9, 1.0), PointRecord(0.7, 12.1, 3.0)]
        x = grid_points(pts, SPEC)
        assert x.value(1, 1) == 2.0 and x.n_missing == 5

    def test_edges(self):
        got = [SPEC.cell_of(lat, lon) for lat, lon in [(2.0, 10.0), (0.0, 13.0), (1.0, 12.0), (1.0 - 1e-12, 12.0)]]
        assert [(int(r), int(c)) for r, c in got] == [(2, 3), (1, 1), (2, 2), (1, 2)]

    def test_outside_points_dropped(self):
        x = grid_points([PointRecord(5.0, 11.0, 9.0), PointRecord(1.5, 9.0, 9.0)], SPEC)
        assert x.n_missing == 6

    def test_empty_input(self):
        x = grid_points([], SPEC)
        assert x.n_missing == 6

    def test_fixture_counts(self):
        x = grid_points(la_points(), LA)
        assert x.dims.size == 322 and x.n_missing == 8
        missing = {(int(r) + 1, int(c) + 1) for r, c in np.argwhere(~x.mask_grid)}
        assert missing == set(FILL_ORDER)

    @settings(max_examples=25)
    @given(st.permutations(list(range(40))))
    def test_permutation_invariant(self, perm):
        pts = la_points(n=400, empty=[])[:40]
        a = grid_points(pts, LA)
        b = grid_points([pts[i] for i in perm], LA)
        np.testing.assert_array_equal(a.mask, b.mask)
        np.testing.assert_allclose(a.values, b.values, rtol=1e-14)

    @pytest.mark.parametrize("bad", [(1.0, 1.0, 0.0, 1.0, 1, 1), (0.0, 1.0, 2.0, 1.0, 1, 1), (0.0, 1.0, 0.0, 1.0, 0, 1)])
    def test_spec_validation(self, bad):
        with pytest.raises(ValidationError):
            GridSpec(*bad)

    def test_non_finite_coordinates(self):
        with pytest.raises(ValidationError):
            PointRecord(float("nan"), 0.0, 1.0)


class TestPointsCsv:
    def test_round_trip(self, tmp_path):
        pts = la_points(n=350)[:30]
        path = tmp_path / "pts.csv"
        write_points_csv(pts, path)
        assert read_points_csv(path) == pts

    def test_header_required(self, tmp_path):
        path = tmp_path / "pts.csv"
        path.write_text("y,x,v\n1,2,3\n")
        with pytest.raises(ValidationError):
            read_points_csv(path)

    def test_malformed_value(self, tmp_path):
        path = tmp_path / "pts.csv"
        path.write_text("lat,lon,value\n1,2,abc\n")
        with pytest.raises(ValidationError):
            read_points_csv(path)


class TestDemean:
    def test_constant(self):
        y, mu = demean(Lattice2D.from_array(np.full((3, 4), 2.5)))
        assert mu == 2.5 and np.all(y.grid == 0)

    def test_idempotent(self, rng):
        y, _ = demean(Lattice2D.from_array(rng.normal(3, 1, (5, 5))))
        _, mu2 = demean(y)
        assert mu2 == pytest.approx(0, abs=1e-15)

    def test_mask_kept(self):
        y, mu = demean(Lattice2D.from_array([[1.0, np.nan], [3.0, 5.0]]))
        assert mu == 3.0 and not y.is_observed(1, 2)
        np.testing.assert_array_equal(y.grid[[0, 1, 1], [0, 0, 1]], [-2, 0, 2])

    def test_all_masked(self):
        with pytest.raises(ValidationError):
            demean(Lattice2D.from_array([[np.nan]]))


def fixture_lattice():
    return grid_points(la_points(), LA)


class TestSequentialPredict:
    def test_zero_coefficients_give_mean(self):
        x = fixture_lattice()
        _, mu = demean(x)
        w = HalfPlaneWindow(2, 2)
        out = sequential_predict(x, ARField(w, np.zeros(w.size)), FILL_ORDER[:3], fit_region=((1, 14), (1, 19)))
        assert [c for c, _ in out] == FILL_ORDER[:3]
        assert all(v == pytest.approx(mu, abs=1e-12) for _, v in out)

    def test_empty_request(self):
        x = fixture_lattice()
        # the whole lattice is not fittable, but nothing is fitted
        assert sequential_predict(x, ARWindow.symmetric(1), []) == []

    def test_unfittable_region(self):
        with pytest.raises(ValidationError):
            sequential_predict(fixture_lattice(), ARWindow.symmetric(1), FILL_ORDER)

    @pytest.mark.parametrize("source", [SmoothingBandwidth(1, 2), ARWindow.symmetric(1)])
    def test_full_workflow(self, source):
        diag = []
        out = sequential_predict(fixture_lattice(), source, FILL_ORDER, fit_region=((1, 14), (1, 19)), diagnostics=diag)
        assert len(out) == 8 and len(diag) == 8
        assert all(np.isfinite(v) for _, v in out)
        assert all(d["order"] in ("row", "col") for d in diag)

    def test_mask_invariance(self):
        x = fixture_lattice()
        y = Lattice2D(x.dims, np.where(x.mask, x.values, 1e9), x.mask)
        kw = dict(fit_region=((1, 14), (1, 19)))
        a = sequential_predict(x, ARWindow.symmetric(1), FILL_ORDER, **kw)
        b = sequential_predict(y, ARWindow.symmetric(1), FILL_ORDER, **kw)
        assert a == b

    @pytest.mark.parametrize("source", [SmoothingBandwidth(1, 2), ARWindow.symmetric(1)])
    def test_shift_equivariance(self, source):
        pts = la_points()
        c = 123.25
        shifted = [PointRecord(p.lat, p.lon, p.value + c) for p in pts]
        kw = dict(fit_region=((1, 14), (1, 19)))
        a = sequential_predict(grid_points(pts, LA), source, FILL_ORDER, **kw)
        b = sequential_predict(grid_points(shifted, LA), source, FILL_ORDER, **kw)
        for (ca, va), (cb, vb) in zip(a, b):
            assert ca == cb and vb == pytest.approx(va + c, abs=1e-8)

    def test_single_missing_cell_coverage(self):
        hits = 0
        for r in range(200):
            v = separable_ar_field((24, 24), rng=np.random.default_rng([99, r])) + 5.0
            truth = v[15, 15]
            v[15, 15] = np.nan
            (cell, pred), = sequential_predict(Lattice2D.from_array(v), ARWindow.symmetric(1), [(16, 16)],
                                               fit_region=((1, 12), (1, 24)))
            hits += abs(pred - truth) <= 2.0
        assert hits >= 190
