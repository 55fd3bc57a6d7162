"""Monte Carlo comparison of the three predictors on a moving-average field.

The field is ``x_t = e_t + tau * sum_{s in {-1,0,1}^2, s != 0} e_{t-s}`` with
iid innovations; it is invertible for ``|tau| < 1/8``.  Each replication
draws an estimation lattice of ``(n* + 1) x (2 n* + 1)`` cells, fits

* ``fexp_periodogram`` -- smoothed periodogram -> cepstrum -> AR coefficients,
* ``fexp_ar``          -- LS autoregression -> AR spectrum -> cepstrum -> AR coefficients,
* ``ar``               -- LS autoregression used directly,

and predicts one cell of a separate target lattice, treating it as unobserved.

Random streams
--------------
Every stream is ``np.random.SeedSequence(master_seed, spawn_key=key)``:
``key = (0,)`` for the fixed target lattice, ``(1, r)`` for the estimation
lattice of replication ``r`` and ``(2, r)`` for its target lattice when the
target is redrawn.  Results therefore do not depend on scheduling.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .autoreg import ARWindow, ar_predict, ar_spectrum_grid, ls_fit
from .cepstrum import ar_coeffs, cepstral_coeffs, transfer_grid
from .errors import NumericalError, ValidationError
from .lattice import GridDims, HalfPlaneOrder, HalfPlaneWindow, Lattice2D
from .predict import predict_interior
from .spectral import SmoothingBandwidth, smoothed_spectrum

__all__ = [
    "DISTRIBUTIONS",
    "PREDICTORS",
    "MCConfig",
    "RMSEReport",
    "simulate_field",
    "true_spectrum",
    "linear_spectrum",
    "run_experiment",
    "run_grid",
]

log = logging.getLogger(__name__)

DISTRIBUTIONS = ("uniform", "normal", "chisq9")
PREDICTORS = ("fexp_periodogram", "fexp_ar", "ar")


def draw_innovations(rng: np.random.Generator, dist: str, shape) -> np.ndarray:
    if dist == "uniform":
        return rng.uniform(-5.0, 5.0, size=shape)
    if dist == "normal":
        return rng.standard_normal(shape)
    if dist == "chisq9":
        return rng.chisquare(9, size=shape) - 9.0
    raise ValidationError(f"unknown innovation distribution {dist!r}; choose from {DISTRIBUTIONS}")


def _check_tau(tau: float) -> None:
    if not abs(tau) < 0.125:
        raise ValidationError(f"|tau| must be below 1/8 for invertibility, got {tau}")


def simulate_field(tau: float, dims: GridDims, dist: str, rng: np.random.Generator) -> Lattice2D:
    """Draw the moving-average field on ``dims`` from a one-cell-padded
    innovation buffer, so edge cells see genuine neighbours."""
    _check_tau(tau)
    n1, n2 = dims.shape
    e = draw_innovations(rng, dist, (n1 + 2, n2 + 2))
    ring = np.zeros((n1, n2))
    for a in (0, 1, 2):
        for b in (0, 1, 2):
            if (a, b) != (1, 1):
                ring += e[a:a + n1, b:b + n2]
    return Lattice2D.from_array(e[1:-1, 1:-1] + tau * ring)


def true_spectrum(tau: float, lam) -> float:
    """Spectral density of the simulated field for unit innovation variance.

    The field is a finite moving average with real transfer function
    ``1 + tau * nu(lam)``, ``nu(lam) = (1 + 2 cos lam1)(1 + 2 cos lam2) - 1``,
    so ``f = (1 + tau * nu)^2 / (2 pi)^2``.  The first-order form
    ``(1 + tau * nu) / (2 pi)^2`` is available as :func:`linear_spectrum`.
    """
    return float((1.0 + tau * _nu(lam)) ** 2 / (2.0 * np.pi) ** 2)


def linear_spectrum(tau: float, lam) -> float:
    """First-order-in-``tau`` approximation ``(1 + tau * nu) / (2 pi)^2``."""
    return float((1.0 + tau * _nu(lam)) / (2.0 * np.pi) ** 2)


def _nu(lam) -> float:
    return (1.0 + 2.0 * np.cos(lam[0])) * (1.0 + 2.0 * np.cos(lam[1])) - 1.0


def _rng(seed: int, key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


@dataclass
class MCConfig:
    tau: float
    nstar: int
    dist: str = "normal"
    bandwidths: list = field(default_factory=lambda: [(1, 1)])
    ar_orders: list = field(default_factory=lambda: [1])
    reps: int = 1000
    master_seed: int = 0
    target_dims: GridDims = field(default_factory=lambda: GridDims(40, 41))
    target_cell: tuple = (20, 20)
    fixed_target: bool = True
    weighting: str = "symmetric"
    demean: str = "none"
    workers: int = 1

    def __post_init__(self):
        _check_tau(self.tau)
        if self.nstar < 1 or int(self.nstar) != self.nstar:
            raise ValidationError("nstar must be a positive integer")
        if self.dist not in DISTRIBUTIONS:
            raise ValidationError(f"unknown distribution {self.dist!r}")
        if self.reps < 1:
            raise ValidationError("reps must be positive")
        if isinstance(self.target_dims, (tuple, list)):
            self.target_dims = GridDims(*self.target_dims)
        self.bandwidths = [tuple(int(v) for v in m) for m in self.bandwidths]
        self.ar_orders = [int(p) for p in self.ar_orders]
        self.target_cell = tuple(int(v) for v in self.target_cell)
        if not self.target_dims.contains(self.target_cell):
            raise ValidationError("target cell lies outside the target lattice")
        nb, na = len(self.bandwidths), len(self.ar_orders)
        if nb != na and 1 not in (nb, na):
            raise ValidationError("bandwidths and ar_orders must have equal length (or length 1)")

    @property
    def estimation_dims(self) -> GridDims:
        return GridDims(self.nstar + 1, 2 * self.nstar + 1)

    def rows(self) -> list[tuple[tuple[int, int], int]]:
        n = max(len(self.bandwidths), len(self.ar_orders))
        bws = self.bandwidths * n if len(self.bandwidths) == 1 else self.bandwidths
        ps = self.ar_orders * n if len(self.ar_orders) == 1 else self.ar_orders
        return list(zip(bws, ps))


@dataclass
class RMSEReport:
    rows: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def get(self, predictor: str, tau: float | None = None, dist: str | None = None,
            m=None, p=None, nstar=None) -> float:
        hits = [
            r for r in self.rows
            if r["predictor"] == predictor
            and (tau is None or math.isclose(r["tau"], tau))
            and (dist is None or r["dist"] == dist)
            and (m is None or (r["m1"], r["m2"]) == tuple(m))
            and (p is None or r["p"] == p)
            and (nstar is None or r["nstar"] == nstar)
        ]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} rows match predictor={predictor} tau={tau} dist={dist} m={m} p={p}")
        return hits[0]["rmse"]

    def extend(self, other: "RMSEReport") -> None:
        self.rows.extend(other.rows)

    def to_csv(self) -> str:
        """Table layout: one line per (dist, n*, m, p*), columns predictor@tau."""
        taus = sorted({r["tau"] for r in self.rows})
        keyed = {}
        for r in self.rows:
            keyed.setdefault((r["dist"], r["nstar"], r["m1"], r["m2"], r["p"]), {})[(r["predictor"], r["tau"])] = r["rmse"]
        header = ["dist", "nstar", "m1", "m2", "p"] + [f"{pred}@{t:g}" for pred in PREDICTORS for t in taus]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for key in keyed:
            cells = keyed[key]
            w.writerow(list(key) + [
                "" if (pred, t) not in cells else f"{cells[(pred, t)]:.4f}" for pred in PREDICTORS for t in taus
            ])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"rows": self.rows, "provenance": self.provenance}, indent=2, default=str)


def _fexp_from_grid(f, weighting):
    window = HalfPlaneWindow(f.M1, f.M2, HalfPlaneOrder.ROW)
    return ar_coeffs(transfer_grid(cepstral_coeffs(f, window, weighting)))


def _replicate(cfg: MCConfig, r: int, fixed_target: Lattice2D | None) -> np.ndarray:
    """Squared errors for one replication, shape (n_rows, 3); NaN marks a failed fit."""
    rows = cfg.rows()
    out = np.full((len(rows), len(PREDICTORS)), np.nan)
    x = simulate_field(cfg.tau, cfg.estimation_dims, cfg.dist, _rng(cfg.master_seed, (1, r)))
    target = fixed_target
    if target is None:
        target = simulate_field(cfg.tau, cfg.target_dims, cfg.dist, _rng(cfg.master_seed, (2, r)))
    s = cfg.target_cell
    truth = target.value(*s)
    fexp_cache, ar_cache = {}, {}
    for i, (m, p) in enumerate(rows):
        bw = SmoothingBandwidth(*m)
        try:
            if m not in fexp_cache:
                f = smoothed_spectrum(x, bw, demean=cfg.demean)
                fexp_cache[m] = predict_interior(target, _fexp_from_grid(f, cfg.weighting), s, True).value
            out[i, 0] = (fexp_cache[m] - truth) ** 2
        except (NumericalError, ValidationError) as exc:
            fexp_cache[m] = None
            log.debug("rep %d fexp_periodogram m=%s failed: %s", r, m, exc)
        try:
            if p not in ar_cache:
                ar_cache[p] = ls_fit(x, ARWindow.symmetric(p))
            fit = ar_cache[p]
            out[i, 2] = (ar_predict(target, fit, s, True).value - truth) ** 2
            g = ar_spectrum_grid(fit, bw, x.dims)
            out[i, 1] = (predict_interior(target, _fexp_from_grid(g, cfg.weighting), s, True).value - truth) ** 2
        except (NumericalError, ValidationError) as exc:
            log.debug("rep %d AR p=%d failed: %s", r, p, exc)
    return out


def _chunk(args):
    cfg, lo, hi, target = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return np.stack([_replicate(cfg, r, target) for r in range(lo, hi)])


def run_experiment(cfg: MCConfig) -> RMSEReport:
    """Run all replications and summarise root mean squared prediction error.

    Failed replications are excluded per predictor and counted in the
    ``failures`` column.
    """
    target = None
    if cfg.fixed_target:
        target = simulate_field(cfg.tau, cfg.target_dims, cfg.dist, _rng(cfg.master_seed, (0,)))
    if cfg.workers > 1:
        step = math.ceil(cfg.reps / cfg.workers)
        jobs = [(cfg, lo, min(lo + step, cfg.reps), target) for lo in range(0, cfg.reps, step)]
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            errs = np.concatenate(list(pool.map(_chunk, jobs)))
    else:
        errs = _chunk((cfg, 0, cfg.reps, target))
    report = RMSEReport(provenance={
        "master_seed": cfg.master_seed, "reps": cfg.reps, "fixed_target": cfg.fixed_target,
        "weighting": cfg.weighting, "demean": cfg.demean, "target_cell": list(cfg.target_cell),
        "target_dims": [cfg.target_dims.n1, cfg.target_dims.n2],
    })
    for i, (m, p) in enumerate(cfg.rows()):
        for j, pred in enumerate(PREDICTORS):
            col = errs[:, i, j]
            ok = np.isfinite(col)
            n_ok = int(ok.sum())
            if n_ok < cfg.reps:
                log.warning("%s m=%s p=%d: %d of %d replications failed", pred, m, p, cfg.reps - n_ok, cfg.reps)
            report.rows.append({
                "predictor": pred, "dist": cfg.dist, "tau": cfg.tau, "nstar": cfg.nstar,
                "m1": m[0], "m2": m[1], "p": p,
                "rmse": float(np.sqrt(np.mean(col[ok]))) if n_ok else float("nan"),
                "reps": n_ok, "failures": cfg.reps - n_ok,
            })
    return report


def run_grid(taus, dists, nstar: int, bandwidths, ar_orders, **kwargs) -> RMSEReport:
    """Run :func:`run_experiment` over every (tau, distribution) pair."""
    report = RMSEReport()
    for dist in dists:
        for tau in taus:
            cfg = MCConfig(tau=tau, nstar=nstar, dist=dist, bandwidths=bandwidths, ar_orders=ar_orders, **kwargs)
            part = run_experiment(cfg)
            report.extend(part)
            report.provenance = part.provenance
    return report


def config_from_dict(d: dict) -> dict:
    """Normalise a benchmark JSON config into :func:`run_grid` keyword arguments."""
    d = dict(d)
    taus = d.pop("taus", None) or [d.pop("tau", 0.05)]
    d.pop("tau", None)
    dists = d.pop("dists", None) or [d.pop("dist", "normal")]
    d.pop("dist", None)
    if "target_dims" in d:
        d["target_dims"] = GridDims(*d["target_dims"])
    if "seed" in d:
        d["master_seed"] = d.pop("seed")
    allowed = {f for f in MCConfig.__dataclass_fields__} - {"tau", "dist"}
    unknown = set(d) - allowed
    if unknown:
        raise ValidationError(f"unknown benchmark config keys: {sorted(unknown)}")
    d["taus"], d["dists"] = taus, dists
    return d
