"""Command-line interface.

Exit status is 0 on success, 2 for invalid input and 3 for numerical
failures (singular fit, spectral pole, overflow cap, asymmetric transfer).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .autoreg import ARWindow, ls_fit, order_select
from .cepstrum import (
    ar_coeffs,
    cepstral_coeffs,
    format_field_csv,
    ma_coeffs,
    read_field_csv,
    transfer_grid,
)
from .errors import NumericalError, ValidationError
from .ingest import ORIENTATION_NOTE, GridSpec, grid_points, read_points_csv
from .lattice import GridDims, HalfPlaneOrder, HalfPlaneWindow, format_lattice_csv, read_lattice_csv
from .montecarlo import DISTRIBUTIONS, RMSEReport, config_from_dict, run_grid, simulate_field
from .predict import choose_ordering, fexp_field, predict
from .autoreg import ar_predict
from .spectral import SmoothingBandwidth, format_spectrum_csv, read_spectrum_csv, smoothed_spectrum

log = logging.getLogger("latticepred")


def _ints(text: str, n: int, what: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise ValidationError(f"{what} must be {n} comma-separated integers, got {text!r}") from None
    if len(vals) != n:
        raise ValidationError(f"{what} must be {n} comma-separated integers, got {text!r}")
    return vals


def _floats(text: str, n: int, what: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ValidationError(f"{what} must be {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n:
        raise ValidationError(f"{what} must be {n} comma-separated numbers, got {text!r}")
    return vals


def _emit(args, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, default=str)


# ----------------------------------------------------------------- commands


def cmd_grid(args):
    lat0, lat1, lon0, lon1 = _floats(args.bbox, 4, "--bbox")
    rows, cols = _ints(args.shape, 2, "--shape")
    spec = GridSpec(lat0, lat1, lon0, lon1, rows, cols)
    x = grid_points(read_points_csv(args.points), spec)
    if args.format == "json":
        return _json({"rows": rows, "cols": cols, "orientation": ORIENTATION_NOTE,
                      "values": np.where(x.mask_grid, x.grid, np.nan).tolist(), "missing": x.n_missing})
    return format_lattice_csv(x, [ORIENTATION_NOTE, f"bbox {args.bbox}", f"missing {x.n_missing}"])


def _spectrum(args):
    x = read_lattice_csv(args.lattice)
    bw = SmoothingBandwidth(*_ints(args.bandwidth, 2, "--bandwidth"))
    return smoothed_spectrum(x, bw, demean=args.demean, warn=True)


def cmd_spectrum(args):
    f = _spectrum(args)
    if args.format == "json":
        return _json({"m": [f.bandwidth.m1, f.bandwidth.m2], "M": [f.M1, f.M2],
                      "values": [[k1, k2, v] for k1, k2, v in f.half()]})
    return format_spectrum_csv(f)


def cmd_cepstrum(args):
    if args.spectrum:
        f = read_spectrum_csv(args.spectrum)
    elif args.lattice and args.bandwidth:
        f = _spectrum(args)
    else:
        raise ValidationError("cepstrum needs --spectrum, or --lattice with --bandwidth")
    window = HalfPlaneWindow(f.M1, f.M2, HalfPlaneOrder.parse(args.order))
    c = cepstral_coeffs(f, window, args.weighting)
    field = {"cepstrum": lambda: c, "ar": lambda: ar_coeffs(transfer_grid(c)), "ma": lambda: ma_coeffs(c)}[args.kind]()
    if args.format == "json":
        vals = field.alphas if args.kind == "cepstrum" else field.coeffs
        out = {"M": [f.M1, f.M2], "order": window.order.value, "kind": args.kind,
               "coeffs": [[int(a), int(b), float(v)] for (a, b), v in zip(window.indices(), vals)]}
        if args.kind == "cepstrum":
            out["alpha0"] = c.alpha0
        return _json(out)
    return format_field_csv(field)


def cmd_predict(args):
    x = read_lattice_csv(args.lattice)
    s = _ints(args.target, 2, "--target")
    if args.coeffs:
        a = read_field_csv(args.coeffs, "ar")
        order = a.order if args.order == "auto" and x.dims.contains(s) else (
            choose_ordering(s, x.dims) if args.order == "auto" else HalfPlaneOrder.parse(args.order))
        if order is not a.order:
            raise ValidationError(f"coefficients are in {a.order.value} order but the target needs {order.value}")
        res = predict(x, a, s, allow_observed=args.allow_observed)
    elif args.bandwidth:
        bw = SmoothingBandwidth(*_ints(args.bandwidth, 2, "--bandwidth"))
        window = HalfPlaneWindow(*bw.lags(x.dims)) if x.fully_observed else None
        if args.order == "auto":
            order = choose_ordering(s, x.dims, x.mask_grid, window)
        else:
            order = HalfPlaneOrder.parse(args.order)
        a = fexp_field(x, bw, order, weighting=args.weighting, demean=args.demean)
        res = predict(x, a, s, allow_observed=args.allow_observed)
    elif args.window:
        order = choose_ordering(s, x.dims) if args.order == "auto" else HalfPlaneOrder.parse(args.order)
        fit = ls_fit(x, ARWindow(*_ints(args.window, 4, "--window"), order))
        res = ar_predict(x, fit, s, allow_observed=args.allow_observed)
    else:
        raise ValidationError("predict needs one of --coeffs, --bandwidth or --window")
    return _json({"target": list(s), "value": res.value, "order": res.order.value,
                  "used_recursion": res.used_recursion, "zero_filled_count": res.zero_filled_count,
                  "recursed_cells": res.recursed_cells})


def cmd_ar_fit(args):
    x = read_lattice_csv(args.lattice)
    fit = ls_fit(x, ARWindow(*_ints(args.window, 4, "--window"), args.order))
    if args.format == "csv":
        lines = ["k1,k2,coeff"] + [f"{a},{b},{v!r}" for a, b, v in fit.as_dict()["coeffs"]]
        lines.append(f"# sigma2={fit.sigma2!r} n_p={fit.n_p}")
        return "\n".join(lines)
    return _json(fit.as_dict())


def _read_candidates(path, order):
    out = []
    for ln in Path(path).read_text().splitlines():
        ln = ln.split("#", 1)[0].strip()
        if ln:
            out.append(ARWindow(*_ints(ln, 4, "candidate window"), order))
    return out


def cmd_order_select(args):
    x = read_lattice_csv(args.lattice)
    chosen, table = order_select(x, _read_candidates(args.candidates, args.order), args.criterion)
    rows = [{**r, "window": r["window"].label()} for r in table]
    if args.format == "csv":
        lines = ["window,h,n_p,sigma2,bic,fpe"] + [
            f"\"{r['window']}\",{r['h']},{r['n_p']},{r['sigma2']!r},{r['bic']!r},{r['fpe']!r}" for r in rows
        ]
        lines.append(f"# chosen {chosen.label()} by {args.criterion}")
        return "\n".join(lines)
    return _json({"criterion": args.criterion, "chosen": chosen.label(), "table": rows})


def cmd_benchmark(args):
    cfg = json.loads(Path(args.config).read_text())
    if args.seed is not None:
        cfg["seed"] = args.seed
    kw = config_from_dict(cfg)
    report: RMSEReport = run_grid(kw.pop("taus"), kw.pop("dists"), **kw)
    report.provenance["failures"] = {
        f"{r['predictor']}|{r['dist']}|{r['tau']}|{r['m1']},{r['m2']}|{r['p']}": r["failures"]
        for r in report.rows if r["failures"]
    }
    if args.format == "json":
        return report.to_json()
    return report.to_csv() + "\n" + _json(report.provenance)


def cmd_simulate(args):
    n1, n2 = _ints(args.shape, 2, "--shape")
    rng = np.random.default_rng(np.random.SeedSequence(args.seed if args.seed is not None else 0))
    x = simulate_field(args.tau, GridDims(n1, n2), args.dist, rng)
    if args.format == "json":
        return _json({"rows": n1, "cols": n2, "values": x.grid.tolist()})
    return format_lattice_csv(x, [f"tau={args.tau} dist={args.dist} seed={args.seed}"])


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master random seed")
    common.add_argument("--output", "-o", default=argparse.SUPPRESS, help="write output to this file")
    common.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)
    common.add_argument("--verbose", "-v", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="latticepred", description=__doc__.splitlines()[0], parents=[common])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("grid", parents=[common], help="aggregate lat,lon,value points onto a lattice")
    g.add_argument("--points", required=True)
    g.add_argument("--bbox", required=True, help="lat_min,lat_max,lon_min,lon_max")
    g.add_argument("--shape", required=True, help="rows,cols")
    g.set_defaults(func=cmd_grid)

    def lattice_spectrum_opts(q, required=True):
        q.add_argument("--lattice", required=required)
        q.add_argument("--bandwidth", required=required, help="m1,m2")
        q.add_argument("--demean", choices=("mean", "taper", "none"), default="mean")

    s = sub.add_parser("spectrum", parents=[common], help="smoothed tapered periodogram on the coarse grid")
    lattice_spectrum_opts(s)
    s.set_defaults(func=cmd_spectrum)

    c = sub.add_parser("cepstrum", parents=[common], help="cepstral, AR or MA coefficients")
    lattice_spectrum_opts(c, required=False)
    c.add_argument("--spectrum", help="spectrum CSV instead of --lattice/--bandwidth")
    c.add_argument("--order", default="row")
    c.add_argument("--kind", choices=("cepstrum", "ar", "ma"), default="cepstrum")
    c.add_argument("--weighting", choices=("symmetric", "literal"), default="symmetric")
    c.set_defaults(func=cmd_cepstrum)

    pr = sub.add_parser("predict", parents=[common], help="predict one cell")
    pr.add_argument("--lattice", required=True)
    src = pr.add_mutually_exclusive_group(required=True)
    src.add_argument("--coeffs", help="AR coefficient CSV")
    src.add_argument("--bandwidth", help="fit the cepstral predictor with bandwidth m1,m2")
    src.add_argument("--window", help="fit a least-squares AR with window pL1,pU1,pL2,pU2")
    pr.add_argument("--target", required=True, help="r,c (1-based)")
    pr.add_argument("--order", default="auto", help="row, col or auto")
    pr.add_argument("--weighting", choices=("symmetric", "literal"), default="symmetric")
    pr.add_argument("--demean", choices=("mean", "taper", "none"), default="mean")
    pr.add_argument("--allow-observed", action="store_true")
    pr.set_defaults(func=cmd_predict)

    a = sub.add_parser("ar-fit", parents=[common], help="least-squares half-plane autoregression")
    a.add_argument("--lattice", required=True)
    a.add_argument("--window", required=True, help="pL1,pU1,pL2,pU2")
    a.add_argument("--order", default="row")
    a.set_defaults(func=cmd_ar_fit)

    o = sub.add_parser("order-select", parents=[common], help="choose an AR window by BIC or FPE")
    o.add_argument("--lattice", required=True)
    o.add_argument("--candidates", required=True, help="file with one pL1,pU1,pL2,pU2 per line")
    o.add_argument("--criterion", choices=("bic", "fpe"), default="bic")
    o.add_argument("--order", default="row")
    o.set_defaults(func=cmd_order_select)

    b = sub.add_parser("benchmark", parents=[common], help="Monte Carlo RMSE table")
    b.add_argument("--config", required=True, help="JSON experiment configuration")
    b.set_defaults(func=cmd_benchmark)

    sm = sub.add_parser("simulate", parents=[common], help="draw a field from the benchmark model")
    sm.add_argument("--tau", type=float, required=True)
    sm.add_argument("--shape", required=True, help="n1,n2")
    sm.add_argument("--dist", choices=DISTRIBUTIONS, default="normal")
    sm.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, default in (("seed", None), ("output", None), ("format", None), ("verbose", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    if args.format is None:
        args.format = "json" if args.command in ("predict", "ar-fit", "order-select") else "csv"
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        _emit(args, args.func(args))
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
