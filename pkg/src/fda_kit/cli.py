"""Batch command-line front end.

Datasets come in as CSV or canonical JSON, results go out as JSON on stdout
(or ``--out``); the ``plot`` subcommand writes static SVG.  The CLI adds no
numerics of its own: every result is the corresponding library call,
serialized with round-trip float formatting.

Exit codes: 0 success, 1 usage error, 2 data/parse error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dimred, exploratory, io, registration, simulate, smoothing, svgplots
from .basis import BasisFunctionalSample, BasisSpec, LinearDifferentialOperatorSpec
from .errors import DataError, FdaKitError, NumericalError
from .samples import DiscreteFunctionalSample


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # noqa: A003 - argparse API
        raise _UsageError(message)


def _load_dataset(path: str):
    p = Path(path)
    if not p.exists():
        raise DataError(f"input file not found: {path}")
    if p.suffix.lower() == ".csv":
        return io.read_csv(p)
    return io.read_json(p)


def _require_grid(sample) -> DiscreteFunctionalSample:
    if not isinstance(sample, DiscreteFunctionalSample):
        raise DataError("this command needs a grid dataset (kind 'grid')")
    return sample


def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj)
    if out is None:
        sys.stdout.write(text + "\n")
    else:
        Path(out).write_text(text + "\n", encoding="utf-8")


def _emit_dataset(sample, out: str | None) -> None:
    if out is not None and Path(out).suffix.lower() == ".csv":
        io.write_csv(_require_grid(sample), out)
        return
    _emit(io.to_jsonable(sample), out)


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise _UsageError(f"expected a comma-separated list of numbers: {text!r}")


def _parse_labels(text: str) -> list[str]:
    if text.startswith("@"):
        try:
            loaded = json.loads(Path(text[1:]).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise DataError(f"labels file not found: {text[1:]}")
        except json.JSONDecodeError as exc:
            raise DataError(f"labels file is not valid JSON: {exc}")
        return [str(x) for x in loaded]
    return [tok.strip() for tok in text.split(",") if tok.strip() != ""]


def _parse_landmarks(text: str) -> np.ndarray:
    if text.startswith("@"):
        try:
            loaded = json.loads(Path(text[1:]).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise DataError(f"landmarks file not found: {text[1:]}")
        except json.JSONDecodeError as exc:
            raise DataError(f"landmarks file is not valid JSON: {exc}")
        return np.atleast_2d(np.asarray(loaded, dtype=float))
    rows = [r for r in text.split(";") if r.strip() != ""]
    return np.atleast_2d(np.asarray([_parse_floats(r) for r in rows], dtype=float))


# -- subcommand runners ---------------------------------------------------------


def _run_simulate(args) -> None:
    if args.generator == "gp":
        spec = simulate.CovarianceKernelSpec(
            kind=args.kernel,
            variance=args.variance,
            length_scale=args.length_scale,
            nu=args.nu,
            bias=args.bias,
            slope=args.slope,
            degree=args.degree,
        )
        sample = simulate.make_gaussian_process(
            args.n, args.points, args.mean, spec, seed=args.seed
        )
    else:
        sample = simulate.make_multimodal_samples(
            args.n,
            n_modes=args.modes,
            noise_sd=args.noise_sd,
            seed=args.seed,
            n_points=args.points,
            location_jitter=args.jitter,
            width=args.width,
        )
    _emit_dataset(sample, args.out)


def _smoother_family(args, sample):
    kernel = smoothing.KernelSpec(args.kernel)
    if args.method == "nw":
        return smoothing.NadarayaWatson(bandwidth=1.0, kernel=kernel)
    if args.method == "llr":
        return smoothing.LocalLinearRegression(bandwidth=1.0, kernel=kernel)
    if args.method == "knn":
        return smoothing.KNeighbors(k=1)
    basis = BasisSpec(
        kind=args.basis_kind, n_basis=args.n_basis, domain_range=sample.domain_range
    )
    operator = LinearDifferentialOperatorSpec.derivative(args.operator_order)
    return smoothing.BasisSmoother(basis=basis, lam=0.0, operator=operator)


def _run_smooth(args) -> None:
    sample = _require_grid(_load_dataset(args.input))
    family = _smoother_family(args, sample)
    params = _parse_floats(args.param)
    if not params:
        raise _UsageError("--param needs at least one value")
    if args.method == "knn":
        params = [int(p) for p in params]
    diagnostics: dict = {"method": args.method}
    if len(params) == 1 and args.search is None:
        spec = family.with_parameter(params[0])
        result = smoothing.smooth(spec, sample)
        diagnostics["parameter"] = params[0]
    else:
        scorer = smoothing.ScorerSpec(
            kind=args.search or "gcv",
            penalty=smoothing.PenaltyFunctionSpec(args.penalty),
        )
        search = smoothing.parameter_search(family, params, scorer, sample)
        result = smoothing.smooth(search.spec, sample)
        diagnostics["parameter"] = search.parameter
        diagnostics["score"] = search.score
        diagnostics["scores"] = [
            {"parameter": e.parameter, "score": e.score, "error": e.error}
            for e in search.table
        ]
    _emit({"dataset": io.to_jsonable(result), "diagnostics": diagnostics}, args.out)


def _run_register(args) -> None:
    sample = _require_grid(_load_dataset(args.input))
    diagnostics: dict = {"method": args.method}
    if args.method == "shift":
        result = registration.least_squares_shift_register(
            sample, max_iter=args.max_iter, tol=args.tol
        )
        registered = result.registered
        diagnostics["deltas"] = result.shifts.deltas.tolist()
        diagnostics["converged"] = result.converged
    elif args.method == "landmark-shift":
        if args.landmarks is None:
            raise _UsageError("--landmarks is required for landmark methods")
        marks = _parse_landmarks(args.landmarks)
        if marks.shape[1] != 1:
            raise _UsageError("landmark-shift uses exactly one landmark per curve")
        target = args.target[0] if args.target else None
        shifts = registration.landmark_shift_deltas(marks[:, 0], target)
        registered = registration.shift(sample, shifts)
        diagnostics["deltas"] = shifts.deltas.tolist()
    elif args.method == "landmark-elastic":
        if args.landmarks is None:
            raise _UsageError("--landmarks is required for landmark methods")
        marks = _parse_landmarks(args.landmarks)
        result = registration.landmark_elastic_register(sample, marks, args.target)
        registered = result.registered
        diagnostics["warpings"] = result.warping.functions.values.tolist()
    else:  # elastic
        result = registration.elastic_register(
            sample, max_iter=args.max_iter, tol=args.tol if args.tol else 1e-4
        )
        registered = result.registered
        diagnostics["warpings"] = result.warping.functions.values.tolist()
        diagnostics["converged"] = result.converged
        diagnostics["n_iterations"] = result.n_iterations
    _emit({"dataset": io.to_jsonable(registered), "diagnostics": diagnostics}, args.out)


def _run_fpca(args) -> None:
    sample = _require_grid(_load_dataset(args.input))
    operator = LinearDifferentialOperatorSpec.derivative(args.operator_order)
    model = dimred.fpca_fit(sample, args.components, lam=args.lam, operator=operator)
    scores = dimred.fpca_transform(model, sample)
    _emit(
        {
            "grid": model.grid.points.tolist(),
            "mean": model.mean.tolist(),
            "components": model.components.tolist(),
            "eigenvalues": model.eigenvalues.tolist(),
            "scores": scores.tolist(),
        },
        args.out,
    )


def _run_select(args) -> None:
    sample = _require_grid(_load_dataset(args.input))
    labels = _parse_labels(args.labels)
    if args.method == "mrmr":
        result = dimred.mrmr_select(sample, labels, args.n_features)
    elif args.method == "rkhs":
        result = dimred.rkhs_variable_selection(sample, labels, args.n_features)
    elif args.method == "mh":
        result = dimred.maxima_hunting(
            sample, labels, n_features=args.n_features, window=args.window
        )
    else:  # rmh
        result = dimred.recursive_maxima_hunting(
            sample, labels, max_features=args.n_features,
            dependence_threshold=args.threshold,
        )
    _emit(
        {
            "method": args.method,
            "selected_points": result.selected_points.tolist(),
            "selected_indices": result.selected_indices.tolist(),
            "scores": result.scores.tolist(),
        },
        args.out,
    )


def _run_stats(args) -> None:
    sample = _load_dataset(args.input)
    if args.stat == "mean":
        _emit_dataset(exploratory.sample_mean(sample), args.out)
        return
    if args.stat == "var":
        _emit_dataset(exploratory.sample_variance(sample), args.out)
        return
    if args.stat == "cov":
        surface = exploratory.sample_covariance(sample)
        _emit(
            {"points": surface.points.tolist(), "matrix": surface.matrix.tolist()},
            args.out,
        )
        return
    grid_sample = _require_grid(sample)
    if args.stat == "median":
        _emit_dataset(exploratory.depth_based_median(grid_sample, args.depth), args.out)
    elif args.stat == "geometric-median":
        _emit_dataset(exploratory.geometric_median(grid_sample).curve, args.out)
    else:  # trimmed-mean
        _emit_dataset(
            exploratory.trimmed_mean(grid_sample, args.proportion, args.depth), args.out
        )


def _run_depth(args) -> None:
    sample = _require_grid(_load_dataset(args.input))
    report = exploratory.compute_depth(sample, args.method)
    _emit({"method": report.method, "values": report.values.tolist()}, args.out)


def _run_outliers(args) -> None:
    sample = _require_grid(_load_dataset(args.input))
    if args.method == "boxplot":
        stats = exploratory.boxplot_stats(
            sample, depth_method=args.depth, factor=args.factor, prob=args.prob
        )
        _emit(
            {
                "method": "boxplot",
                "outlier_flags": stats.outlier_flags.tolist(),
                "median_index": stats.median_index,
                "central": {
                    "lower": stats.central_lower.tolist(),
                    "upper": stats.central_upper.tolist(),
                },
                "fences": {
                    "lower": stats.fence_lower.tolist(),
                    "upper": stats.fence_upper.tolist(),
                },
                "non_outlying": {
                    "lower": stats.non_outlying_lower.tolist(),
                    "upper": stats.non_outlying_upper.tolist(),
                },
                "factor": stats.factor,
            },
            args.out,
        )
    elif args.method == "msplot":
        stats = exploratory.msplot_stats(sample)
        _emit(
            {
                "method": "msplot",
                "mo": stats.mo.tolist(),
                "vo": stats.vo.tolist(),
                "outlier_flags": stats.outlier_flags.tolist(),
                "center": stats.center.tolist(),
                "scatter": stats.scatter.tolist(),
                "cutoff": stats.cutoff,
            },
            args.out,
        )
    else:  # outliergram
        stats = exploratory.outliergram_stats(sample)
        _emit(
            {
                "method": "outliergram",
                "mei": stats.mei.tolist(),
                "mbd": stats.mbd.tolist(),
                "parabola": list(stats.parabola),
                "distances": stats.distances.tolist(),
                "outlier_flags": stats.outlier_flags.tolist(),
            },
            args.out,
        )


def _run_plot(args) -> None:
    if args.out is None:
        raise _UsageError("plot requires --out <file.svg>")
    sample = _require_grid(_load_dataset(args.input))
    if args.kind == "curves":
        svg = svgplots.plot_curves(sample)
    elif args.kind == "boxplot":
        stats = exploratory.boxplot_stats(
            sample, depth_method=args.depth, factor=args.factor, prob=args.prob
        )
        svg = svgplots.plot_boxplot(sample, stats)
    elif args.kind == "msplot":
        svg = svgplots.plot_msplot(exploratory.msplot_stats(sample))
    elif args.kind == "outliergram":
        svg = svgplots.plot_outliergram(exploratory.outliergram_stats(sample))
    else:  # fpca-perturbation
        model = dimred.fpca_fit(sample, args.components)
        svg = svgplots.plot_fpca_perturbation(model, args.multiple)
    Path(args.out).write_text(svg, encoding="utf-8")


# -- parser -----------------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="fda-kit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate synthetic datasets")
    sim.add_argument("generator", choices=["gp", "multimodal"])
    sim.add_argument("--n", type=int, default=15)
    sim.add_argument("--points", type=int, default=100)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out")
    sim.add_argument(
        "--kernel", default="brownian",
        choices=["brownian", "exponential", "gaussian", "matern", "polynomial"],
    )
    sim.add_argument("--variance", type=float, default=1.0)
    sim.add_argument("--length-scale", type=float, default=1.0)
    sim.add_argument("--nu", type=float, default=1.5)
    sim.add_argument("--bias", type=float, default=0.0)
    sim.add_argument("--slope", type=float, default=1.0)
    sim.add_argument("--degree", type=int, default=1)
    sim.add_argument("--mean", type=float, default=0.0)
    sim.add_argument("--modes", type=int, default=2)
    sim.add_argument("--noise-sd", type=float, default=0.0)
    sim.add_argument("--jitter", type=float, default=0.05)
    sim.add_argument("--width", type=float, default=0.05)
    sim.set_defaults(run=_run_simulate)

    smo = sub.add_parser("smooth", help="kernel or basis smoothing")
    smo.add_argument("--input", required=True)
    smo.add_argument("--method", required=True, choices=["nw", "llr", "knn", "basis"])
    smo.add_argument("--param", required=True,
                     help="parameter value, or comma list of candidates")
    smo.add_argument("--kernel", default="gaussian",
                     choices=["gaussian", "uniform", "epanechnikov"])
    smo.add_argument("--search", choices=["loo", "gcv"])
    smo.add_argument("--penalty", default="default",
                     choices=["default", "akaike", "shibata"])
    smo.add_argument("--basis-kind", default="bspline",
                     choices=["bspline", "fourier", "monomial"])
    smo.add_argument("--n-basis", type=int, default=10)
    smo.add_argument("--operator-order", type=int, default=2)
    smo.add_argument("--out")
    smo.set_defaults(run=_run_smooth)

    reg = sub.add_parser("register", help="curve alignment")
    reg.add_argument("--input", required=True)
    reg.add_argument("--method", required=True,
                     choices=["shift", "landmark-shift", "landmark-elastic", "elastic"])
    reg.add_argument("--landmarks",
                     help="rows separated by ';', values by ',' (or @file.json)")
    reg.add_argument("--target", type=float, nargs="*", default=None)
    reg.add_argument("--max-iter", type=int, default=20)
    reg.add_argument("--tol", type=float, default=None)
    reg.add_argument("--out")
    reg.set_defaults(run=_run_register)

    fp = sub.add_parser("fpca", help="functional principal components")
    fp.add_argument("--input", required=True)
    fp.add_argument("--components", type=int, required=True)
    fp.add_argument("--lambda", dest="lam", type=float, default=0.0)
    fp.add_argument("--operator-order", type=int, default=2)
    fp.add_argument("--out")
    fp.set_defaults(run=_run_fpca)

    sel = sub.add_parser("select", help="variable selection")
    sel.add_argument("--input", required=True)
    sel.add_argument("--method", required=True, choices=["mrmr", "rkhs", "mh", "rmh"])
    sel.add_argument("--labels", required=True,
                     help="comma list of class labels (or @file.json)")
    sel.add_argument("--n-features", type=int, default=3)
    sel.add_argument("--threshold", type=float, default=0.1)
    sel.add_argument("--window", type=int, default=1)
    sel.add_argument("--out")
    sel.set_defaults(run=_run_select)

    st = sub.add_parser("stats", help="summary and robust statistics")
    st.add_argument("stat", choices=["mean", "var", "cov", "median",
                                     "geometric-median", "trimmed-mean"])
    st.add_argument("--input", required=True)
    st.add_argument("--depth", default="mbd", choices=["fm", "bd", "mbd"])
    st.add_argument("--proportion", type=float, default=0.1)
    st.add_argument("--out")
    st.set_defaults(run=_run_stats)

    dep = sub.add_parser("depth", help="functional depths")
    dep.add_argument("--input", required=True)
    dep.add_argument("--method", required=True, choices=["fm", "bd", "mbd"])
    dep.add_argument("--out")
    dep.set_defaults(run=_run_depth)

    out = sub.add_parser("outliers", help="outlier detection statistics")
    out.add_argument("--input", required=True)
    out.add_argument("--method", required=True,
                     choices=["boxplot", "msplot", "outliergram"])
    out.add_argument("--depth", default="mbd", choices=["fm", "bd", "mbd"])
    out.add_argument("--factor", type=float, default=1.5)
    out.add_argument("--prob", type=float, nargs="*", default=None)
    out.add_argument("--out")
    out.set_defaults(run=_run_outliers)

    pl = sub.add_parser("plot", help="static SVG plots")
    pl.add_argument("kind", choices=["curves", "boxplot", "msplot", "outliergram",
                                     "fpca-perturbation"])
    pl.add_argument("--input", required=True)
    pl.add_argument("--out", required=False)
    pl.add_argument("--depth", default="mbd", choices=["fm", "bd", "mbd"])
    pl.add_argument("--factor", type=float, default=1.5)
    pl.add_argument("--prob", type=float, nargs="*", default=None)
    pl.add_argument("--components", type=int, default=1)
    pl.add_argument("--multiple", type=float, default=None)
    pl.set_defaults(run=_run_plot)

    return parser


def _report(kind: str, message: str) -> None:
    line = " ".join(str(message).split()) or kind
    sys.stderr.write(f"fda-kit: error: {kind}: {line}\n")


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        args.run(args)
        return 0
    except _UsageError as exc:
        _report("usage", str(exc))
        return 1
    except (DataError, FileNotFoundError) as exc:
        _report(type(exc).__name__, str(exc))
        return 2
    except NumericalError as exc:
        _report(type(exc).__name__, str(exc))
        return 3
    except FdaKitError as exc:  # anything uncategorized counts as data trouble
        _report(type(exc).__name__, str(exc))
        return 2
    except ValueError as exc:
        _report("usage", str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
