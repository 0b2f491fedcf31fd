"""HTTP/JSON analysis service powering the interactive explorer.

Datasets are uploaded once (JSON or CSV) and analyzed through stateless
endpoints whose numeric payloads equal the in-process library results bit for
bit.  Errors map to 400 for schema problems, 404 for unknown dataset ids, and
422 for numerical failures, always carrying the library error name.
"""

from __future__ import annotations

import argparse
import json
import threading
import uuid
from pathlib import Path
from typing import Any

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import dimred, exploratory, io, registration, smoothing, svgplots
from .basis import BasisSpec, LinearDifferentialOperatorSpec
from .errors import DataError, FdaKitError, NumericalError, SchemaError
from .samples import DiscreteFunctionalSample


class DatasetStore:
    """In-memory dataset registry with optional directory persistence."""

    def __init__(self, data_dir: str | Path | None = None):
        self._lock = threading.RLock()
        self._items: dict[str, Any] = {}
        self._dir = Path(data_dir) if data_dir is not None else None
        if self._dir is not None:
            self._dir.mkdir(parents=True, exist_ok=True)
            for path in sorted(self._dir.glob("*.json")):
                self._items[path.stem] = io.read_json(path)

    def add(self, sample) -> str:
        dataset_id = uuid.uuid4().hex[:12]
        with self._lock:
            self._items[dataset_id] = sample
            if self._dir is not None:
                io.write_json(sample, self._dir / f"{dataset_id}.json")
        return dataset_id

    def get(self, dataset_id: str):
        with self._lock:
            return self._items.get(dataset_id)

    def list_ids(self) -> list[str]:
        with self._lock:
            return list(self._items.keys())


def _summary(sample) -> dict[str, Any]:
    if isinstance(sample, DiscreteFunctionalSample):
        return {
            "n": sample.n_samples,
            "M": sample.n_points,
            "domain": list(sample.domain_range),
            "kind": "grid",
        }
    return {
        "n": sample.n_samples,
        "M": None,
        "domain": list(sample.domain_range),
        "kind": "basis",
    }


def _subsample(sample, max_points: int | None):
    if (
        max_points is None
        or not isinstance(sample, DiscreteFunctionalSample)
        or max_points >= sample.n_points
    ):
        return sample
    if max_points < 2:
        raise SchemaError("max_points must be at least 2")
    idx = np.unique(
        np.round(np.linspace(0, sample.n_points - 1, max_points)).astype(int)
    )
    from dataclasses import replace

    from .samples import Grid

    return replace(
        sample,
        grid=Grid(sample.grid.points[idx], sample.domain_range),
        values=sample.values[:, idx],
    )


def _field(payload: dict, key: str, default=None, required: bool = False):
    if key not in payload or payload[key] is None:
        if required:
            raise SchemaError(f"missing required field {key!r}")
        return default
    return payload[key]


async def _json_body(request: Request, allow_empty: bool = True) -> dict:
    raw = await request.body()
    if not raw:
        if allow_empty:
            return {}
        raise SchemaError("request body must be a JSON object")
    try:
        payload = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON body: {exc}") from None
    if not isinstance(payload, dict):
        raise SchemaError("request body must be a JSON object")
    return payload


def create_app(data_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="fda-kit analysis service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = DatasetStore(data_dir)
    app.state.store = store

    @app.exception_handler(FdaKitError)
    async def _fda_error(request: Request, exc: FdaKitError):
        status = 422 if isinstance(exc, NumericalError) else 400
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    def _not_found(dataset_id: str) -> JSONResponse:
        return JSONResponse(
            status_code=404,
            content={"error": "UnknownDataset", "detail": dataset_id},
        )

    def _grid_dataset(dataset_id: str):
        sample = store.get(dataset_id)
        if sample is None:
            return None
        if not isinstance(sample, DiscreteFunctionalSample):
            raise SchemaError("this analysis needs a grid dataset")
        return sample

    # -- datasets ------------------------------------------------------------

    @app.post("/datasets")
    async def upload(request: Request):
        content_type = request.headers.get("content-type", "")
        raw = await request.body()
        if "csv" in content_type:
            sample = io.parse_csv_text(raw.decode("utf-8"), source="upload")
        else:
            try:
                payload = json.loads(raw) if raw else None
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON body: {exc}") from None
            sample = io.sample_from_jsonable(payload)
        dataset_id = store.add(sample)
        return {"id": dataset_id, "summary": _summary(sample)}

    @app.get("/datasets")
    async def list_datasets():
        return [
            {"id": dataset_id, "summary": _summary(store.get(dataset_id))}
            for dataset_id in store.list_ids()
        ]

    @app.get("/datasets/{dataset_id}")
    async def get_dataset(dataset_id: str, max_points: int | None = None):
        sample = store.get(dataset_id)
        if sample is None:
            return _not_found(dataset_id)
        return io.to_jsonable(_subsample(sample, max_points))

    # -- exploratory analyses ---------------------------------------------------

    @app.post("/analyses/{dataset_id}/depth")
    async def depth(dataset_id: str, request: Request):
        sample = _grid_dataset(dataset_id)
        if sample is None:
            return _not_found(dataset_id)
        payload = await _json_body(request)
        method = _field(payload, "method", default="mbd")
        if method not in ("fm", "bd", "mbd"):
            raise SchemaError(f"unknown depth method {method!r}")
        report = exploratory.compute_depth(sample, method)
        return {"method": report.method, "values": report.values.tolist()}

    @app.post("/analyses/{dataset_id}/boxplot")
    async def boxplot(dataset_id: str, request: Request):
        sample = _grid_dataset(dataset_id)
        if sample is None:
            return _not_found(dataset_id)
        payload = await _json_body(request)
        factor = float(_field(payload, "factor", default=1.5))
        prob = _field(payload, "prob", default=None)
        depth_method = _field(payload, "depth_method", default="mbd")
        if depth_method not in ("fm", "bd", "mbd"):
            raise SchemaError(f"unknown depth method {depth_method!r}")
        try:
            stats = exploratory.boxplot_stats(
                sample, depth_method=depth_method, factor=factor, prob=prob
            )
        except ValueError as exc:
            raise SchemaError(str(exc)) from None
        grid = sample.grid.points.tolist()
        return {
            "grid": grid,
            "median_index": stats.median_index,
            "depths": stats.depths.tolist(),
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
            "prob_envelopes": [
                {"prob": p, "lower": lo.tolist(), "upper": up.tolist()}
                for p, lo, up in stats.prob_envelopes
            ],
            "outlier_flags": stats.outlier_flags.tolist(),
            "factor": stats.factor,
        }

    @app.post("/analyses/{dataset_id}/msplot")
    async def msplot(dataset_id: str, request: Request):
        sample = _grid_dataset(dataset_id)
        if sample is None:
            return _not_found(dataset_id)
        await _json_body(request)
        stats = exploratory.msplot_stats(sample)
        ex, ey = svgplots.ellipse_polyline(stats)
        return {
            "mo": stats.mo.tolist(),
            "vo": stats.vo.tolist(),
            "outlier_flags": stats.outlier_flags.tolist(),
            "center": stats.center.tolist(),
            "scatter": stats.scatter.tolist(),
            "cutoff": stats.cutoff,
            "ellipse": np.column_stack([ex, ey]).tolist(),
        }

    @app.post("/analyses/{dataset_id}/outliergram")
    async def outliergram(dataset_id: str, request: Request):
        sample = _grid_dataset(dataset_id)
        if sample is None:
            return _not_found(dataset_id)
        await _json_body(request)
        stats = exploratory.outliergram_stats(sample)
        px, py = svgplots.parabola_polyline(stats)
        return {
            "mei": stats.mei.tolist(),
            "mbd": stats.mbd.tolist(),
            "parabola": list(stats.parabola),
            "parabola_polyline": np.column_stack([px, py]).tolist(),
            "distances": stats.distances.tolist(),
            "outlier_flags": stats.outlier_flags.tolist(),
        }

    # -- transforming analyses ----------------------------------------------------

    @app.post("/analyses/{dataset_id}/smooth")
    async def smooth(dataset_id: str, request: Request):
        sample = _grid_dataset(dataset_id)
        if sample is None:
            return _not_found(dataset_id)
        payload = await _json_body(request, allow_empty=False)
        method = _field(payload, "method", required=True)
        parameter = _field(payload, "parameter", required=True)
        kernel_kind = _field(payload, "kernel", default="gaussian")
        try:
            if method == "nw":
                spec = smoothing.NadarayaWatson(
                    float(parameter), smoothing.KernelSpec(kernel_kind)
                )
            elif method == "llr":
                spec = smoothing.LocalLinearRegression(
                    float(parameter), smoothing.KernelSpec(kernel_kind)
                )
            elif method == "knn":
                spec = smoothing.KNeighbors(int(parameter))
            elif method == "basis":
                basis = BasisSpec(
                    kind=_field(payload, "basis_kind", default="bspline"),
                    n_basis=int(_field(payload, "n_basis", default=10)),
                    domain_range=sample.domain_range,
                )
                spec = smoothing.BasisSmoother(
                    basis=basis,
                    lam=float(parameter),
                    operator=LinearDifferentialOperatorSpec.derivative(
                        int(_field(payload, "operator_order", default=2))
                    ),
                )
            else:
                raise SchemaError(f"unknown smoothing method {method!r}")
        except ValueError as exc:
            raise SchemaError(str(exc)) from None
        result = smoothing.smooth(spec, sample)
        new_id = store.add(result)
        return {
            "id": new_id,
            "summary": _summary(result),
            "diagnostics": {"method": method, "parameter": parameter},
        }

    @app.post("/analyses/{dataset_id}/register")
    async def register(dataset_id: str, request: Request):
        sample = _grid_dataset(dataset_id)
        if sample is None:
            return _not_found(dataset_id)
        payload = await _json_body(request)
        method = _field(payload, "method", default="elastic")
        diagnostics: dict[str, Any] = {"method": method}
        if method == "shift":
            res = registration.least_squares_shift_register(
                sample,
                max_iter=int(_field(payload, "max_iter", default=20)),
                tol=_field(payload, "tol", default=None),
            )
            registered = res.registered
            diagnostics["deltas"] = res.shifts.deltas.tolist()
            diagnostics["converged"] = res.converged
        elif method == "landmark-shift":
            marks = np.asarray(
                _field(payload, "landmarks", required=True), dtype=float
            ).ravel()
            target = _field(payload, "target", default=None)
            shifts = registration.landmark_shift_deltas(marks, target)
            registered = registration.shift(sample, shifts)
            diagnostics["deltas"] = shifts.deltas.tolist()
        elif method == "landmark-elastic":
            marks = np.atleast_2d(
                np.asarray(_field(payload, "landmarks", required=True), dtype=float)
            )
            res = registration.landmark_elastic_register(
                sample, marks, _field(payload, "targets", default=None)
            )
            registered = res.registered
            diagnostics["warpings"] = res.warping.functions.values.tolist()
        elif method == "elastic":
            res = registration.elastic_register(
                sample,
                max_iter=int(_field(payload, "max_iter", default=20)),
                tol=float(_field(payload, "tol", default=1e-4)),
            )
            registered = res.registered
            diagnostics["warpings"] = res.warping.functions.values.tolist()
            diagnostics["converged"] = res.converged
        else:
            raise SchemaError(f"unknown registration method {method!r}")
        new_id = store.add(registered)
        return {"id": new_id, "summary": _summary(registered), "diagnostics": diagnostics}

    @app.post("/analyses/{dataset_id}/fpca")
    async def fpca(dataset_id: str, request: Request):
        sample = _grid_dataset(dataset_id)
        if sample is None:
            return _not_found(dataset_id)
        payload = await _json_body(request, allow_empty=False)
        n_components = int(_field(payload, "n_components", required=True))
        lam = float(_field(payload, "lambda", default=0.0))
        model = dimred.fpca_fit(sample, n_components, lam=lam)
        scores = dimred.fpca_transform(model, sample)
        reconstruction = dimred.fpca_inverse(model, scores)
        new_id = store.add(reconstruction)
        return {
            "id": new_id,
            "summary": _summary(reconstruction),
            "diagnostics": {
                "eigenvalues": model.eigenvalues.tolist(),
                "mean": model.mean.tolist(),
                "components": model.components.tolist(),
                "scores": scores.tolist(),
            },
        }

    return app


def main(argv: list[str] | None = None) -> None:
    import uvicorn

    parser = argparse.ArgumentParser(prog="fda-kit-service", description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--data-dir", default=None)
    args = parser.parse_args(argv)
    uvicorn.run(create_app(args.data_dir), host=args.host, port=args.port)


if __name__ == "__main__":
    main()
