"""Dataset serialization: CSV for grid samples, canonical JSON for both kinds.

Floats are written with shortest round-trip formatting, so write-then-read
reproduces every value bit for bit.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

import numpy as np

from .basis import BasisFunctionalSample, BasisSpec
from .errors import ParseError, SchemaError
from .samples import DiscreteFunctionalSample, build_discrete_sample

FunctionalSample = DiscreteFunctionalSample | BasisFunctionalSample

_BASIS_KINDS = ("constant", "monomial", "bspline", "fourier")


# -- CSV -------------------------------------------------------------------------


def write_csv(sample: DiscreteFunctionalSample, path: str | Path) -> None:
    """Grid sample to CSV: header `t,<t1>,...`; one row per curve."""
    if not isinstance(sample, DiscreteFunctionalSample):
        raise SchemaError("CSV serialization handles grid samples only")
    def fmt(x) -> str:
        return repr(float(x))  # shortest representation that round-trips

    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([sample.argument_name or "t", *map(fmt, sample.grid.points)])
        for i, row in enumerate(sample.values):
            writer.writerow([str(i), *map(fmt, row)])


def read_csv(path: str | Path) -> DiscreteFunctionalSample:
    """Parse the CSV layout written by :func:`write_csv`."""
    with open(path, newline="", encoding="utf-8") as handle:
        return _parse_csv_rows(list(csv.reader(handle)), str(path))


def parse_csv_text(text: str, source: str = "<body>") -> DiscreteFunctionalSample:
    """Parse CSV content held in a string (e.g. an HTTP upload body)."""
    return _parse_csv_rows(list(csv.reader(text.splitlines())), source)


def _parse_csv_rows(rows: list[list[str]], path: str) -> DiscreteFunctionalSample:
    rows = [row for row in rows if row]  # a trailing newline is not a data row
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = rows[0]
    if len(header) < 3:
        raise ParseError(f"{path}: header needs at least two grid points")
    try:
        points = [float(cell) for cell in header[1:]]
    except ValueError as exc:
        raise ParseError(f"{path}: header row: {exc}") from None
    if len(rows) < 2:
        raise ParseError(f"{path}: no data rows")
    values = []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(
                f"{path}: row {r} has {len(row)} columns, expected {len(header)}"
            )
        parsed = []
        for c, cell in enumerate(row[1:], start=2):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise ParseError(
                    f"{path}: row {r}, column {c}: not a number: {cell!r}"
                ) from None
        values.append(parsed)
    return build_discrete_sample(points, values, argument_name=header[0] or "t")


# -- canonical JSON ----------------------------------------------------------------


def to_jsonable(sample: FunctionalSample) -> dict[str, Any]:
    """Canonical wire-format dictionary for a functional sample."""
    names = {
        "name": sample.name,
        "argument": sample.argument_name,
        "coordinate": sample.coordinate_name,
    }
    if isinstance(sample, DiscreteFunctionalSample):
        return {
            "kind": "grid",
            "domain": list(sample.domain_range),
            "grid": sample.grid.points.tolist(),
            "values": sample.values.tolist(),
            "basis": None,
            "coefficients": None,
            "names": names,
        }
    spec = sample.basis
    return {
        "kind": "basis",
        "domain": list(spec.domain_range),
        "grid": None,
        "values": None,
        "basis": {
            "kind": spec.kind,
            "n_basis": spec.n_basis,
            "order": spec.order if spec.kind == "bspline" else None,
            "knots": list(spec.knots) if spec.kind == "bspline" else None,
            "period": spec.period if spec.kind == "fourier" else None,
        },
        "coefficients": sample.coefficients.tolist(),
        "names": names,
    }


def _names_from(obj: dict[str, Any]) -> dict[str, str]:
    names = obj.get("names") or {}
    if not isinstance(names, dict):
        raise SchemaError("names must be an object")
    return {
        "name": str(names.get("name", "")),
        "argument_name": str(names.get("argument", "t")),
        "coordinate_name": str(names.get("coordinate", "x(t)")),
    }


def _require_matrix(obj: Any, what: str) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    if arr.ndim != 2:
        raise SchemaError(f"{what} must be a matrix (list of equal-length rows)")
    return arr


def sample_from_jsonable(obj: Any) -> FunctionalSample:
    """Inverse of :func:`to_jsonable`, with schema validation."""
    if not isinstance(obj, dict):
        raise SchemaError("dataset document must be a JSON object")
    kind = obj.get("kind")
    if kind not in ("grid", "basis"):
        raise SchemaError(f"kind must be 'grid' or 'basis', got {kind!r}")
    domain = obj.get("domain")
    if (
        not isinstance(domain, (list, tuple))
        or len(domain) != 2
        or not all(isinstance(x, (int, float)) for x in domain)
    ):
        raise SchemaError("domain must be a [a, b] pair of numbers")
    names = _names_from(obj)

    if kind == "grid":
        if obj.get("basis") is not None or obj.get("coefficients") is not None:
            raise SchemaError("grid datasets must leave basis/coefficients null")
        grid = obj.get("grid")
        values = obj.get("values")
        if grid is None or values is None:
            raise SchemaError("grid datasets need both grid and values")
        try:
            return build_discrete_sample(
                np.asarray(grid, dtype=float),
                _require_matrix(values, "values"),
                domain_range=(float(domain[0]), float(domain[1])),
                **names,
            )
        except (ValueError, TypeError) as exc:
            raise SchemaError(str(exc)) from None

    if obj.get("grid") is not None or obj.get("values") is not None:
        raise SchemaError("basis datasets must leave grid/values null")
    basis_obj = obj.get("basis")
    coefs = obj.get("coefficients")
    if basis_obj is None or coefs is None:
        raise SchemaError("basis datasets need both basis and coefficients")
    if not isinstance(basis_obj, dict):
        raise SchemaError("basis must be an object")
    basis_kind = basis_obj.get("kind")
    if basis_kind not in _BASIS_KINDS:
        raise SchemaError(f"unknown basis kind {basis_kind!r}")
    n_basis = basis_obj.get("n_basis")
    if not isinstance(n_basis, int) or n_basis < 1:
        raise SchemaError("basis n_basis must be a positive integer")
    kwargs: dict[str, Any] = {}
    if basis_kind == "bspline":
        if basis_obj.get("order") is not None:
            kwargs["order"] = int(basis_obj["order"])
        if basis_obj.get("knots") is not None:
            kwargs["knots"] = tuple(float(k) for k in basis_obj["knots"])
    if basis_kind == "fourier" and basis_obj.get("period") is not None:
        kwargs["period"] = float(basis_obj["period"])
    try:
        spec = BasisSpec(
            kind=basis_kind,
            n_basis=n_basis,
            domain_range=(float(domain[0]), float(domain[1])),
            **kwargs,
        )
        return BasisFunctionalSample(
            basis=spec, coefficients=_require_matrix(coefs, "coefficients"), **names
        )
    except (ValueError, TypeError) as exc:
        raise SchemaError(str(exc)) from None


def write_json(sample: FunctionalSample, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(to_jsonable(sample), handle)
        handle.write("\n")


def read_json(path: str | Path) -> FunctionalSample:
    with open(path, encoding="utf-8") as handle:
        try:
            obj = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON: {exc}") from None
    return sample_from_jsonable(obj)
