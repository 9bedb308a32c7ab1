"""HTTP API over an immutable dataset snapshot.

The service holds the listings, optional boundary polygons, and a
registry of trained models loaded at startup. Index and ranking
endpoints recompute from the snapshot on every request, so what-if
mortgage parameters are just query parameters; nothing is cached or
mutated. Errors use a flat {code, message} shape.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from .artifacts import TrainedModel, dataset_fingerprint, load_model, predict_listings
from .errors import NoScorableListings, ValidationError, YieldfinderError
from .evaluation import implied_yield_ranking
from .finance import compute_yield_index, export_index_geojson, neighborhood_average, size_bucket_of
from .ingest import dataset_stats, listing_to_record, load_dataset, record_to_listing
from .model import Listing, ModelSpec, MortgageTerms, Operation, SizeBucket, YieldCell, normalize_name


@dataclass
class ServiceState:
    """Everything a running service can see; treated as read-only."""

    listings: tuple[Listing, ...]
    dataset_hash: str
    models: dict[str, TrainedModel] = field(default_factory=dict)
    boundaries: dict | None = None
    default_terms: MortgageTerms = field(default_factory=MortgageTerms.defaults)


def load_state(
    dataset_path: Path | str,
    boundaries_path: Path | str | None = None,
    model_paths: Sequence[Path | str] = (),
) -> ServiceState:
    listings = tuple(load_dataset(dataset_path))
    boundaries = None
    if boundaries_path is not None:
        boundaries = json.loads(Path(boundaries_path).read_text(encoding="utf-8"))
    models = {}
    for path in model_paths:
        model = load_model(path)
        name = model.metadata.get("name") or Path(path).stem
        models[name] = model
    return ServiceState(
        listings=listings,
        dataset_hash=dataset_fingerprint(listings),
        models=models,
        boundaries=boundaries,
    )


class _ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message


def _cell_dict(cell: YieldCell) -> dict:
    return {
        "neighborhood": cell.neighborhood,
        "bucket": cell.bucket.label,
        "n_rent": cell.n_rent,
        "n_sale": cell.n_sale,
        "mean_rent": cell.mean_rent,
        "mean_mortgage": cell.mean_mortgage,
        "index": cell.index,
    }


def _terms_dict(terms: MortgageTerms) -> dict:
    return {
        "monthly_rate": terms.monthly_rate,
        "months": terms.months,
        "transaction_cost_rate": terms.transaction_cost_rate,
        "down_payment_fraction": terms.down_payment_fraction,
    }


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="yieldfinder", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET", "POST"],
        allow_headers=["*"],
    )

    def terms_from(rate: float | None, months: int | None, tcost: float | None, down: float | None) -> MortgageTerms:
        base = state.default_terms
        try:
            return MortgageTerms(
                price=1.0,
                monthly_rate=base.monthly_rate if rate is None else rate,
                months=base.months if months is None else months,
                transaction_cost_rate=base.transaction_cost_rate if tcost is None else tcost,
                down_payment_fraction=base.down_payment_fraction if down is None else down,
            )
        except ValidationError as exc:
            raise _ApiError(400, "invalid_params", str(exc)) from exc

    @app.exception_handler(_ApiError)
    async def api_error_handler(request: Request, exc: _ApiError):
        return JSONResponse(status_code=exc.status, content={"code": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"code": "invalid_params", "message": str(exc.errors())})

    @app.exception_handler(YieldfinderError)
    async def domain_error_handler(request: Request, exc: YieldfinderError):
        return JSONResponse(status_code=500, content={"code": "internal", "message": str(exc)})

    @app.get("/api/health")
    def health():
        return {
            "status": "ok",
            "listings": len(state.listings),
            "models": sorted(state.models),
            "dataset_hash": state.dataset_hash,
            "has_boundaries": state.boundaries is not None,
        }

    @app.get("/api/stats")
    def stats():
        return dataset_stats(list(state.listings)).to_dict()

    @app.get("/api/index")
    def index(rate: float | None = None, months: int | None = None,
              tcost: float | None = None, down: float | None = None):
        terms = terms_from(rate, months, tcost, down)
        cells = compute_yield_index(list(state.listings), terms)
        return {
            "terms": _terms_dict(terms),
            "cells": [_cell_dict(cell) for cell in cells],
            "neighborhood_averages": neighborhood_average(cells),
        }

    @app.get("/api/index.geojson")
    def index_geojson(rate: float | None = None, months: int | None = None,
                      tcost: float | None = None, down: float | None = None):
        if state.boundaries is None:
            raise _ApiError(404, "no_boundaries", "service started without boundary polygons")
        terms = terms_from(rate, months, tcost, down)
        cells = compute_yield_index(list(state.listings), terms)
        body = export_index_geojson(cells, state.boundaries, strict=False)
        return Response(content=body, media_type="application/geo+json")

    @app.get("/api/listings")
    def listings(operation: str | None = None, neighborhood: str | None = None,
                 bucket: str | None = None, page: int = 1, page_size: int = 50):
        if page < 1 or page_size < 1 or page_size > 500:
            raise _ApiError(400, "invalid_params", "page must be >= 1 and page_size in [1, 500]")
        selected = list(state.listings)
        if operation is not None:
            try:
                wanted_op = Operation.parse(operation)
            except ValidationError as exc:
                raise _ApiError(400, "invalid_params", str(exc)) from exc
            selected = [l for l in selected if l.operation is wanted_op]
        if neighborhood is not None:
            key = normalize_name(neighborhood)
            selected = [l for l in selected if normalize_name(l.neighborhood) == key]
        if bucket is not None:
            try:
                wanted_bucket = SizeBucket.from_label(bucket)
            except ValidationError as exc:
                raise _ApiError(400, "invalid_params", str(exc)) from exc
            selected = [l for l in selected if size_bucket_of(l.size) is wanted_bucket]
        total = len(selected)
        start = (page - 1) * page_size
        items = [listing_to_record(l) for l in selected[start : start + page_size]]
        return {"items": items, "page": page, "page_size": page_size, "total": total}

    @app.post("/api/predict")
    async def predict(request: Request):
        try:
            body = await request.json()
        except Exception as exc:
            raise _ApiError(400, "malformed", f"body is not JSON: {exc}") from exc
        if not isinstance(body, dict) or "model" not in body or "listing" not in body:
            raise _ApiError(400, "malformed", "body must be {model, listing}")
        model = state.models.get(str(body["model"]))
        if model is None:
            raise _ApiError(404, "not_found", f"no model named {body['model']!r}")
        try:
            listing = record_to_listing(body["listing"])
        except YieldfinderError as exc:
            raise _ApiError(400, "malformed", str(exc)) from exc
        try:
            _, predictions, _ = predict_listings(model, [listing])
        except NoScorableListings as exc:
            raise _ApiError(422, "unscorable", str(exc)) from exc
        return {
            "model": str(body["model"]),
            "spec": int(model.spec),
            "predicted_rent": float(predictions[0]),
        }

    @app.get("/api/yield/ranking")
    def ranking(model: str, rate: float | None = None, months: int | None = None,
                tcost: float | None = None, down: float | None = None, limit: int = 50):
        trained = state.models.get(model)
        if trained is None:
            raise _ApiError(404, "not_found", f"no model named {model!r}")
        if limit < 1:
            raise _ApiError(400, "invalid_params", "limit must be >= 1")
        terms = terms_from(rate, months, tcost, down)
        try:
            result = implied_yield_ranking(list(state.listings), trained, terms, limit=limit)
        except NoScorableListings as exc:
            raise _ApiError(422, "unscorable", str(exc)) from exc
        return {
            "model": model,
            "terms": _terms_dict(terms),
            "rows": [
                {
                    "id": row.id,
                    "neighborhood": row.neighborhood,
                    "price": row.price,
                    "size": row.size,
                    "predicted_rent": row.predicted_rent,
                    "monthly_mortgage": row.monthly_mortgage,
                    "implied_index": row.implied_index,
                }
                for row in result.rows
            ],
            "skipped": len(result.skipped_ids),
        }

    return app


def serve(state: ServiceState, host: str = "127.0.0.1", port: int = 8787) -> None:
    import uvicorn

    uvicorn.run(create_app(state), host=host, port=port, log_level="info")
