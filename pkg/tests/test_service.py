from __future__ import annotations

import math

import numpy as np
import pytest
from fastapi.testclient import TestClient

from conftest import FIXTURES, make_listing
from yieldfinder.artifacts import TrainedModel, save_model
from yieldfinder.evaluation import implied_yield_ranking, prepare_rents
from yieldfinder.finance import compute_yield_index
from yieldfinder.ingest import listing_to_record, store_dataset
from yieldfinder.model import ModelSpec, MortgageTerms, Operation
from yieldfinder.regression import encode, ols_fit
from yieldfinder.service import create_app, load_state


def service_listings():
    rng = np.random.default_rng(23)
    rows = []
    for i in range(18):
        size = float(rng.uniform(40, 130))
        floor = float(rng.integers(0, 6))
        exterior = bool(rng.integers(0, 2))
        lift = bool(rng.integers(0, 2))
        price = 8.0 * size + 45.0 * floor + 80.0 * exterior + 60.0 * lift + 150.0
        rows.append(
            make_listing(
                id=f"r{i:02d}", price=round(price, 2), size=round(size, 1),
                neighborhood="alpha" if i % 2 == 0 else "beta",
                floor=floor, exterior=exterior, lift=lift,
            )
        )
    for i, (price, size, hood) in enumerate(
        [(180_000.0, 80.0, "alpha"), (420_000.0, 95.0, "alpha"), (260_000.0, 66.0, "beta")]
    ):
        rows.append(
            make_listing(
                id=f"s{i:02d}", operation=Operation.SALE, price=price, size=size,
                neighborhood=hood, floor=2.0, exterior=True, lift=True,
            )
        )
    return rows


def fit_service_model(listings, metadata=None):
    rents = prepare_rents(listings, z=None)
    enc = encode(rents, ModelSpec.SPEC3)
    fit = ols_fit(enc.X, enc.y, feature_names=enc.feature_names, spec=enc.spec)
    return TrainedModel(kind="ols", spec=enc.spec, artifact=fit, metadata=metadata or {})


@pytest.fixture(scope="module")
def state(tmp_path_factory):
    root = tmp_path_factory.mktemp("svc")
    listings = service_listings()
    store_dataset(listings, root / "dataset.jsonl")
    named = fit_service_model(listings, metadata={"name": "rent-ols"})
    save_model(named, root / "artifact-file.json")
    anonymous = fit_service_model(listings)
    save_model(anonymous, root / "spare.json")
    return load_state(root / "dataset.jsonl", None, [root / "artifact-file.json", root / "spare.json"])


@pytest.fixture(scope="module")
def api(state):
    return TestClient(create_app(state))


@pytest.fixture(scope="module")
def fixture_api():
    loaded = load_state(FIXTURES / "golden" / "dataset.jsonl", FIXTURES / "boundaries.geojson")
    return TestClient(create_app(loaded))


class TestHealth:
    def test_reports_snapshot_summary(self, api, state):
        body = api.get("/api/health").json()
        assert body["status"] == "ok"
        assert body["listings"] == len(state.listings)
        assert body["models"] == ["rent-ols", "spare"]
        assert len(body["dataset_hash"]) == 64
        assert body["has_boundaries"] is False

    def test_boundaries_flag_set_when_loaded(self, fixture_api):
        assert fixture_api.get("/api/health").json()["has_boundaries"] is True


class TestStats:
    def test_per_operation_summaries(self, api, state):
        body = api.get("/api/stats").json()
        assert body["total"] == len(state.listings)
        assert set(body["operations"]) == {"rent", "sale"}
        assert body["operations"]["rent"]["count"] == 18
        assert body["operations"]["sale"]["count"] == 3
        price = body["operations"]["sale"]["price"]
        assert price["min"] == 180_000.0 and price["max"] == 420_000.0
        assert isinstance(price["histogram"], list)
        assert all(set(bin_) == {"lo", "count"} for bin_ in price["histogram"])


class TestIndex:
    def test_defaults_echoed_and_cells_match_direct_computation(self, api, state):
        body = api.get("/api/index").json()
        assert body["terms"] == {
            "monthly_rate": 0.0016,
            "months": 360,
            "transaction_cost_rate": 0.067,
            "down_payment_fraction": 0.30,
        }
        cells = compute_yield_index(list(state.listings), MortgageTerms.defaults())
        expected = {
            (c.neighborhood, c.bucket.label): c.index for c in cells if c.index is not None
        }
        got = {
            (c["neighborhood"], c["bucket"]): c["index"]
            for c in body["cells"]
            if c["index"] is not None
        }
        assert got.keys() == expected.keys()
        for key, value in expected.items():
            assert got[key] == pytest.approx(value, rel=1e-15)
        assert set(body["neighborhood_averages"]) == {"alpha", "beta"}

    def test_what_if_rate_moves_every_index_down(self, api):
        base = api.get("/api/index").json()
        bumped = api.get("/api/index", params={"rate": 0.004}).json()
        assert bumped["terms"]["monthly_rate"] == 0.004
        base_cells = {
            (c["neighborhood"], c["bucket"]): c["index"]
            for c in base["cells"] if c["index"] is not None
        }
        for cell in bumped["cells"]:
            key = (cell["neighborhood"], cell["bucket"])
            if cell["index"] is not None:
                assert cell["index"] < base_cells[key]

    def test_zero_rate_stays_finite(self, api):
        body = api.get("/api/index", params={"rate": 0.0}).json()
        values = [c["index"] for c in body["cells"] if c["index"] is not None]
        values += [v for v in body["neighborhood_averages"].values() if v is not None]
        assert values
        assert all(math.isfinite(v) for v in values)

    def test_invalid_terms_rejected(self, api):
        for params in ({"down": 1.5}, {"months": 0}, {"tcost": -0.1}):
            response = api.get("/api/index", params=params)
            assert response.status_code == 400
            body = response.json()
            assert body["code"] == "invalid_params"
            assert isinstance(body["message"], str)

    def test_unparseable_query_types_rejected(self, api):
        response = api.get("/api/index", params={"rate": "three percent"})
        assert response.status_code == 400
        assert response.json()["code"] == "invalid_params"


class TestIndexGeojson:
    def test_missing_boundaries_is_404(self, api):
        response = api.get("/api/index.geojson")
        assert response.status_code == 404
        assert response.json()["code"] == "no_boundaries"

    def test_feature_collection_with_index_properties(self, fixture_api):
        response = fixture_api.get("/api/index.geojson")
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("application/geo+json")
        body = response.json()
        assert body["type"] == "FeatureCollection"
        assert body["features"]
        for feature in body["features"]:
            assert "index_avg" in feature["properties"]
        assert any(f["properties"]["index_avg"] is not None for f in body["features"])


class TestListings:
    def test_unfiltered_counts(self, api, state):
        body = api.get("/api/listings").json()
        assert body["total"] == len(state.listings)
        assert len(body["items"]) == len(state.listings)
        assert {"page": body["page"], "page_size": body["page_size"]} == {"page": 1, "page_size": 50}
        assert all("id" in item and "operation" in item for item in body["items"])

    def test_operation_filter(self, api):
        body = api.get("/api/listings", params={"operation": "sale"}).json()
        assert body["total"] == 3
        assert all(item["operation"] == "sale" for item in body["items"])

    def test_neighborhood_filter_normalizes(self, api):
        direct = api.get("/api/listings", params={"neighborhood": "alpha"}).json()
        shouted = api.get("/api/listings", params={"neighborhood": "  ALPHA "}).json()
        assert direct["total"] > 0
        assert shouted["total"] == direct["total"]

    def test_bucket_filter(self, api):
        body = api.get("/api/listings", params={"bucket": "60-90", "operation": "sale"}).json()
        assert {item["id"] for item in body["items"]} == {"s00", "s02"}

    def test_paging_slices(self, api, state):
        first = api.get("/api/listings", params={"page_size": 5, "page": 1}).json()
        second = api.get("/api/listings", params={"page_size": 5, "page": 2}).json()
        assert len(first["items"]) == 5 and len(second["items"]) == 5
        assert first["items"][0]["id"] != second["items"][0]["id"]
        beyond = api.get("/api/listings", params={"page_size": 50, "page": 99}).json()
        assert beyond["items"] == [] and beyond["total"] == len(state.listings)

    def test_invalid_paging_and_filters(self, api):
        for params in (
            {"page": 0},
            {"page_size": 0},
            {"page_size": 501},
            {"operation": "swap"},
            {"bucket": "tiny"},
        ):
            response = api.get("/api/listings", params=params)
            assert response.status_code == 400
            assert response.json()["code"] == "invalid_params"


class TestPredict:
    def scorable_record(self):
        return listing_to_record(
            make_listing(
                id="q1", price=1.0, size=75.0, neighborhood="alpha",
                floor=2.0, exterior=True, lift=True, price_by_area=12.0,
            )
        )

    def test_prediction_matches_in_process_model(self, api, state):
        record = self.scorable_record()
        response = api.post("/api/predict", json={"model": "rent-ols", "listing": record})
        assert response.status_code == 200
        body = response.json()
        assert body["model"] == "rent-ols" and body["spec"] == 3
        expected = state.models["rent-ols"].predict_matrix(
            np.array([[75.0, 1.0, 2.0, 1.0, 12.0]])
        )[0]
        assert body["predicted_rent"] == pytest.approx(expected, rel=1e-15)

    def test_unknown_model_is_404(self, api):
        response = api.post("/api/predict", json={"model": "nope", "listing": self.scorable_record()})
        assert response.status_code == 404
        assert response.json()["code"] == "not_found"

    def test_malformed_bodies_are_400(self, api):
        for body in ([1, 2], {"model": "rent-ols"}, {"listing": {}}):
            response = api.post("/api/predict", json=body)
            assert response.status_code == 400
            assert response.json()["code"] == "malformed"
        response = api.post(
            "/api/predict", content=b"{not json", headers={"content-type": "application/json"}
        )
        assert response.status_code == 400
        assert response.json()["code"] == "malformed"

    def test_invalid_listing_record_is_400(self, api):
        record = self.scorable_record()
        del record["price"]
        response = api.post("/api/predict", json={"model": "rent-ols", "listing": record})
        assert response.status_code == 400
        assert response.json()["code"] == "malformed"

    def test_listing_missing_model_features_is_422(self, api):
        record = listing_to_record(make_listing(id="bare", price=500.0, size=44.0))
        response = api.post("/api/predict", json={"model": "rent-ols", "listing": record})
        assert response.status_code == 422
        assert response.json()["code"] == "unscorable"


class TestRanking:
    def test_matches_in_process_ranking(self, api, state):
        response = api.get("/api/yield/ranking", params={"model": "rent-ols"})
        assert response.status_code == 200
        body = response.json()
        expected = implied_yield_ranking(
            list(state.listings), state.models["rent-ols"], MortgageTerms.defaults(), limit=50
        )
        assert [row["id"] for row in body["rows"]] == [row.id for row in expected.rows]
        for got, want in zip(body["rows"], expected.rows):
            assert got["implied_index"] == pytest.approx(want.implied_index, rel=1e-15)
            assert got["predicted_rent"] == pytest.approx(want.predicted_rent, rel=1e-15)
            assert got["monthly_mortgage"] == pytest.approx(want.monthly_mortgage, rel=1e-15)
        assert body["skipped"] == len(expected.skipped_ids)
        indices = [row["implied_index"] for row in body["rows"]]
        assert indices == sorted(indices, reverse=True)

    def test_limit_and_what_if_terms(self, api):
        body = api.get(
            "/api/yield/ranking",
            params={"model": "rent-ols", "limit": 2, "rate": 0.005, "down": 0.5},
        ).json()
        assert len(body["rows"]) == 2
        assert body["terms"]["monthly_rate"] == 0.005
        assert body["terms"]["down_payment_fraction"] == 0.5

    def test_zero_rate_finite(self, api):
        body = api.get("/api/yield/ranking", params={"model": "rent-ols", "rate": 0.0}).json()
        assert all(math.isfinite(row["implied_index"]) for row in body["rows"])

    def test_error_paths(self, api):
        assert api.get("/api/yield/ranking", params={"model": "ghost"}).status_code == 404
        response = api.get("/api/yield/ranking", params={"model": "rent-ols", "limit": 0})
        assert response.status_code == 400
        assert api.get(
            "/api/yield/ranking", params={"model": "rent-ols", "down": 2.0}
        ).status_code == 400
