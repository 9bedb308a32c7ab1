from __future__ import annotations

import json
import math
import time

import numpy as np
import pytest

import oracles
from conftest import make_listing
from yieldfinder.errors import NonRepayable, UnknownNeighborhood
from yieldfinder.finance import (
    amortization_schedule,
    compute_yield_index,
    export_index_csv,
    export_index_geojson,
    financed_principal,
    monthly_mortgage,
    neighborhood_average,
    total_purchase_cost,
)
from yieldfinder.model import MortgageTerms, Operation


def terms_for(price, rate=0.0016, months=360, cost=0.067, down=0.30):
    return MortgageTerms(
        price=price,
        down_payment_fraction=down,
        transaction_cost_rate=cost,
        monthly_rate=rate,
        months=months,
    )


class TestMonthlyMortgage:
    def test_documented_scenario(self):
        # 150,800 EUR home, 6.7% purchase costs, 30% down, 0.16% monthly, 30 years
        terms = terms_for(150_800.0)
        assert monthly_mortgage(terms) == pytest.approx(423.0, abs=1.0)
        assert total_purchase_cost(terms) == pytest.approx(160_903.0, abs=1.0)

    def test_zero_rate_collapses_to_straight_line(self):
        terms = terms_for(90_000.0, rate=0.0)
        assert monthly_mortgage(terms) == financed_principal(terms) / terms.months

    def test_continuous_at_zero_rate(self):
        base = monthly_mortgage(terms_for(200_000.0, rate=0.0))
        near = monthly_mortgage(terms_for(200_000.0, rate=1e-12))
        assert abs(near - base) < 1e-6 * base

    def test_linear_in_price(self):
        a = monthly_mortgage(terms_for(100_000.0))
        b = monthly_mortgage(terms_for(250_000.0))
        assert b == pytest.approx(2.5 * a, rel=1e-12)

    def test_principal_composition(self):
        terms = terms_for(100_000.0, cost=0.1, down=0.25)
        assert financed_principal(terms) == pytest.approx(85_000.0)
        assert total_purchase_cost(terms) == pytest.approx(110_000.0)


class TestAmortization:
    def test_schedule_pays_off_exactly(self):
        terms = terms_for(150_800.0)
        rows = amortization_schedule(terms)
        assert len(rows) == terms.months
        assert abs(rows[-1].closing_balance) < 0.01

    def test_balances_chain(self):
        rows = amortization_schedule(terms_for(80_000.0, months=24))
        for prev, cur in zip(rows, rows[1:]):
            assert cur.opening_balance == pytest.approx(prev.closing_balance, abs=1e-9)
        assert rows[0].month == 1
        assert rows[-1].month == 24

    def test_random_terms_always_amortize(self):
        # the analytic payment must clear the balance for any admissible terms
        rng = np.random.default_rng(101)
        start = time.perf_counter()
        for _ in range(250):
            terms = terms_for(
                float(rng.uniform(20_000, 900_000)),
                rate=float(rng.uniform(0.0, 0.01)),
                months=int(rng.integers(12, 481)),
            )
            rows = amortization_schedule(terms)
            assert abs(rows[-1].closing_balance) <= 0.01
        assert time.perf_counter() - start < 5.0

    def test_underpayment_never_amortizes(self):
        terms = terms_for(150_800.0)
        floor_payment = financed_principal(terms) * terms.monthly_rate
        with pytest.raises(NonRepayable):
            amortization_schedule(terms, payment=floor_payment)

    def test_interest_plus_principal_equals_payment(self):
        terms = terms_for(120_000.0, months=60)
        payment = monthly_mortgage(terms)
        for row in amortization_schedule(terms):
            assert row.interest + row.principal_repaid == pytest.approx(payment, abs=1e-9)


def random_listings(rng, n, neighborhoods=("Acacias", "Adelfas", "El Viso")):
    out = []
    for i in range(n):
        op = Operation.RENT if rng.random() < 0.5 else Operation.SALE
        price = float(rng.uniform(600, 2500)) if op is Operation.RENT else float(rng.uniform(80_000, 900_000))
        out.append(
            make_listing(
                id=f"X{i}",
                operation=op,
                price=price,
                size=float(rng.uniform(20, 220)),
                neighborhood=str(rng.choice(neighborhoods)),
            )
        )
    return out


class TestYieldIndex:
    def test_matches_group_by_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            listings = random_listings(rng, int(rng.integers(10, 300)))
            terms = terms_for(1.0, rate=float(rng.uniform(0.0005, 0.006)))
            cells = compute_yield_index(listings, terms)
            expected = oracles.oracle_index(listings, terms)
            got = {(c.neighborhood, c.bucket.label): c.index for c in cells if c.index is not None}
            assert set(got) == set(expected)
            for key, value in expected.items():
                assert got[key] == pytest.approx(value, rel=1e-9)

    def test_scale_equivariance(self):
        rng = np.random.default_rng(8)
        listings = random_listings(rng, 120)
        terms = terms_for(1.0)
        base = {(c.neighborhood, c.bucket): c.index for c in compute_yield_index(listings, terms) if c.index}
        k = 3.7
        scaled = [
            make_listing(
                id=l.id, operation=l.operation, price=l.price * k, size=l.size, neighborhood=l.neighborhood
            )
            for l in listings
        ]
        after = {(c.neighborhood, c.bucket): c.index for c in compute_yield_index(scaled, terms) if c.index}
        for key in base:
            assert after[key] == pytest.approx(base[key], rel=1e-12)

    def test_rate_monotonicity(self):
        rng = np.random.default_rng(9)
        listings = random_listings(rng, 150)
        low = compute_yield_index(listings, terms_for(1.0, rate=0.001))
        high = compute_yield_index(listings, terms_for(1.0, rate=0.004))
        pairs = 0
        for a, b in zip(low, high):
            if a.index is not None:
                assert b.index < a.index
                pairs += 1
        assert pairs > 0

    def test_down_payment_monotonicity(self):
        rng = np.random.default_rng(10)
        listings = random_listings(rng, 150)
        small = compute_yield_index(listings, terms_for(1.0, down=0.10))
        large = compute_yield_index(listings, terms_for(1.0, down=0.50))
        for a, b in zip(small, large):
            if a.index is not None:
                assert b.index > a.index

    def test_undersized_listings_excluded(self):
        listings = [
            make_listing(id="r1", price=1000.0, size=25.0),
            make_listing(id="s1", operation=Operation.SALE, price=200_000.0, size=25.0),
        ]
        assert compute_yield_index(listings, terms_for(1.0)) == []

    def test_one_sided_cells_have_no_index(self):
        listings = [make_listing(id="r1", price=1000.0, size=45.0)]
        cells = compute_yield_index(listings, terms_for(1.0))
        assert len(cells) == 1
        assert cells[0].index is None
        assert cells[0].n_rent == 1 and cells[0].n_sale == 0

    def test_neighborhood_average_is_unweighted(self):
        listings = [
            make_listing(id="r1", price=1000.0, size=45.0, neighborhood="Acacias"),
            make_listing(id="s1", operation=Operation.SALE, price=200_000.0, size=45.0, neighborhood="Acacias"),
            make_listing(id="r2", price=2000.0, size=100.0, neighborhood="Acacias"),
            make_listing(id="r2b", price=1000.0, size=100.0, neighborhood="Acacias"),
            make_listing(id="s2", operation=Operation.SALE, price=400_000.0, size=100.0, neighborhood="Acacias"),
        ]
        cells = compute_yield_index(listings, terms_for(1.0))
        with_index = [c.index for c in cells if c.index is not None]
        averages = neighborhood_average(cells)
        assert averages["acacias"] == pytest.approx(sum(with_index) / len(with_index))


class TestExports:
    def build_cells(self):
        listings = [
            make_listing(id="r1", price=1000.0, size=45.0, neighborhood="Peñagrande"),
            make_listing(id="s1", operation=Operation.SALE, price=250_000.0, size=45.0, neighborhood="Peñagrande"),
            make_listing(id="r2", price=800.0, size=65.0, neighborhood="Peñagrande"),
        ]
        return compute_yield_index(listings, terms_for(1.0))

    def test_csv_shape(self):
        cells = self.build_cells()
        lines = export_index_csv(cells).decode("utf-8").strip().split("\n")
        assert lines[0] == "neighborhood,bucket,index,n_rent,n_sale"
        assert len(lines) == 1 + len(cells)
        # one-sided cell leaves the index column empty
        assert any(",," in line for line in lines[1:])

    def test_geojson_sets_properties(self):
        cells = self.build_cells()
        boundaries = {
            "type": "FeatureCollection",
            "features": [
                {
                    "type": "Feature",
                    "properties": {"neighborhood": "Peñagrande"},
                    "geometry": {"type": "Polygon", "coordinates": [[[0, 0], [1, 0], [1, 1], [0, 0]]]},
                }
            ],
        }
        out = json.loads(export_index_geojson(cells, boundaries))
        props = out["features"][0]["properties"]
        assert math.isfinite(props["index_30_60"])
        assert props["index_60_90"] is None
        assert props["index_avg"] == pytest.approx(props["index_30_60"])

    def test_unknown_neighborhood_is_loud(self):
        cells = self.build_cells()
        boundaries = {"type": "FeatureCollection", "features": []}
        with pytest.raises(UnknownNeighborhood):
            export_index_geojson(cells, boundaries)
        relaxed = json.loads(export_index_geojson(cells, boundaries, strict=False))
        assert relaxed["unknown_neighborhoods"] == ["penagrande"]
