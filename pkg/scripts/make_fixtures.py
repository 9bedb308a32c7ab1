"""Regenerate the checked-in ingest fixtures.

Builds vendor-style payload pages carrying the quirks the cleaner must
survive (mangled u00XX escapes with and without the backslash, junk
whitespace outside strings, nested parking flags, stringy numerics),
runs them through the real pipeline, and freezes the result as the
golden JSONL plus a manifest and a boundary file.

Sale prices are solved numerically per cell so the yield index under
default mortgage terms lands on its documented anchors: the Prosperidad
60-90 cell at 0.867, Acacias averaging 1.22 over {1.03, 1.08, 1.56},
and Adelfas averaging 1.07 over {1.06, 1.13, 1.02}.

Run from the repo root:  python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from yieldfinder.finance import compute_yield_index, monthly_mortgage, neighborhood_average
from yieldfinder.ingest import (
    FixtureSource,
    SearchQuery,
    clean_payload,
    dedupe,
    fetch_page,
    load_dataset,
    parse_record,
    store_dataset,
)
from yieldfinder.model import MortgageTerms, Operation

FIXTURES = ROOT / "tests" / "fixtures"

# Payment per euro of purchase price under the default what-if terms;
# sale prices below are solved against it.
PPE = monthly_mortgage(MortgageTerms.defaults())

# Escape-mangling markers; payload text must never ship a raw accent.
MARKERS = {
    "@NT@": "\\u00f1",   # ñ with the backslash surviving
    "@NTB@": "u00f1",    # ñ, backslash already lost
    "@IA@": "\\u00ed",   # í
    "@EAB@": "u00e9",    # é, bare form
    "@BAB@": "u00ba",    # º, outside the accent set: kept literally
}


def solve_sales(mean_rent: float, target_index: float, leads: list[int]) -> list[int]:
    """Integer sale prices whose mean puts the cell index on target."""
    n = len(leads) + 1
    target_mean = mean_rent / (target_index * PPE)
    last = round(n * target_mean - sum(leads))
    prices = leads + [last]
    achieved = mean_rent / (PPE * sum(prices) / n)
    assert abs(achieved - target_index) < 5e-4, (target_index, achieved)
    return prices


def rent(code, price, size, hood, lat, lon, **extra):
    record = {
        "propertyCode": str(code),
        "operation": "rent",
        "price": price,
        "size": size,
        "neighborhood": hood,
        "latitude": lat,
        "longitude": lon,
    }
    record.update(extra)
    return record


def sale(code, price, size, hood, lat, lon, **extra):
    record = rent(code, price, size, hood, lat, lon, **extra)
    record["operation"] = "sale"
    if "priceByArea" not in record:
        record["priceByArea"] = round(price / size)
    return record


def build_records():
    """Vendor records per payload page, anchors solved in place."""
    pros_sales = solve_sales(1371.95, 1371.95 / 1581.86, [538000, 549500, 572000])
    aca_30 = solve_sales(850.0, 1.03, [287000])
    aca_60 = solve_sales(1100.0, 1.08, [351000])
    aca_90 = solve_sales(1650.0, 1.56, [369000])
    ade_30 = solve_sales(800.0, 1.06, [262000])
    ade_60 = solve_sales(1180.0, 1.13, [365000])
    ade_120 = solve_sales(1900.0, 1.02, [655000])

    rent_p1 = [
        rent(1001, 1195.0, 62, "Prosperidad", 40.4449, -3.6722, propertyType="flat",
             exterior=True, floor="3", hasLift=True, rooms=2, bathrooms=1, numPhotos=24,
             status="good", address="Calle de Mantuano", district="Chamartin",
             thumbnail="https://img.example/1001.jpg"),
        rent(1002, 1299.8, 70, "Prosperidad", 40.4461, -3.6705, propertyType="flat",
             exterior=False, floor=1, hasLift=False, rooms=3, bathrooms=1, numPhotos=12,
             status="good", priceByArea=18.6),
        rent(1003, 1425.0, 75, "Prosperidad", 40.4442, -3.6741, propertyType="flat",
             exterior=True, floor="5", hasLift=True, rooms=3, bathrooms=2, numPhotos=31,
             status="renew", description="Atico reformado, terraza de 12 m2, 5@BAB@ planta"),
        rent(1004, 1568.0, 88, "Prosperidad", 40.4473, -3.6699, propertyType="penthouse",
             exterior=True, floor=7, hasLift=True, rooms=3, bathrooms=2, numPhotos=40,
             status="good", parkingSpace={"hasParkingSpace": True}),
        rent(1005, 980.0, 42, "Prosperidad", 40.4436, -3.6731, propertyType="studio",
             exterior=False, floor="2", hasLift=False, rooms=1, bathrooms=1, numPhotos=9),
        rent(1006, 690.0, 24, "Prosperidad", 40.4453, -3.6717, propertyType="studio",
             exterior=False, floor=0, hasLift=False, rooms=1, bathrooms=1, numPhotos=5),
        rent(2001, 999.0, 52, "Acacias", 40.4021, -3.7066, propertyType="flat",
             exterior=True, floor="4", hasLift=True, rooms=2, bathrooms=1, numPhotos=15,
             status="good"),
        rent(2002, 850.0, 38, "Acacias", 40.4013, -3.7051, propertyType="flat",
             exterior=False, floor="1", hasLift=False, rooms=1, bathrooms=1, numPhotos=8),
        rent(2003, 890.0, 45, "Acacias", 40.4030, -3.7088, propertyType="flat",
             exterior=True, floor=2, hasLift=True, rooms=2, bathrooms=1, numPhotos=19,
             parking=False),
        rent(1101, 1500.0, 70, "Chamber@IA@", 40.4330, -3.6971, propertyType="flat",
             exterior=True, floor="4", hasLift=True, rooms=2, bathrooms=2, numPhotos=22,
             status="good", description='Piso "senorial", muy luminoso'),
        rent(9100, 1640.0, 85, "Chamber@IA@", 40.4348, -3.7002, propertyType="flat",
             exterior=True, floor="6", hasLift=True, rooms=3, bathrooms=2, numPhotos=27),
    ]
    rent_p2 = [
        rent(2001, 810.0, 52, "Acacias", 40.4021, -3.7066, propertyType="flat",
             exterior=True, floor="4", hasLift=True, rooms=2, bathrooms=1, numPhotos=16,
             status="good"),
        rent(2101, 1050.0, 61, "Acacias", 40.4008, -3.7043, propertyType="flat",
             exterior=False, floor=3, hasLift=True, rooms=2, bathrooms=1, numPhotos=11),
        rent(2102, 1150.0, 82, "Acacias", 40.4036, -3.7079, propertyType="duplex",
             exterior=True, floor="5", hasLift=True, rooms=3, bathrooms=2, numPhotos=25,
             parkingSpace={"hasParkingSpace": False}),
        rent(2201, 1600.0, 95, "Acacias", 40.4018, -3.7095, propertyType="flat",
             exterior=True, floor="2", hasLift=True, rooms=3, bathrooms=2, numPhotos=30),
        rent(2202, 1700.0, 110, "Acacias", 40.4027, -3.7031, propertyType="flat",
             exterior=True, floor=1, hasLift=False, rooms=4, bathrooms=2, numPhotos=18,
             status="renew"),
        rent(3001, 780.0, 35, "Adelfas", 40.4003, -3.6735, propertyType="studio",
             exterior=False, floor="1", hasLift=False, rooms=1, bathrooms=1, numPhotos=7),
        rent(3002, 820.0, 50, "Adelfas", 40.3995, -3.6712, propertyType="flat",
             exterior=True, floor="3", hasLift=True, rooms=2, bathrooms=1, numPhotos=14),
        rent(3101, 1231.0, 66, "Adelfas", 40.4011, -3.6741, propertyType="flat",
             exterior=True, floor=2, hasLift=True, rooms=2, bathrooms=1, numPhotos=21),
        rent(3102, 1129.0, 78, "Adelfas", 40.3988, -3.6722, propertyType="flat",
             exterior=False, floor="4", hasLift=True, rooms=3, bathrooms=1, numPhotos=13),
        rent(3201, 1890.0, 125, "Adelfas", 40.4007, -3.6703, propertyType="duplex",
             exterior=True, floor="5", hasLift=True, rooms=4, bathrooms=2, numPhotos=33,
             parkingSpace={"hasParkingSpace": True}),
        rent(3202, 1910.0, 140, "Adelfas", 40.3991, -3.6752, propertyType="flat",
             exterior=True, floor=6, hasLift=True, rooms=4, bathrooms=3, numPhotos=29),
        rent(4001, 1210.0, 100, "Pe@NT@agrande", 40.4794, -3.7301, propertyType="flat",
             exterior=True, floor="2", hasLift=False, rooms=3, bathrooms=2, numPhotos=16),
        rent(4101, 725.0, 40, "Legan@EAB@s", 40.3280, -3.7635, propertyType="flat",
             exterior=False, floor="1", hasLift=False, rooms=1, bathrooms=1, numPhotos=6,
             status="good"),
    ]
    sale_p1 = [
        sale(5001, pros_sales[0], 65, "Prosperidad", 40.4447, -3.6711, propertyType="flat",
             exterior=True, floor="4", hasLift=True, rooms=2, bathrooms=1, numPhotos=28,
             status="good"),
        sale(5002, pros_sales[1], 72, "Prosperidad", 40.4458, -3.6736, propertyType="flat",
             exterior=False, floor=2, hasLift=True, rooms=3, bathrooms=1, numPhotos=20,
             status="renew"),
        sale(5003, pros_sales[2], 80, "Prosperidad", 40.4465, -3.6694, propertyType="flat",
             exterior=True, floor="6", hasLift=True, rooms=3, bathrooms=2, numPhotos=35,
             newDevelopment=False),
        sale(5004, pros_sales[3], 86, "Prosperidad", 40.4439, -3.6727, propertyType="penthouse",
             exterior=True, floor=8, hasLift=True, rooms=3, bathrooms=2, numPhotos=44,
             parkingSpace={"hasParkingSpace": True}, status="good"),
        sale(9100, 430000, 70, "Chamber@IA@", 40.4341, -3.6988, propertyType="flat",
             exterior=True, floor="3", hasLift=True, rooms=2, bathrooms=2, numPhotos=26),
        sale(5101, 445000, 83, "Chamber@IA@", 40.4352, -3.6965, propertyType="flat",
             exterior=True, floor=5, hasLift=True, rooms=3, bathrooms=2, numPhotos=31,
             status="good"),
        sale(6001, aca_30[0], 44, "Acacias", 40.4016, -3.7058, propertyType="flat",
             exterior=False, floor="1", hasLift=False, rooms=1, bathrooms=1, numPhotos=10),
        sale(6002, aca_30[1], 57, "Acacias", 40.4025, -3.7072, propertyType="flat",
             exterior=True, floor="3", hasLift=True, rooms=2, bathrooms=1, numPhotos=17,
             newDevelopment=True, status="newDevelopment"),
    ]
    sale_p2 = [
        sale(6101, aca_60[0], 63, "Acacias", 40.4011, -3.7049, propertyType="flat",
             exterior=True, floor=2, hasLift=True, rooms=2, bathrooms=1, numPhotos=23),
        sale(6102, aca_60[1], 79, "Acacias", 40.4032, -3.7085, propertyType="flat",
             exterior=False, floor="4", hasLift=True, rooms=3, bathrooms=2, numPhotos=19),
        sale(6201, aca_90[0], 98, "Acacias", 40.4022, -3.7040, propertyType="flat",
             exterior=True, floor="5", hasLift=True, rooms=3, bathrooms=2, numPhotos=27,
             parkingSpace={"hasParkingSpace": True}),
        sale(6202, aca_90[1], 107, "Acacias", 40.4014, -3.7091, propertyType="duplex",
             exterior=True, floor=1, hasLift=False, rooms=4, bathrooms=2, numPhotos=22),
        sale(7001, ade_30[0], 39, "Adelfas", 40.4001, -3.6728, propertyType="studio",
             exterior=False, floor="2", hasLift=False, rooms=1, bathrooms=1, numPhotos=9),
        sale(7002, ade_30[1], 51, "Adelfas", 40.3997, -3.6717, propertyType="flat",
             exterior=True, floor="1", hasLift=True, rooms=2, bathrooms=1, numPhotos=15),
        sale(7101, ade_60[0], 72, "Adelfas", 40.4009, -3.6746, propertyType="flat",
             exterior=True, floor=3, hasLift=True, rooms=2, bathrooms=1, numPhotos=24),
        sale(7102, ade_60[1], 85, "Adelfas", 40.3993, -3.6709, propertyType="flat",
             exterior=True, floor="5", hasLift=True, rooms=3, bathrooms=2, numPhotos=30),
        sale(7201, ade_120[0], 128, "Adelfas", 40.4005, -3.6757, propertyType="duplex",
             exterior=True, floor="4", hasLift=True, rooms=4, bathrooms=2, numPhotos=36,
             parkingSpace={"hasParkingSpace": True}),
        sale(7202, ade_120[1], 136, "Adelfas", 40.3986, -3.6739, propertyType="flat",
             exterior=True, floor=7, hasLift=True, rooms=4, bathrooms=3, numPhotos=41),
        sale(8001, 520000, 103, "Pe@NTB@agrande", 40.4801, -3.7315, propertyType="flat",
             exterior=True, floor="3", hasLift=True, rooms=3, bathrooms=2, numPhotos=25),
        sale(8101, 1490000, 210, "El Viso", 40.4470, -3.6880, propertyType="chalet",
             exterior=True, hasLift=False, rooms=6, bathrooms=4, numPhotos=52,
             parkingSpace={"hasParkingSpace": True}, status="good"),
    ]
    return {("rent", 1): rent_p1, ("rent", 2): rent_p2, ("sale", 1): sale_p1, ("sale", 2): sale_p2}


def render_payload(records: list[dict], operation: str, page: int) -> bytes:
    """Assemble one vendor page, then mangle escapes via the markers."""
    rendered = []
    for i, record in enumerate(records):
        if i % 3 == 0:
            rendered.append(json.dumps(record, ensure_ascii=True, indent=4))
        else:
            rendered.append(json.dumps(record, ensure_ascii=True, separators=(",", ":")))
    body = (
        "{\n"
        f'  "summary": ["{operation}", "Madrid"],\n'
        f'  "total": {len(records)},\n'
        f'\t"actualPage": {page},\n'
        '  "totalPages": 2,\n'
        '  "itemsPerPage": 50,\n'
        '  "elementList": [\n'
        + ",\n".join(rendered)
        + "\n  ],\n"
        '  "paginable": true\n'
        "}\n"
    )
    for marker, mangled in MARKERS.items():
        body = body.replace(marker, mangled)
    assert "@" not in body, "unreplaced marker left in payload"
    return body.encode("utf-8")


def main() -> None:
    payload_dir = FIXTURES / "payloads"
    golden_dir = FIXTURES / "golden"
    payload_dir.mkdir(parents=True, exist_ok=True)
    golden_dir.mkdir(parents=True, exist_ok=True)

    pages = build_records()
    for (operation, page), records in pages.items():
        (payload_dir / f"{operation}_p{page}.json").write_bytes(render_payload(records, operation, page))

    source = FixtureSource(payload_dir)
    listings = []
    for operation in (Operation.RENT, Operation.SALE):
        for page in (1, 2):
            payload = fetch_page(SearchQuery(operation=operation, page=page), source)
            listings.extend(parse_record(r) for r in clean_payload(payload))
    parsed = len(listings)
    listings, removed = dedupe(listings)

    golden_path = golden_dir / "dataset.jsonl"
    store_dataset(listings, golden_path)
    assert load_dataset(golden_path) == listings

    cells = compute_yield_index(listings, MortgageTerms.defaults())
    by_key = {(c.neighborhood, c.bucket.label): c for c in cells}
    pros = by_key[("prosperidad", "60-90")]
    assert abs(pros.mean_rent - 1371.95) < 0.005, pros.mean_rent
    assert abs(pros.mean_mortgage - 1581.86) < 0.25, pros.mean_mortgage
    assert abs(pros.index - 0.867) < 0.0008, pros.index
    averages = neighborhood_average(cells)
    assert abs(averages["acacias"] - 1.22) < 0.005, averages["acacias"]
    assert abs(averages["adelfas"] - 1.07) < 0.005, averages["adelfas"]
    folded = {c.neighborhood for c in cells}
    assert {"prosperidad", "acacias", "adelfas", "chamberi", "penagrande", "el viso"} <= folded

    rents = sum(1 for l in listings if l.operation is Operation.RENT)
    manifest = {
        "payload_files": sorted(p.name for p in payload_dir.glob("*.json")),
        "parsed_records": parsed,
        "duplicates_removed": removed,
        "stored": len(listings),
        "counts": {"rent": rents, "sale": len(listings) - rents},
    }
    (FIXTURES / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")

    centers = {
        "Prosperidad": (40.4455, -3.6718),
        "Acacias": (40.4021, -3.7065),
        "Adelfas": (40.4000, -3.6730),
        "Chamberí": (40.4340, -3.6985),
        "Peñagrande": (40.4798, -3.7308),
        "El Viso": (40.4470, -3.6880),
        "Leganés": (40.3280, -3.7635),
    }
    features = []
    for name, (lat, lon) in centers.items():
        d = 0.006
        ring = [
            [lon - d, lat - d], [lon + d, lat - d], [lon + d, lat + d], [lon - d, lat + d], [lon - d, lat - d],
        ]
        features.append(
            {
                "type": "Feature",
                "properties": {"neighborhood": name},
                "geometry": {"type": "Polygon", "coordinates": [ring]},
            }
        )
    boundaries = {"type": "FeatureCollection", "features": features}
    (FIXTURES / "boundaries.geojson").write_text(
        json.dumps(boundaries, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )

    print(f"wrote {parsed} records ({removed} duplicate removed) -> {golden_path}")
    print(f"prosperidad 60-90 index: {pros.index:.6f}")
    print(f"acacias average: {averages['acacias']:.6f}, adelfas average: {averages['adelfas']:.6f}")


if __name__ == "__main__":
    main()
