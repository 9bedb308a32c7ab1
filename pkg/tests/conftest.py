import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from yieldfinder.model import Listing, Operation

FIXTURES = Path(__file__).parent / "fixtures"


def make_listing(
    id="L1",
    operation=Operation.RENT,
    price=1200.0,
    size=70.0,
    neighborhood="Acacias",
    latitude=40.4,
    longitude=-3.7,
    **extra,
):
    if isinstance(operation, str):
        operation = Operation(operation)
    return Listing(
        id=str(id),
        operation=operation,
        price=float(price),
        size=float(size),
        latitude=latitude,
        longitude=longitude,
        neighborhood=neighborhood,
        **extra,
    )


@pytest.fixture
def fixtures_dir():
    return FIXTURES
