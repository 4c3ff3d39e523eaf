from pathlib import Path

import pytest

from src.services.fincat.category import TableCategory
from src.services.fincat.group import FiniteGroup
from src.services.fincat.gset_category import GSetCategory
from src.services.site.site import ExplicitBasis, JointlySurjectiveBasis, SiteSpec


def build_b2() -> SiteSpec:
    """Subsets of {1, 2} ordered by inclusion, covered by unions."""
    morphisms = {
        "id_∅": ("∅", "∅"),
        "id_1": ("{1}", "{1}"),
        "id_2": ("{2}", "{2}"),
        "id_12": ("{1,2}", "{1,2}"),
        "e1": ("∅", "{1}"),
        "e2": ("∅", "{2}"),
        "e12": ("∅", "{1,2}"),
        "i1": ("{1}", "{1,2}"),
        "i2": ("{2}", "{1,2}"),
    }
    identities = {"∅": "id_∅", "{1}": "id_1", "{2}": "id_2", "{1,2}": "id_12"}
    cat = TableCategory(
        "B2",
        ["∅", "{1}", "{2}", "{1,2}"],
        morphisms,
        identities,
        {("i1", "e1"): "e12", ("i2", "e2"): "e12"},
    )
    basis = ExplicitBasis({"{1,2}": [[cat.morphism("i1"), cat.morphism("i2")]], "∅": [[]]})
    return SiteSpec(cat, basis, name="B2")


def build_gset_site(order: int = 2, budget: int = 6) -> SiteSpec:
    cat = GSetCategory(FiniteGroup.cyclic(order), budget=budget)
    return SiteSpec(cat, JointlySurjectiveBasis(), name=f"BZ{order}")


@pytest.fixture
def b2():
    return build_b2()


@pytest.fixture
def bg2():
    return build_gset_site(2, 6)


@pytest.fixture
def bg2_small():
    return build_gset_site(2, 3)


@pytest.fixture
def bg2_four():
    return build_gset_site(2, 4)


@pytest.fixture
def bg3():
    return build_gset_site(3, 4)


@pytest.fixture
def bset_site():
    """Finite sets: G-sets for the trivial group."""
    return SiteSpec(GSetCategory(FiniteGroup.trivial(), budget=4), JointlySurjectiveBasis(), name="BSet")


@pytest.fixture
def fixture_dir():
    return Path(__file__).resolve().parent.parent / "fixtures"
