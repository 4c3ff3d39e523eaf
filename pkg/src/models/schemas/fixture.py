"""
Fixture catalog data models
"""
from typing import Dict, List, Optional

from pydantic import BaseModel

from src.models.schemas.report import Verdict


class FixtureEntry(BaseModel):
    name: str
    file: str
    description: str = ""
    group_order: Optional[int] = None
    expect: Dict[str, Verdict] = {}


class FixtureCatalog(BaseModel):
    fixtures: List[FixtureEntry] = []

    def get(self, name: str) -> Optional[FixtureEntry]:
        return next((f for f in self.fixtures if f.name == name), None)


class FixtureListing(FixtureEntry):
    objects: int = 0
    beta_hint: int = 0
