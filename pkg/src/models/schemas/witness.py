"""
Witness data models
"""
import json
from enum import Enum
from typing import Any, Dict

from pydantic import BaseModel


class WitnessKind(str, Enum):
    CONTRACTIBILITY = "contractibility"
    P_TOWER = "p-tower"
    SPLITTING = "splitting"
    COVERING = "covering"
    COHOMOLOGY = "cohomology"
    COUNTEREXAMPLE = "counterexample"


class WitnessRecord(BaseModel):
    check_id: str
    kind: WitnessKind
    subject: str
    data: Dict[str, Any] = {}

    def to_line(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_line(cls, line: str) -> "WitnessRecord":
        return cls.model_validate_json(line)
