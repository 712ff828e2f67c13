import re
from enum import Enum
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator

NO_EVENTS_SENTINEL = "No Major Bilateral Events Found"


def _normalize_key(value: str) -> str:
    return re.sub(r"[^a-z0-9]", "", value.lower())


class _LooseEnum(str, Enum):
    """
    str enum that also accepts its member name and spacing/case variants
    e.g. "MaterialConflict", "material conflict", "Material Conflict"
    """

    @classmethod
    def parse(cls, value: Any):
        if isinstance(value, cls):
            return value
        if not isinstance(value, str):
            raise ValueError(f"expected one of {[m.value for m in cls]}")
        key = _normalize_key(value)
        for member in cls:
            if key in (_normalize_key(member.value), _normalize_key(member.name)):
                return member
        raise ValueError(f"unknown {cls.__name__} '{value}'")


class QuadClass(_LooseEnum):
    VerbalCooperation = "Verbal Cooperation"
    MaterialCooperation = "Material Cooperation"
    VerbalConflict = "Verbal Conflict"
    MaterialConflict = "Material Conflict"

    @property
    def is_cooperation(self) -> bool:
        return self in (QuadClass.VerbalCooperation, QuadClass.MaterialCooperation)

    @classmethod
    def from_root(cls, root: int) -> 'QuadClass':
        if 1 <= root <= 5:
            return cls.VerbalCooperation
        if 6 <= root <= 8:
            return cls.MaterialCooperation
        if 9 <= root <= 13:
            return cls.VerbalConflict
        return cls.MaterialConflict


class EconomicEvent(_LooseEnum):
    Tariffs = "Tariffs"
    EconomicSanctions = "Economic Sanctions"
    TradeAgreementsAndTreaties = "Trade Agreements and Treaties"
    OtherEconomicPolicies = "Other Economic Policies"
    NotAnEconomicEvent = "Not an economic event"


class Relationship(_LooseEnum):
    StateOfWar = "State of War / Active Conflict"
    Crisis = "Crisis / Intense Confrontation"
    Hostile = "Hostile / Antagonistic Relationship"
    Competitive = "Competitive / Rivalrous Relationship"
    LimitedContact = "Limited Contact / Cool Relationship"
    SelectiveCooperation = "Selective Cooperation / Transactional Relationship"
    BroadCooperation = "Broad Cooperation / Partnership"
    StrategicPartnership = "Strategic Partnership"
    Alliance = "Alliance"


def _parse_code(value: Any, field_name: str) -> int:
    # codes arrive as "04", "043", 4 or 43.0
    if isinstance(value, bool):
        raise ValueError(f"{field_name} must be an integer code")
    if isinstance(value, str):
        stripped = value.strip()
        if not stripped.isdigit():
            raise ValueError(f"{field_name} must be an integer code")
        return int(stripped)
    if isinstance(value, float):
        if not value.is_integer():
            raise ValueError(f"{field_name} must be an integer code")
        return int(value)
    if isinstance(value, int):
        return value
    raise ValueError(f"{field_name} must be an integer code")


class EventRecord(BaseModel):
    """
    one coded bilateral political event
    field aliases follow the event schema used on disk
    """
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    year: int
    country1: str
    country2: str
    event_name: str
    event_description: str = ""
    cameo_quad_class: QuadClass = Field(alias="CAMEO_quad_class")
    cameo_root_code: int = Field(alias="CAMEO_root_code")
    cameo_event_code: int = Field(alias="CAMEO_event_code")
    economic_event: EconomicEvent
    goldstein: float = Field(alias="Goldstein_Scale")
    relationship: Optional[Relationship] = None
    evaluation_summary: str = ""

    @field_validator("year", mode="before")
    @classmethod
    def _check_year(cls, v: Any) -> int:
        if isinstance(v, bool):
            raise ValueError("year must be integral")
        if isinstance(v, float):
            if not v.is_integer():
                raise ValueError("year must be integral")
            return int(v)
        if isinstance(v, str) and v.strip().lstrip("-").isdigit():
            return int(v.strip())
        return v

    @field_validator("country1", "country2", mode="before")
    @classmethod
    def _check_country(cls, v: Any) -> str:
        if not isinstance(v, str) or not v.strip():
            raise ValueError("country code must be a non-empty string")
        return v.strip().upper()

    @field_validator("country2")
    @classmethod
    def _check_distinct(cls, v: str, info: ValidationInfo) -> str:
        if info.data.get("country1") == v:
            raise ValueError("country1 and country2 must differ")
        return v

    @field_validator("cameo_quad_class", mode="before")
    @classmethod
    def _parse_quad(cls, v: Any) -> QuadClass:
        return QuadClass.parse(v)

    @field_validator("economic_event", mode="before")
    @classmethod
    def _parse_economic(cls, v: Any) -> EconomicEvent:
        return EconomicEvent.parse(v)

    @field_validator("relationship", mode="before")
    @classmethod
    def _parse_relationship(cls, v: Any) -> Optional[Relationship]:
        if v is None or (isinstance(v, str) and not v.strip()):
            return None
        return Relationship.parse(v)

    @field_validator("cameo_root_code", mode="before")
    @classmethod
    def _check_root(cls, v: Any, info: ValidationInfo) -> int:
        root = _parse_code(v, "root code")
        if not 1 <= root <= 20:
            raise ValueError("root code out of range")
        quad = info.data.get("cameo_quad_class")
        if quad is not None and quad.is_cooperation != (root <= 8):
            raise ValueError("quad class inconsistent with root code")
        return root

    @field_validator("cameo_event_code", mode="before")
    @classmethod
    def _check_event_code(cls, v: Any, info: ValidationInfo) -> int:
        code = _parse_code(v, "event code")
        if not 10 <= code <= 209:
            raise ValueError("event code out of range")
        root = info.data.get("cameo_root_code")
        if root is not None and code // 10 != root:
            raise ValueError("event code prefix mismatch")
        return code

    @field_validator("goldstein", mode="before")
    @classmethod
    def _check_goldstein(cls, v: Any) -> float:
        if isinstance(v, bool) or v is None:
            raise ValueError("goldstein must be a number")
        try:
            value = float(v)
        except (TypeError, ValueError):
            raise ValueError("goldstein must be a number")
        if not -10.0 <= value <= 10.0:
            raise ValueError("goldstein out of range")
        return value

    @property
    def pair(self) -> tuple:
        return pair_key(self.country1, self.country2)

    @property
    def is_cooperation(self) -> bool:
        return self.cameo_quad_class.is_cooperation

    def to_json_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True)


class PairYearAnnotation(BaseModel):
    """
    relationship category of a pair-year that had no major events
    never enters score averages
    """
    model_config = ConfigDict(frozen=True)

    year: int
    country1: str
    country2: str
    relationship: Optional[Relationship] = None
    evaluation_summary: str = ""

    @field_validator("country1", "country2", mode="before")
    @classmethod
    def _check_country(cls, v: Any) -> str:
        if not isinstance(v, str) or not v.strip():
            raise ValueError("country code must be a non-empty string")
        return v.strip().upper()

    @field_validator("relationship", mode="before")
    @classmethod
    def _parse_relationship(cls, v: Any) -> Optional[Relationship]:
        if v is None or (isinstance(v, str) and not v.strip()):
            return None
        return Relationship.parse(v)

    @property
    def pair(self) -> tuple:
        return pair_key(self.country1, self.country2)


class Rejection(BaseModel):
    index: int
    field: str
    reason: str


def pair_key(a: str, b: str) -> tuple:
    return (a, b) if a <= b else (b, a)

