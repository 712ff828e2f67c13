from typing import FrozenSet, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, model_validator

from events.event_data import EconomicEvent, EventRecord

# conflict roots without the two most violent families (19 fight, 20 mass violence)
INSTRUMENT_ROOT_RANGE = (9, 18)


class EventFilter(BaseModel):
    """
    conjunction of optional clauses, an empty filter keeps everything
    """
    model_config = ConfigDict(frozen=True)

    root_code_range: Optional[Tuple[int, int]] = None
    economic_classes: Optional[FrozenSet[EconomicEvent]] = None
    goldstein_max: Optional[float] = None
    goldstein_min: Optional[float] = None

    @model_validator(mode="after")
    def _check_bounds(self) -> 'EventFilter':
        if self.root_code_range is not None and self.root_code_range[0] > self.root_code_range[1]:
            raise ValueError("root code interval bounds out of order")
        if self.goldstein_min is not None and self.goldstein_max is not None \
                and self.goldstein_min > self.goldstein_max:
            raise ValueError("goldstein_min must not exceed goldstein_max")
        return self

    @classmethod
    def instrument(cls, root_min: int = INSTRUMENT_ROOT_RANGE[0], root_max: int = INSTRUMENT_ROOT_RANGE[1],
                   goldstein_max: float = 0.0) -> 'EventFilter':
        """
        non-economic mild conflict events
        """
        return cls(root_code_range=(root_min, root_max),
                   economic_classes=frozenset({EconomicEvent.NotAnEconomicEvent}),
                   goldstein_max=goldstein_max)

    def matches(self, event: EventRecord) -> bool:
        if self.root_code_range is not None:
            lo, hi = self.root_code_range
            if not lo <= event.cameo_root_code <= hi:
                return False
        if self.economic_classes is not None and event.economic_event not in self.economic_classes:
            return False
        if self.goldstein_max is not None and event.goldstein > self.goldstein_max:
            return False
        if self.goldstein_min is not None and event.goldstein < self.goldstein_min:
            return False
        return True


def filter_events(events: List[EventRecord], event_filter: EventFilter) -> List[EventRecord]:
    return [e for e in events if event_filter.matches(e)]
