import logging
from typing import List, Sequence, Tuple

import numpy as np

from events.event_data import EconomicEvent, EventRecord, QuadClass, Relationship
from inference.rng import substream
from relations.majors import DEFAULT_MAJORS
from relations.weights import WeightBook, WeightTable
from simulation.dgp import EVENT_STREAM_BASE, DgpSpec

_logger = logging.getLogger(__name__)

MAJOR_SHARE_TOTAL = 0.8
ECONOMIC_SHARE = 0.2
ECONOMIC_CLASSES = (EconomicEvent.Tariffs, EconomicEvent.EconomicSanctions,
                    EconomicEvent.TradeAgreementsAndTreaties, EconomicEvent.OtherEconomicPolicies)


def simulated_majors(spec: DgpSpec) -> List[str]:
    if spec.n_majors > len(DEFAULT_MAJORS):
        raise ValueError(f"at most {len(DEFAULT_MAJORS)} simulated majors")
    return list(DEFAULT_MAJORS[:spec.n_majors])


def simulated_pairs(spec: DgpSpec) -> List[Tuple[str, str]]:
    """
    every country with every major, and the majors among themselves
    """
    majors = simulated_majors(spec)
    pairs = [(c, m) for c in spec.countries for m in majors]
    pairs += [(a, b) for i, a in enumerate(majors) for b in majors[i + 1:]]
    return pairs


def _relationship(goldstein: float) -> Relationship:
    if goldstein <= -7.0:
        return Relationship.StateOfWar
    if goldstein <= -4.0:
        return Relationship.Crisis
    if goldstein <= -1.5:
        return Relationship.Hostile
    if goldstein < 0.0:
        return Relationship.Competitive
    if goldstein < 1.5:
        return Relationship.LimitedContact
    if goldstein < 4.0:
        return Relationship.SelectiveCooperation
    if goldstein < 6.0:
        return Relationship.BroadCooperation
    if goldstein < 8.0:
        return Relationship.StrategicPartnership
    return Relationship.Alliance


def _pair_events(spec: DgpSpec, index: int, pair: Tuple[str, str]) -> List[EventRecord]:
    generator = substream(spec.seed, EVENT_STREAM_BASE + index)
    events = []
    for year in spec.years:
        for k in range(int(generator.poisson(spec.event_rate))):
            goldstein = float(np.clip(generator.normal(spec.goldstein_mean, spec.goldstein_sd), -10.0, 10.0))
            # root family follows the sign of the score
            root = int(generator.integers(1, 9)) if goldstein >= 0.0 else int(generator.integers(9, 21))
            code = root * 10 + int(generator.integers(0, 4))
            economic = (ECONOMIC_CLASSES[int(generator.integers(0, len(ECONOMIC_CLASSES)))]
                        if generator.random() < ECONOMIC_SHARE else EconomicEvent.NotAnEconomicEvent)
            events.append(EventRecord(
                year=year, country1=pair[0], country2=pair[1], event_name=f"simulated event {year}-{k}",
                cameo_quad_class=QuadClass.from_root(root), cameo_root_code=root, cameo_event_code=code,
                economic_event=economic, goldstein=goldstein, relationship=_relationship(goldstein)))
    return events


def generate_events(spec: DgpSpec) -> List[EventRecord]:
    """
    Poisson event counts per pair-year with normal Goldstein scores clipped to [-10, 10]
    and CAMEO codes drawn from the family matching the score's sign
    """
    events = []
    for index, pair in enumerate(simulated_pairs(spec)):
        events.extend(_pair_events(spec, index, pair))
    if not events:
        _logger.warning("simulated event stream is empty")
    return events


def generate_weights(spec: DgpSpec, majors: Sequence[str] = ()) -> WeightBook:
    """
    constant equal GDP shares for the simulated majors
    """
    majors = list(majors) or simulated_majors(spec)
    share = MAJOR_SHARE_TOTAL / len(majors)
    return WeightBook([WeightTable(year=y, weights={m: share for m in majors}) for y in spec.years])
