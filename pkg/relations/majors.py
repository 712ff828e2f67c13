from typing import Dict, FrozenSet, Tuple

# 24 largest economies, roughly 83 to 90 percent of world GDP over the sample
DEFAULT_MAJORS: Tuple[str, ...] = (
    "USA", "CHN", "JPN", "DEU", "GBR", "FRA", "IND", "ITA", "BRA", "CAN", "RUS", "KOR",
    "AUS", "ESP", "MEX", "IDN", "NLD", "SAU", "TUR", "CHE", "POL", "ARG", "BEL", "DNK",
)

WESTERN_MAJORS: FrozenSet[str] = frozenset({
    "USA", "GBR", "DEU", "FRA", "CAN", "AUS", "BEL", "DNK", "ITA", "NLD", "ESP", "CHE",
})

PARTNER_SPLITS = ("none", "us", "western")


def partner_groups(split: str, majors: FrozenSet[str]) -> Dict[str, FrozenSet[str]]:
    """
    split the major set into two named partner groups
    the group measures add up to the full measure

    Args:
        split: "us" or "western"
        majors: full major set

    Returns:
        {suffix: partner subset}
    """
    majors = frozenset(majors)
    if split == "us":
        inner = majors & {"USA"}
        return {"us": inner, "nonus": majors - inner}
    if split == "western":
        inner = majors & WESTERN_MAJORS
        return {"western": inner, "nonwestern": majors - inner}
    raise ValueError(f"unknown partner split '{split}', expected one of {PARTNER_SPLITS[1:]}")
