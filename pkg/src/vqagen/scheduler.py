"""Reasoning-level and category scheduling.

Keeps the accepted-sample distribution over the five reasoning levels near
configured target proportions by always steering new generation requests
toward the level with the largest deficit (target minus observed share).
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import LevelUnsupportedError, NoCategoryError, NoFeasibleLevelError

LEVELS = (1, 2, 3, 4, 5)
DEFAULT_TARGETS = (0.05, 0.24, 0.40, 0.24, 0.05)

# Category -> inclusive level range (lo, hi).
CATEGORY_LEVELS: dict[str, tuple[int, int]] = {
    "object_attribute": (1, 1),
    "spatial": (2, 2),
    "action": (2, 3),
    "counting": (1, 3),
    "yes_no": (1, 5),
    "comparison": (2, 5),
    "relationship": (2, 5),
    "causal": (4, 5),
    "contextual": (4, 5),
}

# Deeper-reasoning categories first; any consistent total order that puts
# relational/causal types ahead of recognition types works.
DEFAULT_PRIORITY = (
    "causal",
    "contextual",
    "relationship",
    "comparison",
    "action",
    "counting",
    "spatial",
    "yes_no",
    "object_attribute",
)


@dataclass
class CategoryTable:
    rows: dict[str, tuple[int, int]] = field(default_factory=lambda: dict(CATEGORY_LEVELS))
    priority: tuple[str, ...] = DEFAULT_PRIORITY

    def __post_init__(self):
        covered = set()
        for category, (lo, hi) in self.rows.items():
            if not (1 <= lo <= hi <= 5):
                raise ValueError(f"bad level range for {category}: ({lo}, {hi})")
            covered.update(range(lo, hi + 1))
        if covered != set(LEVELS):
            raise ValueError("category level ranges must cover levels 1..5")

    def admits(self, category: str, level: int) -> bool:
        lo, hi = self.rows[category]
        return lo <= level <= hi

    def levels_for(self, categories: set[str]) -> set[int]:
        feasible: set[int] = set()
        for category in categories:
            lo, hi = self.rows[category]
            feasible.update(range(lo, hi + 1))
        return feasible

    def rank(self, category: str) -> int:
        return self.priority.index(category)


@dataclass
class SchedulerState:
    counts: list[int] = field(default_factory=lambda: [0] * 5)
    targets: tuple[float, ...] = DEFAULT_TARGETS

    def __post_init__(self):
        if len(self.counts) != 5 or any(c < 0 for c in self.counts):
            raise ValueError("counts must be 5 non-negative integers")
        total = sum(self.targets)
        # The stock proportions sum to 0.98, not 1; normalize so deficits
        # sum to zero. Anything further off than 10% is a config mistake.
        if abs(total - 1.0) > 0.1 or total <= 0:
            raise ValueError(f"targets sum to {total}, expected ~1")
        if abs(total - 1.0) > 1e-9:
            self.targets = tuple(t / total for t in self.targets)

    @property
    def total(self) -> int:
        return sum(self.counts)


def deficits(state: SchedulerState) -> list[float]:
    """target - observed proportion per level; all observed are 0 when empty."""
    total = state.total
    if total == 0:
        return list(state.targets)
    return [t - c / total for t, c in zip(state.targets, state.counts)]


def select_level(state: SchedulerState, feasible: set[int]) -> int:
    """Pick the feasible level with the largest deficit.

    Positive deficits win over non-positive ones; if no feasible level has
    a positive deficit, the least-negative one is used so generation never
    stalls. Ties break toward the deeper level.
    """
    if not feasible:
        raise NoFeasibleLevelError("feasible level set is empty")
    if not feasible <= set(LEVELS):
        raise NoFeasibleLevelError(f"levels outside 1..5: {feasible - set(LEVELS)}")
    d = deficits(state)
    candidates = [lvl for lvl in feasible if d[lvl - 1] > 0] or list(feasible)
    return max(candidates, key=lambda lvl: (d[lvl - 1], lvl))


def select_category(level: int, feasible_categories: set[str], table: CategoryTable) -> str:
    """Highest-priority feasible category whose level range contains `level`.

    Raises LevelUnsupportedError when no feasible category admits the level
    (the caller should re-select a level over the reduced feasible set) and
    NoCategoryError when the feasible categories admit no level at all.
    """
    if not feasible_categories:
        raise NoCategoryError("feasible category set is empty")
    admitting = [c for c in feasible_categories if table.admits(c, level)]
    if not admitting:
        if not table.levels_for(feasible_categories):
            raise NoCategoryError("no feasible category admits any level")
        raise LevelUnsupportedError(level)
    return min(admitting, key=table.rank)


def record_accept(state: SchedulerState, level: int) -> SchedulerState:
    if level not in LEVELS:
        raise ValueError(f"level {level} outside 1..5")
    state.counts[level - 1] += 1
    return state


def assign(state: SchedulerState, feasible_levels: set[int],
           feasible_categories: set[str], table: CategoryTable) -> tuple[int, str]:
    """Resolve one (level, category) assignment, shrinking the level set on
    LevelUnsupported until a category admits the chosen level."""
    remaining = set(feasible_levels)
    while True:
        level = select_level(state, remaining)
        try:
            return level, select_category(level, feasible_categories, table)
        except LevelUnsupportedError:
            remaining.discard(level)
            if not remaining:
                raise NoFeasibleLevelError("no feasible level admitted by any category")
