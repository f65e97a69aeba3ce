"""Show the deficit-driven level scheduler converging to its target mix.

Every accept shifts the empirical distribution toward
(0.05, 0.24, 0.40, 0.24, 0.05); deficits decide which level comes next.
"""
from vqagen.scheduler import SchedulerState, deficits, record_accept, select_level

state = SchedulerState()
feasible = {1, 2, 3, 4, 5}

for step in (10, 100, 1000, 10000):
    while sum(state.counts) < step:
        record_accept(state, select_level(state, feasible))
    total = sum(state.counts)
    empirical = [round(c / total, 3) for c in state.counts]
    print(f"after {total:>5} accepts: levels={empirical} "
          f"deficits={[round(d, 4) for d in deficits(state)]}")
