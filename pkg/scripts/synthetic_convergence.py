#!/usr/bin/env python3
"""Measure how search agreement with the exact solver grows with the budget.

For a batch of random synthetic tasks, runs the planner at several simulation
budgets and reports how often the chosen act matches the expectimax argmax.
"""
import argparse
import random
import sys
import time

from dialplan.core import ActionSpace, DialogueAct, DialogueHistory, SearchConfig
from dialplan.engine import search
from dialplan.oracle import SyntheticOracle, random_task, solve_expectimax


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--tasks", type=int, default=50,
                        help="number of random tasks per budget")
    parser.add_argument("--acts", type=int, default=3)
    parser.add_argument("--depth", type=int, default=2)
    parser.add_argument("--budgets", type=int, nargs="+",
                        default=[5, 10, 20, 50, 100, 200])
    parser.add_argument("--sharpness", type=float, default=8.0,
                        help="transition concentration of the generated tasks")
    parser.add_argument("--gap", type=float, default=0.05,
                        help="minimum exact value gap between the two best acts")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    space = ActionSpace(tuple(
        DialogueAct(i, f"act-{i}", f"Act {i}.") for i in range(args.acts)))

    tasks = []
    task_seed = args.seed
    while len(tasks) < args.tasks:
        task = random_task(args.acts, random.Random(task_seed),
                           sharpness=args.sharpness)
        task_seed += 1
        best, values = solve_expectimax(task, DialogueHistory(), args.depth)
        ranked = sorted(values, reverse=True)
        if ranked[0] - ranked[1] >= args.gap:
            tasks.append((task, best))

    print(f"{'n':>6}  {'agreement':>10}  {'seconds':>8}")
    for budget in args.budgets:
        cfg = SearchConfig(n_simulations=budget, cache_size=budget,
                           max_depth=args.depth, c_p=1.0, q0=0.0,
                           prior_weighted_puct=False, rng_seed=args.seed)
        start = time.perf_counter()
        agree = sum(
            search(DialogueHistory(), cfg, SyntheticOracle(task), space).chosen_act
            == best
            for task, best in tasks
        )
        elapsed = time.perf_counter() - start
        print(f"{budget:>6}  {agree:>4}/{len(tasks):<5}  {elapsed:>8.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
