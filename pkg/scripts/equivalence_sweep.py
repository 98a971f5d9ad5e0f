"""Compare solutions at every optimization level on random programs.

    python3 scripts/equivalence_sweep.py --count 1000 --seed 0
"""
import argparse
import random
import sys
import time
from collections import Counter

from mongolog.compiler import compile_query, solve
from mongolog.randprog import GenConfig, random_case


def key(solutions):
    return Counter(tuple(sorted(s.binding_text().items())) for s in solutions)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-facts", type=int, default=GenConfig.max_edb_facts)
    args = ap.parse_args()

    cfg = GenConfig(max_edb_facts=args.max_facts)
    seeds = random.Random(args.seed).sample(range(10_000_000), args.count)
    mismatches, stages, start = [], Counter(), time.perf_counter()
    for seed in seeds:
        case = random_case(seed, cfg)
        base = key(solve(case.query, case.program, 0))
        for opt in (0, 1, 2):
            stages[opt] += len(compile_query(case.query, case.program, opt).pipeline.stages)
            if opt and key(solve(case.query, case.program, opt)) != base:
                mismatches.append((seed, opt))
    elapsed = time.perf_counter() - start
    print(f"{len(seeds)} programs in {elapsed:.1f}s, {len(mismatches)} mismatches")
    print("top-level stages per level: " + ", ".join(f"opt{o}={n}" for o, n in sorted(stages.items())))
    for seed, opt in mismatches[:20]:
        print(f"  seed {seed} differs at opt {opt}")
    return 1 if mismatches else 0


if __name__ == "__main__":
    sys.exit(main())
