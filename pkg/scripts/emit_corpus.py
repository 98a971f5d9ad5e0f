"""Write the aggregation script of every corpus pipeline to a directory.

    python3 scripts/emit_corpus.py out/ --opt 2
"""
import argparse
from pathlib import Path

from mongolog.compiler import compile_query
from mongolog.corpus import STAGE_CASES, load_program, query_cases
from mongolog.emitter import emit
from mongolog.frontend import parse_query


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", type=Path)
    ap.add_argument("--opt", type=int, choices=(0, 1, 2), default=0)
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    for case in STAGE_CASES:
        (args.out / f"{case.name}.mongo.js").write_text(emit(case.pipeline), encoding="utf-8")
    for case in query_cases():
        p = compile_query(parse_query(case.query), load_program(case), args.opt).pipeline
        (args.out / f"{case.name}.opt{args.opt}.mongo.js").write_text(emit(p), encoding="utf-8")
    print(f"wrote {len(STAGE_CASES) + len(query_cases())} scripts to {args.out}")


if __name__ == "__main__":
    main()
