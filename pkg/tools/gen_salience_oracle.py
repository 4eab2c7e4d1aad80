#!/usr/bin/env python3
"""Regenerate tests/oracles/salience_oracle.json.

Expected scores come from a direct one-line evaluation of the relevance
formula, (freq - ms/1000) * pref, written out here independently of the
library.  The test asserts the library result lies within one unit in the
last place of this frozen reference.
"""

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "tests" / "oracles" / "salience_oracle.json"
N = 1000
SEED = 20260824


def main() -> None:
    rng = random.Random(SEED)
    cases = []
    for _ in range(N):
        freq = rng.randint(1, 50)
        ms = rng.randint(0, 600_000)
        pref = rng.random()
        cases.append({
            "freq": freq,
            "timeSinceLastMs": ms,
            "pref": pref,
            "expected": (freq - ms / 1000) * pref,
        })
    OUT.write_text(json.dumps({"seed": SEED, "cases": cases}, indent=1) + "\n")
    print(f"wrote {len(cases)} cases to {OUT}")


if __name__ == "__main__":
    main()
